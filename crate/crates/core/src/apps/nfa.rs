//! Language equivalence of NFA states by on-the-fly determinization.
//!
//! ```text
//! states: x y z
//! alphabet: a
//! final: y
//! trans: x -a-> y z
//! ```
//!
//! The relation lattice over pairs of state sets is never materialized.
//! The tree game only needs its singleton basis elements, which are
//! generated on demand, and the left adjoint of the transfer map in
//! closed form.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::ts::words_with_columns;
use crate::adjoint::{explore, TreeGame};
use crate::error::{Error, Result};
use crate::game::Player;

pub type Set = FixedBitSet;
pub type Pair = (Set, Set);

#[derive(Clone, Debug)]
pub struct Nfa {
    states: Vec<String>,
    alphabet: Vec<String>,
    /// `delta[q][a]`
    delta: Vec<Vec<Set>>,
    finals: Set,
}

impl Nfa {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        trans: &[(usize, usize, usize)],
        finals: &[usize],
    ) -> Result<Self> {
        let n = states.len();
        let k = alphabet.len();
        let mut delta = vec![vec![Set::with_capacity(n); k]; n];
        for &(q, a, r) in trans {
            if q >= n || r >= n || a >= k {
                return Err(Error::InvalidArgument(format!("transition ({q},{a},{r}) out of range")));
            }
            delta[q][a].insert(r);
        }
        let mut f = Set::with_capacity(n);
        for &q in finals {
            if q >= n {
                return Err(Error::InvalidArgument(format!("final state {q} out of range")));
            }
            f.insert(q);
        }
        Ok(Nfa {
            states,
            alphabet,
            delta,
            finals: f,
        })
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut states: Option<Vec<String>> = None;
        let mut alphabet: Option<Vec<String>> = None;
        let mut finals = Vec::new();
        let mut trans = Vec::new();
        for (no, raw) in src.lines().enumerate() {
            let line = no + 1;
            let text = raw.split('#').next().unwrap_or("");
            if text.trim().is_empty() {
                continue;
            }
            let Some(colon) = text.find(':') else {
                return Err(Error::parse(line, 1, "expected 'states:', 'alphabet:', 'final:' or 'trans:'"));
            };
            let key = text[..colon].trim();
            let words = words_with_columns(&text[colon + 1..], text[..colon].chars().count() + 1);
            let names = |what: &str| -> Result<Vec<String>> {
                let mut seen = HashSet::new();
                if let Some((dup, c)) = words.iter().find(|(w, _)| !seen.insert(*w)) {
                    return Err(Error::parse(line, *c, format!("duplicate {what} '{dup}'")));
                }
                Ok(words.iter().map(|(w, _)| w.to_string()).collect())
            };
            match key {
                "states" if states.is_none() => states = Some(names("state")?),
                "alphabet" if alphabet.is_none() => alphabet = Some(names("letter")?),
                "states" | "alphabet" => return Err(Error::parse(line, 1, format!("{key} declared twice"))),
                "final" => finals.extend(words.iter().map(|(w, c)| (line, *c, w.to_string()))),
                "trans" => {
                    let [(q, qc), (arrow, ac), targets @ ..] = &words[..] else {
                        return Err(Error::parse(line, colon + 2, "expected 'q -a-> q1 q2 ...'"));
                    };
                    let Some(letter) = arrow.strip_prefix('-').and_then(|s| s.strip_suffix("->")) else {
                        return Err(Error::parse(line, *ac, format!("malformed arrow '{arrow}', expected -a->")));
                    };
                    trans.push((line, (q.to_string(), *qc), (letter.to_string(), ac + 1), targets.iter().map(|(w, c)| (w.to_string(), *c)).collect::<Vec<_>>()));
                }
                _ => return Err(Error::parse(line, 1, format!("unknown declaration '{key}'"))),
            }
        }
        let states = states.ok_or_else(|| Error::parse(1, 1, "missing 'states:' line"))?;
        let alphabet = alphabet.ok_or_else(|| Error::parse(1, 1, "missing 'alphabet:' line"))?;
        let find = |names: &[String], what: &str, line: usize, col: usize, s: &str| {
            names
                .iter()
                .position(|t| t == s)
                .ok_or_else(|| Error::parse(line, col, format!("unknown {what} '{s}'")))
        };
        let mut triples = Vec::new();
        for (line, (q, qc), (a, ac), targets) in &trans {
            let q = find(&states, "state", *line, *qc, q)?;
            let a = find(&alphabet, "letter", *line, *ac, a)?;
            for (r, rc) in targets {
                triples.push((q, a, find(&states, "state", *line, *rc, r)?));
            }
        }
        let finals = finals
            .iter()
            .map(|(line, c, s)| find(&states, "state", *line, *c, s))
            .collect::<Result<Vec<_>>>()?;
        Nfa::new(states, alphabet, &triples, &finals)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state '{name}'")))
    }

    pub fn singleton(&self, q: usize) -> Set {
        let mut s = Set::with_capacity(self.len());
        s.insert(q);
        s
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals.contains(q)
    }

    /// `δ_a(X)`
    pub fn post(&self, x: &Set, a: usize) -> Set {
        let mut out = Set::with_capacity(self.len());
        for q in x.ones() {
            out.union_with(&self.delta[q][a]);
        }
        out
    }

    pub fn accepting(&self, x: &Set) -> bool {
        !x.is_disjoint(&self.finals)
    }

    /// `(X1,X2) ∈ C`: one side accepts iff the other does.
    pub fn consistent(&self, p: &Pair) -> bool {
        self.accepting(&p.0) == self.accepting(&p.1)
    }

    /// `f_*({(X1,X2)}) = {(δ_a(X1), δ_a(X2)) | a ∈ Σ}`, in letter order
    /// without repetitions.
    pub fn lower_adjoint(&self, p: &Pair) -> Vec<Pair> {
        let mut out: Vec<Pair> = Vec::new();
        for a in 0..self.alphabet.len() {
            let next = (self.post(&p.0, a), self.post(&p.1, a));
            if !out.contains(&next) {
                out.push(next);
            }
        }
        out
    }

    pub fn show_set(&self, x: &Set) -> String {
        let names: Vec<&str> = x.ones().map(|q| self.states[q].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    pub fn show_pair(&self, p: &Pair) -> String {
        format!("({},{})", self.show_set(&p.0), self.show_set(&p.1))
    }
}

/// The normal form of `x` under `R ∪ R⁻¹` read as rewriting rules
/// `Y1 ⟶ Y1 ∪ Y2`.
fn normal_form(x: &Set, rules: &[(&Set, &Set)]) -> Set {
    let mut x = x.clone();
    loop {
        let mut changed = false;
        for (y1, y2) in rules {
            if y1.is_subset(&x) && !y2.is_subset(&x) {
                x.union_with(y2);
                changed = true;
            }
        }
        if !changed {
            return x;
        }
    }
}

/// Membership in the congruence closure `c(R)`: the least equivalence
/// containing `R` with `X1 c(R) X2 ⇒ X1 ∪ X c(R) X2 ∪ X`.
pub fn congruence_member(pair: &Pair, r: &[Pair]) -> bool {
    let rules: Vec<(&Set, &Set)> = r.iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
    normal_form(&pair.0, &rules) == normal_form(&pair.1, &rules)
}

struct NfaGame<'a> {
    nfa: &'a Nfa,
    upto: bool,
    visited: Vec<Pair>,
    seen: HashSet<Pair>,
}

impl TreeGame for NfaGame<'_> {
    type Pos = Pair;

    fn below_c(&self, b: &Pair) -> bool {
        self.nfa.consistent(b)
    }

    fn best_move(&self, b: &Pair) -> Result<Vec<Pair>> {
        Ok(self.nfa.lower_adjoint(b))
    }

    fn dominated(&self, b: &Pair) -> bool {
        if self.upto {
            congruence_member(b, &self.visited)
        } else {
            self.seen.contains(b)
        }
    }

    fn add(&mut self, b: &Pair) {
        self.visited.push(b.clone());
        self.seen.insert(b.clone());
    }

    fn show(&self, b: &Pair) -> String {
        self.nfa.show_pair(b)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivResult {
    pub equivalent: bool,
    pub upto_congruence: bool,
    /// Pairs explored, that is `|W|`.
    pub visited: usize,
    pub pruned: usize,
    pub explored: Vec<String>,
    /// A pair of sets reached from the start where exactly one accepts.
    pub counterexample: Option<String>,
}

/// Decides whether `q1` and `q2` accept the same language.
pub fn language_equiv(nfa: &Nfa, q1: usize, q2: usize, upto_congruence: bool) -> Result<EquivResult> {
    if q1 >= nfa.len() || q2 >= nfa.len() {
        return Err(Error::InvalidArgument(format!("state out of range for {} states", nfa.len())));
    }
    let mut game = NfaGame {
        nfa,
        upto: upto_congruence,
        visited: Vec::new(),
        seen: HashSet::new(),
    };
    let r = explore(&mut game, (nfa.singleton(q1), nfa.singleton(q2)), None)?;
    Ok(EquivResult {
        equivalent: r.winner == Some(Player::Exists),
        upto_congruence,
        visited: r.explored.len(),
        pruned: r.pruned,
        explored: r.explored,
        counterexample: r.losing,
    })
}

#[cfg(test)]
mod tests;
