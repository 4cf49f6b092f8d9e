//! Unlabelled transition systems with atoms.
//!
//! ```text
//! states: a b c d e
//! edges: a->a a->b a->c b->d b->e c->c d->d e->e
//! atom p: b d e
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Powerset, StateSet};

#[derive(Clone, Debug)]
pub struct TransitionSystem {
    lattice: Arc<Powerset>,
    succ: Vec<Vec<usize>>,
    atoms: BTreeMap<String, StateSet>,
}

impl TransitionSystem {
    pub fn new<I, S>(states: I, edges: &[(usize, usize)]) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let lattice = Arc::new(Powerset::new(states));
        let n = lattice.len();
        let mut succ = vec![Vec::new(); n];
        for &(x, y) in edges {
            if x >= n || y >= n {
                return Err(Error::InvalidArgument(format!("edge ({x},{y}) outside {n} states")));
            }
            if !succ[x].contains(&y) {
                succ[x].push(y);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        Ok(TransitionSystem {
            lattice,
            succ,
            atoms: BTreeMap::new(),
        })
    }

    pub fn with_atom(mut self, name: impl Into<String>, states: impl IntoIterator<Item = usize>) -> Result<Self> {
        let states: Vec<usize> = states.into_iter().collect();
        if let Some(s) = states.iter().find(|&&s| s >= self.len()) {
            return Err(Error::InvalidArgument(format!("atom mentions state {s} of {}", self.len())));
        }
        self.atoms.insert(name.into(), self.lattice.set_of(states));
        Ok(self)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut states: Option<Vec<String>> = None;
        let mut edges = Vec::new();
        let mut atoms = Vec::new();
        for (no, raw) in src.lines().enumerate() {
            let line = no + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let Some((key, rest)) = text.split_once(':') else {
                return Err(Error::parse(line, 1, "expected 'states:', 'edges:' or 'atom NAME:'"));
            };
            let key = key.trim();
            let offset = raw[..raw.find(':').unwrap_or(0)].chars().count() + 1;
            let words = words_with_columns(rest, offset);
            if key == "states" {
                if states.is_some() {
                    return Err(Error::parse(line, 1, "states declared twice"));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some((dup, c)) = words.iter().find(|(w, _)| !seen.insert(*w)) {
                    return Err(Error::parse(line, *c, format!("duplicate state '{dup}'")));
                }
                states = Some(words.iter().map(|(w, _)| w.to_string()).collect());
            } else if key == "edges" {
                for (w, c) in words {
                    let Some((x, y)) = w.split_once("->") else {
                        return Err(Error::parse(line, c, format!("malformed edge '{w}', expected x->y")));
                    };
                    edges.push((line, c, x.to_string(), y.to_string()));
                }
            } else if let Some(name) = key.strip_prefix("atom ") {
                let members = words.iter().map(|(w, c)| (w.to_string(), *c)).collect::<Vec<_>>();
                atoms.push((line, name.trim().to_string(), members));
            } else {
                return Err(Error::parse(line, 1, format!("unknown declaration '{key}'")));
            }
        }
        let Some(states) = states else {
            return Err(Error::parse(1, 1, "missing 'states:' line"));
        };
        let index = |line: usize, col: usize, s: &str| {
            states
                .iter()
                .position(|t| t == s)
                .ok_or_else(|| Error::parse(line, col, format!("unknown state '{s}'")))
        };
        let pairs = edges
            .iter()
            .map(|(line, col, x, y)| Ok((index(*line, *col, x)?, index(*line, *col, y)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut ts = TransitionSystem::new(states.clone(), &pairs)?;
        for (line, name, members) in atoms {
            let idx = members.iter().map(|(m, c)| index(line, *c, m)).collect::<Result<Vec<_>>>()?;
            ts = ts.with_atom(name, idx)?;
        }
        Ok(ts)
    }

    pub fn lattice(&self) -> &Arc<Powerset> {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn states(&self) -> &[String] {
        self.lattice.universe()
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.lattice
            .index_of(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state '{name}'")))
    }

    pub fn successors(&self, x: usize) -> &[usize] {
        &self.succ[x]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.succ.iter().enumerate().flat_map(|(x, ys)| ys.iter().map(move |&y| (x, y))).collect()
    }

    pub fn atoms(&self) -> &BTreeMap<String, StateSet> {
        &self.atoms
    }

    pub fn atom(&self, name: &str) -> Option<&StateSet> {
        self.atoms.get(name)
    }

    /// `♦(Y) = {x | ∃y ∈ Y. x → y}`.
    pub fn diamond(&self, y: &StateSet) -> StateSet {
        self.lattice.set_of((0..self.len()).filter(|&x| self.succ[x].iter().any(|t| y.contains(*t))))
    }

    /// `■(Y) = {x | ∀y. x → y ⇒ y ∈ Y}`.
    pub fn boxed(&self, y: &StateSet) -> StateSet {
        self.lattice.set_of((0..self.len()).filter(|&x| self.succ[x].iter().all(|t| y.contains(*t))))
    }

    pub fn show(&self, s: &StateSet) -> String {
        self.lattice.show(s)
    }
}

/// Whitespace-separated words of `rest` with 1-based columns, where
/// `rest` starts after `offset` characters of its line.
pub(crate) fn words_with_columns(rest: &str, offset: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (chars, (byte, ch)) in rest.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push((&rest[b..byte], offset + c + 1));
            }
        } else if start.is_none() {
            start = Some((byte, chars));
        }
    }
    if let Some((b, c)) = start {
        out.push((&rest[b..], offset + c + 1));
    }
    out
}
