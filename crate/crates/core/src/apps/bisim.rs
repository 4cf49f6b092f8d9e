//! Similarity and bisimilarity as greatest fixpoints over relations.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::ts::TransitionSystem;
use crate::eqsys::{solve, Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::Result;
use crate::game::Player;
use crate::lattice::{Lattice, Powerset, StateSet};
use crate::localsolver::{check, CheckOptions, Stats};
use crate::upto::{u_tr, up_to_check, CompatibleTuple};

/// A binary relation on the states of a transition system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Relation {
    pub states: Vec<String>,
    pub pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn from_set(lat: &Powerset, set: &StateSet) -> Self {
        Relation {
            states: lat.relation_states().unwrap_or_default().to_vec(),
            pairs: set.ones().map(|p| lat.unpair(p)).collect(),
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pairs.contains(&(x, y))
    }

    pub fn inverse(&self) -> Relation {
        Relation {
            states: self.states.clone(),
            pairs: self.pairs.iter().map(|&(x, y)| (y, x)).collect(),
        }
    }

    /// Equivalence classes, assuming the relation is an equivalence,
    /// ordered by least member.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let n = self.states.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for x in 0..n {
            if seen[x] {
                continue;
            }
            let class: Vec<usize> = (0..n).filter(|&y| self.contains(x, y)).collect();
            for &y in &class {
                seen[y] = true;
            }
            out.push(class);
        }
        out
    }

    pub fn show_pairs(&self) -> Vec<String> {
        self.pairs
            .iter()
            .map(|&(x, y)| format!("({},{})", self.states[x], self.states[y]))
            .collect()
    }

    pub fn show_classes(&self) -> Vec<String> {
        self.classes()
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|&x| self.states[x].as_str()).collect::<Vec<_>>().join(",")))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Behaviour {
    Similarity,
    Bisimilarity,
}

/// Relation lattice over the states of `ts`.
pub fn relation_lattice(ts: &TransitionSystem) -> Arc<Powerset> {
    Arc::new(Powerset::relation(ts.states().iter().cloned()))
}

/// `sim(R) = {(x,y) ∈ R | x ∈ a ⇒ y ∈ a for every atom a, and every
/// x → x′ has some y → y′ with (x′,y′) ∈ R}`.
pub fn sim_step(ts: &TransitionSystem, lat: &Powerset, r: &StateSet) -> StateSet {
    let n = ts.len();
    let mut out = lat.empty_set();
    for p in r.ones() {
        let (x, y) = lat.unpair(p);
        let atoms = ts.atoms().values().all(|a| !a.contains(x) || a.contains(y));
        let transfer = atoms
            && ts
                .successors(x)
                .iter()
                .all(|&x2| ts.successors(y).iter().any(|&y2| r.contains(x2 * n + y2)));
        if transfer {
            out.insert(p);
        }
    }
    out
}

fn inverse(lat: &Powerset, n: usize, r: &StateSet) -> StateSet {
    lat.set_of(r.ones().map(|p| (p % n) * n + p / n))
}

/// `bis(R) = sim(R) ∩ sim(R⁻¹)⁻¹`.
pub fn bis_step(ts: &TransitionSystem, lat: &Powerset, r: &StateSet) -> StateSet {
    let n = ts.len();
    let forward = sim_step(ts, lat, r);
    let backward = inverse(lat, n, &sim_step(ts, lat, &inverse(lat, n, r)));
    lat.meet(&forward, &backward)
}

/// The single equation `R =ν sim(R)` or `R =ν bis(R)`.
pub fn behaviour_system(ts: &TransitionSystem, kind: Behaviour) -> Result<EquationSystem<Powerset>> {
    let lat = relation_lattice(ts);
    let (t, l) = (ts.clone(), Arc::clone(&lat));
    let f = match kind {
        Behaviour::Similarity => MonotoneFunction::new(1, "sim(R)", move |r: &[StateSet]| sim_step(&t, &l, &r[0])),
        Behaviour::Bisimilarity => MonotoneFunction::new(1, "bis(R)", move |r: &[StateSet]| bis_step(&t, &l, &r[0])),
    };
    let name = match kind {
        Behaviour::Similarity => "sim",
        Behaviour::Bisimilarity => "bis",
    };
    EquationSystem::unchecked(lat, vec![Equation::new(name, Sign::Nu, f)])
}

fn greatest(ts: &TransitionSystem, kind: Behaviour) -> Result<Relation> {
    let sys = behaviour_system(ts, kind)?;
    let sol = solve(&sys)?;
    Ok(Relation::from_set(sys.lattice(), &sol[0]))
}

pub fn similarity(ts: &TransitionSystem) -> Result<Relation> {
    greatest(ts, Behaviour::Similarity)
}

pub fn bisimilarity(ts: &TransitionSystem) -> Result<Relation> {
    greatest(ts, Behaviour::Bisimilarity)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairUpTo {
    #[default]
    None,
    /// One step of transitive closure, `R ∘ R`.
    Tr,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResult {
    pub holds: bool,
    pub relation: Behaviour,
    pub upto: PairUpTo,
    pub stats: Stats,
}

/// Decides `{(s1,s2)} ⊆ ν f` for `f` = sim or bis with the local
/// algorithm, optionally up to transitivity.
pub fn check_pair(
    ts: &TransitionSystem,
    kind: Behaviour,
    s1: usize,
    s2: usize,
    upto: PairUpTo,
    opts: &CheckOptions,
) -> Result<PairResult> {
    let sys = behaviour_system(ts, kind)?;
    let lat = Arc::clone(sys.lattice_arc());
    let b = lat.pair(ts_index(ts, s1)?, ts_index(ts, s2)?);
    let r = match upto {
        PairUpTo::None => check(&sys, b, 0, opts)?,
        PairUpTo::Tr => {
            let tuple = CompatibleTuple::new(&sys, vec![u_tr(lat)?])?;
            up_to_check(&sys, &tuple, b, 0, opts)?
        }
    };
    Ok(PairResult {
        holds: r.winner == Player::Exists,
        relation: kind,
        upto,
        stats: r.stats,
    })
}

fn ts_index(ts: &TransitionSystem, s: usize) -> Result<usize> {
    if s < ts.len() {
        Ok(s)
    } else {
        Err(crate::error::Error::IndexOutOfRange { index: s, len: ts.len() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::ts::tests::fig3a;

    /// Reflexive-transitive closure by Warshall's algorithm.
    fn closure(n: usize, pairs: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        let mut m = vec![vec![false; n]; n];
        for (x, row) in m.iter_mut().enumerate() {
            row[x] = true;
        }
        for &(x, y) in pairs {
            m[x][y] = true;
        }
        for k in 0..n {
            for x in 0..n {
                for y in 0..n {
                    if m[x][k] && m[k][y] {
                        m[x][y] = true;
                    }
                }
            }
        }
        (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| m[x][y]).collect()
    }

    #[test]
    fn similarity_on_the_running_example() {
        let ts = fig3a();
        let sim = similarity(&ts).unwrap();
        // (c,a), (a,b), (b,d), (d,e), (e,b)
        assert_eq!(sim.pairs, closure(5, &[(2, 0), (0, 1), (1, 3), (3, 4), (4, 1)]));
    }

    #[test]
    fn bisimilarity_on_the_running_example() {
        let ts = fig3a();
        let bis = bisimilarity(&ts).unwrap();
        assert_eq!(bis.show_classes(), ["{a}", "{b,d,e}", "{c}"]);
        assert_eq!(bis, bis.inverse());
        let sim = similarity(&ts).unwrap();
        assert!(bis.pairs.iter().all(|&(x, y)| sim.contains(x, y) && sim.contains(y, x)));
    }

    #[test]
    fn empty_system_has_empty_relations() {
        let ts = TransitionSystem::new(Vec::<String>::new(), &[]).unwrap();
        assert!(similarity(&ts).unwrap().pairs.is_empty());
        assert!(bisimilarity(&ts).unwrap().pairs.is_empty());
    }

    #[test]
    fn pairs_on_the_running_example() {
        let ts = fig3a();
        let bis = bisimilarity(&ts).unwrap();
        let opts = CheckOptions::default();
        for upto in [PairUpTo::None, PairUpTo::Tr] {
            assert!(check_pair(&ts, Behaviour::Bisimilarity, 1, 3, upto, &opts).unwrap().holds);
            assert!(!check_pair(&ts, Behaviour::Bisimilarity, 0, 2, upto, &opts).unwrap().holds);
            for s in 0..5 {
                assert!(check_pair(&ts, Behaviour::Bisimilarity, s, s, upto, &opts).unwrap().holds);
            }
        }
        for x in 0..5 {
            for y in 0..5 {
                let r = check_pair(&ts, Behaviour::Bisimilarity, x, y, PairUpTo::None, &opts).unwrap();
                assert_eq!(r.holds, bis.contains(x, y), "({x},{y})");
            }
        }
        assert!(check_pair(&ts, Behaviour::Similarity, 2, 0, PairUpTo::Tr, &opts).unwrap().holds);
        assert!(!check_pair(&ts, Behaviour::Similarity, 0, 2, PairUpTo::None, &opts).unwrap().holds);
    }
}
