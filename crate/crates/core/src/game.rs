//! The powerset fixpoint game of an equation system.
//!
//! ∃ owns positions `(b, i)`: she must cover the basis element `b` by
//! `f_i` applied to the joins of a tuple of basis subsets. ∀ owns those
//! tuples and answers with some `(b', j)` where `b' ∈ X_j`.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::eqsys::{EquationSystem, Sign};
use crate::error::{Error, Result};
use crate::lattice::{tuple_leq, BasisSubset, Lattice};

/// Default node budget for selection enumeration.
pub const DEFAULT_MOVE_BUDGET: usize = 1 << 20;

/// Largest `m · |B|` for which [`exists_moves`] enumerates all tuples.
pub const FULL_ENUMERATION_BITS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Exists,
    Forall,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Exists => Player::Forall,
            Player::Forall => Player::Exists,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Exists => "∃",
            Player::Forall => "∀",
        })
    }
}

/// A game position. Equation indices are 0-based; the priority of
/// `Exists { i, .. }` is `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Exists { b: usize, i: usize },
    Forall(Vec<BasisSubset>),
}

impl Position {
    pub fn owner(&self) -> Player {
        match self {
            Position::Exists { .. } => Player::Exists,
            Position::Forall(_) => Player::Forall,
        }
    }

    pub fn priority(&self) -> usize {
        match self {
            Position::Exists { i, .. } => i + 1,
            Position::Forall(_) => 0,
        }
    }

    /// Renders the position with lattice-level names for basis elements.
    pub fn show<L: Lattice>(&self, lat: &L) -> String {
        let basis = lat.basis().unwrap_or(&[]);
        let name = |b: usize| {
            basis
                .get(b)
                .map_or_else(|| format!("#{b}"), |e| strip_braces(lat.show(e)))
        };
        match self {
            Position::Exists { b, i } => format!("({},{})", name(*b), i + 1),
            Position::Forall(xs) => {
                let parts: Vec<String> = xs
                    .iter()
                    .map(|x| {
                        if x.is_empty() {
                            "∅".to_string()
                        } else {
                            let items: Vec<String> = x.iter().map(name).collect();
                            format!("{{{}}}", items.join(","))
                        }
                    })
                    .collect();
                format!("({})", parts.join(","))
            }
        }
    }
}

/// Singleton sets print as `{a}`; positions read better as `a`.
fn strip_braces(s: String) -> String {
    match s.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
        Some(inner) if !inner.contains(',') && !inner.is_empty() => inner.to_string(),
        _ => s,
    }
}

/// Canonical move order: total cardinality, then the sorted list of
/// (component, basis index) pairs.
pub fn move_key(xs: &[BasisSubset]) -> (usize, Vec<(usize, usize)>) {
    let total = xs.iter().map(BasisSubset::len).sum();
    let pairs = xs
        .iter()
        .enumerate()
        .flat_map(|(j, x)| x.iter().map(move |b| (j, b)))
        .collect();
    (total, pairs)
}

fn check_position<L: Lattice>(sys: &EquationSystem<L>, b: usize, i: usize) -> Result<()> {
    if i >= sys.len() {
        return Err(Error::IndexOutOfRange { index: i, len: sys.len() });
    }
    let n = sys.lattice().basis()?.len();
    if b >= n {
        return Err(Error::InvalidArgument(format!(
            "basis index {b} out of range for a basis of {n} elements"
        )));
    }
    Ok(())
}

fn joins<L: Lattice>(lat: &L, xs: &[BasisSubset]) -> Result<Vec<L::Elem>> {
    xs.iter().map(|x| lat.join_subset(x)).collect()
}

/// Whether `X⃗` is a legal ∃-move from `(b, i)`, i.e. `b ⊑ f_i(⨆X⃗)`.
pub fn is_exists_move<L: Lattice>(
    sys: &EquationSystem<L>,
    b: usize,
    i: usize,
    xs: &[BasisSubset],
) -> Result<bool> {
    let lat = sys.lattice();
    let target = &lat.basis()?[b];
    Ok(lat.leq(target, &sys.eval(i, &joins(lat, xs)?)))
}

/// All ∃-moves from `(b, i)`, by full enumeration of tuples of basis
/// subsets. Exponential; refuses instances with more than
/// [`FULL_ENUMERATION_BITS`] basis slots.
pub fn exists_moves<L: Lattice>(
    sys: &EquationSystem<L>,
    b: usize,
    i: usize,
) -> Result<Vec<Vec<BasisSubset>>> {
    check_position(sys, b, i)?;
    let lat = sys.lattice();
    let nb = lat.basis()?.len();
    let m = sys.len();
    let bits = nb * m;
    if bits > FULL_ENUMERATION_BITS {
        return Err(Error::Unsupported(format!(
            "full move enumeration needs 2^{bits} tuples; use selection for instances with more than {FULL_ENUMERATION_BITS} basis slots"
        )));
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << bits) {
        let xs: Vec<BasisSubset> = (0..m)
            .map(|j| (0..nb).filter(|k| mask >> (j * nb + k) & 1 == 1).collect())
            .collect();
        if is_exists_move(sys, b, i, &xs)? {
            out.push(xs);
        }
    }
    out.sort_by_cached_key(|xs| move_key(xs));
    Ok(out)
}

/// ∀-moves from `X⃗`: every `(b, j)` with `b ∈ X_j`.
pub fn forall_moves(xs: &[BasisSubset]) -> Vec<Position> {
    xs.iter()
        .enumerate()
        .flat_map(|(j, x)| x.iter().map(move |b| Position::Exists { b, i: j }))
        .collect()
}

/// Enumerates the ⊆-minimal subsets of `0..n` satisfying a monotone
/// predicate. Each search node shrinks the allowed items to a true set
/// keeping its forced items, then splits the remaining true sets on the
/// first item of that set they leave out. Results may include
/// non-minimal sets when forced items turn out redundant; callers reduce
/// them. `budget` bounds the number of predicate evaluations.
pub(crate) fn minimal_subsets(
    n: usize,
    mut pred: impl FnMut(&[usize]) -> Result<bool>,
    budget: usize,
    what: &str,
) -> Result<Vec<Vec<usize>>> {
    let mut calls = 0usize;
    let mut eval = |items: &[usize]| -> Result<bool> {
        calls += 1;
        if calls > budget {
            return Err(Error::MoveBudgetExceeded {
                budget,
                what: what.to_string(),
            });
        }
        pred(items)
    };
    let mut found = Vec::new();
    // (forced, excluded) as membership flags
    let mut stack = vec![(vec![false; n], vec![false; n])];
    while let Some((forced, excluded)) = stack.pop() {
        let mut set: Vec<usize> = (0..n).filter(|&k| !excluded[k]).collect();
        if !eval(&set)? {
            continue;
        }
        let mut k = 0;
        while k < set.len() {
            if forced[set[k]] {
                k += 1;
                continue;
            }
            let mut without = set.clone();
            without.remove(k);
            if eval(&without)? {
                set = without;
            } else {
                k += 1;
            }
        }
        let free: Vec<usize> = set.iter().copied().filter(|&k| !forced[k]).collect();
        for (j, &s) in free.iter().enumerate().rev() {
            let mut f = forced.clone();
            for &t in &free[..j] {
                f[t] = true;
            }
            let mut x = excluded.clone();
            x[s] = true;
            stack.push((f, x));
        }
        found.push(set);
    }
    Ok(found)
}

/// A selection for `(b, i)`: moves whose upward Hoare closure is the full
/// move set. Built from the pointwise-minimal `l⃗` with `b ⊑ f_i(l⃗)`,
/// each mapped through the lattice's minimal join cover, in canonical
/// order.
pub fn selection<L: Lattice>(
    sys: &EquationSystem<L>,
    b: usize,
    i: usize,
    budget: usize,
) -> Result<Vec<Vec<BasisSubset>>> {
    check_position(sys, b, i)?;
    let lat = sys.lattice();
    let basis = lat.basis()?;
    let nb = basis.len();
    let m = sys.len();
    let target = &basis[b];
    let to_tuple = |items: &[usize]| -> Vec<L::Elem> {
        let mut l = vec![lat.bot(); m];
        for &it in items {
            let (j, k) = (it / nb, it % nb);
            l[j] = lat.join(&l[j], &basis[k]);
        }
        l
    };
    let found = minimal_subsets(
        nb * m,
        |items| Ok(lat.leq(target, &sys.eval(i, &to_tuple(items)))),
        budget,
        &format!("selection at ({b},{})", i + 1),
    )?;
    let mut ls: Vec<Vec<L::Elem>> = found.iter().map(|s| to_tuple(s)).collect();
    ls.sort();
    ls.dedup();
    let minimal: Vec<&Vec<L::Elem>> = ls
        .iter()
        .filter(|l| !ls.iter().any(|o| o != *l && tuple_leq(lat, o, l)))
        .collect();
    let mut moves = minimal
        .into_iter()
        .map(|l| l.iter().map(|e| lat.minimal_join_cover(e)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    moves.sort_by_cached_key(|xs| move_key(xs));
    moves.dedup();
    Ok(moves)
}

/// Interned positions with cached moves, as consumed by the local solver.
pub struct PowersetGame<'a, L: Lattice> {
    sys: &'a EquationSystem<L>,
    budget: usize,
    positions: Vec<Position>,
    index: HashMap<Position, usize>,
    cache: HashMap<usize, Vec<usize>>,
}

impl<'a, L: Lattice> PowersetGame<'a, L> {
    pub fn new(sys: &'a EquationSystem<L>) -> Result<Self> {
        Self::with_budget(sys, DEFAULT_MOVE_BUDGET)
    }

    pub fn with_budget(sys: &'a EquationSystem<L>, budget: usize) -> Result<Self> {
        if !sys.lattice().is_finite() {
            return Err(Error::Unsupported(
                "the powerset game needs a finite lattice".into(),
            ));
        }
        sys.lattice().basis()?;
        Ok(PowersetGame {
            sys,
            budget,
            positions: Vec::new(),
            index: HashMap::new(),
            cache: HashMap::new(),
        })
    }

    pub fn system(&self) -> &'a EquationSystem<L> {
        self.sys
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn intern(&mut self, p: Position) -> usize {
        if let Some(&id) = self.index.get(&p) {
            return id;
        }
        let id = self.positions.len();
        self.positions.push(p.clone());
        self.index.insert(p, id);
        id
    }

    /// The id of an already interned position.
    pub fn lookup(&self, p: &Position) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn position(&self, id: usize) -> &Position {
        &self.positions[id]
    }

    pub fn num_positions(&self) -> usize {
        self.positions.len()
    }

    /// Moves of an interned position: the selection for ∃, all answers
    /// for ∀. Cached.
    pub fn moves(&mut self, id: usize) -> Result<Vec<usize>> {
        if let Some(ms) = self.cache.get(&id) {
            return Ok(ms.clone());
        }
        let succ = match self.positions[id].clone() {
            Position::Exists { b, i } => selection(self.sys, b, i, self.budget)?
                .into_iter()
                .map(Position::Forall)
                .collect::<Vec<_>>(),
            Position::Forall(xs) => forall_moves(&xs),
        };
        let ids: Vec<usize> = succ.into_iter().map(|p| self.intern(p)).collect();
        self.cache.insert(id, ids.clone());
        Ok(ids)
    }
}

/// A play: a finite sequence of positions, or a lasso whose `cycle`
/// repeats forever after `prefix`.
#[derive(Clone, Debug, Default)]
pub struct Play {
    pub prefix: Vec<Position>,
    pub cycle: Vec<Position>,
}

/// The winner of a play. Finite plays are won by the player who moved
/// last; infinite ones by ∃ iff the highest priority on the cycle belongs
/// to a greatest fixpoint equation.
pub fn winner_of_play(play: &Play, signs: &[Sign]) -> Result<Player> {
    let all: Vec<&Position> = play.prefix.iter().chain(&play.cycle).collect();
    if all.is_empty() {
        return Err(Error::MalformedPlay("empty play".into()));
    }
    for p in &all {
        if let Position::Exists { i, .. } = p {
            if *i >= signs.len() {
                return Err(Error::MalformedPlay(format!(
                    "priority {} exceeds the {} equations",
                    i + 1,
                    signs.len()
                )));
            }
        }
    }
    for w in all.windows(2) {
        if w[0].owner() == w[1].owner() {
            return Err(Error::MalformedPlay("owners do not alternate".into()));
        }
    }
    if play.cycle.is_empty() {
        let last = all[all.len() - 1];
        return Ok(last.owner().opponent());
    }
    if play.cycle.len() % 2 == 1 {
        return Err(Error::MalformedPlay("cycle has odd length".into()));
    }
    let h = play
        .cycle
        .iter()
        .map(Position::priority)
        .max()
        .expect("non-empty cycle");
    Ok(if signs[h - 1].is_nu() {
        Player::Exists
    } else {
        Player::Forall
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqsys::{Equation, MonotoneFunction};
    use crate::lattice::{Grid, TableLattice};
    use std::sync::Arc;

    fn const_system(value: u32) -> EquationSystem<Grid> {
        EquationSystem::new(
            Arc::new(Grid::new(2).unwrap()),
            vec![Equation::new("x", Sign::Nu, MonotoneFunction::constant(1, "c", value))],
        )
        .unwrap()
    }

    #[test]
    fn top_constant_allows_everything() {
        let sys = const_system(2);
        let all = exists_moves(&sys, 0, 0).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(all[0], vec![BasisSubset::empty()]);
        assert_eq!(selection(&sys, 0, 0, 100).unwrap(), vec![vec![BasisSubset::empty()]]);
    }

    #[test]
    fn bottom_constant_is_stuck() {
        let sys = const_system(0);
        assert!(exists_moves(&sys, 0, 0).unwrap().is_empty());
        assert!(selection(&sys, 1, 0, 100).unwrap().is_empty());
    }

    #[test]
    fn forall_moves_enumerate_members() {
        assert!(forall_moves(&[BasisSubset::empty(), BasisSubset::empty()]).is_empty());
        let xs = [BasisSubset::from_indices([3, 4]), BasisSubset::empty()];
        assert_eq!(
            forall_moves(&xs),
            vec![Position::Exists { b: 3, i: 0 }, Position::Exists { b: 4, i: 0 }]
        );
        assert_eq!(forall_moves(&[BasisSubset::singleton(1)]).len(), 1);
    }

    #[test]
    fn selection_on_grid_is_single_threshold() {
        // x = y ⊓ 1/2 style: b ⊑ min(x, 1/2) needs x ⊒ b
        let sys = EquationSystem::new(
            Arc::new(Grid::new(4).unwrap()),
            vec![Equation::new("x", Sign::Nu, MonotoneFunction::new(1, "x ⊓ 1/2", |x: &[u32]| x[0].min(2)))],
        )
        .unwrap();
        assert_eq!(selection(&sys, 1, 0, 1000).unwrap(), vec![vec![BasisSubset::singleton(1)]]);
        assert!(selection(&sys, 2, 0, 1000).unwrap().is_empty());
    }

    #[test]
    fn selection_budget_is_reported() {
        let sys = EquationSystem::new(
            Arc::new(Grid::new(8).unwrap()),
            vec![Equation::new("x", Sign::Nu, MonotoneFunction::projection(1, 0, "x"))],
        )
        .unwrap();
        assert!(matches!(
            selection(&sys, 7, 0, 3),
            Err(Error::MoveBudgetExceeded { budget: 3, .. })
        ));
    }

    #[test]
    fn full_enumeration_guard() {
        let sys = EquationSystem::new(
            Arc::new(Grid::new(20).unwrap()),
            vec![Equation::new("x", Sign::Nu, MonotoneFunction::projection(1, 0, "x"))],
        )
        .unwrap();
        assert!(matches!(exists_moves(&sys, 0, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn selection_is_hoare_dense_on_m3() {
        let mut leq = vec![vec![false; 5]; 5];
        for i in 0..5 {
            leq[i][i] = true;
            leq[0][i] = true;
            leq[i][4] = true;
        }
        let m3 = Arc::new(TableLattice::from_leq((0..5).map(|i| i.to_string()).collect(), leq).unwrap());
        let l = m3.clone();
        let sys = EquationSystem::new(
            m3.clone(),
            vec![Equation::new("x", Sign::Nu, MonotoneFunction::new(1, "x ⊔ x", move |x: &[usize]| l.join(&x[0], &x[0])))],
        )
        .unwrap();
        for b in 0..3 {
            let full = exists_moves(&sys, b, 0).unwrap();
            let sel = selection(&sys, b, 0, 1000).unwrap();
            for s in &sel {
                assert!(full.contains(s));
            }
            for f in &full {
                assert!(sel.iter().any(|s| m3.hoare_leq(&s[0], &f[0]).unwrap()));
            }
        }
    }

    #[test]
    fn finite_play_winner() {
        let stuck = Position::Forall(vec![BasisSubset::empty()]);
        let play = Play {
            prefix: vec![Position::Exists { b: 0, i: 0 }, stuck],
            cycle: vec![],
        };
        assert_eq!(winner_of_play(&play, &[Sign::Mu]).unwrap(), Player::Exists);
        let play = Play {
            prefix: vec![Position::Exists { b: 0, i: 0 }],
            cycle: vec![],
        };
        assert_eq!(winner_of_play(&play, &[Sign::Nu]).unwrap(), Player::Forall);
    }

    #[test]
    fn lasso_winner_and_malformed_plays() {
        let e = |i| Position::Exists { b: 0, i };
        let f = Position::Forall(vec![BasisSubset::singleton(0), BasisSubset::empty()]);
        let nu_mu = [Sign::Nu, Sign::Mu];
        let play = Play {
            prefix: vec![],
            cycle: vec![e(0), f.clone()],
        };
        assert_eq!(winner_of_play(&play, &nu_mu).unwrap(), Player::Exists);
        let play = Play {
            prefix: vec![],
            cycle: vec![e(0), f.clone(), e(1), f.clone()],
        };
        assert_eq!(winner_of_play(&play, &nu_mu).unwrap(), Player::Forall);
        let bad = Play {
            prefix: vec![],
            cycle: vec![e(0), e(1)],
        };
        assert!(matches!(winner_of_play(&bad, &nu_mu), Err(Error::MalformedPlay(_))));
        let odd = Play {
            prefix: vec![f.clone()],
            cycle: vec![e(0)],
        };
        assert!(winner_of_play(&odd, &nu_mu).is_err());
        assert!(winner_of_play(&Play::default(), &nu_mu).is_err());
    }
}
