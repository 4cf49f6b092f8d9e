//! Local checks for a single greatest fixpoint `x =ν f(x)` where `f`
//! preserves non-empty meets, so that `f(x) = f*(x) ⊓ c` with `f*` a right
//! adjoint. The left adjoint `f_*` gives ∃ a single best move, which turns
//! the game into a chain (every non-⊥ element in the basis) or a tree.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use serde::Serialize;

use crate::eqsys::{Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::{Error, Result};
use crate::game::Player;
use crate::lattice::{check_domain, check_partners, Lattice};
use crate::upto::{check_compatibility, UpToFunction};

/// Lattices up to this size are enumerated when deriving adjoints.
pub const ADJOINT_LIMIT: usize = 1 << 12;

type Unary<E> = Arc<dyn Fn(&E) -> E + Send + Sync>;

/// The left adjoint of a meet-preserving `f*`, tabulated as
/// `f_*(b) = ⨅{l | b ⊑ f*(l)}`.
pub fn derive_left_adjoint<L: Lattice>(
    lat: &L,
    f_star: &(dyn Fn(&L::Elem) -> L::Elem + Send + Sync),
) -> Result<HashMap<L::Elem, L::Elem>> {
    let (elems, all) = check_domain(lat, ADJOINT_LIMIT);
    if !all {
        return Err(Error::Unsupported(format!(
            "left adjoints are derived on finite lattices of at most {ADJOINT_LIMIT} elements"
        )));
    }
    let images: Vec<L::Elem> = elems.iter().map(f_star).collect();
    let top = lat.top();
    if f_star(&top) != top {
        return Err(Error::NotMeetPreserving(format!("f*(⊤) = {}", lat.show(&f_star(&top)))));
    }
    for (i, x) in elems.iter().enumerate() {
        for (j, y) in elems.iter().enumerate().skip(i + 1) {
            let lhs = f_star(&lat.meet(x, y));
            let rhs = lat.meet(&images[i], &images[j]);
            if lhs != rhs {
                return Err(Error::NotMeetPreserving(format!(
                    "f*({} ⊓ {}) = {} but f*({}) ⊓ f*({}) = {}",
                    lat.show(x),
                    lat.show(y),
                    lat.show(&lhs),
                    lat.show(x),
                    lat.show(y),
                    lat.show(&rhs)
                )));
            }
        }
    }
    let table: HashMap<L::Elem, L::Elem> = elems
        .iter()
        .map(|b| {
            let above = elems.iter().zip(&images).filter(|(_, fl)| lat.leq(b, fl)).map(|(l, _)| l);
            (b.clone(), lat.meet_all(above))
        })
        .collect();
    // the adjunction follows from meet preservation; check it anyway
    for b in &elems {
        for (l, fl) in elems.iter().zip(&images) {
            if lat.leq(&table[b], l) != lat.leq(b, fl) {
                return Err(Error::NotMeetPreserving(format!(
                    "no left adjoint: f_*({}) = {} against l = {}",
                    lat.show(b),
                    lat.show(&table[b]),
                    lat.show(l)
                )));
            }
        }
    }
    Ok(table)
}

/// `x =ν f*(x) ⊓ c` with the left adjoint `f_*` of `f*`.
pub struct MeetPreservingEquation<L: Lattice> {
    lattice: Arc<L>,
    f_star: Unary<L::Elem>,
    c: L::Elem,
    lower: HashMap<L::Elem, L::Elem>,
}

impl<L: Lattice> Clone for MeetPreservingEquation<L> {
    fn clone(&self) -> Self {
        MeetPreservingEquation {
            lattice: Arc::clone(&self.lattice),
            f_star: Arc::clone(&self.f_star),
            c: self.c.clone(),
            lower: self.lower.clone(),
        }
    }
}

impl<L: Lattice> MeetPreservingEquation<L> {
    pub fn new(
        lattice: Arc<L>,
        f_star: impl Fn(&L::Elem) -> L::Elem + Send + Sync + 'static,
        c: L::Elem,
    ) -> Result<Self> {
        let f_star: Unary<L::Elem> = Arc::new(f_star);
        let lower = derive_left_adjoint(&*lattice, &*f_star)?;
        Ok(MeetPreservingEquation {
            lattice,
            f_star,
            c,
            lower,
        })
    }

    /// Splits an `f` preserving non-empty meets as `c = f(⊤)` and
    /// `f*(x) = f(x)` below ⊤, `f*(⊤) = ⊤`.
    pub fn from_function(lattice: Arc<L>, f: impl Fn(&L::Elem) -> L::Elem + Send + Sync + 'static) -> Result<Self>
    where
        L: 'static,
    {
        let top = lattice.top();
        let c = f(&top);
        let (elems, _) = check_domain(&*lattice, ADJOINT_LIMIT);
        for x in &elems {
            for y in check_partners(&elems, ADJOINT_LIMIT) {
                let lhs = f(&lattice.meet(x, y));
                let rhs = lattice.meet(&f(x), &f(y));
                if lhs != rhs {
                    return Err(Error::NotMeetPreserving(format!(
                        "f({} ⊓ {}) = {} but f({}) ⊓ f({}) = {}",
                        lattice.show(x),
                        lattice.show(y),
                        lattice.show(&lhs),
                        lattice.show(x),
                        lattice.show(y),
                        lattice.show(&rhs)
                    )));
                }
            }
        }
        MeetPreservingEquation::new(lattice, move |x| if *x == top { top.clone() } else { f(x) }, c)
    }

    pub fn lattice(&self) -> &Arc<L> {
        &self.lattice
    }

    pub fn c(&self) -> &L::Elem {
        &self.c
    }

    pub fn f_star(&self, x: &L::Elem) -> L::Elem {
        (self.f_star)(x)
    }

    /// The left adjoint `f_*`.
    pub fn f_lower(&self, b: &L::Elem) -> L::Elem {
        self.lower[b].clone()
    }

    pub fn f(&self, x: &L::Elem) -> L::Elem {
        self.lattice.meet(&self.f_star(x), &self.c)
    }

    pub fn function(&self) -> MonotoneFunction<L::Elem>
    where
        L: 'static,
    {
        let eq = self.clone();
        MonotoneFunction::new(1, "f* ⊓ c", move |x: &[L::Elem]| eq.f(&x[0]))
    }

    /// The equation as a one-equation system, for the global solver.
    pub fn to_system(&self) -> Result<EquationSystem<L>>
    where
        L: 'static,
    {
        EquationSystem::unchecked(Arc::clone(&self.lattice), vec![Equation::new("x", Sign::Nu, self.function())])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainResult {
    pub winner: Player,
    /// `b_0, b_1, …` up to the deciding element.
    pub chain: Vec<String>,
}

/// The deterministic chain game: from `b_0 = b`, ∃ loses once
/// `b_i ⋢ c`, wins once `b_i ⊑ ⨆_{j<i} b_j`, and otherwise the play
/// continues with `b_{i+1} = f_*(b_i)`. Needs every non-⊥ element in the
/// basis.
pub fn case1_check<L: Lattice>(eq: &MeetPreservingEquation<L>, b: &L::Elem) -> Result<ChainResult> {
    let lat = &*eq.lattice;
    let nb = lat.basis()?.len() as u128;
    if lat.size() != Some(nb + 1) {
        return Err(Error::BasisMismatch(
            "the chain game needs a basis of all non-bottom elements; use the tree game".into(),
        ));
    }
    if lat.basis_index(b).is_none() {
        return Err(Error::InvalidArgument(format!("{} is not a basis element", lat.show(b))));
    }
    let mut chain = Vec::new();
    let mut joined = lat.bot();
    let mut cur = b.clone();
    loop {
        chain.push(lat.show(&cur));
        if !lat.leq(&cur, &eq.c) {
            return Ok(ChainResult {
                winner: Player::Forall,
                chain,
            });
        }
        // covers f_*(b_i) = ⊥, where ∀ has no move, on the next round
        if lat.leq(&cur, &joined) {
            return Ok(ChainResult {
                winner: Player::Exists,
                chain,
            });
        }
        joined = lat.join(&joined, &cur);
        cur = eq.f_lower(&cur);
    }
}

/// A tree game in which ∃ always has at most one sensible move, explored
/// by [`explore`].
pub trait TreeGame {
    type Pos: Clone + Eq + Hash + Debug;

    /// `b ⊑ c`; otherwise ∃ is stuck at `b`.
    fn below_c(&self, b: &Self::Pos) -> bool;

    /// The basis elements of ∃'s best move from `b`.
    fn best_move(&self, b: &Self::Pos) -> Result<Vec<Self::Pos>>;

    /// Whether `b` is dominated by the positions explored so far, possibly
    /// up to some technique.
    fn dominated(&self, b: &Self::Pos) -> bool;

    /// Records `b` as explored.
    fn add(&mut self, b: &Self::Pos);

    fn show(&self, b: &Self::Pos) -> String;
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TreeResult {
    pub winner: Option<Player>,
    /// The set `W`, in exploration order.
    pub explored: Vec<String>,
    /// The position where ∃ got stuck, if any.
    pub losing: Option<String>,
    /// Branches cut by the stop condition.
    pub pruned: usize,
}

/// Depth-first exploration: a position not below `c` loses for ∃, one
/// dominated by `W` ends its branch, and any other joins `W` and has its
/// best move explored.
pub fn explore<G: TreeGame>(game: &mut G, root: G::Pos, node_limit: Option<usize>) -> Result<TreeResult> {
    let mut result = TreeResult::default();
    let mut stack = vec![root];
    let mut explored = 0usize;
    while let Some(b) = stack.pop() {
        if !game.below_c(&b) {
            result.winner = Some(Player::Forall);
            result.losing = Some(game.show(&b));
            return Ok(result);
        }
        if game.dominated(&b) {
            result.pruned += 1;
            continue;
        }
        if node_limit.is_some_and(|n| explored >= n) {
            return Err(Error::NonConvergence {
                iterations: explored,
                last: game.show(&b),
            });
        }
        explored += 1;
        game.add(&b);
        result.explored.push(game.show(&b));
        let moves = game.best_move(&b)?;
        stack.extend(moves.into_iter().rev());
    }
    result.winner = Some(Player::Exists);
    Ok(result)
}

struct LatticeTree<'a, L: Lattice> {
    eq: &'a MeetPreservingEquation<L>,
    upto: Option<&'a UpToFunction<L>>,
    joined: L::Elem,
    closed: L::Elem,
}

impl<L: Lattice> TreeGame for LatticeTree<'_, L> {
    type Pos = usize;

    fn below_c(&self, b: &usize) -> bool {
        let lat = &*self.eq.lattice;
        lat.leq(&lat.basis().expect("checked")[*b], &self.eq.c)
    }

    fn best_move(&self, b: &usize) -> Result<Vec<usize>> {
        let lat = &*self.eq.lattice;
        let lower = self.eq.f_lower(&lat.basis()?[*b]);
        Ok(lat.minimal_join_cover(&lower)?.iter().collect())
    }

    fn dominated(&self, b: &usize) -> bool {
        let lat = &*self.eq.lattice;
        lat.leq(&lat.basis().expect("checked")[*b], &self.closed)
    }

    fn add(&mut self, b: &usize) {
        let lat = &*self.eq.lattice;
        self.joined = lat.join(&self.joined, &lat.basis().expect("checked")[*b]);
        self.closed = match self.upto {
            Some(u) => u.apply(&self.joined),
            None => self.joined.clone(),
        };
    }

    fn show(&self, b: &usize) -> String {
        let lat = &*self.eq.lattice;
        lat.show(&lat.basis().expect("checked")[*b])
    }
}

/// The tree game for basis element `b` (an index into the basis), with
/// the stop condition `b′ ⊑ u(⨆W)` when an up-to function is given. `u`
/// must be compatible with `f`.
pub fn case2_check<L: Lattice + 'static>(
    eq: &MeetPreservingEquation<L>,
    b: usize,
    upto: Option<&UpToFunction<L>>,
) -> Result<TreeResult> {
    let lat = &*eq.lattice;
    let nb = lat.basis()?.len();
    if b >= nb {
        return Err(Error::IndexOutOfRange { index: b, len: nb });
    }
    if let Some(u) = upto {
        let report = check_compatibility(u, &eq.function())?;
        if !report.compatible {
            return Err(Error::Incompatible(format!(
                "{} is not compatible with f: {}",
                u.name(),
                report.witness.unwrap_or_default()
            )));
        }
    }
    let mut game = LatticeTree {
        eq,
        upto,
        joined: lat.bot(),
        closed: match upto {
            Some(u) => u.apply(&lat.bot()),
            None => lat.bot(),
        },
    };
    explore(&mut game, b, None)
}

#[cfg(test)]
mod tests;
