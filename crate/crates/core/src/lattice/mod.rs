//! Complete lattices with a finite basis.
//!
//! Every lattice used by the solvers implements [`Lattice`]. A basis is a
//! set of elements such that each element is the join of the basis
//! elements below it. Bases never contain bottom, which is the empty join.

mod grid;
mod pointwise;
mod powerset;
mod rational;
mod table;

pub use grid::{show_rational, Grid};
pub use pointwise::Pointwise;
pub use powerset::{Powerset, StateSet};
pub use rational::RationalInterval;
pub use table::TableLattice;

use std::fmt::Debug;
use std::hash::Hash;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Largest lattice that [`Lattice::elements`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

/// A finite subset of a lattice basis, stored as sorted basis indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisSubset(Vec<usize>);

impl BasisSubset {
    pub fn empty() -> Self {
        BasisSubset(Vec::new())
    }

    pub fn singleton(b: usize) -> Self {
        BasisSubset(vec![b])
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        BasisSubset(v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, b: usize) -> bool {
        self.0.binary_search(&b).is_ok()
    }

    pub fn is_subset(&self, other: &BasisSubset) -> bool {
        self.0.iter().all(|b| other.contains(*b))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for BasisSubset {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        BasisSubset::from_indices(iter)
    }
}

/// A complete lattice together with a basis.
pub trait Lattice: Send + Sync {
    type Elem: Clone + Eq + Ord + Hash + Debug + Send + Sync;

    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn meet(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn bot(&self) -> Self::Elem;
    fn top(&self) -> Self::Elem;

    /// Whether the lattice has finitely many elements. Game-based solvers
    /// refuse non-finite lattices.
    fn is_finite(&self) -> bool;

    /// Number of elements, when finite and representable.
    fn size(&self) -> Option<u128>;

    /// The basis, in a fixed order. Positions refer to basis elements by
    /// their index in this slice.
    fn basis(&self) -> Result<&[Self::Elem]>;

    /// All elements, for lattices small enough to enumerate.
    fn elements(&self) -> Result<Vec<Self::Elem>>;

    /// Human-readable rendering of an element.
    fn show(&self, e: &Self::Elem) -> String;

    /// A canonical small set of basis elements joining to `l`.
    ///
    /// The default keeps the maximal elements of [`Lattice::decompose`].
    fn minimal_join_cover(&self, l: &Self::Elem) -> Result<BasisSubset> {
        let below = self.decompose(l)?;
        let basis = self.basis()?;
        let maximal = below.iter().filter(|&b| {
            !below
                .iter()
                .any(|c| c != b && basis[b] != basis[c] && self.leq(&basis[b], &basis[c]))
        });
        Ok(maximal.collect())
    }

    /// Index of `e` in the basis, if it is a basis element.
    fn basis_index(&self, e: &Self::Elem) -> Option<usize> {
        self.basis().ok()?.iter().position(|b| b == e)
    }

    /// Random elements for sampled checks on lattices too large to enumerate.
    fn sample(&self, rng: &mut dyn RngCore, count: usize) -> Vec<Self::Elem> {
        match self.elements() {
            Ok(all) => (0..count)
                .filter_map(|_| all.choose(rng).cloned())
                .collect(),
            Err(_) => vec![self.bot(), self.top()],
        }
    }

    fn join_all<'a, I>(&self, items: I) -> Self::Elem
    where
        I: IntoIterator<Item = &'a Self::Elem>,
        Self::Elem: 'a,
    {
        items
            .into_iter()
            .fold(self.bot(), |acc, x| self.join(&acc, x))
    }

    fn meet_all<'a, I>(&self, items: I) -> Self::Elem
    where
        I: IntoIterator<Item = &'a Self::Elem>,
        Self::Elem: 'a,
    {
        items
            .into_iter()
            .fold(self.top(), |acc, x| self.meet(&acc, x))
    }

    /// `{b ∈ basis | b ⊑ l}`.
    fn decompose(&self, l: &Self::Elem) -> Result<BasisSubset> {
        let basis = self.basis()?;
        Ok(basis
            .iter()
            .enumerate()
            .filter(|(_, b)| self.leq(b, l))
            .map(|(i, _)| i)
            .collect())
    }

    fn join_subset(&self, x: &BasisSubset) -> Result<Self::Elem> {
        let basis = self.basis()?;
        Ok(self.join_all(x.iter().map(|i| &basis[i])))
    }

    /// Hoare preorder on basis subsets: `⨆X ⊑ ⨆Y`.
    fn hoare_leq(&self, x: &BasisSubset, y: &BasisSubset) -> Result<bool> {
        Ok(self.leq(&self.join_subset(x)?, &self.join_subset(y)?))
    }

    fn is_bot(&self, e: &Self::Elem) -> bool {
        *e == self.bot()
    }
}

/// Lattices carrying a distance, used by ε-iteration.
pub trait MetricLattice: Lattice {
    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> BigRational;
}

/// Enumerates `elems^m` in lexicographic order.
pub fn tuples<E: Clone>(elems: &[E], m: usize) -> Vec<Vec<E>> {
    let mut out = vec![Vec::with_capacity(m)];
    for _ in 0..m {
        let mut next = Vec::with_capacity(out.len() * elems.len());
        for prefix in &out {
            for e in elems {
                let mut t = prefix.clone();
                t.push(e.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Pointwise order on tuples.
pub fn tuple_leq<L: Lattice>(lat: &L, a: &[L::Elem], b: &[L::Elem]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| lat.leq(x, y))
}

pub(crate) fn check_enumerable(size: Option<u128>, what: &str) -> Result<()> {
    match size {
        Some(n) if n <= ENUMERATION_LIMIT => Ok(()),
        Some(n) => Err(Error::Unsupported(format!(
            "{what} has {n} elements, above the enumeration limit {ENUMERATION_LIMIT}"
        ))),
        None => Err(Error::Unsupported(format!(
            "{what} is not finite and cannot be enumerated"
        ))),
    }
}

/// Sample count for property checks on lattices too large to enumerate.
pub const CHECK_SAMPLES: usize = 2048;

/// Elements for property checks: all of them when there are at most
/// `limit`, otherwise a seeded sample together with ⊥, ⊤ and the basis.
/// The flag says whether the list is exhaustive.
pub(crate) fn check_domain<L: Lattice>(lat: &L, limit: usize) -> (Vec<L::Elem>, bool) {
    if lat.size().is_some_and(|n| n <= limit as u128) {
        if let Ok(all) = lat.elements() {
            return (all, true);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7570_746f);
    let mut v = lat.sample(&mut rng, CHECK_SAMPLES);
    v.push(lat.bot());
    v.push(lat.top());
    if let Ok(basis) = lat.basis() {
        v.extend(basis.iter().cloned());
    }
    v.sort();
    v.dedup();
    (v, false)
}

/// Partners `y` for pairwise checks on `(x, x ⊔ y)`: the whole domain when
/// it has at most `limit` elements, otherwise 16 seeded picks.
pub(crate) fn check_partners<E>(dom: &[E], limit: usize) -> Vec<&E> {
    if dom.len() <= limit {
        dom.iter().collect()
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7061_6972);
        (0..16).map(|_| &dom[rng.gen_range(0..dom.len())]).collect()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoare_on_empty_is_bottom() {
        let lat = Powerset::new(["a", "b"]);
        let y = BasisSubset::from_indices([1]);
        assert!(lat.hoare_leq(&BasisSubset::empty(), &y).unwrap());
        assert!(lat.hoare_leq(&BasisSubset::empty(), &BasisSubset::empty()).unwrap());
    }

    #[test]
    fn hoare_subset_implies_leq() {
        let lat = Powerset::new(["a", "b"]);
        let x = BasisSubset::from_indices([0]);
        let y = BasisSubset::from_indices([0, 1]);
        assert!(lat.hoare_leq(&x, &y).unwrap());
        assert!(!lat.hoare_leq(&y, &x).unwrap());
    }

    #[test]
    fn hoare_equivalence_on_grid() {
        let g = Grid::new(10).unwrap();
        // basis index k-1 holds k/10
        let x = BasisSubset::from_indices([0, 2]);
        let y = BasisSubset::from_indices([2]);
        assert!(g.hoare_leq(&x, &y).unwrap());
        assert!(g.hoare_leq(&y, &x).unwrap());
    }

    #[test]
    fn tuples_enumerates_product() {
        let t = tuples(&[0, 1, 2], 2);
        assert_eq!(t.len(), 9);
        assert_eq!(t[0], vec![0, 0]);
        assert_eq!(t[5], vec![1, 2]);
        assert_eq!(tuples::<u8>(&[], 0), vec![Vec::<u8>::new()]);
    }

    #[test]
    fn decompose_bottom_is_empty() {
        let lat = Powerset::new(["a", "b", "c"]);
        assert!(lat.decompose(&lat.bot()).unwrap().is_empty());
        let g = Grid::new(4).unwrap();
        assert!(g.decompose(&0).unwrap().is_empty());
    }
}
