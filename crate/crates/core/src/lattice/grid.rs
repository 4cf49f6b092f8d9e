use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{check_enumerable, BasisSubset, Lattice, MetricLattice};
use crate::error::{Error, Result};

/// The grid `{0, 1/n, ..., 1}` inside the unit interval.
///
/// Elements are numerators `k`, standing for `k/n`. Basis index `k - 1`
/// holds the element `k`.
#[derive(Clone, Debug)]
pub struct Grid {
    n: u32,
    basis: Vec<u32>,
}

impl Grid {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        Ok(Grid {
            n,
            basis: (1..=n).collect(),
        })
    }

    pub fn resolution(&self) -> u32 {
        self.n
    }

    /// The rational `k/n`.
    pub fn value(&self, k: u32) -> BigRational {
        BigRational::new(BigInt::from(k), BigInt::from(self.n))
    }

    /// `α_n(x) = ⌈n·x⌉/n`, clamped to the unit interval.
    pub fn alpha(&self, x: &BigRational) -> u32 {
        let scaled = (x * BigInt::from(self.n)).ceil();
        if scaled.is_negative() {
            0
        } else if scaled >= BigRational::from_integer(BigInt::from(self.n)) {
            self.n
        } else {
            u32::try_from(scaled.to_integer()).expect("bounded by n")
        }
    }
}

impl Lattice for Grid {
    type Elem = u32;

    fn leq(&self, a: &u32, b: &u32) -> bool {
        a <= b
    }

    fn join(&self, a: &u32, b: &u32) -> u32 {
        *a.max(b)
    }

    fn meet(&self, a: &u32, b: &u32) -> u32 {
        *a.min(b)
    }

    fn bot(&self) -> u32 {
        0
    }

    fn top(&self) -> u32 {
        self.n
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn size(&self) -> Option<u128> {
        Some(u128::from(self.n) + 1)
    }

    fn basis(&self) -> Result<&[u32]> {
        Ok(&self.basis)
    }

    fn elements(&self) -> Result<Vec<u32>> {
        check_enumerable(self.size(), "grid lattice")?;
        Ok((0..=self.n).collect())
    }

    fn show(&self, e: &u32) -> String {
        show_rational(&self.value(*e))
    }

    fn minimal_join_cover(&self, l: &u32) -> Result<BasisSubset> {
        Ok(if *l == 0 {
            BasisSubset::empty()
        } else {
            BasisSubset::singleton(*l as usize - 1)
        })
    }

    fn decompose(&self, l: &u32) -> Result<BasisSubset> {
        Ok((0..*l as usize).collect())
    }

    fn join_subset(&self, x: &BasisSubset) -> Result<u32> {
        Ok(x.iter().last().map_or(0, |i| i as u32 + 1))
    }

    fn basis_index(&self, e: &u32) -> Option<usize> {
        (*e > 0 && *e <= self.n).then(|| *e as usize - 1)
    }
}

impl MetricLattice for Grid {
    fn distance(&self, a: &u32, b: &u32) -> BigRational {
        (self.value(*a) - self.value(*b)).abs()
    }
}

/// Renders a rational as `p/q`, or as an integer when `q = 1`.
pub fn show_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.is_zero() {
        "0".into()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::laws::check_lattice_laws;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn rejects_zero() {
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn n1_is_two_point() {
        let g = Grid::new(1).unwrap();
        assert_eq!(g.elements().unwrap(), vec![0, 1]);
        assert_eq!(g.basis().unwrap(), &[1]);
        check_lattice_laws(&g);
    }

    #[test]
    fn n10_join_and_decompose() {
        let g = Grid::new(10).unwrap();
        assert_eq!(g.join(&3, &7), 7);
        assert_eq!(g.meet(&3, &7), 3);
        let d = g.decompose(&3).unwrap();
        let vals: Vec<String> = d.iter().map(|i| g.show(&g.basis().unwrap()[i])).collect();
        assert_eq!(vals, ["1/10", "1/5", "3/10"]);
        assert!(g.minimal_join_cover(&0).unwrap().is_empty());
        assert_eq!(g.minimal_join_cover(&7).unwrap(), BasisSubset::singleton(6));
        assert_eq!(g.show(&8), "4/5");
        check_lattice_laws(&g);
    }

    #[test]
    fn alpha_is_ceiling() {
        let g = Grid::new(10).unwrap();
        assert_eq!(g.alpha(&q(1, 5)), 2);
        assert_eq!(g.alpha(&q(21, 100)), 3);
        assert_eq!(g.alpha(&q(0, 1)), 0);
        assert_eq!(g.alpha(&q(1, 1)), 10);
        assert_eq!(g.alpha(&q(3, 2)), 10);
        assert_eq!(g.alpha(&q(-1, 2)), 0);
    }

    #[test]
    fn distance() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.distance(&1, &3), q(1, 2));
    }
}
