use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};

use super::grid::show_rational;
use super::{BasisSubset, Lattice, MetricLattice};
use crate::error::{Error, Result};

/// Exact rationals in `[0, 1]`.
///
/// The lattice is not finite, so it has no usable basis. It only supports
/// the order operations and ε-iteration.
#[derive(Clone, Debug, Default)]
pub struct RationalInterval;

impl RationalInterval {
    /// Clamps a rational into the unit interval.
    pub fn clamp(x: BigRational) -> BigRational {
        if x.is_negative() {
            BigRational::zero()
        } else if x > BigRational::one() {
            BigRational::one()
        } else {
            x
        }
    }
}

fn no_basis() -> Error {
    Error::Unsupported("the rational unit interval has no finite basis".into())
}

impl Lattice for RationalInterval {
    type Elem = BigRational;

    fn leq(&self, a: &BigRational, b: &BigRational) -> bool {
        a <= b
    }

    fn join(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a.max(b).clone()
    }

    fn meet(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a.min(b).clone()
    }

    fn bot(&self) -> BigRational {
        BigRational::zero()
    }

    fn top(&self) -> BigRational {
        BigRational::one()
    }

    fn is_finite(&self) -> bool {
        false
    }

    fn size(&self) -> Option<u128> {
        None
    }

    fn basis(&self) -> Result<&[BigRational]> {
        Err(no_basis())
    }

    fn elements(&self) -> Result<Vec<BigRational>> {
        Err(no_basis())
    }

    fn show(&self, e: &BigRational) -> String {
        show_rational(e)
    }

    fn minimal_join_cover(&self, _: &BigRational) -> Result<BasisSubset> {
        Err(no_basis())
    }

    fn sample(&self, rng: &mut dyn RngCore, count: usize) -> Vec<BigRational> {
        (0..count)
            .map(|_| {
                let d: i64 = rng.gen_range(1..=64);
                let k: i64 = rng.gen_range(0..=d);
                BigRational::new(BigInt::from(k), BigInt::from(d))
            })
            .collect()
    }
}

impl MetricLattice for RationalInterval {
    fn distance(&self, a: &BigRational, b: &BigRational) -> BigRational {
        (a - b).abs()
    }
}
