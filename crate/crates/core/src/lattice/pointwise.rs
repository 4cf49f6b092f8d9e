use num_rational::BigRational;
use num_traits::Zero;

use super::{BasisSubset, Lattice, MetricLattice};
use crate::error::{Error, Result};

/// Functions from a finite state list into an inner lattice, ordered
/// pointwise.
///
/// The basis consists of one-point functions: basis index
/// `s * |B| + j` maps state `s` to the `j`-th inner basis element and every
/// other state to bottom.
#[derive(Clone, Debug)]
pub struct Pointwise<L: Lattice> {
    states: Vec<String>,
    inner: L,
    basis: Option<Vec<Vec<L::Elem>>>,
    inner_basis_len: usize,
}

impl<L: Lattice> Pointwise<L> {
    pub fn new<I, S>(states: I, inner: L) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let (basis, inner_basis_len) = match inner.basis() {
            Ok(ib) => {
                let mut out = Vec::with_capacity(states.len() * ib.len());
                for s in 0..states.len() {
                    for b in ib {
                        let mut f = vec![inner.bot(); states.len()];
                        f[s] = b.clone();
                        out.push(f);
                    }
                }
                (Some(out), ib.len())
            }
            Err(_) => (None, 0),
        };
        Pointwise {
            states,
            inner,
            basis,
            inner_basis_len,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Splits a basis index into (state, inner basis index).
    pub fn split_basis_index(&self, b: usize) -> (usize, usize) {
        (b / self.inner_basis_len, b % self.inner_basis_len)
    }

    pub fn constant(&self, v: L::Elem) -> Vec<L::Elem> {
        vec![v; self.states.len()]
    }
}

impl<L: Lattice> Lattice for Pointwise<L> {
    type Elem = Vec<L::Elem>;

    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        a.iter().zip(b).all(|(x, y)| self.inner.leq(x, y))
    }

    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.inner.join(x, y)).collect()
    }

    fn meet(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.inner.meet(x, y)).collect()
    }

    fn bot(&self) -> Self::Elem {
        self.constant(self.inner.bot())
    }

    fn top(&self) -> Self::Elem {
        self.constant(self.inner.top())
    }

    fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }

    fn size(&self) -> Option<u128> {
        let base = self.inner.size()?;
        let mut acc: u128 = 1;
        for _ in 0..self.states.len() {
            acc = acc.checked_mul(base)?;
        }
        Some(acc)
    }

    fn basis(&self) -> Result<&[Self::Elem]> {
        self.basis
            .as_deref()
            .ok_or_else(|| Error::Unsupported("inner lattice has no finite basis".into()))
    }

    fn elements(&self) -> Result<Vec<Self::Elem>> {
        super::check_enumerable(self.size(), "pointwise lattice")?;
        let inner = self.inner.elements()?;
        Ok(super::tuples(&inner, self.states.len()))
    }

    fn show(&self, e: &Self::Elem) -> String {
        let parts: Vec<String> = self
            .states
            .iter()
            .zip(e)
            .map(|(s, v)| format!("{s}={}", self.inner.show(v)))
            .collect();
        format!("[{}]", parts.join(", "))
    }

    fn minimal_join_cover(&self, l: &Self::Elem) -> Result<BasisSubset> {
        self.basis()?;
        let mut out = Vec::new();
        for (s, v) in l.iter().enumerate() {
            for j in self.inner.minimal_join_cover(v)?.iter() {
                out.push(s * self.inner_basis_len + j);
            }
        }
        Ok(BasisSubset::from_indices(out))
    }

    fn decompose(&self, l: &Self::Elem) -> Result<BasisSubset> {
        self.basis()?;
        let mut out = Vec::new();
        for (s, v) in l.iter().enumerate() {
            for j in self.inner.decompose(v)?.iter() {
                out.push(s * self.inner_basis_len + j);
            }
        }
        Ok(BasisSubset::from_indices(out))
    }

    fn join_subset(&self, x: &BasisSubset) -> Result<Self::Elem> {
        let ib = self.inner.basis()?;
        let mut out = self.bot();
        for b in x.iter() {
            let (s, j) = self.split_basis_index(b);
            out[s] = self.inner.join(&out[s], &ib[j]);
        }
        Ok(out)
    }

    fn basis_index(&self, e: &Self::Elem) -> Option<usize> {
        let bot = self.inner.bot();
        let mut nonzero = e.iter().enumerate().filter(|(_, v)| **v != bot);
        match (nonzero.next(), nonzero.next()) {
            (Some((s, v)), None) => {
                Some(s * self.inner_basis_len + self.inner.basis_index(v)?)
            }
            _ => None,
        }
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, count: usize) -> Vec<Self::Elem> {
        let per_state: Vec<Vec<L::Elem>> = (0..self.states.len())
            .map(|_| self.inner.sample(rng, count))
            .collect();
        (0..count)
            .map(|i| {
                per_state
                    .iter()
                    .map(|col| col.get(i).cloned().unwrap_or_else(|| self.inner.bot()))
                    .collect()
            })
            .collect()
    }
}

impl<L: MetricLattice> MetricLattice for Pointwise<L> {
    /// Sup distance over states.
    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> BigRational {
        a.iter()
            .zip(b)
            .map(|(x, y)| self.inner.distance(x, y))
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::laws::check_lattice_laws;
    use crate::lattice::{Grid, Powerset, RationalInterval};

    #[test]
    fn grid_functions() {
        let lat = Pointwise::new(["a", "b"], Grid::new(3).unwrap());
        assert_eq!(lat.size(), Some(16));
        assert_eq!(lat.basis().unwrap().len(), 6);
        check_lattice_laws(&lat);
        let f = vec![2, 0];
        assert_eq!(lat.minimal_join_cover(&f).unwrap(), BasisSubset::singleton(1));
        assert_eq!(lat.show(&f), "[a=2/3, b=0]");
        assert_eq!(lat.basis_index(&vec![0, 3]), Some(5));
    }

    #[test]
    fn powerset_functions() {
        let lat = Pointwise::new(["s", "t"], Powerset::new(["x", "y"]));
        check_lattice_laws(&lat);
    }

    #[test]
    fn rational_functions_have_no_basis() {
        let lat = Pointwise::new(["a"], RationalInterval);
        assert!(!lat.is_finite());
        assert!(lat.basis().is_err());
        let a = vec![BigRational::new(1.into(), 4.into())];
        let b = vec![BigRational::new(3.into(), 4.into())];
        assert_eq!(lat.distance(&a, &b), BigRational::new(1.into(), 2.into()));
    }
}
