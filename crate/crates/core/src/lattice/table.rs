use super::Lattice;
use crate::error::{Error, Result};

/// A small finite lattice given by its order relation.
///
/// Elements are indices `0..n`. Joins and meets are tabulated at
/// construction, which also checks that every pair has a unique least
/// upper bound and greatest lower bound. The basis is the set of
/// join-irreducible elements.
#[derive(Clone, Debug)]
pub struct TableLattice {
    names: Vec<String>,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<usize>>,
    meet: Vec<Vec<usize>>,
    bot: usize,
    top: usize,
    basis: Vec<usize>,
}

impl TableLattice {
    /// Builds a lattice from a reflexive, antisymmetric, transitive relation.
    pub fn from_leq(names: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidArgument("a lattice needs at least one element".into()));
        }
        if leq.len() != n || leq.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument("order matrix has the wrong shape".into()));
        }
        for a in 0..n {
            if !leq[a][a] {
                return Err(Error::InvalidArgument(format!("order is not reflexive at {}", names[a])));
            }
            for b in 0..n {
                if a != b && leq[a][b] && leq[b][a] {
                    return Err(Error::InvalidArgument(format!(
                        "order is not antisymmetric on {} and {}",
                        names[a], names[b]
                    )));
                }
                for c in 0..n {
                    if leq[a][b] && leq[b][c] && !leq[a][c] {
                        return Err(Error::InvalidArgument("order is not transitive".into()));
                    }
                }
            }
        }
        let bound = |a: usize, b: usize, upper: bool| -> Result<usize> {
            let candidates: Vec<usize> = (0..n)
                .filter(|&c| if upper { leq[a][c] && leq[b][c] } else { leq[c][a] && leq[c][b] })
                .collect();
            candidates
                .iter()
                .copied()
                .find(|&c| {
                    candidates
                        .iter()
                        .all(|&d| if upper { leq[c][d] } else { leq[d][c] })
                })
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "{} and {} have no {}",
                        names[a],
                        names[b],
                        if upper { "join" } else { "meet" }
                    ))
                })
        };
        let mut join = vec![vec![0; n]; n];
        let mut meet = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                join[a][b] = bound(a, b, true)?;
                meet[a][b] = bound(a, b, false)?;
            }
        }
        let bot = (0..n).find(|&c| (0..n).all(|d| leq[c][d])).ok_or_else(|| {
            Error::InvalidArgument("order has no least element".into())
        })?;
        let top = (0..n).find(|&c| (0..n).all(|d| leq[d][c])).ok_or_else(|| {
            Error::InvalidArgument("order has no greatest element".into())
        })?;
        let basis = (0..n)
            .filter(|&x| {
                x != bot && {
                    let below = (0..n)
                        .filter(|&y| y != x && leq[y][x])
                        .fold(bot, |acc, y| join[acc][y]);
                    below != x
                }
            })
            .collect();
        Ok(TableLattice {
            names,
            leq,
            join,
            meet,
            bot,
            top,
            basis,
        })
    }

    /// Builds the lattice of a Moore family: a family of subsets of a small
    /// universe (bitmasks) closed under intersection and containing the
    /// full set. Missing intersections and the full set are added.
    pub fn from_moore_family(sets: &[u32], universe_bits: u32) -> Result<Self> {
        let full = if universe_bits >= 32 { u32::MAX } else { (1u32 << universe_bits) - 1 };
        let mut family: Vec<u32> = sets.iter().map(|s| s & full).collect();
        family.push(full);
        loop {
            family.sort_unstable();
            family.dedup();
            let mut added = false;
            for i in 0..family.len() {
                for j in 0..i {
                    let m = family[i] & family[j];
                    if family.binary_search(&m).is_err() {
                        family.push(m);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        family.sort_by_key(|s| (s.count_ones(), *s));
        let names = family.iter().map(|s| format!("{s:#b}")).collect();
        let leq = family
            .iter()
            .map(|a| family.iter().map(|b| a & !b == 0).collect())
            .collect();
        Self::from_leq(names, leq)
    }

    /// The chain `0 < 1 < ... < n-1`.
    pub fn chain(n: usize) -> Result<Self> {
        let names = (0..n).map(|i| i.to_string()).collect();
        let leq = (0..n).map(|a| (0..n).map(|b| a <= b).collect()).collect();
        Self::from_leq(names, leq)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Lattice for TableLattice {
    type Elem = usize;

    fn leq(&self, a: &usize, b: &usize) -> bool {
        self.leq[*a][*b]
    }

    fn join(&self, a: &usize, b: &usize) -> usize {
        self.join[*a][*b]
    }

    fn meet(&self, a: &usize, b: &usize) -> usize {
        self.meet[*a][*b]
    }

    fn bot(&self) -> usize {
        self.bot
    }

    fn top(&self) -> usize {
        self.top
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn size(&self) -> Option<u128> {
        Some(self.names.len() as u128)
    }

    fn basis(&self) -> Result<&[usize]> {
        Ok(&self.basis)
    }

    fn elements(&self) -> Result<Vec<usize>> {
        Ok((0..self.names.len()).collect())
    }

    fn show(&self, e: &usize) -> String {
        self.names[*e].clone()
    }

    fn basis_index(&self, e: &usize) -> Option<usize> {
        self.basis.iter().position(|b| b == e)
    }
}
