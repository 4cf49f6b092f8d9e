use std::fmt;

use serde::Serialize;

use crate::eqsys::Sign;
use crate::error::{Error, Result};
use crate::game::Player;

/// Per-priority visit counts since a higher priority was last seen.
/// Component `j` counts priority `j + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Counter(pub Vec<u32>);

impl Counter {
    pub fn zero(m: usize) -> Self {
        Counter(vec![0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The counter after leaving a position of priority `i`: components
    /// below `i` reset, component `i` incremented, the rest kept.
    /// Priority 0 leaves the counter unchanged.
    pub fn next(&self, i: usize) -> Counter {
        if i == 0 {
            return self.clone();
        }
        let mut k = self.0.clone();
        for c in &mut k[..i - 1] {
            *c = 0;
        }
        k[i - 1] += 1;
        Counter(k)
    }

    /// `self <_P other`, assuming equal lengths.
    pub fn lt(&self, other: &Counter, player: Player, signs: &[Sign]) -> bool {
        match player {
            Player::Exists => exists_lt(&self.0, &other.0, signs),
            Player::Forall => exists_lt(&other.0, &self.0, signs),
        }
    }

    /// `self ≤_P other`.
    pub fn le(&self, other: &Counter, player: Player, signs: &[Sign]) -> bool {
        self == other || self.lt(other, player, signs)
    }
}

fn exists_lt(a: &[u32], b: &[u32], signs: &[Sign]) -> bool {
    match (0..a.len()).rev().find(|&i| a[i] != b[i]) {
        None => false,
        Some(i) => match signs[i] {
            Sign::Nu => a[i] < b[i],
            Sign::Mu => a[i] > b[i],
        },
    }
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `next(k, i)`, rejecting priorities above the counter length.
pub fn next_counter(k: &Counter, i: usize) -> Result<Counter> {
    if i > k.len() {
        return Err(Error::IndexOutOfRange { index: i, len: k.len() });
    }
    Ok(k.next(i))
}

/// `k <_P k'` for the given equation signs.
pub fn counter_lt(player: Player, k: &Counter, k2: &Counter, signs: &[Sign]) -> Result<bool> {
    if k.len() != k2.len() || k.len() != signs.len() {
        return Err(Error::InvalidArgument(format!(
            "counters of lengths {} and {} compared under {} signs",
            k.len(),
            k2.len(),
            signs.len()
        )));
    }
    Ok(k.lt(k2, player, signs))
}
