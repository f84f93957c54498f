//! Kendall tau distance between ranking lists.
//!
//! d(t1, t2) = (N (N - 1))^-1 * sum over pairs i < j of
//!             (1 - sign(t1(i) - t1(j)) * sign(t2(i) - t2(j)))
//!
//! Each concordant pair contributes 0 and each discordant pair contributes 2,
//! so d is 0 for identical lists and 1 for exactly reversed lists. Rankings
//! must be strict (no shared positions), which keeps sign() away from zero.
//! The evaluation is the direct O(N^2) pair sum; the lists here have at most
//! a few thousand entries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::ranks::RankIndex;

/// A strict ranking: positions form a bijection onto 1..=N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingList {
    positions: Vec<u32>,
}

impl RankingList {
    /// `positions[i]` is the 1-based rank of entity i.
    pub fn new(positions: Vec<u32>) -> Result<Self, Error> {
        let n = positions.len();
        let mut seen = vec![false; n];
        for &pos in &positions {
            if pos == 0 || pos as usize > n || seen[pos as usize - 1] {
                return Err(Error::NotAPermutation);
            }
            seen[pos as usize - 1] = true;
        }
        Ok(Self { positions })
    }

    pub fn from_rank_index(index: &RankIndex) -> Self {
        // RankIndex guarantees a permutation, so this cannot fail.
        Self { positions: index.ranks() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, entity: usize) -> u32 {
        self.positions[entity]
    }
}

/// Normalized count of discordantly ordered pairs, in [0, 1].
pub fn kendall_distance(t1: &RankingList, t2: &RankingList) -> Result<f64, Error> {
    let n = t1.len();
    if n != t2.len() {
        return Err(Error::LengthMismatch { left: n, right: t2.len() });
    }
    if n < 2 {
        // No pairs to compare; lists of at most one entity always coincide.
        return Ok(0.0);
    }
    // The pair terms are exactly 0 or 2, so accumulate in integers and divide
    // once at the end.
    let mut total: u64 = 0;
    for i in 0..n {
        let a_i = t1.positions[i];
        let b_i = t2.positions[i];
        for j in i + 1..n {
            let s1 = if a_i > t1.positions[j] { 1i64 } else { -1i64 };
            let s2 = if b_i > t2.positions[j] { 1i64 } else { -1i64 };
            total += (1 - s1 * s2) as u64;
        }
    }
    Ok(total as f64 / (n as f64 * (n - 1) as f64))
}
