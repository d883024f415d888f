//! Non-crossing matchings between letters and their inverses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::word::Word;

/// A set of index pairs `(i, j)`, `1 <= i < j <= n`, on a word of length `n`.
///
/// Indices are 1-based. Pairs are kept sorted by their left endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Matching {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching { n, pairs: Vec::new() }
    }

    /// Pairs are normalized to `i < j` and sorted; structural validity is
    /// checked separately by [`validate_matching`].
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<_> = pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort_unstable();
        Matching { n, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn unmatched(&self) -> usize {
        self.n - 2 * self.pairs.len()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }
}

/// True iff every index is used at most once, no two pairs cross, and each
/// pair joins a letter to its inverse.
pub fn validate_matching(w: &Word, m: &Matching) -> Result<bool> {
    if m.n != w.len() {
        return Err(Error::LengthMismatch { matching: m.n, word: w.len() });
    }
    let n = m.n;
    // partner[i] for 1-based i
    let mut partner = vec![0usize; n + 1];
    for &(i, j) in &m.pairs {
        if i == 0 || i >= j || j > n {
            return Ok(false);
        }
        if partner[i] != 0 || partner[j] != 0 {
            return Ok(false);
        }
        partner[i] = j;
        partner[j] = i;
        if w.letters()[i - 1] != w.letters()[j - 1].inverse() {
            return Ok(false);
        }
    }
    // Non-crossing iff the pairs nest like parentheses.
    let mut open: Vec<usize> = Vec::new();
    for idx in 1..=n {
        let p = partner[idx];
        if p == 0 {
            continue;
        }
        if p > idx {
            open.push(idx);
        } else if open.pop() != Some(p) {
            return Ok(false);
        }
    }
    Ok(true)
}
