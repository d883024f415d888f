//! Exact minimum number of unmatched letters over non-crossing matchings.
//!
//! The main routine is an interval dynamic program: `best[i][e]` is the
//! largest number of pairs in a non-crossing matching of the half-open
//! interval `[i, e)`, and
//!
//! ```text
//! best[i][e] = max( best[i+1][e],
//!                   max over t in (i, e) with X_t = X_i^-1 of 1 + best[i+1][t] + best[t+1][e] )
//! ```
//!
//! Rows are filled for decreasing `i`. For a fixed `i` and partner `t` the
//! second term is a shifted copy of row `t+1`, so each row is built from
//! contiguous element-wise maxima. Time is `O(n^3 / 2k)` on random words,
//! memory `O(n^2)` in a triangular table.

use std::collections::BTreeMap;

use num::{BigInt, BigRational};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::word::{cyclic_reduce, word_from_index, Letter, Word};

/// Default length cap for [`brute_force_length`].
pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 14;

/// Default cap on the number of words enumerated by [`census`] and [`rho_exact`].
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthResult {
    pub unmatched: usize,
    pub witness: Matching,
}

trait Cell: Copy + Ord + Default + Send + Sync {
    fn from_usize(v: usize) -> Self;
    fn to_usize(self) -> usize;
    fn add(self, other: Self) -> Self;
}

impl Cell for i16 {
    fn from_usize(v: usize) -> Self {
        v as i16
    }
    fn to_usize(self) -> usize {
        self as usize
    }
    #[inline(always)]
    fn add(self, other: Self) -> Self {
        self.wrapping_add(other)
    }
}

impl Cell for u32 {
    fn from_usize(v: usize) -> Self {
        v as u32
    }
    fn to_usize(self) -> usize {
        self as usize
    }
    #[inline(always)]
    fn add(self, other: Self) -> Self {
        self.wrapping_add(other)
    }
}

/// Triangular table of `best[i][e]` for `0 <= i <= e <= n`.
struct PairTable<C> {
    n: usize,
    cells: Vec<C>,
    row_start: Vec<usize>,
}

impl<C: Cell> PairTable<C> {
    fn get(&self, i: usize, e: usize) -> usize {
        debug_assert!(i <= e && e <= self.n);
        self.cells[self.row_start[i] + (e - i)].to_usize()
    }
}

/// Letter positions grouped by letter code, each list increasing.
fn positions_by_code(codes: &[usize], k: u32) -> Vec<Vec<usize>> {
    let mut by_code = vec![Vec::new(); 2 * k as usize];
    for (pos, &c) in codes.iter().enumerate() {
        by_code[c].push(pos);
    }
    by_code
}

/// Partners of position `i`: later positions holding the inverse letter.
fn partners<'a>(by_code: &'a [Vec<usize>], codes: &[usize], i: usize) -> &'a [usize] {
    let list = &by_code[codes[i] ^ 1];
    let from = list.partition_point(|&t| t <= i);
    &list[from..]
}

fn layout(n: usize) -> (Vec<usize>, usize) {
    let mut row_start = Vec::with_capacity(n + 1);
    let mut offset = 0;
    for i in 0..=n {
        row_start.push(offset);
        offset += n + 1 - i;
    }
    (row_start, offset)
}

/// Number of recently kept partners each new partner is checked against.
const WINDOW: usize = 8;

/// Row-by-row fill. A partner `t` is skipped when it provably cannot raise
/// any entry of the row: either `best[i+1][t+1]` already exceeds
/// `best[i+1][t]`, or an earlier kept partner `t'` satisfies
/// `best[i+1][t'] + best[t'+1][t+1] >= best[i+1][t]`. Both follow from
/// superadditivity of `best` over adjacent intervals.
fn fill_table<C: Cell>(codes: &[usize], by_code: &[Vec<usize>]) -> PairTable<C> {
    let n = codes.len();
    let (row_start, size) = layout(n);
    let mut cells = vec![C::default(); size];

    for i in (0..n).rev() {
        let (head, tail) = cells.split_at_mut(row_start[i + 1]);
        let row = &mut head[row_start[i]..];
        let tail_row = |r: usize| &tail[row_start[r] - row_start[i + 1]..][..n + 1 - r];

        let next = tail_row(i + 1);
        row[0] = C::default();
        row[1..].copy_from_slice(next);

        let one = C::from_usize(1);
        let mut kept: Vec<usize> = Vec::new();
        for &t in partners(by_code, codes, i) {
            let here = next[t - (i + 1)];
            if next[t + 1 - (i + 1)] > here {
                continue;
            }
            let dominated =
                kept.iter().rev().take(WINDOW).any(|&tp| next[tp - (i + 1)].add(tail_row(tp + 1)[t - tp]) >= here);
            if dominated {
                continue;
            }
            kept.push(t);
            let base = one.add(here);
            let src = tail_row(t + 1);
            let dst = &mut row[t + 1 - i..];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = (*d).max(base.add(s));
            }
        }
    }
    PairTable { n, cells, row_start }
}

fn traceback<C: Cell>(table: &PairTable<C>, codes: &[usize], by_code: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut stack = vec![(0usize, table.n)];
    while let Some((mut i, e)) = stack.pop() {
        while i < e {
            let value = table.get(i, e);
            if value == 0 {
                break;
            }
            // Leftmost partner that attains the optimum wins; leaving `i`
            // unmatched is the last resort.
            let chosen = partners(by_code, codes, i)
                .iter()
                .copied()
                .take_while(|&t| t < e)
                .find(|&t| 1 + table.get(i + 1, t) + table.get(t + 1, e) == value);
            match chosen {
                Some(t) => {
                    pairs.push((i + 1, t + 1));
                    stack.push((t + 1, e));
                    stack.push((i + 1, t));
                    break;
                }
                None => i += 1,
            }
        }
    }
    pairs
}

fn max_pairs_with<C: Cell>(codes: &[usize], k: u32, witness: bool) -> (usize, Option<Vec<(usize, usize)>>) {
    let by_code = positions_by_code(codes, k);
    let table = fill_table::<C>(codes, &by_code);
    let best = table.get(0, codes.len());
    let pairs = witness.then(|| traceback(&table, codes, &by_code));
    (best, pairs)
}

fn max_pairs(codes: &[usize], k: u32, witness: bool) -> (usize, Option<Vec<(usize, usize)>>) {
    if codes.len() <= i16::MAX as usize * 2 {
        max_pairs_with::<i16>(codes, k, witness)
    } else {
        max_pairs_with::<u32>(codes, k, witness)
    }
}

/// Exact `ℓ(w)` together with a witness matching.
///
/// Among optimal matchings the witness pairs each position with its leftmost
/// partner that still attains the optimum.
pub fn optimal_length(w: &Word) -> LengthResult {
    let codes: Vec<usize> = w.codes().collect();
    let (best, pairs) = max_pairs(&codes, w.k(), true);
    let witness = Matching::new(w.len(), pairs.unwrap_or_default());
    debug_assert_eq!(witness.len(), best);
    LengthResult { unmatched: w.len() - 2 * best, witness }
}

/// Exact `ℓ(w)` without a witness, on the raw word.
pub fn min_unmatched(w: &Word) -> usize {
    let codes: Vec<usize> = w.codes().collect();
    w.len() - 2 * max_pairs(&codes, w.k(), false).0
}

/// Brute-force oracle: tries every set `S` of positions to leave unmatched
/// and keeps the smallest one whose complement freely reduces to the empty
/// word. A word is trivial exactly when it has a complete non-crossing
/// matching, so this is an independent characterization of `ℓ`.
pub fn brute_force_length(w: &Word) -> Result<LengthResult> {
    brute_force_length_with_limit(w, DEFAULT_BRUTE_FORCE_LIMIT)
}

pub fn brute_force_length_with_limit(w: &Word, limit: usize) -> Result<LengthResult> {
    let n = w.len();
    if n > limit || n >= 63 {
        return Err(Error::OverLimit { len: n, limit });
    }
    let letters = w.letters();
    let mut best: Option<(usize, u64)> = None;
    let mut stack: Vec<Letter> = Vec::with_capacity(n);
    for removed in 0u64..(1u64 << n) {
        let size = removed.count_ones() as usize;
        if size % 2 != n % 2 || best.is_some_and(|(b, _)| size >= b) {
            continue;
        }
        stack.clear();
        for (pos, &x) in letters.iter().enumerate() {
            if removed >> pos & 1 == 1 {
                continue;
            }
            if stack.last() == Some(&x.inverse()) {
                stack.pop();
            } else {
                stack.push(x);
            }
        }
        if stack.is_empty() {
            best = Some((size, removed));
        }
    }
    let (unmatched, removed) = best.expect("removing every letter always leaves the empty word");

    // Rebuild the cancellation pairs of the kept letters as the witness.
    let mut open: Vec<usize> = Vec::new();
    let mut pairs = Vec::new();
    for (pos, &x) in letters.iter().enumerate() {
        if removed >> pos & 1 == 1 {
            continue;
        }
        match open.last() {
            Some(&top) if letters[top] == x.inverse() => {
                open.pop();
                pairs.push((top + 1, pos + 1));
            }
            _ => open.push(pos),
        }
    }
    Ok(LengthResult { unmatched, witness: Matching::new(n, pairs) })
}

fn enumeration_size(n: usize, k: u32, budget: u128) -> Result<u128> {
    let base = 2 * k as u128;
    let needed = u32::try_from(n).ok().and_then(|e| base.checked_pow(e)).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(needed)
}

const CENSUS_CHUNK: u128 = 1 << 12;

/// Distribution of `ℓ` over all `(2k)^n` words of length `n`: value -> count.
pub fn census(n: usize, k: u32, budget: u128) -> Result<BTreeMap<usize, u64>> {
    if k < 1 {
        return Err(Error::AlphabetTooSmall { k, min: 1 });
    }
    let total = enumeration_size(n, k, budget)?;
    let chunks = total.div_ceil(CENSUS_CHUNK);
    let per_chunk: Vec<BTreeMap<usize, u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = BTreeMap::new();
            for index in c * CENSUS_CHUNK..((c + 1) * CENSUS_CHUNK).min(total) {
                *counts.entry(min_unmatched(&word_from_index(index, n, k))).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut counts = BTreeMap::new();
    for part in per_chunk {
        for (value, count) in part {
            *counts.entry(value).or_insert(0) += count;
        }
    }
    Ok(counts)
}

/// Exact `ρ_k(n) = E[ℓ(X)] / n` for uniform words of length `n >= 1`.
pub fn rho_exact(n: usize, k: u32, budget: u128) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidArgument("rho is defined for n >= 1".into()));
    }
    let counts = census(n, k, budget)?;
    let total: BigInt = BigInt::from(2 * k).pow(n as u32);
    let sum: BigInt = counts.iter().map(|(&v, &c)| BigInt::from(v) * BigInt::from(c)).sum();
    Ok(BigRational::new(sum, total * BigInt::from(n)))
}

/// `ℓ` computed on the cyclic reduction of `w`. Equal to [`min_unmatched`]
/// because `ℓ` is invariant under free reduction and conjugation, and much
/// cheaper on random words, whose reductions are markedly shorter.
pub fn min_unmatched_reduced(w: &Word) -> usize {
    min_unmatched(&cyclic_reduce(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::validate_matching;
    use crate::word::{all_words, parse_word};
    use num::{One, ToPrimitive};

    fn w(text: &str) -> Word {
        parse_word(text, 2).unwrap()
    }

    /// Unpruned fill straight from the recurrence.
    fn reference_table(codes: &[usize]) -> Vec<Vec<usize>> {
        let n = codes.len();
        let mut best = vec![vec![0usize; n + 1]; n + 1];
        for i in (0..n).rev() {
            for e in i + 1..=n {
                let mut v = best[i + 1][e];
                for t in i + 1..e {
                    if codes[t] == codes[i] ^ 1 {
                        v = v.max(1 + best[i + 1][t] + best[t + 1][e]);
                    }
                }
                best[i][e] = v;
            }
        }
        best
    }

    #[test]
    fn pruned_table_matches_reference() {
        let mut rng = crate::rng::WordRng::new(11);
        for (n, k) in [(60, 1), (80, 2), (120, 2), (90, 3), (150, 2)] {
            for _ in 0..5 {
                let word = crate::rng::sample_word(n, k, &mut rng);
                let codes: Vec<usize> = word.codes().collect();
                let table = fill_table::<i16>(&codes, &positions_by_code(&codes, k));
                let reference = reference_table(&codes);
                for i in 0..=n {
                    for e in i..=n {
                        assert_eq!(table.get(i, e), reference[i][e], "n={n} k={k} i={i} e={e}");
                    }
                }
            }
        }
    }

    #[test]
    fn empty_word() {
        let r = optimal_length(&Word::empty(2));
        assert_eq!(r.unmatched, 0);
        assert!(r.witness.is_empty());
    }

    #[test]
    fn three_letters() {
        let r = optimal_length(&w("abA"));
        assert_eq!(r.unmatched, 1);
        assert_eq!(r.witness.pairs(), &[(1, 3)]);
    }

    #[test]
    fn leftmost_partner_tie_break() {
        // a A A: pairing 1 with 2 or 1 with 3 are both optimal
        let r = optimal_length(&w("aAA"));
        assert_eq!(r.unmatched, 1);
        assert_eq!(r.witness.pairs(), &[(1, 2)]);
    }

    #[test]
    fn brute_force_small_cases() {
        assert_eq!(brute_force_length(&w("aA")).unwrap().unmatched, 0);
        assert_eq!(brute_force_length(&w("aa")).unwrap().unmatched, 2);
        let long = Word::from_signed(2, &[1; 15]).unwrap();
        assert_eq!(brute_force_length(&long), Err(Error::OverLimit { len: 15, limit: 14 }));
    }

    #[test]
    fn brute_force_witness_validates() {
        for word in all_words(6, 2).step_by(7) {
            let r = brute_force_length(&word).unwrap();
            assert!(validate_matching(&word, &r.witness).unwrap());
            assert_eq!(r.witness.unmatched(), r.unmatched);
        }
    }

    #[test]
    fn census_n4() {
        let counts = census(4, 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(counts, BTreeMap::from([(0, 28), (2, 168), (4, 60)]));
    }

    #[test]
    fn rho_small() {
        let budget = DEFAULT_ENUMERATION_BUDGET;
        assert_eq!(rho_exact(4, 2, budget).unwrap(), BigRational::new(9.into(), 16.into()));
        for k in 1..=4 {
            assert!(rho_exact(1, k, budget).unwrap().is_one());
        }
        assert_eq!(rho_exact(2, 2, budget).unwrap(), BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn rho_budget() {
        assert!(matches!(rho_exact(10, 2, 1000), Err(Error::BudgetExceeded { .. })));
        assert!(rho_exact(0, 2, 1000).is_err());
    }

    #[test]
    fn rho_one_generator_is_parity() {
        // With k = 1 the only obstruction is the exponent sum.
        let r = rho_exact(6, 1, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let expected: f64 = (0..=6u32)
            .map(|up| {
                let binom = [1., 6., 15., 20., 15., 6., 1.][up as usize];
                binom * (2.0 * up as f64 - 6.0).abs()
            })
            .sum::<f64>()
            / 64.0
            / 6.0;
        assert!((r.to_f64().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn reduced_path_agrees() {
        for word in all_words(6, 2) {
            assert_eq!(min_unmatched_reduced(&word), min_unmatched(&word));
        }
    }
}
