//! Stationary distribution of the accessible-word chain.
//!
//! States reachable from the empty word are the words in which no symbol
//! appears together with its inverse. On that class the chain has the
//! product-form stationary law
//!
//! ```text
//! π(w) = τ_1^{a_1(w)} ... τ_k^{a_k(w)} / Z,   τ_j = (j+1) / (j(2k+1) - 1),
//! ```
//!
//! where `a_1 + ... + a_j` is the length of the longest prefix of `w` using at
//! most `j` distinct symbols. Equivalently each position contributes
//! `τ_d`, with `d` the number of distinct symbols in the prefix ending there.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num::{BigUint, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::{chain_step, in_recurrent_class};
use crate::rational::{binomial, format_ratio, from_biguint, int, pow, ratio, to_f64, Q};
use crate::word::{Letter, Word};

/// Default cap on the number of states of a truncated chain.
pub const DEFAULT_STATE_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AProfile {
    pub a: Vec<u64>,
}

impl AProfile {
    pub fn new(a: Vec<u64>) -> Self {
        AProfile { a }
    }

    /// Number of leading positive entries.
    pub fn distinct(&self) -> usize {
        self.a.iter().take_while(|&&x| x > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.a.iter().sum()
    }
}

/// Distinct-symbol count of every prefix, position by position.
fn prefix_distinct(w: &Word) -> Vec<usize> {
    let mut seen = vec![false; 2 * w.k() as usize];
    let mut d = 0;
    w.codes()
        .map(|c| {
            if !seen[c] {
                seen[c] = true;
                d += 1;
            }
            d
        })
        .collect()
}

pub fn a_profile(w: &Word) -> Result<AProfile> {
    if !in_recurrent_class(w) {
        return Err(Error::OutsideRecurrentClass);
    }
    let mut a = vec![0u64; w.k() as usize];
    for d in prefix_distinct(w) {
        a[d - 1] += 1;
    }
    Ok(AProfile { a })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub k: u32,
    /// `tau[j-1]` is `τ_j`.
    pub tau: Vec<Q>,
    pub z: Q,
}

impl ChainParams {
    /// Parameters with arbitrary `τ`; `Z` is the matching normalizer
    /// `Σ_r C(k,r) 2^r Π_{j<=r} jτ_j / (1 - jτ_j)`. Fails if some `τ_j <= 0`
    /// or `jτ_j >= 1`, where the weights are not summable.
    pub fn with_tau(k: u32, tau: Vec<Q>) -> Result<Self> {
        if k < 2 {
            return Err(Error::AlphabetTooSmall { k, min: 2 });
        }
        if tau.len() != k as usize {
            return Err(Error::InvalidArgument(format!("expected {k} values of tau, got {}", tau.len())));
        }
        let mut z = Q::zero();
        let mut product = Q::one();
        for r in 0..=k as usize {
            if r > 0 {
                let jt = int(r as i64) * &tau[r - 1];
                if jt >= Q::one() || !tau[r - 1].is_positive() {
                    return Err(Error::InvalidArgument(format!("tau_{r} gives a non-summable weight")));
                }
                product *= &jt / (Q::one() - &jt);
            }
            z += from_biguint(binomial(k as u64, r as u64)) * pow(&int(2), r as u32) * &product;
        }
        Ok(ChainParams { k, tau, z })
    }

    pub fn tau(&self, j: usize) -> &Q {
        &self.tau[j - 1]
    }

    /// Unnormalized weight `Π τ_j^{a_j(w)}`.
    pub fn weight(&self, w: &Word) -> Result<Q> {
        let profile = a_profile(w)?;
        Ok(profile.a.iter().zip(&self.tau).fold(Q::one(), |acc, (&a, t)| acc * pow(t, a as u32)))
    }
}

/// `τ_j = (j+1)/(j(2k+1)-1)` and the matching `Z`.
pub fn chain_params(k: u32) -> Result<ChainParams> {
    if k < 2 {
        return Err(Error::AlphabetTooSmall { k, min: 2 });
    }
    let k_i = k as i64;
    let tau = (1..=k_i).map(|j| ratio(j + 1, j * (2 * k_i + 1) - 1)).collect();
    ChainParams::with_tau(k, tau)
}

/// `Π_{j<=r} j(j+1)/(j(2k-j)-1)`.
fn closed_form_product(k: i64, r: i64) -> Q {
    (1..=r).fold(Q::one(), |acc, j| acc * ratio(j * (j + 1), j * (2 * k - j) - 1))
}

/// `Z = Σ_{r=0}^k C(k,r) 2^r Π_{j<=r} j(j+1)/(j(2k-j)-1)`, evaluated without `τ`.
pub fn z_closed_form(k: u32) -> Q {
    (0..=k as i64)
        .map(|r| from_biguint(binomial(k as u64, r as u64)) * pow(&int(2), r as u32) * closed_form_product(k as i64, r))
        .sum()
}

/// `π(w)` for a word in the recurrent class.
pub fn stationary_pi(w: &Word, params: &ChainParams) -> Result<Q> {
    if w.k() != params.k {
        return Err(Error::AlphabetMismatch(w.k(), params.k));
    }
    Ok(params.weight(w)? / &params.z)
}

/// Number of recurrent-class words with the given profile:
/// `2^r k(k-1)...(k-r+1) · 2^{a_2-1} 3^{a_3-1} ... r^{a_r-1}`.
pub fn count_words_with_profile(a: &AProfile, k: u32) -> Result<BigUint> {
    if a.a.len() != k as usize {
        return Err(Error::MalformedProfile(format!("expected {k} entries, got {}", a.a.len())));
    }
    let r = a.distinct();
    if a.a[r..].iter().any(|&x| x != 0) {
        return Err(Error::MalformedProfile("positive entries must form a prefix".into()));
    }
    let mut count = BigUint::one();
    for i in 0..r as u64 {
        count *= 2u32;
        count *= k as u64 - i;
    }
    for (j, &aj) in a.a[..r].iter().enumerate() {
        count *= BigUint::from(j as u64 + 1).pow((aj - 1) as u32);
    }
    Ok(count)
}

/// All recurrent-class words of length at most `max_len`, shortest first.
pub fn recurrent_words(k: u32, max_len: usize, budget: usize) -> Result<Vec<Word>> {
    let mut out = vec![Word::empty(k)];
    let mut frontier = vec![Word::empty(k)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for code in 0..2 * k as usize {
                let x = Letter::from_code(code);
                if w.letters().contains(&x.inverse()) {
                    continue;
                }
                let mut longer = w.clone();
                longer.push(x);
                next.push(longer);
            }
        }
        if out.len() + next.len() > budget {
            return Err(Error::BudgetExceeded { needed: (out.len() + next.len()) as u128, budget: budget as u128 });
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// `tail[d]` for `1 <= d <= k`: the total weight of all continuations `s`
/// appended after a letter `x` whose prefix has `d` distinct symbols, where
/// `s` avoids `x`, stays in the recurrent class, and each position weighs
/// `τ_{distinct}`. Old symbols other than `x` repeat geometrically; each new
/// symbol (2 signs per unused generator) moves to `d + 1`:
///
/// ```text
/// tail[k] = 1 / (1 - (k-1)τ_k)
/// tail[d] = (1 + 2(k-d) τ_{d+1} tail[d+1]) / (1 - (d-1)τ_d)
/// ```
fn continuation_weights(params: &ChainParams) -> Option<Vec<Q>> {
    let k = params.k as usize;
    let mut tail = vec![Q::zero(); k + 2];
    for d in (1..=k).rev() {
        let stay = int(d as i64 - 1) * params.tau(d);
        if stay >= Q::one() {
            return None;
        }
        let mut numer = Q::one();
        if d < k {
            numer += int(2 * (k - d) as i64) * params.tau(d + 1) * &tail[d + 1];
        }
        tail[d] = numer / (Q::one() - stay);
    }
    Some(tail)
}

/// Total unnormalized weight flowing into `w` in one step, grouped as:
/// the word minus its last letter (append move), then longer words `w x s`
/// that collapse back to `w` when `x^-1` arrives, with `x` either a symbol
/// already in `w` or a new one.
fn inflow(w: &Word, params: &ChainParams, tail: &[Q]) -> Result<Q> {
    let k = params.k as usize;
    let sigma = params.weight(w)?;
    let r = prefix_distinct(w).last().copied().unwrap_or(0);
    let mut total = Q::zero();
    if !w.is_empty() {
        let shorter = Word::new(w.k(), w.letters()[..w.len() - 1].to_vec())?;
        total += params.weight(&shorter)?;
    }
    let mut collapse = Q::zero();
    if r >= 1 {
        collapse += int(r as i64) * params.tau(r) * &tail[r];
    }
    if r < k {
        collapse += int(2 * (k - r) as i64) * params.tau(r + 1) * &tail[r + 1];
    }
    total += sigma * collapse;
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceViolation {
    pub word: Word,
    pub inflow: String,
    pub expected: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub k: u32,
    pub max_len: usize,
    pub tau: Vec<String>,
    pub checked: usize,
    pub divergent: bool,
    pub violations: Vec<BalanceViolation>,
}

impl BalanceReport {
    pub fn passed(&self) -> bool {
        !self.divergent && self.violations.is_empty()
    }
}

/// Checks `Σ_{w' -> w} σ(w') = 2k σ(w)` exactly for every recurrent-class
/// word of length at most `max_len`, with the standard `τ`.
pub fn verify_balance(k: u32, max_len: usize) -> Result<BalanceReport> {
    verify_balance_with(&chain_params(k)?, max_len)
}

/// As [`verify_balance`] with caller-supplied `τ`.
pub fn verify_balance_with(params: &ChainParams, max_len: usize) -> Result<BalanceReport> {
    let words = recurrent_words(params.k, max_len, usize::MAX)?;
    let tau = params.tau.iter().map(format_ratio).collect();
    let Some(tail) = continuation_weights(params) else {
        return Ok(BalanceReport { k: params.k, max_len, tau, checked: 0, divergent: true, violations: vec![] });
    };
    let two_k = int(2 * params.k as i64);
    let mut violations = Vec::new();
    for w in &words {
        let lhs = inflow(w, params, &tail)?;
        let rhs = &two_k * params.weight(w)?;
        if lhs != rhs {
            violations.push(BalanceViolation {
                word: w.clone(),
                inflow: format_ratio(&lhs),
                expected: format_ratio(&rhs),
            });
        }
    }
    Ok(BalanceReport { k: params.k, max_len, tau, checked: words.len(), divergent: false, violations })
}

/// What happens to a length-increasing move out of a length-`L` state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockedMove {
    /// The chain stays put with that probability.
    #[serde(rename = "blocked-selfloop")]
    SelfLoop,
    /// The remaining moves are rescaled to total probability one.
    #[serde(rename = "blocked-renormalize")]
    Renormalize,
}

impl BlockedMove {
    pub const ALL: [BlockedMove; 2] = [BlockedMove::SelfLoop, BlockedMove::Renormalize];
}

impl fmt::Display for BlockedMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockedMove::SelfLoop => "blocked-selfloop",
            BlockedMove::Renormalize => "blocked-renormalize",
        })
    }
}

impl FromStr for BlockedMove {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blocked-selfloop" | "selfloop" => Ok(BlockedMove::SelfLoop),
            "blocked-renormalize" | "renormalize" => Ok(BlockedMove::Renormalize),
            other => Err(Error::InvalidArgument(format!("unknown convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedChain {
    pub k: u32,
    pub max_len: usize,
    pub convention: BlockedMove,
    pub states: Vec<Word>,
    pub pi: Vec<f64>,
}

impl TruncatedChain {
    /// Largest `|π_L(w) - π(w)|` over states of length at most `up_to_len`.
    pub fn max_deviation(&self, params: &ChainParams, up_to_len: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for (w, &p) in self.states.iter().zip(&self.pi) {
            if w.len() <= up_to_len {
                worst = worst.max((p - to_f64(&stationary_pi(w, params)?)).abs());
            }
        }
        Ok(worst)
    }

    /// Range of `π_L(w) / π(w)` over states of length at most `up_to_len`,
    /// as `(min, max)`. Equal ends mean `π_L` is proportional to `π` there.
    pub fn ratio_range(&self, params: &ChainParams, up_to_len: usize) -> Result<(f64, f64)> {
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);
        for (w, &p) in self.states.iter().zip(&self.pi) {
            if w.len() <= up_to_len {
                let r = p / to_f64(&stationary_pi(w, params)?);
                range = (range.0.min(r), range.1.max(r));
            }
        }
        Ok(range)
    }

    pub fn probability(&self, w: &Word) -> Option<f64> {
        self.states.iter().position(|s| s == w).map(|i| self.pi[i])
    }
}

/// Transition matrix of the chain restricted to words of length at most `max_len`.
pub fn truncated_transitions(states: &[Word], k: u32, max_len: usize, convention: BlockedMove) -> DMatrix<f64> {
    let index: HashMap<&Word, usize> = states.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let n = states.len();
    let step = 1.0 / (2 * k) as f64;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (i, w) in states.iter().enumerate() {
        let mut blocked = 0.0;
        for code in 0..2 * k as usize {
            let (next, _) = chain_step(w, Letter::from_code(code));
            if next.len() > max_len {
                blocked += step;
            } else {
                p[(i, index[&next])] += step;
            }
        }
        if blocked > 0.0 {
            match convention {
                BlockedMove::SelfLoop => p[(i, i)] += blocked,
                BlockedMove::Renormalize => {
                    let scale = 1.0 / (1.0 - blocked);
                    p.row_mut(i).scale_mut(scale);
                }
            }
        }
    }
    p
}

/// Stationary law `π_L` of the chain on words of length at most `max_len`.
pub fn truncated_chain_pi(k: u32, max_len: usize, convention: BlockedMove, budget: usize) -> Result<TruncatedChain> {
    if k < 2 {
        return Err(Error::AlphabetTooSmall { k, min: 2 });
    }
    let states = recurrent_words(k, max_len, budget)?;
    let n = states.len();
    let p = truncated_transitions(&states, k, max_len, convention);
    // π (P - I) = 0 with the last equation replaced by Σπ = 1.
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(TruncatedChain { k, max_len, convention, states, pi: pi.iter().copied().collect() })
}

/// Limiting unmatched fraction of the greedy algorithm,
/// `1 - Σ_{r=1}^k r 2^r C(k,r) Π_{j<=r} j(j+1)/(j(2k-j)-1) / (k Z)`.
pub fn lambda_tilde(k: u32) -> Result<Q> {
    if k < 2 {
        return Err(Error::AlphabetTooSmall { k, min: 2 });
    }
    let ki = k as i64;
    let matched: Q = (1..=ki)
        .map(|r| {
            int(r) * pow(&int(2), r as u32) * from_biguint(binomial(k as u64, r as u64)) * closed_form_product(ki, r)
        })
        .sum();
    Ok(Q::one() - matched / (int(ki) * z_closed_form(k)))
}
