//! Bounds bracketing the limiting unmatched fraction `λ_k`.
//!
//! Lower bounds come from counting words with few unmatched letters: such a
//! word is a trivial word of length `n - r` with `r` letters inserted, so
//! `P(ℓ < nδ)` decays exponentially whenever an entropy-versus-return-rate
//! exponent is negative. Upper bounds come from explicit matchings (runs of
//! one generator, and the greedy chain).

use num::{BigUint, One, Zero};
use serde::Serialize;

use crate::chain::lambda_tilde;
use crate::error::{Error, Result};
use crate::rational::{to_f64, Exact};

/// Left end of every bisection bracket for `δ`.
pub const DELTA_FLOOR: f64 = 1e-6;

/// Exponential return rate of the simple random walk on the free group,
/// `sqrt(2k-1)/k`.
pub fn theta(k: u32) -> f64 {
    let k = k as f64;
    (2.0 * k - 1.0).sqrt() / k
}

/// Number of words of length `p` that freely reduce to the identity.
///
/// Dynamic program over the reduced length: from `0` every letter moves to
/// `1`; from `d >= 1` one letter moves down and `2k - 1` letters move up.
pub fn trivial_word_count(p: usize, k: u32) -> BigUint {
    assert!(k >= 1, "alphabet size must be positive");
    if p % 2 == 1 {
        return BigUint::zero();
    }
    let up = BigUint::from(2 * k as u64 - 1);
    let from_origin = BigUint::from(2 * k as u64);
    // counts[d] = words of the current length with reduced length d; d <= p/2 suffices
    let reach = p / 2 + 1;
    let mut counts = vec![BigUint::zero(); reach + 1];
    counts[0] = BigUint::one();
    for step in 0..p {
        let remaining = p - step - 1;
        let mut next = vec![BigUint::zero(); reach + 1];
        for d in 0..=reach {
            if counts[d].is_zero() {
                continue;
            }
            if d == 0 {
                next[1] += &counts[0] * &from_origin;
            } else {
                next[d - 1] += &counts[d];
                if d < reach && d < remaining {
                    next[d + 1] += &counts[d] * &up;
                }
            }
        }
        counts = next;
    }
    counts.swap_remove(0)
}

/// `|T_p| / (2k)^p`, the probability that a uniform word of length `p` is trivial.
pub fn trivial_word_probability(p: usize, k: u32) -> f64 {
    let count = trivial_word_count(p, k);
    let total = BigUint::from(2 * k as u64).pow(p as u32);
    to_f64(&num::BigRational::new(count.into(), total.into()))
}

fn ln_central_binomial(m: u64) -> f64 {
    (1..=m).map(|i| ((m + i) as f64 / i as f64).ln()).sum()
}

/// Catalan-path approximation of the return probability at time `2m`:
/// `(2k-1)^m / ((2k)^{2m} (m+1)) · C(2m, m)`.
///
/// Its `2m`-th root tends to [`theta`]. At finite `m` it differs from the
/// exact return probability because the walk at distance `0` always moves
/// up, while every Catalan path is weighted as if it moved up with
/// probability `(2k-1)/2k`.
pub fn tau_asymptotic(m: u64, k: u32) -> f64 {
    ln_tau_asymptotic(m, k).exp()
}

/// Natural log of [`tau_asymptotic`]; finite where the value itself underflows.
pub fn ln_tau_asymptotic(m: u64, k: u32) -> f64 {
    let two_k = 2.0 * k as f64;
    m as f64 * (two_k - 1.0).ln() - 2.0 * m as f64 * two_k.ln() - ((m + 1) as f64).ln() + ln_central_binomial(m)
}

/// Natural-log binary entropy `-δ ln δ - (1-δ) ln(1-δ)`.
pub fn entropy(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("entropy needs 0 < delta < 1, got {delta}")));
    }
    Ok(-delta * delta.ln() - (1.0 - delta) * (1.0 - delta).ln())
}

/// Exponent in `P(ℓ(X) < nδ) <= exp(n · exponent)` from the plain triple count.
pub fn base_exponent(delta: f64, k: u32) -> f64 {
    entropy(delta).expect("delta in (0, 1)") + theta(k).ln()
}

/// Exponent of the refined count for `k = 2`, where unmatched letters in
/// front of a matched letter have only 3 admissible values.
pub fn refined_exponent_k2(delta: f64) -> f64 {
    entropy(delta).expect("delta in (0, 1)") + delta * 0.75f64.ln() + (1.0 - delta) * theta(2).ln()
}

/// Largest `δ` such that `f < 0` on all of `(DELTA_FLOOR, δ)`; `f` is the
/// entropy plus a linear term, concave, and negative at the floor.
///
/// When `f` is still negative at `1/2` (possible once `θ_k < 1/2`), the
/// search continues on `(1/2, 1)` and returns the upper end of the bracket if
/// no sign change is found there.
fn first_sign_change(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let hi_limit = 1.0 - DELTA_FLOOR;
    let (mut lo, mut hi) = (DELTA_FLOOR, 0.5);
    debug_assert!(f(lo) < 0.0);
    if f(hi) < 0.0 {
        // Concave f: on (1/2, 1) it is positive, if anywhere, on one interval
        // starting at its maximum; scan for it coarsely, then bisect.
        let grid = 4096;
        let hit = (1..=grid).map(|i| 0.5 + (hi_limit - 0.5) * i as f64 / grid as f64).find(|&x| f(x) >= 0.0);
        match hit {
            Some(x) => {
                lo = x - (hi_limit - 0.5) / grid as f64;
                hi = x;
            }
            None => return hi_limit,
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Supremum `δ*` of the `δ` with `h(δ) + ln θ_k < 0`; every `δ < δ*` is a
/// lower bound for `λ_k`. The returned value is within `tol` below the root.
pub fn lower_bound_base(k: u32, tol: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::AlphabetTooSmall { k, min: 2 });
    }
    Ok(first_sign_change(|d| base_exponent(d, k), tol))
}

pub fn lower_bound_refined_k2(tol: f64) -> f64 {
    first_sign_change(refined_exponent_k2, tol)
}

/// `E|2ξ - u|` for `ξ ~ Binomial(u, 1/2)`.
pub fn run_excess(u: u64) -> f64 {
    let ln_half = 0.5f64.ln();
    let mut ln_binom = 0.0f64;
    let mut total = 0.0;
    for x in 0..=u {
        if x > 0 {
            ln_binom += ((u - x + 1) as f64 / x as f64).ln();
        }
        let p = (ln_binom + u as f64 * ln_half).exp();
        total += p * (2.0 * x as f64 - u as f64).abs();
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementaryUpper {
    /// `(1/4) Σ_{u<=U} 2^{-u} E|2ξ_u - u|`
    pub partial_sum: f64,
    /// Certified bound on the omitted terms, `(U+2) 2^{-U} / 4`.
    pub tail_bound: f64,
    pub truncation: u64,
}

impl ElementaryUpper {
    pub fn upper(&self) -> f64 {
        self.partial_sum + self.tail_bound
    }
}

/// `(1/4) E|2ξ - U|` with `U ~ Geometric(1/2)` on `{1, 2, ...}` and
/// `ξ | U ~ Binomial(U, 1/2)`, truncated at `truncation` runs.
pub fn upper_bound_elementary_k2(truncation: u64, tol: f64) -> Result<ElementaryUpper> {
    if truncation == 0 || truncation > 1000 {
        return Err(Error::InvalidArgument(format!("truncation must be in 1..=1000, got {truncation}")));
    }
    let tail_bound = (truncation as f64 + 2.0) * 0.5f64.powi(truncation as i32) / 4.0;
    if tail_bound > tol {
        return Err(Error::InvalidArgument(format!(
            "truncation {truncation} leaves a tail of up to {tail_bound:e}, above tol {tol:e}"
        )));
    }
    let partial_sum = (1..=truncation).map(|u| 0.5f64.powi(u as i32) * run_excess(u)).sum::<f64>() / 4.0;
    Ok(ElementaryUpper { partial_sum, tail_bound, truncation })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub k: u32,
    pub lower_base: f64,
    pub lower_refined: Option<f64>,
    pub upper_elementary: Option<f64>,
    pub upper_greedy: Exact,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Lower bounds rounded down and upper bounds rounded up to `digits` decimals.
    pub fn rounded(&self, digits: i32) -> BoundReport {
        let scale = 10f64.powi(digits);
        let down = |x: f64| (x * scale).floor() / scale;
        let up = |x: f64| (x * scale).ceil() / scale;
        BoundReport {
            k: self.k,
            lower_base: down(self.lower_base),
            lower_refined: self.lower_refined.map(down),
            upper_elementary: self.upper_elementary.map(up),
            upper_greedy: Exact { exact: self.upper_greedy.exact.clone(), decimal: up(self.upper_greedy.decimal) },
            notes: self.notes.clone(),
        }
    }

    pub fn best_lower(&self) -> f64 {
        self.lower_refined.unwrap_or(self.lower_base).max(self.lower_base)
    }

    pub fn best_upper(&self) -> f64 {
        self.upper_elementary.map_or(self.upper_greedy.decimal, |e| e.min(self.upper_greedy.decimal))
    }

    /// `lower_base <= lower_refined < upper_greedy` and everything in `(0, 1)`.
    pub fn is_consistent(&self) -> bool {
        let upper = self.upper_greedy.decimal;
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        in_unit(self.lower_base)
            && in_unit(upper)
            && self.lower_refined.is_none_or(|r| in_unit(r) && self.lower_base <= r)
            && self.upper_elementary.is_none_or(in_unit)
            && self.best_lower() < upper
            && self.best_lower() < self.best_upper()
    }
}

/// All bounds available for `k`; the refined lower bound and the elementary
/// upper bound exist only for `k = 2`.
pub fn bound_report(k: u32, tol: f64) -> Result<BoundReport> {
    let lower_base = lower_bound_base(k, tol)?;
    let greedy = lambda_tilde(k)?;
    let mut notes = vec![
        format!("lower_base: sup of delta with h(delta) + ln(theta_k) < 0, theta_k = {:.9}", theta(k)),
        "upper_greedy: limiting unmatched fraction of the one-sided greedy matching".to_string(),
    ];
    let (lower_refined, upper_elementary) = if k == 2 {
        let elementary = upper_bound_elementary_k2(64, tol.max(1e-15))?;
        notes.push("lower_refined: unmatched letters before a matched one take 3 values".to_string());
        notes.push(format!(
            "upper_elementary: runs of one generator matched within themselves, truncated at {} runs",
            elementary.truncation
        ));
        (Some(lower_bound_refined_k2(tol)), Some(elementary.upper()))
    } else {
        (None, None)
    };
    if lower_base >= 1.0 - DELTA_FLOOR - tol {
        notes.push("lower_base saturated: the exponent is negative on the whole bracket".to_string());
    }
    Ok(BoundReport { k, lower_base, lower_refined, upper_elementary, upper_greedy: Exact::from(&greedy), notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_values() {
        assert!((theta(2) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(theta(1), 1.0);
        assert!(theta(5) < theta(3) && theta(3) < theta(2));
    }

    #[test]
    fn trivial_counts() {
        assert_eq!(trivial_word_count(0, 2), BigUint::one());
        assert_eq!(trivial_word_count(2, 2), BigUint::from(4u32));
        assert_eq!(trivial_word_count(4, 2), BigUint::from(28u32));
        for k in 1..=4 {
            assert!(trivial_word_count(3, k).is_zero());
        }
        // k = 1: central binomial coefficients
        assert_eq!(trivial_word_count(6, 1), BigUint::from(20u32));
    }

    #[test]
    fn tau_asymptotic_first_value() {
        assert!((tau_asymptotic(1, 2) - 3.0 / 16.0).abs() < 1e-15);
        assert!((tau_asymptotic(0, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_values() {
        assert!((entropy(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((entropy(0.3).unwrap() - entropy(0.7).unwrap()).abs() < 1e-15);
        assert!((entropy(0.03).unwrap() - 0.13474).abs() < 1e-5);
        assert!(entropy(0.0).is_err());
        assert!(entropy(1.0).is_err());
        assert!(entropy(f64::NAN).is_err());
    }

    #[test]
    fn base_lower_bound_k2() {
        assert!(base_exponent(0.03, 2) < 0.0);
        let root = lower_bound_base(2, 1e-12).unwrap();
        assert!(root > 0.03 && root < 0.04, "{root}");
        assert!(base_exponent(root, 2) < 0.0);
        assert!(base_exponent(root + 2e-12, 2) >= 0.0);
        assert!(lower_bound_base(1, 1e-9).is_err());
    }

    #[test]
    fn refined_lower_bound_k2() {
        assert!(refined_exponent_k2(0.034) < 0.0);
        let refined = lower_bound_refined_k2(1e-12);
        assert!(refined > lower_bound_base(2, 1e-12).unwrap());
        assert!(refined > 0.034);
        assert!(refined_exponent_k2(refined + 2e-12) >= 0.0);
    }

    #[test]
    fn bisection_stable_under_tolerance_halving() {
        for tol in [1e-6, 1e-8, 1e-10] {
            let a = lower_bound_base(3, tol).unwrap();
            let b = lower_bound_base(3, tol / 2.0).unwrap();
            assert!((a - b).abs() <= tol);
            let a = lower_bound_refined_k2(tol);
            let b = lower_bound_refined_k2(tol / 2.0);
            assert!((a - b).abs() <= tol);
        }
    }

    #[test]
    fn base_lower_bound_grows_with_k() {
        let roots: Vec<f64> = (2..=7).map(|k| lower_bound_base(k, 1e-10).unwrap()).collect();
        assert!(roots.windows(2).all(|w| w[0] < w[1]), "{roots:?}");
        assert!(lower_bound_base(1000, 1e-10).unwrap() > 0.9);
    }

    #[test]
    fn run_excess_small() {
        assert!((run_excess(1) - 1.0).abs() < 1e-15);
        // u = 2: |2ξ-2| is 2, 0, 2 with probabilities 1/4, 1/2, 1/4
        assert!((run_excess(2) - 1.0).abs() < 1e-15);
        assert!((run_excess(3) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn elementary_upper_bound() {
        let e = upper_bound_elementary_k2(64, 1e-12).unwrap();
        assert!((e.partial_sum - 0.2886).abs() <= 0.0005, "{}", e.partial_sum);
        assert!(e.upper() < 0.29);
        assert!(upper_bound_elementary_k2(10, 1e-12).is_err());
    }

    #[test]
    fn elementary_truncation_converges() {
        let values: Vec<f64> = (20..60).map(|u| upper_bound_elementary_k2(u, 1.0).unwrap().upper()).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(values[0] - values[values.len() - 1] < 1e-4);
    }

    #[test]
    fn report_k2() {
        let r = bound_report(2, 1e-10).unwrap();
        assert!(r.lower_base >= 0.03);
        assert!(r.lower_refined.unwrap() >= 0.034);
        assert!((r.upper_elementary.unwrap() - 0.2886).abs() < 0.0005);
        assert_eq!(r.upper_greedy.exact, "3/13");
        assert!(r.is_consistent());
    }

    #[test]
    fn report_consistency_small_k() {
        for k in 2..=5 {
            let r = bound_report(k, 1e-10).unwrap();
            assert!(r.is_consistent(), "{r:?}");
            assert!(r.rounded(6).is_consistent());
        }
        assert_eq!(bound_report(3, 1e-10).unwrap().upper_greedy.exact, "33/100");
    }

    #[test]
    fn rounding_is_directional() {
        let r = bound_report(2, 1e-12).unwrap();
        let rounded = r.rounded(4);
        assert!(rounded.lower_base <= r.lower_base);
        assert!(rounded.lower_refined.unwrap() <= r.lower_refined.unwrap());
        assert!(rounded.upper_elementary.unwrap() >= r.upper_elementary.unwrap());
        assert!(rounded.upper_greedy.decimal >= r.upper_greedy.decimal);
    }
}
