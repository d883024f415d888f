//! One-shot driver that reruns every published check and writes a report
//! bundle.
//!
//! Checks are grouped (`census`, `dp`, `invariance`, `greedy`, `chain`,
//! `balance`, `truncated`, `ergodic`, `bounds`, `trivial`, `concentration`,
//! `bracket`) so a subset can be selected by name.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use num::{BigUint, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    bound_report, lower_bound_base, lower_bound_refined_k2, theta, trivial_word_count, upper_bound_elementary_k2,
};
use crate::chain::{
    chain_params, lambda_tilde, truncated_chain_pi, verify_balance_with, BlockedMove, ChainParams, DEFAULT_STATE_BUDGET,
};
use crate::error::{Error, Result};
use crate::exact::{brute_force_length, census, min_unmatched, optimal_length, rho_exact, DEFAULT_ENUMERATION_BUDGET};
use crate::greedy::greedy_match;
use crate::montecarlo::{
    concentration_experiment, estimate_rho, greedy_longrun, trend_non_increasing, EstimateReport, SamplingConfig,
};
use crate::rational::{format_ratio, parse_ratio, ratio, to_f64, Exact, Q};
use crate::rng::{sample_word, WordRng};
use crate::word::{all_words, conjugate, free_reduce, parse_word, Word};

pub const GROUPS: [&str; 12] = [
    "census",
    "dp",
    "invariance",
    "greedy",
    "chain",
    "balance",
    "truncated",
    "ergodic",
    "bounds",
    "trivial",
    "concentration",
    "bracket",
];

/// Greedy limits for `k = 2..5` as published.
pub const LAMBDA_TILDE_TABLE: [(u32, i64, i64); 4] = [(2, 3, 13), (3, 33, 100), (4, 297, 455), (5, 3126, 7115)];

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    /// Groups to run; empty means all.
    pub only: Vec<String>,
    pub seed: u64,
    /// Replaces `τ_2` of the `k = 2` chain in the chain and balance checks.
    pub tau2_override: Option<Q>,
    /// Length used for the bracket estimate.
    pub bracket_n: usize,
    pub bracket_samples: usize,
}

impl ReproduceOptions {
    pub fn new(seed: u64) -> Self {
        ReproduceOptions { only: Vec::new(), seed, tau2_override: None, bracket_n: 10_000, bracket_samples: 500 }
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.only {
            if !GROUPS.contains(&g.as_str()) {
                return Err(Error::InvalidArgument(format!("unknown check group '{g}', expected one of {GROUPS:?}")));
            }
        }
        Ok(())
    }

    fn selected(&self, group: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|g| g == group)
    }

    fn params_k2(&self) -> Result<ChainParams> {
        let standard = chain_params(2)?;
        match &self.tau2_override {
            Some(t2) => ChainParams::with_tau(2, vec![standard.tau(1).clone(), t2.clone()]),
            None => Ok(standard),
        }
    }
}

/// Parses the value given to a τ override, as `p/q` or an integer.
pub fn parse_tau(text: &str) -> Result<Q> {
    parse_ratio(text).ok_or_else(|| Error::InvalidArgument(format!("'{text}' is not a rational p/q")))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub group: String,
    pub passed: bool,
    pub detail: String,
    pub data: Value,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub seed: u64,
    pub groups: Vec<String>,
    pub tau2_override: Option<String>,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl ReproduceReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Outcome {
    passed: bool,
    detail: String,
    data: Value,
}

fn outcome(passed: bool, detail: impl Into<String>, data: Value) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into(), data })
}

type CheckFn = fn(&ReproduceOptions) -> Result<Outcome>;

fn checks() -> Vec<(&'static str, &'static str, CheckFn)> {
    vec![
        ("census", "census-n4", check_census),
        ("dp", "dp-vs-brute-force", check_dp),
        ("invariance", "reduction-invariance", check_reduction),
        ("invariance", "conjugation-invariance", check_conjugation),
        ("greedy", "greedy-golden", check_greedy_golden),
        ("chain", "chain-constants", check_chain_constants),
        ("chain", "lambda-tilde-table", check_lambda_table),
        ("balance", "balance-k2", check_balance_k2),
        ("balance", "balance-k3", check_balance_k3),
        ("balance", "balance-detects-perturbation", check_balance_perturbation),
        ("truncated", "truncated-chain-k2", check_truncated),
        ("ergodic", "greedy-ergodic-k2", check_ergodic_k2),
        ("ergodic", "greedy-ergodic-k3", check_ergodic_k3),
        ("bounds", "bounds-k2", check_bounds),
        ("trivial", "trivial-counts", check_trivial),
        ("concentration", "concentration-n200", check_concentration),
        ("bracket", "bracket-and-trend", check_bracket),
    ]
}

/// Runs the selected checks in a fixed order. `progress` is called after
/// each check.
pub fn run_checks(options: &ReproduceOptions, mut progress: impl FnMut(&CheckOutcome)) -> Result<ReproduceReport> {
    options.validate()?;
    let mut results = Vec::new();
    for (group, name, check) in checks() {
        if !options.selected(group) {
            continue;
        }
        let start = Instant::now();
        let result = check(options).unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
            data: Value::Null,
        });
        let done = CheckOutcome {
            name: name.to_string(),
            group: group.to_string(),
            passed: result.passed,
            detail: result.detail,
            data: result.data,
            elapsed: start.elapsed(),
        };
        progress(&done);
        results.push(done);
    }
    let groups =
        if options.only.is_empty() { GROUPS.iter().map(|g| g.to_string()).collect() } else { options.only.clone() };
    Ok(ReproduceReport {
        seed: options.seed,
        groups,
        tau2_override: options.tau2_override.as_ref().map(format_ratio),
        passed: results.iter().all(|c| c.passed),
        checks: results,
    })
}

/// Writes `summary.json`, `summary.csv`, `timings.csv` and one
/// `<check>.json` per check into `dir`.
pub fn write_reports(report: &ReproduceReport, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("writing reports to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("summary.json"), to_pretty(report)).map_err(io)?;
    for check in &report.checks {
        fs::write(dir.join(format!("{}.json", check.name)), to_pretty(check)).map_err(io)?;
    }

    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("writing csv: {e}"));
    let mut summary = csv::Writer::from_path(dir.join("summary.csv")).map_err(csv_err)?;
    summary.write_record(["check", "group", "passed", "detail"]).map_err(csv_err)?;
    for c in &report.checks {
        summary
            .write_record([c.name.as_str(), c.group.as_str(), &c.passed.to_string(), c.detail.as_str()])
            .map_err(csv_err)?;
    }
    summary.flush().map_err(io)?;

    let mut timings = csv::Writer::from_path(dir.join("timings.csv")).map_err(csv_err)?;
    timings.write_record(["check", "seconds"]).map_err(csv_err)?;
    for c in &report.checks {
        timings.write_record([c.name.clone(), format!("{:.3}", c.elapsed.as_secs_f64())]).map_err(csv_err)?;
    }
    timings.flush().map_err(io)?;
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn check_census(_: &ReproduceOptions) -> Result<Outcome> {
    let counts = census(4, 2, DEFAULT_ENUMERATION_BUDGET)?;
    let rho = rho_exact(4, 2, DEFAULT_ENUMERATION_BUDGET)?;
    let expected = [(0usize, 28u64), (2, 168), (4, 60)];
    let passed = counts.iter().map(|(&a, &b)| (a, b)).eq(expected) && rho == ratio(9, 16);
    outcome(
        passed,
        format!("ell distribution {counts:?}, rho(4) = {}", format_ratio(&rho)),
        json!({ "counts": counts, "rho": Exact::from(&rho) }),
    )
}

fn check_dp(options: &ReproduceOptions) -> Result<Outcome> {
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    let mut compare = |w: &Word| -> Result<()> {
        checked += 1;
        let dp = optimal_length(w).unmatched;
        let brute = brute_force_length(w)?.unmatched;
        if dp != brute {
            mismatches.push(json!({ "word": w.format_signed(), "dp": dp, "brute_force": brute }));
        }
        Ok(())
    };
    for w in all_words(6, 2) {
        compare(&w)?;
    }
    let mut rng = WordRng::new(options.seed);
    for i in 0..1000 {
        let k = 2 + (i % 2) as u32;
        let n = 1 + rng.uniform_below(14);
        compare(&sample_word(n, k, &mut rng))?;
    }
    outcome(
        mismatches.is_empty(),
        format!("{checked} words, {} mismatches", mismatches.len()),
        json!({ "checked": checked, "mismatches": mismatches }),
    )
}

fn check_reduction(_: &ReproduceOptions) -> Result<Outcome> {
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for n in 0..=6 {
        for w in all_words(n, 2) {
            checked += 1;
            if min_unmatched(&w) != min_unmatched(&free_reduce(&w)) {
                violations.push(w.format_signed());
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{checked} words, {} violations", violations.len()),
        json!({ "checked": checked, "violations": violations }),
    )
}

fn check_conjugation(_: &ReproduceOptions) -> Result<Outcome> {
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for n in 0..=4 {
        for w in all_words(n, 2) {
            let base = min_unmatched(&w);
            for m in 0..=2 {
                for h in all_words(m, 2) {
                    checked += 1;
                    if min_unmatched(&conjugate(&w, &h)?) != base {
                        violations.push(json!({ "word": w.format_signed(), "conjugator": h.format_signed() }));
                    }
                }
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{checked} pairs, {} violations", violations.len()),
        json!({ "checked": checked, "violations": violations }),
    )
}

fn check_greedy_golden(_: &ReproduceOptions) -> Result<Outcome> {
    let w = parse_word("ababAaBb", 2)?;
    let trace = greedy_match(&w);
    let mut pairs = trace.matched_pairs.pairs().to_vec();
    pairs.sort();
    let passed = pairs == [(2, 7), (3, 5)] && trace.unmatched == 4;
    outcome(passed, format!("pairs {pairs:?}, {} unmatched", trace.unmatched), json!(trace))
}

fn check_chain_constants(options: &ReproduceOptions) -> Result<Outcome> {
    let params = options.params_k2()?;
    let tau: Vec<String> = params.tau.iter().map(format_ratio).collect();
    let passed = params.tau == [ratio(1, 2), ratio(1, 3)] && params.z == crate::rational::int(13);
    outcome(
        passed,
        format!("tau = ({}), Z = {}", tau.join(", "), format_ratio(&params.z)),
        json!({ "tau": tau, "z": Exact::from(&params.z) }),
    )
}

fn check_lambda_table(_: &ReproduceOptions) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for (k, p, q) in LAMBDA_TILDE_TABLE {
        let value = lambda_tilde(k)?;
        let ok = value == ratio(p, q);
        if !ok {
            mismatches.push(format!(
                "k = {k}: computed {} ({:.6}), listed {p}/{q} ({:.6})",
                format_ratio(&value),
                to_f64(&value),
                p as f64 / q as f64
            ));
        }
        rows.push(json!({ "k": k, "value": Exact::from(&value), "expected": format!("{p}/{q}"), "matches": ok }));
    }
    let detail =
        if mismatches.is_empty() { "greedy limits for k = 2..5 match".to_string() } else { mismatches.join("; ") };
    outcome(mismatches.is_empty(), detail, json!(rows))
}

fn balance_outcome(params: &ChainParams, max_len: usize) -> Result<Outcome> {
    let report = verify_balance_with(params, max_len)?;
    outcome(
        report.passed(),
        format!(
            "k = {}, words up to length {}: {} checked, {} violations{}",
            report.k,
            max_len,
            report.checked,
            report.violations.len(),
            if report.divergent { ", divergent continuation series" } else { "" }
        ),
        json!(report),
    )
}

fn check_balance_k2(options: &ReproduceOptions) -> Result<Outcome> {
    balance_outcome(&options.params_k2()?, 4)
}

fn check_balance_k3(_: &ReproduceOptions) -> Result<Outcome> {
    balance_outcome(&chain_params(3)?, 3)
}

fn check_balance_perturbation(_: &ReproduceOptions) -> Result<Outcome> {
    let standard = chain_params(2)?;
    let nudged = standard.tau(1) + ratio(1, 100);
    let params = ChainParams::with_tau(2, vec![nudged, standard.tau(2).clone()])?;
    let report = verify_balance_with(&params, 4)?;
    let detected = !report.passed();
    outcome(
        detected,
        format!("tau_1 = 1/2 + 1/100 gives {} violations", report.violations.len()),
        json!({ "violations": report.violations.len(), "divergent": report.divergent }),
    )
}

fn check_truncated(_: &ReproduceOptions) -> Result<Outcome> {
    let params = chain_params(2)?;
    let mut rows = Vec::new();
    let mut passing = Vec::new();
    let mut notes = Vec::new();
    for convention in BlockedMove::ALL {
        let chain = truncated_chain_pi(2, 5, convention, DEFAULT_STATE_BUDGET)?;
        let deviation = chain.max_deviation(&params, 4)?;
        let (lo, hi) = chain.ratio_range(&params, 4)?;
        if deviation <= 1e-10 {
            passing.push(convention.to_string());
        }
        notes.push(format!("{convention}: max |pi_L - pi| = {deviation:.3e}, pi_L / pi in [{lo:.12}, {hi:.12}]"));
        rows.push(json!({
            "convention": convention.to_string(),
            "states": chain.states.len(),
            "max_deviation": deviation,
            "ratio_min": lo,
            "ratio_max": hi,
        }));
    }
    let head = if passing.is_empty() {
        "no convention within 1e-10".to_string()
    } else {
        format!("passing: {}", passing.join(", "))
    };
    outcome(
        !passing.is_empty(),
        format!("{head}; {}", notes.join("; ")),
        json!({ "conventions": rows, "passing": passing }),
    )
}

fn ergodic(k: u32, seed: u64) -> Result<Outcome> {
    let run = greedy_longrun(1_000_000, k, seed)?;
    let gap = (run.unmatched_fraction - run.limit.decimal).abs();
    outcome(
        gap <= 0.005,
        format!("k = {k}: fraction {:.6} vs {} (gap {gap:.6})", run.unmatched_fraction, run.limit.exact),
        json!(run),
    )
}

fn check_ergodic_k2(options: &ReproduceOptions) -> Result<Outcome> {
    ergodic(2, options.seed)
}

fn check_ergodic_k3(options: &ReproduceOptions) -> Result<Outcome> {
    ergodic(3, options.seed)
}

fn check_bounds(_: &ReproduceOptions) -> Result<Outcome> {
    let tol = 1e-9;
    let base = lower_bound_base(2, tol)?;
    let refined = lower_bound_refined_k2(tol);
    let elementary = upper_bound_elementary_k2(64, tol)?.upper();
    let report = bound_report(2, tol)?;
    let greedy = to_f64(&lambda_tilde(2)?);
    let passed = base >= 0.03
        && refined >= 0.034
        && (elementary - 0.2886).abs() <= 0.0005
        && report.is_consistent()
        && report.best_lower() >= 0.034
        && report.best_upper() <= greedy;
    outcome(
        passed,
        format!("lower {base:.6} / refined {refined:.6}, upper elementary {elementary:.6}, greedy {greedy:.6}"),
        json!(report),
    )
}

fn check_trivial(_: &ReproduceOptions) -> Result<Outcome> {
    let mut problems = Vec::new();
    for p in [2usize, 4] {
        let zero = census(p, 2, DEFAULT_ENUMERATION_BUDGET)?.get(&0).copied().unwrap_or(0);
        let counted = trivial_word_count(p, 2);
        if counted != BigUint::from(zero) {
            problems.push(format!("T_{p} = {counted} but the census has {zero} trivial words"));
        }
    }
    if trivial_word_count(2, 2) != BigUint::from(4u32) || trivial_word_count(4, 2) != BigUint::from(28u32) {
        problems.push("T_2, T_4 differ from 4, 28".to_string());
    }
    // τ_p = T_p / (2k)^p, compared as integers: T_{p+q} >= T_p T_q.
    for p in 1..12 {
        for q in 1..=12 - p {
            if trivial_word_count(p + q, 2) < trivial_word_count(p, 2) * trivial_word_count(q, 2) {
                problems.push(format!("super-multiplicativity fails at p = {p}, q = {q}"));
            }
        }
    }
    let theta2 = theta(2);
    for p in (2..=12).step_by(2) {
        let t = trivial_word_count(p, 2);
        if t.is_zero() {
            continue;
        }
        let tau = crate::rational::from_biguint(t) / crate::rational::from_biguint(BigUint::from(4u32).pow(p as u32));
        if to_f64(&tau).powf(1.0 / p as f64) > theta2 + 1e-12 {
            problems.push(format!("tau_{p}^(1/{p}) exceeds theta_2"));
        }
    }
    let counts: Vec<String> = (0..=12).step_by(2).map(|p| trivial_word_count(p, 2).to_string()).collect();
    outcome(
        problems.is_empty(),
        if problems.is_empty() { "T_p consistent up to p = 12".to_string() } else { problems.join("; ") },
        json!({ "trivial_counts_even_p": counts, "problems": problems }),
    )
}

fn check_concentration(options: &ReproduceOptions) -> Result<Outcome> {
    let report = concentration_experiment(200, 2, 100_000, &[1.0, 2.0, 3.0], &SamplingConfig::new(options.seed))?;
    let tails: Vec<String> = report
        .t_grid
        .iter()
        .zip(&report.empirical_tail)
        .zip(&report.bound)
        .map(|((t, e), b)| format!("t={t}: {e:.5} <= {b:.5}"))
        .collect();
    outcome(report.passed(), tails.join(", "), json!(report))
}

fn check_bracket(options: &ReproduceOptions) -> Result<Outcome> {
    let config = SamplingConfig::new(options.seed);
    let big = estimate_rho(options.bracket_n, 2, options.bracket_samples, &config)?;
    let in_bracket = big.mean_fraction > 0.034 && big.mean_fraction < 0.231;
    let mut trend: Vec<EstimateReport> =
        [4usize, 16, 64, 256].iter().map(|&n| estimate_rho(n, 2, 2000, &config)).collect::<Result<_>>()?;
    trend.push(big.clone());
    let monotone = trend_non_increasing(&trend, 3.0);
    let path: Vec<String> = trend.iter().map(|r| format!("{}:{:.4}", r.n, r.mean_fraction)).collect();
    outcome(
        in_bracket && monotone,
        format!(
            "rho({}) = {:.5} +- {:.5} (Hoeffding, {} samples); trend {}",
            big.n,
            big.mean_fraction,
            big.hoeffding_halfwidth,
            big.samples,
            path.join(" ")
        ),
        json!({ "estimate": big, "in_bracket": in_bracket, "trend": trend, "trend_non_increasing": monotone }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_group_is_rejected() {
        let mut options = ReproduceOptions::new(1);
        options.only = vec!["nope".into()];
        assert!(run_checks(&options, |_| {}).is_err());
    }

    #[test]
    fn filter_runs_only_selected_group() {
        let mut options = ReproduceOptions::new(1);
        options.only = vec!["greedy".into(), "chain".into()];
        let report = run_checks(&options, |_| {}).unwrap();
        assert!(report.checks.iter().all(|c| c.group == "greedy" || c.group == "chain"));
        assert_eq!(report.checks.len(), 3);
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["lambda-tilde-table"]);
    }

    #[test]
    fn tampered_tau_fails_balance() {
        let mut options = ReproduceOptions::new(1);
        options.only = vec!["balance".into()];
        options.tau2_override = Some(ratio(1, 4));
        let report = run_checks(&options, |_| {}).unwrap();
        assert!(!report.passed);
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["balance-k2"]);
    }

    #[test]
    fn reports_are_written() {
        let dir = std::env::temp_dir().join(format!("ncfold-reports-{}", std::process::id()));
        let mut options = ReproduceOptions::new(1);
        options.only = vec!["greedy".into()];
        let report = run_checks(&options, |_| {}).unwrap();
        write_reports(&report, &dir).unwrap();
        for file in ["summary.json", "summary.csv", "timings.csv", "greedy-golden.json"] {
            assert!(dir.join(file).exists(), "{file}");
        }
        let summary: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["passed"], json!(true));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn tau_parsing() {
        assert_eq!(parse_tau("1/3").unwrap(), ratio(1, 3));
        assert!(parse_tau("x").is_err());
        assert_eq!(parse_tau("2").unwrap(), crate::rational::int(2));
    }
}
