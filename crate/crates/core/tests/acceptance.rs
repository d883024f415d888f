//! Acceptance suite: twelve criteria, one line each, non-zero exit if any fails.
//!
//! Runs without the libtest harness so a failing criterion does not hide the
//! ones after it. Each criterion also has a runtime limit.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ncfold_core::bounds::{
    base_exponent, bound_report, lower_bound_base, lower_bound_refined_k2, refined_exponent_k2, theta,
    trivial_word_count, trivial_word_probability, upper_bound_elementary_k2,
};
use ncfold_core::chain::{
    chain_params, lambda_tilde, stationary_pi, truncated_chain_pi, verify_balance, verify_balance_with, BlockedMove,
    ChainParams, DEFAULT_STATE_BUDGET,
};
use ncfold_core::exact::DEFAULT_ENUMERATION_BUDGET;
use ncfold_core::montecarlo::{
    concentration_experiment, estimate_rho, greedy_longrun, rho_trend, trend_non_increasing, SamplingConfig,
    DEFAULT_SEED,
};
use ncfold_core::rational::{ratio, to_f64, Q};
use ncfold_core::word::all_words;
use ncfold_core::{
    brute_force_length, census, conjugate, cyclic_reduce, free_reduce, greedy_match, min_unmatched, optimal_length,
    parse_word, rho_exact, sample_word, WordRng,
};

type Criterion = fn() -> String;

fn census_n4() -> String {
    let dist = census(4, 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
    let expected: BTreeMap<usize, u64> = [(0, 28), (2, 168), (4, 60)].into();
    assert_eq!(dist, expected);
    assert_eq!(dist.values().sum::<u64>(), 256);
    let rho = rho_exact(4, 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert_eq!(rho, ratio(9, 16));
    format!("{dist:?}, rho(4) = {rho}")
}

fn dp_vs_oracle() -> String {
    let mut checked = 0;
    for w in all_words(6, 2) {
        assert_eq!(optimal_length(&w).unmatched, brute_force_length(&w).unwrap().unmatched, "{w}");
        checked += 1;
    }
    let mut rng = WordRng::new(DEFAULT_SEED);
    for i in 0..1000 {
        let k = 2 + (i % 2) as u32;
        let n = rng.uniform_below(15);
        let w = sample_word(n, k, &mut rng);
        assert_eq!(optimal_length(&w).unmatched, brute_force_length(&w).unwrap().unmatched, "{w}");
        checked += 1;
    }
    format!("{checked} words, 0 mismatches")
}

fn invariance() -> String {
    let mut reductions = 0;
    for n in 0..=6 {
        for w in all_words(n, 2) {
            let l = min_unmatched(&w);
            assert_eq!(min_unmatched(&free_reduce(&w)), l, "{w}");
            assert_eq!(min_unmatched(&cyclic_reduce(&w)), l, "{w}");
            reductions += 1;
        }
    }
    let mut conjugations = 0;
    for n in 0..=4 {
        for w in all_words(n, 2) {
            let l = min_unmatched(&w);
            for m in 0..=2 {
                for h in all_words(m, 2) {
                    assert_eq!(min_unmatched(&conjugate(&w, &h).unwrap()), l, "w = {w}, h = {h}");
                    conjugations += 1;
                }
            }
        }
    }
    format!("{reductions} words reduced, {conjugations} conjugates, 0 violations")
}

fn greedy_golden() -> String {
    let trace = greedy_match(&parse_word("ababAaBb", 2).unwrap());
    let mut pairs = trace.matched_pairs.pairs().to_vec();
    pairs.sort_unstable();
    assert_eq!(pairs, vec![(2, 7), (3, 5)]);
    assert_eq!(trace.unmatched, 4);
    format!("pairs {pairs:?}, {} unmatched", trace.unmatched)
}

fn chain_constants() -> String {
    let p = chain_params(2).unwrap();
    assert_eq!(p.tau, vec![ratio(1, 2), ratio(1, 3)]);
    assert_eq!(p.z, Q::from_integer(13.into()));
    let expected = [(2, ratio(3, 13)), (3, ratio(33, 100)), (4, ratio(297, 455)), (5, ratio(3126, 7115))];
    let mut mismatches = Vec::new();
    for (k, listed) in expected {
        let got = lambda_tilde(k).unwrap();
        if got != listed {
            mismatches.push(format!(
                "k = {k}: computed {got} ({:.6}), expected {listed} ({:.6})",
                to_f64(&got),
                to_f64(&listed)
            ));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("; "));
    "tau = (1/2, 1/3), Z = 13, lambda-tilde table exact".into()
}

fn balance() -> String {
    let k2 = verify_balance(2, 4).unwrap();
    let k3 = verify_balance(3, 3).unwrap();
    assert!(k2.passed() && k3.passed(), "{k2:?} {k3:?}");
    let base = chain_params(2).unwrap();
    let nudged = ChainParams::with_tau(2, vec![base.tau(1) + ratio(1, 100), base.tau(2).clone()]).unwrap();
    let perturbed = verify_balance_with(&nudged, 4).unwrap();
    assert!(!perturbed.violations.is_empty());
    format!(
        "k=2: {} words, k=3: {} words, 0 violations; tau_1 + 1/100 gives {} violations",
        k2.checked,
        k3.checked,
        perturbed.violations.len()
    )
}

fn truncated_chain() -> String {
    let params = chain_params(2).unwrap();
    let mut notes = Vec::new();
    let mut passing = None;
    for convention in BlockedMove::ALL {
        let chain = truncated_chain_pi(2, 5, convention, DEFAULT_STATE_BUDGET).unwrap();
        let mut worst = 0.0f64;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (w, &p) in chain.states.iter().zip(&chain.pi) {
            if w.len() <= 4 {
                let exact = to_f64(&stationary_pi(w, &params).unwrap());
                worst = worst.max((p - exact).abs());
                lo = lo.min(p / exact);
                hi = hi.max(p / exact);
            }
        }
        notes.push(format!("{convention}: max |pi_L - pi| = {worst:.3e}, pi_L/pi in [{lo:.10}, {hi:.10}]"));
        if worst <= 1e-10 && passing.is_none() {
            passing = Some(convention);
        }
    }
    let notes = notes.join("; ");
    let convention = passing.unwrap_or_else(|| panic!("no convention within 1e-10: {notes}"));
    format!("passing convention {convention}; {notes}")
}

fn greedy_ergodic() -> String {
    let k2 = greedy_longrun(1_000_000, 2, DEFAULT_SEED).unwrap();
    let k3 = greedy_longrun(1_000_000, 3, DEFAULT_SEED).unwrap();
    assert!((k2.unmatched_fraction - 3.0 / 13.0).abs() <= 0.005, "k=2: {}", k2.unmatched_fraction);
    assert!((k3.unmatched_fraction - 0.33).abs() <= 0.005, "k=3: {}", k3.unmatched_fraction);
    format!("k=2: {:.6} vs 3/13, k=3: {:.6} vs 33/100", k2.unmatched_fraction, k3.unmatched_fraction)
}

fn bounds() -> String {
    assert!(base_exponent(0.03, 2) < 0.0);
    let base = lower_bound_base(2, 1e-12).unwrap();
    assert!(base > 0.03);
    assert!(refined_exponent_k2(0.034) < 0.0);
    let refined = lower_bound_refined_k2(1e-12);
    assert!(refined > 0.034);
    let elementary = upper_bound_elementary_k2(64, 1e-12).unwrap().upper();
    assert!((elementary - 0.2886).abs() <= 5e-4, "{elementary}");
    let report = bound_report(2, 1e-12).unwrap();
    assert!(report.is_consistent());
    assert!(report.best_lower() >= 0.034);
    assert_eq!(report.upper_greedy.exact, "3/13");
    assert!(report.best_upper() <= 3.0 / 13.0 + 1e-15);
    format!("delta* = {base:.5}, refined {refined:.5}, elementary {elementary:.5}, greedy 3/13")
}

fn trivial_counts() -> String {
    assert_eq!(trivial_word_count(2, 2), 4u32.into());
    assert_eq!(trivial_word_count(4, 2), 28u32.into());
    for n in [2, 4] {
        let zero_class = census(n, 2, DEFAULT_ENUMERATION_BUDGET).unwrap()[&0];
        assert_eq!(trivial_word_count(n, 2), zero_class.into(), "n = {n}");
    }
    for p in 0..=12 {
        for q in 0..=12 - p {
            assert!(trivial_word_count(p, 2) * trivial_word_count(q, 2) <= trivial_word_count(p + q, 2));
        }
    }
    for p in (2..=400).step_by(2) {
        let root = trivial_word_probability(p, 2).powf(1.0 / p as f64);
        assert!(root <= theta(2), "p = {p}: {root}");
    }
    "T_2 = 4, T_4 = 28, super-multiplicative to p+q = 12, root below theta_2 to p = 400".into()
}

fn concentration() -> String {
    let report =
        concentration_experiment(200, 2, 100_000, &[1.0, 2.0, 3.0], &SamplingConfig::new(DEFAULT_SEED)).unwrap();
    let lines: Vec<String> = report
        .t_grid
        .iter()
        .zip(&report.empirical_tail)
        .zip(&report.bound)
        .map(|((t, e), b)| format!("t={t}: {e:.5} <= {b:.5}"))
        .collect();
    assert!(report.passed(), "{}", lines.join(", "));
    lines.join(", ")
}

fn bracket() -> String {
    let config = SamplingConfig::new(DEFAULT_SEED);
    let big = estimate_rho(10_000, 2, 500, &config).unwrap();
    assert!(big.hoeffding_halfwidth > 0.0);
    assert!(big.mean_fraction > 0.034 && big.mean_fraction < 0.231, "{}", big.mean_fraction);
    let mut trend = rho_trend(&[4, 16, 64, 256], 2, 2000, &config).unwrap();
    trend.push(big.clone());
    let points: Vec<String> = trend.iter().map(|r| format!("{}:{:.4}", r.n, r.mean_fraction)).collect();
    assert!(trend_non_increasing(&trend, 3.0), "{}", points.join(" "));
    format!(
        "rho(10000) = {:.5} +- {:.5} (Hoeffding, 500 samples); trend {}",
        big.mean_fraction,
        big.hoeffding_halfwidth,
        points.join(" ")
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion, u64); 12] = [
        ("census n=4", census_n4, 1),
        ("dp equals brute force", dp_vs_oracle, 30),
        ("invariance", invariance, 60),
        ("greedy golden", greedy_golden, 1),
        ("chain constants", chain_constants, 1),
        ("balance equations", balance, 60),
        ("truncated chain", truncated_chain, 60),
        ("greedy ergodic average", greedy_ergodic, 60),
        ("bounds", bounds, 10),
        ("trivial words", trivial_counts, 10),
        ("concentration", concentration, 300),
        ("bracket and trend", bracket, 300),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(*limit);
        let (ok, detail) = match result {
            Ok(detail) if elapsed <= limit => (true, detail),
            Ok(detail) => (false, format!("over the {limit:?} limit; {detail}")),
            Err(payload) => {
                let message = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                (false, message)
            }
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name} ({:.2}s): {detail}", i + 1, elapsed.as_secs_f64());
        if !ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: 12/12 passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {}/12 passed; failed {failed:?}", 12 - failed.len());
        ExitCode::FAILURE
    }
}
