//! Monte Carlo experiments on uniform random words.
//!
//! Samples are split into fixed chunks of [`CHUNK`] indices; chunk `c` draws
//! its words from stream `c` of the master seed and per-sample results are
//! reduced in index order, so every report is bit-identical for any number
//! of workers.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::lambda_tilde;
use crate::error::{Error, Result};
use crate::exact::min_unmatched_reduced;
use crate::greedy::GreedyMatcher;
use crate::rational::Exact;
use crate::rng::{sample_word, WordRng};

pub const CHUNK: usize = 16;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x6e63_666f_6c64;

/// Default cap on `n · samples` for sampling experiments.
pub const DEFAULT_LETTER_BUDGET: u128 = 50_000_000;

/// Two-sided confidence level used for Hoeffding half-widths.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy)]
pub struct SamplingConfig {
    pub seed: u64,
    /// `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub letter_budget: u128,
}

impl SamplingConfig {
    pub fn new(seed: u64) -> Self {
        SamplingConfig { seed, workers: None, letter_budget: DEFAULT_LETTER_BUDGET }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        SamplingConfig { workers: Some(workers), ..self }
    }

    pub fn with_budget(self, letter_budget: u128) -> Self {
        SamplingConfig { letter_budget, ..self }
    }

    fn check(&self, letters: u128) -> Result<()> {
        if letters > self.letter_budget {
            return Err(Error::BudgetExceeded { needed: letters, budget: self.letter_budget });
        }
        Ok(())
    }

    /// Runs `per_sample` for every index in `0..samples`, chunked and seeded
    /// as described in the module docs; results come back in index order.
    fn run<T, F>(&self, samples: usize, per_sample: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut WordRng) -> T + Sync,
    {
        let chunks = samples.div_ceil(CHUNK);
        let seed = self.seed;
        let work = || {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = WordRng::with_stream(seed, c as u64);
                    let len = CHUNK.min(samples - c * CHUNK);
                    (0..len).map(|_| per_sample(&mut rng)).collect::<Vec<T>>()
                })
                .collect::<Vec<Vec<T>>>()
        };
        let nested = match self.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                .install(work),
            None => work(),
        };
        Ok(nested.into_iter().flatten().collect())
    }
}

/// Half-width `sqrt(8 ln(2/α) / (n S))` of the Hoeffding interval for the
/// mean unmatched fraction of `S` words of length `n`: every letter changes
/// `ℓ` by at most 2, so the `nS` revealed letters give a sub-Gaussian sum.
pub fn hoeffding_halfwidth(n: usize, samples: usize, confidence: f64) -> f64 {
    let alpha = 1.0 - confidence;
    (8.0 * (2.0 / alpha).ln() / (n as f64 * samples as f64)).sqrt()
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub k: u32,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Estimate of `ρ_k(n)`.
    pub mean_fraction: f64,
    pub hoeffding_halfwidth: f64,
    pub confidence: f64,
    /// Standard deviation of `ℓ / n` across samples.
    pub per_sample_sd: f64,
    pub standard_error: f64,
}

impl EstimateReport {
    fn from_lengths(k: u32, n: usize, seed: u64, lengths: &[usize]) -> Self {
        let fractions: Vec<f64> = lengths.iter().map(|&l| l as f64 / n as f64).collect();
        let (mean, sd) = mean_and_sd(&fractions);
        EstimateReport {
            k,
            n,
            samples: lengths.len(),
            seed,
            mean_fraction: mean,
            hoeffding_halfwidth: hoeffding_halfwidth(n, lengths.len(), CONFIDENCE),
            confidence: CONFIDENCE,
            per_sample_sd: sd,
            standard_error: sd / (lengths.len() as f64).sqrt(),
        }
    }

    /// Standard deviation of `ℓ` itself.
    pub fn length_sd(&self) -> f64 {
        self.per_sample_sd * self.n as f64
    }
}

fn check_sampling(n: usize, k: u32, samples: usize, config: &SamplingConfig) -> Result<()> {
    if k < 1 {
        return Err(Error::AlphabetTooSmall { k, min: 1 });
    }
    if n == 0 || samples == 0 {
        return Err(Error::InvalidArgument("n and samples must be positive".into()));
    }
    config.check(n as u128 * samples as u128)
}

/// `ℓ` of `samples` independent uniform words of length `n`, in sample order.
pub fn sample_lengths(n: usize, k: u32, samples: usize, config: &SamplingConfig) -> Result<Vec<usize>> {
    check_sampling(n, k, samples, config)?;
    config.run(samples, |rng| min_unmatched_reduced(&sample_word(n, k, rng)))
}

/// Monte Carlo estimate of `ρ_k(n)`.
pub fn estimate_rho(n: usize, k: u32, samples: usize, config: &SamplingConfig) -> Result<EstimateReport> {
    let lengths = sample_lengths(n, k, samples, config)?;
    Ok(EstimateReport::from_lengths(k, n, config.seed, &lengths))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub k: u32,
    pub samples: usize,
    pub seed: u64,
    /// Empirical mean of `ℓ`, used as the center in place of `n ρ_k(n)`.
    pub center: f64,
    /// Standard error of the center in units of `sqrt(n)`.
    pub center_shift: f64,
    pub length_sd: f64,
    pub t_grid: Vec<f64>,
    /// Fraction of samples with `|ℓ - center| > t sqrt(n)`.
    pub empirical_tail: Vec<f64>,
    /// `2 exp(-t^2 / 8)`.
    pub bound: Vec<f64>,
    /// Three binomial standard errors at the bound's probability.
    pub slack: Vec<f64>,
    pub within_bound: Vec<bool>,
}

impl ConcentrationReport {
    pub fn passed(&self) -> bool {
        self.within_bound.iter().all(|&b| b)
    }
}

pub fn concentration_bound(t: f64) -> f64 {
    2.0 * (-t * t / 8.0).exp()
}

/// Empirical tails of `|ℓ - mean| / sqrt(n)` against `2 exp(-t^2/8)`.
pub fn concentration_experiment(
    n: usize,
    k: u32,
    samples: usize,
    t_grid: &[f64],
    config: &SamplingConfig,
) -> Result<ConcentrationReport> {
    let lengths = sample_lengths(n, k, samples, config)?;
    let values: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let (center, sd) = mean_and_sd(&values);
    let root_n = (n as f64).sqrt();
    let s = samples as f64;
    let mut empirical_tail = Vec::with_capacity(t_grid.len());
    let mut bound = Vec::with_capacity(t_grid.len());
    let mut slack = Vec::with_capacity(t_grid.len());
    let mut within_bound = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let exceed = values.iter().filter(|&&l| (l - center).abs() > t * root_n).count();
        let tail = exceed as f64 / s;
        let b = concentration_bound(t);
        let p = b.min(1.0);
        let sl = 3.0 * (p * (1.0 - p) / s).sqrt();
        empirical_tail.push(tail);
        bound.push(b);
        slack.push(sl);
        within_bound.push(tail <= b + sl);
    }
    Ok(ConcentrationReport {
        n,
        k,
        samples,
        seed: config.seed,
        center,
        center_shift: sd / s.sqrt() / root_n,
        length_sd: sd,
        t_grid: t_grid.to_vec(),
        empirical_tail,
        bound,
        slack,
        within_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubadditivityReport {
    pub m: usize,
    pub n: usize,
    pub k: u32,
    pub samples: usize,
    pub seed: u64,
    /// Samples with `ℓ(u v) > ℓ(u) + ℓ(v)`.
    pub violations: usize,
    /// Samples with `ℓ(u v) = ℓ(u) + ℓ(v)`.
    pub equalities: usize,
    pub mean_joint: f64,
    pub mean_left: f64,
    pub mean_right: f64,
    pub se_joint: f64,
    pub se_sum: f64,
    /// `L(m+n) <= L(m) + L(n)` within two combined standard errors.
    pub mean_level_holds: bool,
}

/// Checks `ℓ(u v) <= ℓ(u) + ℓ(v)` on independent words `u` of length `m`
/// and `v` of length `n`.
pub fn subadditivity_experiment(
    m: usize,
    n: usize,
    k: u32,
    samples: usize,
    config: &SamplingConfig,
) -> Result<SubadditivityReport> {
    check_sampling(m + n, k, samples, config)?;
    let triples = config.run(samples, |rng| {
        let u = sample_word(m, k, rng);
        let v = sample_word(n, k, rng);
        let joint = u.concat(&v).expect("same alphabet");
        (min_unmatched_reduced(&joint), min_unmatched_reduced(&u), min_unmatched_reduced(&v))
    })?;
    let violations = triples.iter().filter(|(j, a, b)| j > &(a + b)).count();
    let equalities = triples.iter().filter(|(j, a, b)| *j == a + b).count();
    let col = |f: fn(&(usize, usize, usize)) -> f64| triples.iter().map(f).collect::<Vec<f64>>();
    let (mean_joint, sd_joint) = mean_and_sd(&col(|t| t.0 as f64));
    let (mean_left, _) = mean_and_sd(&col(|t| t.1 as f64));
    let (mean_right, _) = mean_and_sd(&col(|t| t.2 as f64));
    let (_, sd_sum) = mean_and_sd(&col(|t| (t.1 + t.2) as f64));
    let root_s = (samples as f64).sqrt();
    let se_joint = sd_joint / root_s;
    let se_sum = sd_sum / root_s;
    let mean_level_holds = mean_joint <= mean_left + mean_right + 2.0 * (se_joint.powi(2) + se_sum.powi(2)).sqrt();
    Ok(SubadditivityReport {
        m,
        n,
        k,
        samples,
        seed: config.seed,
        violations,
        equalities,
        mean_joint,
        mean_left,
        mean_right,
        se_joint,
        se_sum,
        mean_level_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub smaller: EstimateReport,
    pub larger: EstimateReport,
    /// `ρ̂_small <= ρ̂_large + (sum of Hoeffding half-widths)`.
    pub ordered_within_noise: bool,
    /// The two Hoeffding intervals are disjoint with the smaller alphabet below.
    pub separated: bool,
}

/// Estimates `ρ` for two alphabet sizes on the same seed.
pub fn compare_alphabets(
    n: usize,
    k_small: u32,
    k_large: u32,
    samples: usize,
    config: &SamplingConfig,
) -> Result<ComparisonReport> {
    let smaller = estimate_rho(n, k_small, samples, config)?;
    let larger = estimate_rho(n, k_large, samples, config)?;
    let ordered_within_noise =
        smaller.mean_fraction <= larger.mean_fraction + smaller.hoeffding_halfwidth + larger.hoeffding_halfwidth;
    let separated =
        smaller.mean_fraction + smaller.hoeffding_halfwidth < larger.mean_fraction - larger.hoeffding_halfwidth;
    Ok(ComparisonReport { n, samples, seed: config.seed, smaller, larger, ordered_within_noise, separated })
}

/// `ρ̂_k(n)` against `ρ̂_{k+1}(n)`.
pub fn monotonicity_experiment(n: usize, k: u32, samples: usize, config: &SamplingConfig) -> Result<ComparisonReport> {
    if k < 2 {
        return Err(Error::AlphabetTooSmall { k, min: 2 });
    }
    compare_alphabets(n, k, k + 1, samples, config)
}

/// Estimates along increasing `n`, one report per length.
pub fn rho_trend(ns: &[usize], k: u32, samples: usize, config: &SamplingConfig) -> Result<Vec<EstimateReport>> {
    ns.iter().map(|&n| estimate_rho(n, k, samples, config)).collect()
}

/// Each step of a trend is non-increasing up to `z` combined standard errors.
pub fn trend_non_increasing(reports: &[EstimateReport], z: f64) -> bool {
    reports.windows(2).all(|w| {
        let se = (w[0].standard_error.powi(2) + w[1].standard_error.powi(2)).sqrt();
        w[1].mean_fraction <= w[0].mean_fraction + z * se
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GreedyLongrun {
    pub n: usize,
    pub k: u32,
    pub seed: u64,
    pub reductions: usize,
    pub unmatched_fraction: f64,
    pub limit: Exact,
}

/// Unmatched fraction `1 - 2·reductions/n` of one greedy trajectory.
pub fn greedy_longrun(n: usize, k: u32, seed: u64) -> Result<GreedyLongrun> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let limit = lambda_tilde(k)?;
    let mut rng = WordRng::new(seed);
    let mut matcher = GreedyMatcher::counting_only(k);
    for _ in 0..n {
        matcher.push(rng.letter(k));
    }
    Ok(GreedyLongrun {
        n,
        k,
        seed,
        reductions: matcher.reductions(),
        unmatched_fraction: matcher.unmatched() as f64 / n as f64,
        limit: Exact::from(&limit),
    })
}
