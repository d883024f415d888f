use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::builder::PossibleValuesParser;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use ncfold_core::bounds::{bound_report, trivial_word_count, trivial_word_probability};
use ncfold_core::chain::{
    chain_params, lambda_tilde, stationary_pi, truncated_chain_pi, verify_balance, BlockedMove, DEFAULT_STATE_BUDGET,
};
use ncfold_core::exact::{census, DEFAULT_ENUMERATION_BUDGET};
use ncfold_core::greedy::GreedyMatcher;
use ncfold_core::montecarlo::{
    concentration_experiment, estimate_rho, greedy_longrun, monotonicity_experiment, subadditivity_experiment,
    SamplingConfig, DEFAULT_LETTER_BUDGET, DEFAULT_SEED,
};
use ncfold_core::rational::{to_f64, Exact};
use ncfold_core::reproduce::{parse_tau, run_checks, write_reports, ReproduceOptions, GROUPS};
use ncfold_core::{greedy_match, min_unmatched, optimal_length, parse_word, WordRng};

/// Non-crossing matching length of free-group words: exact values, the
/// greedy matching chain, bounds, and Monte Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "ncfold", version)]
struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Size cap: words enumerated (census), chain states (chain truncated),
    /// or letters sampled, n times samples (Monte Carlo commands).
    #[arg(long, global = true, env = "NCFOLD_BUDGET")]
    budget: Option<u128>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Exact number of unmatched letters of one word.
    Exact(ExactArgs),
    /// Distribution of the unmatched count over all words of length n.
    Census(CensusArgs),
    /// One-sided greedy matching of one word.
    Greedy(WordArgs),
    /// Trajectory of the accessible word under the greedy chain.
    GreedySim(GreedySimArgs),
    /// Stationary law of the greedy chain.
    #[command(subcommand)]
    Chain(ChainCommand),
    /// Limiting unmatched fraction of the greedy algorithm, as an exact rational.
    LambdaTilde(KArgs),
    /// Lower and upper bounds on the limiting unmatched fraction.
    Bounds(BoundsArgs),
    /// Number of words of length p that freely reduce to the identity.
    TrivialCount(TrivialArgs),
    /// Monte Carlo estimate of the expected unmatched fraction.
    Estimate(EstimateArgs),
    /// Empirical tails of the unmatched count against the concentration bound.
    Concentrate(ConcentrateArgs),
    /// Pathwise subadditivity under concatenation.
    Subadd(SubaddArgs),
    /// Compares alphabets of size k and k+1.
    Mono(SampleArgs),
    /// Unmatched fraction of one long greedy trajectory.
    GreedyLongrun(LongrunArgs),
    /// Reruns every published check and writes a report bundle.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ChainCommand {
    /// Checks the balance equations exactly on all recurrent words up to a length.
    Verify(VerifyArgs),
    /// Solves the chain truncated at length L and compares with the exact law.
    Truncated(TruncatedArgs),
}

#[derive(Debug, Args, Serialize)]
struct ExactArgs {
    /// Word in compact (`abAB`) or signed (`1 2 -1 -2`) form.
    #[arg(long, allow_hyphen_values = true)]
    word: String,
    #[arg(long)]
    k: u32,
    /// Include an optimal matching.
    #[arg(long)]
    witness: bool,
}

#[derive(Debug, Args, Serialize)]
struct WordArgs {
    #[arg(long, allow_hyphen_values = true)]
    word: String,
    #[arg(long)]
    k: u32,
}

#[derive(Debug, Args, Serialize)]
struct CensusArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: u32,
}

#[derive(Debug, Args, Serialize)]
struct KArgs {
    #[arg(long)]
    k: u32,
}

#[derive(Debug, Args, Serialize)]
struct GreedySimArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Emit one row every this many steps.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    every: u64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    k: u32,
    #[arg(long = "max-len")]
    max_len: usize,
}

#[derive(Debug, Args, Serialize)]
struct TruncatedArgs {
    #[arg(long)]
    k: u32,
    /// Longest state kept.
    #[arg(long = "L")]
    max_len: usize,
    #[arg(long, default_value = "blocked-selfloop")]
    convention: BlockedMove,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    k: u32,
    /// Root-finding tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct TrivialArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    k: u32,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sample: SampleArgs,
}

#[derive(Debug, Args, Serialize)]
struct ConcentrateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sample: SampleArgs,
    /// Thresholds in units of sqrt(n).
    #[arg(long = "t", num_args = 1.., default_values_t = [1.0, 2.0, 3.0])]
    t: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
struct SubaddArgs {
    /// Length of the left factor.
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    #[serde(flatten)]
    sample: SampleArgs,
}

#[derive(Debug, Args, Serialize)]
struct LongrunArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct ReproduceArgs {
    /// Check groups to run (comma separated or repeated); all when omitted.
    #[arg(long, value_delimiter = ',', value_parser = PossibleValuesParser::new(GROUPS))]
    only: Vec<String>,
    /// Directory for the report bundle.
    #[arg(long, default_value = "ncfold-reports")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Replace tau_2 of the k = 2 chain, for fault injection.
    #[arg(long)]
    tau2: Option<String>,
    /// Word length of the bracket estimate.
    #[arg(long, default_value_t = 10_000)]
    bracket_n: usize,
    #[arg(long, default_value_t = 500)]
    bracket_samples: usize,
}

/// A command's result with the formats it can be written in.
struct Rendered {
    default: Format,
    json: Value,
    csv: Option<(Vec<String>, Vec<Vec<String>>)>,
    text: Option<String>,
    success: bool,
}

impl Rendered {
    fn json(json: Value) -> Self {
        Rendered { default: Format::Json, json, csv: None, text: None, success: true }
    }

    fn with_csv(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.csv = Some((header.iter().map(|h| h.to_string()).collect(), rows));
        self
    }

    fn with_text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }

    fn preferring(mut self, format: Format) -> Self {
        self.default = format;
        self
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("outputs serialize")
}

fn command_name(command: &Command) -> String {
    match command {
        Command::Chain(ChainCommand::Verify(_)) => "chain verify".into(),
        Command::Chain(ChainCommand::Truncated(_)) => "chain truncated".into(),
        other => match to_value(other) {
            Value::Object(map) => map.keys().next().cloned().unwrap_or_default(),
            _ => String::new(),
        },
    }
}

fn command_args(command: &Command) -> Value {
    let inner = match to_value(command) {
        Value::Object(map) => map.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        _ => Value::Null,
    };
    match (command, inner) {
        (Command::Chain(_), Value::Object(map)) => map.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        (_, v) => v,
    }
}

fn sampling(args: &SampleArgs, budget: Option<u128>) -> SamplingConfig {
    let config = SamplingConfig::new(args.seed).with_budget(budget.unwrap_or(DEFAULT_LETTER_BUDGET));
    match args.workers {
        Some(w) => config.with_workers(w),
        None => config,
    }
}

fn csv_row<I: IntoIterator<Item = T>, T: ToString>(cells: I) -> Vec<String> {
    cells.into_iter().map(|c| c.to_string()).collect()
}

fn run(cli: &Cli) -> anyhow::Result<Rendered> {
    let budget = cli.budget;
    Ok(match &cli.command {
        Command::Exact(a) => {
            let w = parse_word(&a.word, a.k)?;
            let mut out = json!({ "n": w.len() });
            if a.witness {
                let r = optimal_length(&w);
                out["unmatched"] = json!(r.unmatched);
                out["pairs"] = to_value(&r.witness.pairs());
            } else {
                out["unmatched"] = json!(min_unmatched(&w));
            }
            Rendered::json(out)
        }
        Command::Census(a) => {
            let counts = census(a.n, a.k, budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET))?;
            let rows = counts.iter().map(|(l, c)| csv_row([l.to_string(), c.to_string()])).collect();
            let json_rows: Vec<Value> = counts.iter().map(|(l, c)| json!({ "ell_value": l, "count": c })).collect();
            Rendered::json(json!({ "n": a.n, "k": a.k, "counts": json_rows }))
                .with_csv(&["ell_value", "count"], rows)
                .preferring(Format::Csv)
        }
        Command::Greedy(a) => {
            let w = parse_word(&a.word, a.k)?;
            let trace = greedy_match(&w);
            Rendered::json(json!({
                "n": w.len(),
                "pairs": trace.matched_pairs.pairs(),
                "reductions": trace.reductions,
                "unmatched": trace.unmatched,
                "final_state": trace.final_state,
            }))
        }
        Command::GreedySim(a) => {
            if a.k < 1 {
                bail!("k must be at least 1");
            }
            let mut rng = WordRng::new(a.seed);
            let mut matcher = GreedyMatcher::counting_only(a.k);
            let mut points = vec![(0, 0, 0)];
            for t in 1..=a.n {
                matcher.push(rng.letter(a.k));
                if (t as u64).is_multiple_of(a.every) || t == a.n {
                    points.push((t, matcher.accessible_len(), matcher.reductions()));
                }
            }
            let rows = points.iter().map(|&(t, len, red)| csv_row([t, len, red])).collect();
            let json_rows: Vec<Value> = points
                .iter()
                .map(|&(t, len, red)| json!({ "t": t, "accessible_length": len, "reductions": red }))
                .collect();
            Rendered::json(json!({ "rows": json_rows }))
                .with_csv(&["t", "accessible_length", "reductions"], rows)
                .preferring(Format::Csv)
        }
        Command::Chain(ChainCommand::Verify(a)) => {
            let report = verify_balance(a.k, a.max_len)?;
            let mut out = to_value(&report);
            out["passed"] = json!(report.passed());
            let mut rendered = Rendered::json(out);
            rendered.success = report.passed();
            rendered
        }
        Command::Chain(ChainCommand::Truncated(a)) => {
            let params = chain_params(a.k)?;
            let chain =
                truncated_chain_pi(a.k, a.max_len, a.convention, budget.map_or(DEFAULT_STATE_BUDGET, |b| b as usize))?;
            let mut states = Vec::with_capacity(chain.states.len());
            let mut rows = Vec::with_capacity(chain.states.len());
            for (w, &p) in chain.states.iter().zip(&chain.pi) {
                let exact = to_f64(&stationary_pi(w, &params)?);
                rows.push(csv_row([w.format_signed(), p.to_string(), exact.to_string()]));
                states.push(json!({ "word": w, "probability": p, "stationary": exact }));
            }
            let up_to = a.max_len.saturating_sub(1);
            let (ratio_min, ratio_max) = chain.ratio_range(&params, up_to)?;
            Rendered::json(json!({
                "ratio_min": ratio_min,
                "ratio_max": ratio_max,
                "k": a.k,
                "max_len": a.max_len,
                "convention": a.convention,
                "compared_up_to_len": up_to,
                "max_deviation": chain.max_deviation(&params, up_to)?,
                "states": states,
            }))
            .with_csv(&["word", "probability", "stationary"], rows)
        }
        Command::LambdaTilde(a) => {
            let value = Exact::from(&lambda_tilde(a.k)?);
            let text = format!("{} ≈ {:.6}", value.exact, value.decimal);
            Rendered::json(json!({ "k": a.k, "exact": value.exact, "decimal": value.decimal }))
                .with_text(text)
                .preferring(Format::Text)
        }
        Command::Bounds(a) => {
            let report = bound_report(a.k, a.tol)?.rounded(6);
            let mut out = to_value(&report);
            out["best_lower"] = json!(report.best_lower());
            out["best_upper"] = json!(report.best_upper());
            out["consistent"] = json!(report.is_consistent());
            Rendered::json(out)
        }
        Command::TrivialCount(a) => {
            let count = trivial_word_count(a.p, a.k);
            Rendered::json(json!({
                "p": a.p,
                "k": a.k,
                "count": count.to_string(),
                "probability": trivial_word_probability(a.p, a.k),
            }))
            .with_text(count.to_string())
            .preferring(Format::Text)
        }
        Command::Estimate(a) => {
            let s = &a.sample;
            let r = estimate_rho(s.n, s.k, s.samples, &sampling(s, budget))?;
            let row = csv_row([
                r.n.to_string(),
                r.k.to_string(),
                r.samples.to_string(),
                r.seed.to_string(),
                r.mean_fraction.to_string(),
                r.hoeffding_halfwidth.to_string(),
                r.per_sample_sd.to_string(),
                r.standard_error.to_string(),
            ]);
            Rendered::json(to_value(&r)).with_csv(
                &[
                    "n",
                    "k",
                    "samples",
                    "seed",
                    "mean_fraction",
                    "hoeffding_halfwidth",
                    "per_sample_sd",
                    "standard_error",
                ],
                vec![row],
            )
        }
        Command::Concentrate(a) => {
            let s = &a.sample;
            let r = concentration_experiment(s.n, s.k, s.samples, &a.t, &sampling(s, budget))?;
            let rows = (0..r.t_grid.len())
                .map(|i| {
                    csv_row([
                        r.t_grid[i].to_string(),
                        r.empirical_tail[i].to_string(),
                        r.bound[i].to_string(),
                        r.slack[i].to_string(),
                        r.within_bound[i].to_string(),
                    ])
                })
                .collect();
            let mut rendered =
                Rendered::json(to_value(&r)).with_csv(&["t", "empirical_tail", "bound", "slack", "within_bound"], rows);
            rendered.success = r.passed();
            rendered
        }
        Command::Subadd(a) => {
            let s = &a.sample;
            let r = subadditivity_experiment(a.m, s.n, s.k, s.samples, &sampling(s, budget))?;
            let mut rendered = Rendered::json(to_value(&r));
            rendered.success = r.violations == 0;
            rendered
        }
        Command::Mono(s) => {
            let r = monotonicity_experiment(s.n, s.k, s.samples, &sampling(s, budget))?;
            let rows = [&r.smaller, &r.larger]
                .iter()
                .map(|e| {
                    csv_row([
                        e.k.to_string(),
                        e.mean_fraction.to_string(),
                        e.hoeffding_halfwidth.to_string(),
                        e.standard_error.to_string(),
                    ])
                })
                .collect();
            Rendered::json(to_value(&r))
                .with_csv(&["k", "mean_fraction", "hoeffding_halfwidth", "standard_error"], rows)
        }
        Command::GreedyLongrun(a) => Rendered::json(to_value(&greedy_longrun(a.n, a.k, a.seed)?)),
        Command::Reproduce(a) => reproduce(a)?,
    })
}

fn reproduce(a: &ReproduceArgs) -> anyhow::Result<Rendered> {
    let mut options = ReproduceOptions::new(a.seed);
    options.only = a.only.clone();
    options.tau2_override = a.tau2.as_deref().map(parse_tau).transpose()?;
    options.bracket_n = a.bracket_n;
    options.bracket_samples = a.bracket_samples;
    let report = run_checks(&options, |c| {
        eprintln!(
            "[{}] {} ({:.1}s): {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.elapsed.as_secs_f64(),
            c.detail
        );
    })?;
    write_reports(&report, &a.out).with_context(|| format!("writing {}", a.out.display()))?;

    let mut text = String::new();
    for c in &report.checks {
        text.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let failures: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failures.is_empty() {
        text.push_str(&format!("all {} checks passed; reports in {}", report.checks.len(), a.out.display()));
    } else {
        text.push_str(&format!("{} failed: {}; reports in {}", failures.len(), failures.join(", "), a.out.display()));
    }
    let rows = report.checks.iter().map(|c| csv_row([c.name.clone(), c.group.clone(), c.passed.to_string()])).collect();
    let summary = json!({
        "passed": report.passed,
        "failed": failures,
        "checks": report.checks.iter().map(|c| json!({
            "name": c.name, "group": c.group, "passed": c.passed, "detail": c.detail,
        })).collect::<Vec<_>>(),
        "out": a.out,
    });
    let mut rendered =
        Rendered::json(summary).with_csv(&["check", "group", "passed"], rows).with_text(text).preferring(Format::Text);
    rendered.success = report.passed;
    Ok(rendered)
}

fn write_output(rendered: Rendered, format: Format, config: Value) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            let mut map = match rendered.json {
                Value::Object(map) => map,
                other => Map::from_iter([("result".to_string(), other)]),
            };
            map.insert("config".into(), config);
            writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(map))?)?;
        }
        Format::Csv => {
            let (header, rows) = rendered.csv.expect("checked by caller");
            writeln!(out, "# config {config}")?;
            let mut writer = csv::Writer::from_writer(&mut out);
            writer.write_record(&header)?;
            for row in rows {
                writer.write_record(&row)?;
            }
            writer.flush()?;
        }
        Format::Text => {
            writeln!(out, "{}", rendered.text.expect("checked by caller"))?;
            writeln!(out, "# config {config}")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rendered = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let format = cli.format.unwrap_or(rendered.default);
    let available = match format {
        Format::Json => true,
        Format::Csv => rendered.csv.is_some(),
        Format::Text => rendered.text.is_some(),
    };
    if !available {
        Cli::command()
            .error(
                ErrorKind::InvalidValue,
                format!(
                    "`{}` has no {} output",
                    command_name(&cli.command),
                    format.to_possible_value().expect("no skipped variants").get_name()
                ),
            )
            .exit();
    }
    let config = json!({
        "command": command_name(&cli.command),
        "args": command_args(&cli.command),
        "format": format,
        "budget": cli.budget.map(|b| b.to_string()),
    });
    let success = rendered.success;
    if let Err(e) = write_output(rendered, format, config) {
        let closed = e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || e.downcast_ref::<csv::Error>().is_some_and(
                |c| matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
            );
        if closed {
            return ExitCode::SUCCESS;
        }
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
