//! Command-line interface.
//!
//! Subcommands: `bound`, `curve`, `frontier`, `verify`, `posterior`. Every
//! command takes an explicit `--seed` (there is no wall-clock seeding) and
//! produces byte-identical output for identical configuration. The
//! `SCALING_FRONTIER_THREADS` environment variable caps worker threads.
//! Exit codes: 0 success, 1 verification failure, 2 usage error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{bound_corollary, bound_theorem2, optimal_epsilon, BoundReport};
use crate::frontier::{
    budget_curve, frontier_sweep, log_grid, slope_estimate, FrontierPoint, SlopeAxis,
};
use crate::plot::LogLogPlot;
use crate::posterior::{
    default_codebook, run_scenario, ScenarioConfig, ScenarioMode,
};
use crate::verify::{standard_suite, SuiteConfig, VerificationReport};

#[derive(Parser)]
#[command(
    name = "scaling-frontier",
    version,
    about = "Error bounds, compute-optimal frontiers and Monte Carlo checks \
             for resampled two-layer networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form error bounds at a single configuration.
    Bound(BoundArgs),
    /// Emit bound-vs-width curves for fixed compute budgets.
    Curve(CurveArgs),
    /// Sweep compute budgets and fit the optimal-allocation slopes.
    Frontier(FrontierArgs),
    /// Run the Monte Carlo verification suite for every bound.
    Verify(VerifyArgs),
    /// Run exact-Bayes sequential-prediction scenarios.
    Posterior(PosteriorArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Base output path; per-format extensions are appended. Without it the
    /// first requested format goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: csv, json, svg.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct ReportOutputArgs {
    /// Output path for the JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; only json is supported.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct BoundArgs {
    /// Input dimension.
    #[arg(long = "d")]
    d: u64,
    /// Process scale parameter.
    #[arg(long = "K")]
    k: u64,
    /// Hidden width.
    #[arg(long = "n")]
    n: u64,
    /// Token horizon.
    #[arg(long = "T")]
    t: f64,
    /// Quantization radius; when given, the explicit-epsilon bound is also
    /// reported.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Master seed (required for uniformity; this command is deterministic).
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long = "d")]
    d: u64,
    #[arg(long = "K")]
    k: u64,
    /// Budgets: comma list ("1e8,1e10") or log-spaced range "lo:hi:count".
    #[arg(long)]
    budgets: String,
    /// Width grid: point count for an automatic log grid over [1, C/d], or
    /// an explicit "lo:hi:count".
    #[arg(long = "n-grid", default_value = "64")]
    n_grid: String,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FrontierArgs {
    #[arg(long = "d")]
    d: u64,
    #[arg(long = "K")]
    k: u64,
    /// Budgets: comma list or log-spaced range "lo:hi:count"; at least 3.
    #[arg(long)]
    budgets: String,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Master seed for every Monte Carlo substream.
    #[arg(long)]
    seed: u64,
    /// Target sample count per check (default one million).
    #[arg(long)]
    samples: Option<u64>,
    /// Fault-injection switch: inflate every KL evaluation tenfold so the
    /// suite must fail. For negative-control testing only.
    #[arg(long, hide = true)]
    sabotage_kl: bool,
    #[command(flatten)]
    output: ReportOutputArgs,
}

#[derive(Args)]
struct PosteriorArgs {
    #[arg(long)]
    seed: u64,
    /// Prediction horizon per trajectory.
    #[arg(long = "T", default_value_t = 50)]
    t: usize,
    /// Trajectories per scenario.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Scenario configuration file (JSON); overrides the built-in pair and
    /// carries its own seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    output: ReportOutputArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn failure(msg: impl Into<String>) -> Self {
        CliError::Failure(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

fn parse_formats(spec: &str) -> Result<Vec<Format>, CliError> {
    let mut formats = Vec::new();
    for part in spec.split(',') {
        let f = match part.trim() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            "svg" => Format::Svg,
            other => return Err(CliError::usage(format!("unknown format '{other}'"))),
        };
        if !formats.contains(&f) {
            formats.push(f);
        }
    }
    if formats.is_empty() {
        return Err(CliError::usage("at least one output format is required"));
    }
    Ok(formats)
}

/// Budgets as a comma list or a log-spaced "lo:hi:count" range, sorted
/// ascending.
fn parse_budgets(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let mut budgets: Vec<f64> = if parts.len() == 3 {
        let lo: f64 =
            parts[0].trim().parse().map_err(|_| CliError::usage("bad budget range start"))?;
        let hi: f64 =
            parts[1].trim().parse().map_err(|_| CliError::usage("bad budget range end"))?;
        let count: usize =
            parts[2].trim().parse().map_err(|_| CliError::usage("bad budget range count"))?;
        if !(lo > 0.0 && hi >= lo && count >= 2) {
            return Err(CliError::usage("budget range needs 0 < lo <= hi and count >= 2"));
        }
        (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                lo * (hi / lo).powf(t)
            })
            .collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| CliError::usage(format!("could not parse budgets '{spec}'")))?
    };
    if budgets.is_empty() || budgets.iter().any(|&c| !c.is_finite() || c <= 0.0) {
        return Err(CliError::usage("budgets must be positive finite numbers"));
    }
    budgets.sort_by(|a, b| a.partial_cmp(b).expect("finite budgets"));
    Ok(budgets)
}

enum GridSpec {
    Count(usize),
    Explicit { lo: u64, hi: u64, count: usize },
}

fn parse_n_grid(spec: &str) -> Result<GridSpec, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => {
            let count: usize =
                parts[0].trim().parse().map_err(|_| CliError::usage("bad n-grid count"))?;
            if count == 0 {
                return Err(CliError::usage("n-grid count must be >= 1"));
            }
            Ok(GridSpec::Count(count))
        }
        3 => {
            let lo: u64 =
                parts[0].trim().parse().map_err(|_| CliError::usage("bad n-grid start"))?;
            let hi: u64 = parts[1].trim().parse().map_err(|_| CliError::usage("bad n-grid end"))?;
            let count: usize =
                parts[2].trim().parse().map_err(|_| CliError::usage("bad n-grid count"))?;
            if lo == 0 || hi < lo || count == 0 {
                return Err(CliError::usage("n-grid needs 1 <= lo <= hi and count >= 1"));
            }
            Ok(GridSpec::Explicit { lo, hi, count })
        }
        _ => Err(CliError::usage("n-grid must be 'count' or 'lo:hi:count'")),
    }
}

fn emit(
    out: &Option<PathBuf>,
    formats: &[Format],
    mut content: impl FnMut(Format) -> Option<String>,
) -> Result<(), CliError> {
    match out {
        Some(base) => {
            for &f in formats {
                if let Some(text) = content(f) {
                    let path = base.with_extension(f.ext());
                    std::fs::write(&path, text)
                        .map_err(|e| CliError::failure(format!("write {path:?}: {e}")))?;
                    println!("wrote {}", path.display());
                }
            }
            Ok(())
        }
        None => {
            if let Some(text) = content(formats[0]) {
                print!("{text}");
            }
            Ok(())
        }
    }
}

fn check_positive_params(pairs: &[(&str, u64)]) -> Result<(), CliError> {
    for (name, v) in pairs {
        if *v == 0 {
            return Err(CliError::usage(format!("--{name} must be >= 1")));
        }
    }
    Ok(())
}

fn cmd_bound(args: &BoundArgs) -> Result<bool, CliError> {
    check_positive_params(&[("d", args.d), ("K", args.k), ("n", args.n)])?;
    if !(args.t > 0.0 && args.t.is_finite()) {
        return Err(CliError::usage("--T must be positive and finite"));
    }
    let mut reports: Vec<BoundReport> = Vec::new();
    if let Some(eps) = args.epsilon {
        let report = bound_theorem2(args.n, args.k, args.d, args.t, eps)
            .map_err(|e| CliError::usage(e.to_string()))?;
        reports.push(report);
    }
    reports.push(
        bound_corollary(args.n, args.k, args.d, args.t)
            .map_err(|e| CliError::usage(e.to_string()))?,
    );
    for r in &reports {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    let eps_star = optimal_epsilon(args.n, args.k, args.t)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let formats = parse_formats(&args.output.format)?;
    emit(&args.output.out, &formats, |f| match f {
        Format::Csv => {
            let mut text = String::from(BoundReport::CSV_HEADER);
            text.push('\n');
            for r in &reports {
                text.push_str(&r.csv_row());
                text.push('\n');
            }
            Some(text)
        }
        Format::Json => {
            let doc = serde_json::json!({
                "reports": reports,
                "optimal_epsilon": eps_star,
            });
            Some(format!("{:#}\n", doc))
        }
        Format::Svg => None,
    })?;
    Ok(true)
}

/// Rows of one budget curve plus the minimizing feasible width.
struct CurveData {
    c: f64,
    rows: Vec<(u64, Option<BoundReport>)>,
    minimum: Option<(u64, f64)>,
}

fn cmd_curve(args: &CurveArgs) -> Result<bool, CliError> {
    check_positive_params(&[("d", args.d), ("K", args.k)])?;
    let budgets = parse_budgets(&args.budgets)?;
    let grid_spec = parse_n_grid(&args.n_grid)?;
    let mut curves = Vec::new();
    for &c in &budgets {
        if c < args.d as f64 {
            return Err(CliError::usage(format!("budget {c} cannot fund one unit of d = {}", args.d)));
        }
        let n_max = (c / args.d as f64).floor() as u64;
        let grid = match grid_spec {
            GridSpec::Count(count) => log_grid(1, n_max, count),
            GridSpec::Explicit { lo, hi, count } => log_grid(lo, hi, count),
        };
        let rows =
            budget_curve(c, args.d, args.k, &grid).map_err(|e| CliError::usage(e.to_string()))?;
        let minimum = rows
            .iter()
            .filter_map(|(n, r)| r.as_ref().map(|r| (*n, r.total_nats)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite bounds"));
        curves.push(CurveData { c, rows, minimum });
    }
    let formats = parse_formats(&args.output.format)?;
    emit(&args.output.out, &formats, |f| match f {
        Format::Csv => {
            let mut text = format!("C,{}\n", BoundReport::CSV_HEADER);
            for curve in &curves {
                for (n, row) in &curve.rows {
                    match row {
                        Some(r) => text.push_str(&format!("{},{}\n", curve.c, r.csv_row())),
                        None => text.push_str(&format!(
                            "# warning: n={n} infeasible at C={} (max n = {})\n",
                            curve.c,
                            (curve.c / args.d as f64).floor()
                        )),
                    }
                }
            }
            Some(text)
        }
        Format::Json => {
            let doc = serde_json::json!({
                "d": args.d,
                "K": args.k,
                "curves": curves.iter().map(|curve| {
                    serde_json::json!({
                        "C": curve.c,
                        "min_n": curve.minimum.map(|m| m.0),
                        "min_total_nats": curve.minimum.map(|m| m.1),
                        "rows": curve.rows.iter().filter_map(|(n, r)| {
                            r.as_ref().map(|r| serde_json::json!({"n": n, "report": r}))
                        }).collect::<Vec<_>>(),
                    })
                }).collect::<Vec<_>>(),
            });
            Some(format!("{:#}\n", doc))
        }
        Format::Svg => {
            let mut plot = LogLogPlot::new(
                &format!("error bound vs width (d={}, K={})", args.d, args.k),
                "hidden width n",
                "bound total (nats)",
            );
            for curve in &curves {
                let points: Vec<(f64, f64)> = curve
                    .rows
                    .iter()
                    .filter_map(|(n, r)| r.as_ref().map(|r| (*n as f64, r.total_nats)))
                    .collect();
                plot.add_series(&format!("C={:e}", curve.c), points, false);
                if let Some((n, v)) = curve.minimum {
                    plot.markers.push((n as f64, v));
                }
            }
            Some(plot.render())
        }
    })?;
    Ok(true)
}

fn cmd_frontier(args: &FrontierArgs) -> Result<bool, CliError> {
    check_positive_params(&[("d", args.d), ("K", args.k)])?;
    let budgets = parse_budgets(&args.budgets)?;
    if budgets.len() < 3 {
        return Err(CliError::usage("frontier sweeps need at least 3 budgets"));
    }
    let points =
        frontier_sweep(&budgets, args.d, args.k).map_err(|e| CliError::usage(e.to_string()))?;
    let slope_c = slope_estimate(&points, SlopeAxis::Budget)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let slope_t = slope_estimate(&points, SlopeAxis::Tokens)
        .map_err(|e| CliError::usage(e.to_string()))?;
    println!("slope of param count vs C:  {slope_c}");
    println!("slope of param count vs T*: {slope_t}");
    let formats = parse_formats(&args.output.format)?;
    emit(&args.output.out, &formats, |f| match f {
        Format::Csv => {
            let mut text = String::from(FrontierPoint::CSV_HEADER);
            text.push('\n');
            for p in &points {
                text.push_str(&p.csv_row());
                text.push('\n');
            }
            Some(text)
        }
        Format::Json => {
            let doc = serde_json::json!({
                "points": points,
                "slope_param_vs_budget": slope_c,
                "slope_param_vs_tokens": slope_t,
            });
            Some(format!("{:#}\n", doc))
        }
        Format::Svg => Some(render_frontier_svg(&points, slope_c, slope_t)),
    })?;
    Ok(true)
}

fn render_frontier_svg(points: &[FrontierPoint], slope_c: f64, slope_t: f64) -> String {
    let mut plot = LogLogPlot::new(
        "compute-optimal allocation",
        "token count T* (and budget C)",
        "parameter count d*n",
    );
    let vs_t: Vec<(f64, f64)> = points.iter().map(|p| (p.t_star, p.param_count())).collect();
    let vs_c: Vec<(f64, f64)> = points.iter().map(|p| (p.c, p.param_count())).collect();
    let fit = |xs: &[(f64, f64)], slope: f64| -> Vec<(f64, f64)> {
        // Anchor the fitted line through the log-space centroid.
        let mx = xs.iter().map(|p| p.0.ln()).sum::<f64>() / xs.len() as f64;
        let my = xs.iter().map(|p| p.1.ln()).sum::<f64>() / xs.len() as f64;
        let (x0, x1) = (xs[0].0, xs[xs.len() - 1].0);
        vec![
            (x0, (my + slope * (x0.ln() - mx)).exp()),
            (x1, (my + slope * (x1.ln() - mx)).exp()),
        ]
    };
    plot.add_series(&format!("param vs T* (slope {slope_t:.3})"), fit(&vs_t, slope_t), false);
    plot.add_series(&format!("param vs C (slope {slope_c:.3})"), fit(&vs_c, slope_c), false);
    let reference: Vec<(f64, f64)> = {
        let (t0, p0) = vs_t[0];
        let t1 = vs_t[vs_t.len() - 1].0;
        vec![(t0, p0), (t1, p0 * t1 / t0)]
    };
    plot.add_series("slope-1 reference", reference, true);
    for &(x, y) in vs_t.iter().chain(vs_c.iter()) {
        plot.markers.push((x, y));
    }
    plot.render()
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let samples = args.samples.unwrap_or(1_000_000);
    if samples == 0 {
        return Err(CliError::usage("--samples must be >= 1"));
    }
    let mut cfg = SuiteConfig::new(args.seed);
    cfg.sample_scale = samples as f64 / 1_000_000.0;
    if args.sabotage_kl {
        cfg.kl_inflation = 10.0;
    }
    let mut checks = standard_suite(&cfg);
    checks.extend(crate::posterior::entropy_rate_suite(args.seed, cfg.sample_scale));
    let report = VerificationReport::from_checks(args.seed, checks);
    write_report(&args.output, &report)?;
    Ok(report.all_pass)
}

fn cmd_posterior(args: &PosteriorArgs) -> Result<bool, CliError> {
    let scenarios: Vec<ScenarioConfig> = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("read {path:?}: {e}")))?;
            let cfg: ScenarioConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("parse {path:?}: {e}")))?;
            vec![cfg]
        }
        None => {
            if args.t == 0 {
                return Err(CliError::usage("--T must be >= 1"));
            }
            vec![
                ScenarioConfig {
                    codebook: default_codebook(),
                    n: 2,
                    k: 1,
                    prior: None,
                    horizon: args.t,
                    trials: args.samples,
                    mode: ScenarioMode::Singleton,
                    seed: crate::rng::derive_seed(args.seed, "posterior singleton"),
                },
                ScenarioConfig {
                    codebook: default_codebook(),
                    n: 2,
                    k: 1,
                    prior: None,
                    horizon: args.t,
                    trials: args.samples,
                    mode: ScenarioMode::WellSpecified,
                    seed: crate::rng::derive_seed(args.seed, "posterior well-specified"),
                },
            ]
        }
    };
    let mut checks = Vec::new();
    for cfg in &scenarios {
        checks.extend(run_scenario(cfg).map_err(|e| CliError::usage(e.to_string()))?);
    }
    let report = VerificationReport::from_checks(args.seed, checks);
    write_report(&args.output, &report)?;
    Ok(report.all_pass)
}

fn write_report(output: &ReportOutputArgs, report: &VerificationReport) -> Result<(), CliError> {
    for check in &report.checks {
        println!(
            "[{}] {} (estimate {} vs bound {}, stderr {}, {} samples)",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.estimate,
            check.bound,
            check.stderr,
            check.samples
        );
    }
    let formats = parse_formats(&output.format)?;
    if formats != [Format::Json] {
        return Err(CliError::usage("verification reports are JSON only (--format json)"));
    }
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::failure(e.to_string()))?;
    match &output.out {
        Some(base) => {
            let path: &Path = base;
            let path = path.with_extension("json");
            std::fs::write(&path, format!("{text}\n"))
                .map_err(|e| CliError::failure(format!("write {path:?}: {e}")))?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn init_runtime() {
    let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Warn));
    if let Ok(v) = std::env::var("SCALING_FRONTIER_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    init_runtime();
    let result = match &cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Frontier(args) => cmd_frontier(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Posterior(args) => cmd_posterior(args),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("verification failed");
            1
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
