//! `telecom-lde <experiment> --config <path> [--seed N] [--replicates N] [--threads N] [--out DIR]`
//! and `telecom-lde plot-data --results <path> [--out DIR]`.
//!
//! A run writes `results.csv`, `summary.json`, `plot_data.csv` and
//! `timing.json` to the output directory. All but `timing.json` are
//! reproducible byte for byte from the configuration and seed. Failures
//! write `error.json` and exit with status 1.

mod config;
mod experiments;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Config, Experiment, Overrides};
use output::{Report, ERROR_FILE, PLOT_FILE, SUMMARY_FILE, TIMING_FILE};

#[derive(Debug)]
pub enum Failure {
    Core(telecom_core::Error),
    Io(String),
    Parse(String),
    NonFinite(String),
    /// Some identities failed; the rows are still written.
    Selftest {
        report: Report,
        failures: Vec<String>,
    },
}

impl From<telecom_core::Error> for Failure {
    fn from(e: telecom_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.kind(),
            Failure::Io(_) => "io",
            Failure::Parse(_) => "parse",
            Failure::NonFinite(_) => "non_finite",
            Failure::Selftest { .. } => "selftest",
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(m) | Failure::Parse(m) => f.write_str(m),
            Failure::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Failure::Selftest { failures, .. } => write!(f, "{} identity checks failed", failures.len()),
        }
    }
}

#[derive(Parser)]
#[command(name = "telecom-lde", version, about = "Telecom process limit and tail experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical law of the normalised Y(t) against the stable limit.
    LimitCheck(RunArgs),
    /// Moderate deviations, t^(1/gamma) << rho << t.
    LdModerate(RunArgs),
    /// Single-session intermediate deviations, rho = kappa t.
    LdIntermediate(RunArgs),
    /// Intermediate deviations that need several sessions.
    LdMultisession(RunArgs),
    /// Ultralarge deviations, rho >> t, regularly varying rewards.
    LdUltra(RunArgs),
    /// Large-deviation constants against Monte Carlo.
    Constants(RunArgs),
    /// Closed-form measure identities against quadrature.
    MeasureSelftest(RunArgs),
    /// Long-form plot table from an existing results file.
    PlotData(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    results: PathBuf,
    /// Defaults to the directory holding the results file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::LimitCheck(a) => (Experiment::LimitCheck, a),
        Command::LdModerate(a) => (Experiment::LdModerate, a),
        Command::LdIntermediate(a) => (Experiment::LdIntermediate, a),
        Command::LdMultisession(a) => (Experiment::LdMultisession, a),
        Command::LdUltra(a) => (Experiment::LdUltra, a),
        Command::Constants(a) => (Experiment::Constants, a),
        Command::MeasureSelftest(a) => (Experiment::MeasureSelftest, a),
        Command::PlotData(a) => {
            let dir = a.out.clone().unwrap_or_else(|| parent(&a.results));
            return finish("plot-data", &dir, plot_data(&a.results, &dir));
        }
    };
    let fallback = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let overrides = Overrides { seed: args.seed, replicates: args.replicates, out: args.out.clone() };
    let config = match Config::load(&args.config, experiment, &overrides) {
        Ok(c) => c,
        Err(e) => return finish(experiment.name(), &fallback, Err(e)),
    };
    let dir = config.out_dir();
    finish(experiment.name(), &dir, run(&config, &dir, args.threads))
}

fn parent(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(config: &Config, dir: &Path, threads: Option<usize>) -> Result<(), Failure> {
    let start = Instant::now();
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    }
    let (report, failure) = match experiments::run(config) {
        Ok(r) => (r, None),
        Err(Failure::Selftest { report, failures }) => (report, Some(failures)),
        Err(e) => return Err(e),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    output::write_run(dir, config, &report)?;
    write_plot(&report.rows, Some(config.params.gamma), dir)?;
    output::write_json(
        &dir.join(TIMING_FILE),
        &json!({ "wall_seconds": start.elapsed().as_secs_f64(), "threads": rayon::current_num_threads() }),
    )?;
    match failure {
        Some(failures) => Err(Failure::Selftest { report: Report::default(), failures }),
        None => Ok(()),
    }
}

fn write_plot(rows: &[output::Row], gamma: Option<f64>, dir: &Path) -> Result<(), Failure> {
    let table = plot::plot_rows(rows, gamma);
    let io = |e: csv::Error| Failure::Io(e.to_string());
    let mut w = csv::Writer::from_path(dir.join(PLOT_FILE)).map_err(io)?;
    if table.is_empty() {
        w.write_record(plot::PLOT_HEADER).map_err(io)?;
    }
    for r in &table {
        if ![r.x, r.y, r.y_low, r.y_high].iter().all(|v| v.is_finite()) {
            return Err(Failure::NonFinite(format!("plot series {} at x = {}", r.series, r.x)));
        }
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Io(e.to_string()))
}

/// `γ` from a `summary.json` beside the results, when there is one.
fn summary_gamma(results: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(parent(results).join(SUMMARY_FILE)).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v["config"]["params"]["gamma"].as_f64()
}

fn plot_data(results: &Path, dir: &Path) -> Result<(), Failure> {
    let rows = output::read_rows(results)?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    write_plot(&rows, summary_gamma(results), dir)
}

fn finish(experiment: &str, dir: &Path, result: Result<(), Failure>) -> ExitCode {
    let Err(e) = result else {
        return ExitCode::SUCCESS;
    };
    eprintln!("error: {e}");
    let details = match &e {
        Failure::Selftest { failures, .. } => failures.clone(),
        _ => Vec::new(),
    };
    let record = json!({ "experiment": experiment, "kind": e.kind(), "message": e.to_string(), "details": details });
    if std::fs::create_dir_all(dir).is_ok() {
        if let Err(w) = output::write_json(&dir.join(ERROR_FILE), &record) {
            eprintln!("error: {w}");
        }
    }
    ExitCode::FAILURE
}
