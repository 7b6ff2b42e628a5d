//! Command-line driver: dataset generation, descent, Monte Carlo training,
//! baselines, the counterexample check and the epsilon grid search.
//!
//! Every subcommand reads its parameters from an optional JSON config (with
//! a `command` field) and lets command-line flags override them.

mod commands;
mod error;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "jlsampler",
    version,
    about = "Learn deterministic JL matrices by descending over Gaussian samplers"
)]
struct Cli {
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, env = "JLSAMPLER_THREADS", global = true)]
    threads: Option<usize>,

    /// JSON config; must carry a `command` field. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random unit-norm dataset.
    GenData(GenDataArgs),
    /// Calibrate epsilon and run second-order descent on the exact objective.
    Optimize(OptimizeArgs),
    /// Train a sampler with Adam on the Monte Carlo proxy.
    Mc(McArgs),
    /// Max distortion of i.i.d. Gaussian matrices.
    Baseline(BaselineArgs),
    /// Check the bad local minimum of the counterexample instance.
    Counterexample(CounterexampleArgs),
    /// Run descent for each epsilon in a grid and keep the best matrix.
    GridSearch(GridSearchArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::Optimize(_) => "optimize",
            Command::Mc(_) => "mc",
            Command::Baseline(_) => "baseline",
            Command::Counterexample(_) => "counterexample",
            Command::GridSearch(_) => "grid-search",
        }
    }

    fn flags(&self) -> CliResult<Value> {
        let v = match self {
            Command::GenData(a) => serde_json::to_value(a),
            Command::Optimize(a) => serde_json::to_value(a),
            Command::Mc(a) => serde_json::to_value(a),
            Command::Baseline(a) => serde_json::to_value(a),
            Command::Counterexample(a) => serde_json::to_value(a),
            Command::GridSearch(a) => serde_json::to_value(a),
        }?;
        Ok(v)
    }
}

#[derive(Debug, Args, Serialize)]
struct GenDataArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DescentArgs {
    /// Stationarity tolerance.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    sigma_floor: Option<f64>,
    /// Gradient Lipschitz constant L (step 1/L).
    #[arg(long)]
    smoothness: Option<f64>,
    /// Hessian Lipschitz constant K (curvature step 3 sqrt(rho)/K).
    #[arg(long)]
    hessian_lipschitz: Option<f64>,
    /// `adaptive` or `fixed-constants`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    eig_tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct OptimizeArgs {
    /// Dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Use this epsilon instead of calibrating.
    #[arg(long)]
    eps: Option<f64>,
    /// Use epsilon = c sqrt(ln n / k) with this constant instead of calibrating.
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    descent: DescentArgs,
    #[arg(long)]
    out_matrix: Option<PathBuf>,
    #[arg(long)]
    out_trace: Option<PathBuf>,
    #[arg(long)]
    out_summary: Option<PathBuf>,
    /// Leave wall time out of the summary so reruns are byte-identical.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    omit_timing: bool,
}

#[derive(Debug, Args, Serialize)]
struct McArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    adam_eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    log_every: Option<usize>,
    #[arg(long)]
    out_matrix: Option<PathBuf>,
    #[arg(long)]
    out_trajectory: Option<PathBuf>,
    #[arg(long)]
    out_summary: Option<PathBuf>,
    /// Two-panel SVG of the trajectory.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BaselineArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Summary JSON (printed to stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CounterexampleArgs {
    /// Block dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    ks: Vec<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `squared` or `norm-ratio`.
    #[arg(long)]
    convention: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct GridSearchArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Epsilon values, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    eps_grid: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    descent: DescentArgs,
    #[arg(long)]
    out_summary: Option<PathBuf>,
    #[arg(long)]
    out_matrix: Option<PathBuf>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Config file values overlaid with the non-empty flags.
fn merged_params(cli: &Cli) -> CliResult<(String, Value)> {
    let mut params = Map::new();
    let mut file_command = None;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)?;
        let Value::Object(mut obj) = v else {
            return Err(CliError::Validation("config must be a JSON object".into()));
        };
        match obj.remove("command") {
            Some(Value::String(c)) => file_command = Some(c),
            Some(_) => return Err(CliError::Validation("config field `command` must be a string".into())),
            None => return Err(CliError::Validation("config lacks a `command` field".into())),
        }
        params = obj;
    }
    let command = match (&cli.command, file_command) {
        (Some(c), Some(f)) if c.name() != f => {
            return Err(CliError::Validation(format!(
                "config is for `{f}` but the `{}` subcommand was given",
                c.name()
            )))
        }
        (Some(c), _) => c.name().to_string(),
        (None, Some(f)) => f,
        (None, None) => return Err(CliError::Validation("no subcommand given (and no --config)".into())),
    };
    if let Some(c) = &cli.command {
        if let Value::Object(flags) = c.flags()? {
            for (key, val) in flags {
                if !val.is_null() {
                    params.insert(key, val);
                }
            }
        }
    }
    Ok((command, Value::Object(params)))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let (command, params) = merged_params(&cli)?;
    match command.as_str() {
        "gen-data" => commands::gen_data(params),
        "optimize" => commands::optimize(params),
        "mc" => commands::mc(params),
        "baseline" => commands::baseline(params),
        "counterexample" => commands::counterexample(params),
        "grid-search" => commands::grid_search(params),
        other => Err(CliError::Validation(format!("unknown command `{other}`"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
