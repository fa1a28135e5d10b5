//! `matreg` — regularized low-rank matrix-variate regression toolkit.
//!
//! Subcommands: `generate` (datasets + truth sidecar), `fit` (one model,
//! JSON result), `experiment` (replicated generate/tune/fit/evaluate cycles),
//! and `check` (numerical verification of the theory). Results go to
//! standard output or `--out`; diagnostics go to standard error. Exit code 0
//! means the command completed (and, for checks, passed).

mod commands;
mod config;
mod signal;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "matreg", version, about = "Low-rank matrix-variate regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file and its ground-truth sidecar.
    Generate(GenerateOpts),
    /// Fit one model to a dataset file and emit a JSON result.
    Fit(FitOpts),
    /// Run replicated generate/tune/fit/evaluate cycles and aggregate.
    Experiment(ExperimentOpts),
    /// Numerical checks of the theory's assumptions and bounds.
    #[command(subcommand)]
    Check(CheckCommand),
}

/// Signal selection shared by generate/experiment/check.
#[derive(Args, Debug, Clone)]
struct SignalOpts {
    /// 2D shape signal: square | t | cross | triangle | circle | butterfly.
    #[arg(long)]
    shape: Option<String>,
    /// Shape grid size g (signal is g×g).
    #[arg(long)]
    g: Option<usize>,
    /// Low-rank sparse signal, e.g. m=64,q=64,r=5,s=0.05[,p=5].
    #[arg(long)]
    synthetic: Option<String>,
    /// True vector coefficient γ*, comma separated (default 1,1,1,1,1).
    #[arg(long)]
    gamma_star: Option<String>,
}

#[derive(Args, Debug)]
struct GenerateOpts {
    #[command(flatten)]
    signal: SignalOpts,
    /// Sample count.
    #[arg(long)]
    n: Option<usize>,
    /// Noise: gaussian[:sigma] | contaminated:p[:sigma_out[:sigma]] | cauchy.
    #[arg(long)]
    noise: Option<String>,
    /// Loss model: ordinary | robust[:alpha] | logistic.
    #[arg(long)]
    model: Option<String>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truth sidecar path (default: <out>.truth).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Config file with key = value lines (flags override).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitOpts {
    /// Dataset file to fit.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Truth sidecar; enables coefficient RMSEs in the output.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Held-out dataset for the prediction error (default: training data).
    #[arg(long)]
    test: Option<PathBuf>,
    /// Rank constraint r.
    #[arg(long)]
    rank: Option<usize>,
    /// Penalty weight λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Huber threshold override for robust datasets.
    #[arg(long)]
    alpha: Option<f64>,
    /// Line-search shrinkage β in (0,1).
    #[arg(long)]
    beta: Option<f64>,
    /// Stopping tolerance on successive objective values.
    #[arg(long)]
    eps: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Initial line-search step.
    #[arg(long)]
    alpha_init: Option<f64>,
    /// Backtracking cap per line search.
    #[arg(long)]
    max_backtracks: Option<usize>,
    /// Echoed into the output JSON for provenance.
    #[arg(long)]
    seed: Option<u64>,
    /// Result JSON path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump fitted coefficients in the truth-sidecar layout.
    #[arg(long)]
    dump_coefficients: Option<PathBuf>,
    /// Also print the objective trace, one value per line, to stdout.
    #[arg(long)]
    trace: bool,
    /// Config file with key = value lines (flags override).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentOpts {
    #[command(flatten)]
    signal: SignalOpts,
    /// Training sample count per replication.
    #[arg(long)]
    n: Option<usize>,
    /// Held-out sample count per replication (default: same as --n).
    #[arg(long)]
    n_test: Option<usize>,
    /// Noise: gaussian[:sigma] | contaminated:p[:sigma_out[:sigma]] | cauchy.
    #[arg(long)]
    noise: Option<String>,
    /// Loss model: ordinary | robust[:alpha] | logistic.
    #[arg(long)]
    model: Option<String>,
    /// Rank constraint r.
    #[arg(long)]
    rank: Option<usize>,
    /// Fixed penalty weight (mutually exclusive with --lambda-grid).
    #[arg(long)]
    lambda: Option<f64>,
    /// λ grid for per-replication cross-validated tuning, comma separated.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Folds for λ tuning.
    #[arg(long)]
    folds: Option<usize>,
    /// Replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed; replication k derives train seed seed⊕2k, test seed seed⊕(2k+1).
    #[arg(long)]
    seed: Option<u64>,
    /// Stopping tolerance on successive objective values.
    #[arg(long)]
    eps: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Result JSON path (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file with key = value lines (flags override).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum CheckCommand {
    /// Spectral constants of a sampled design around the truth.
    Assumptions(CheckAssumptionsOpts),
    /// Curvature bound of the fixed-rank manifold, Monte Carlo.
    Curvature(CheckCurvatureOpts),
    /// Descent lower bound on sampled manifold points.
    Descent(CheckDescentOpts),
    /// Error-vs-sample-size scaling of the estimator.
    Rate(CheckRateOpts),
}

#[derive(Args, Debug)]
struct CheckAssumptionsOpts {
    #[command(flatten)]
    signal: SignalOpts,
    /// Sample count (default 20·(mq+p)).
    #[arg(long)]
    n: Option<usize>,
    /// Noise for the sampled responses.
    #[arg(long)]
    noise: Option<String>,
    /// Loss model whose curvature weights are probed.
    #[arg(long)]
    model: Option<String>,
    /// Neighborhood radius around the truth.
    #[arg(long)]
    c0: Option<f64>,
    /// Probe points on the radius-c0 sphere.
    #[arg(long)]
    n_probe: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckCurvatureOpts {
    /// Signal rows.
    #[arg(long)]
    m: Option<usize>,
    /// Signal columns.
    #[arg(long)]
    q: Option<usize>,
    /// Vector coefficient length.
    #[arg(long)]
    p: Option<usize>,
    /// Rank of the random anchor C*.
    #[arg(long)]
    r: Option<usize>,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckDescentOpts {
    #[command(flatten)]
    signal: SignalOpts,
    /// Sample count (default 20·(mq+p)).
    #[arg(long)]
    n: Option<usize>,
    /// Noise for the sampled responses.
    #[arg(long)]
    noise: Option<String>,
    /// Neighborhood radius (clamped to σ_r(C*)/2).
    #[arg(long)]
    c0: Option<f64>,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckRateOpts {
    #[command(flatten)]
    signal: SignalOpts,
    /// Rank constraint for the fits (default 1).
    #[arg(long)]
    rank: Option<usize>,
    /// Sample sizes, comma separated (default 250,500,1000,2000).
    #[arg(long)]
    n_list: Option<String>,
    /// Replications per sample size.
    #[arg(long)]
    reps: Option<usize>,
    /// Noise for the sampled responses.
    #[arg(long)]
    noise: Option<String>,
    /// Penalty weight used for every fit.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(opts) => commands::generate(opts),
        Command::Fit(opts) => commands::fit(opts),
        Command::Experiment(opts) => commands::experiment(opts),
        Command::Check(check) => match check {
            CheckCommand::Assumptions(opts) => commands::check_assumptions(opts),
            CheckCommand::Curvature(opts) => commands::check_curvature(opts),
            CheckCommand::Descent(opts) => commands::check_descent(opts),
            CheckCommand::Rate(opts) => commands::check_rate(opts),
        },
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// MATREG_THREADS sets the rayon pool size (rayon's own RAYON_NUM_THREADS
/// still applies when unset).
fn init_thread_pool() {
    if let Ok(val) = std::env::var("MATREG_THREADS") {
        match val.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid MATREG_THREADS='{val}'"),
        }
    }
}
