//! `harmonia`: experiment runner for Harmony annealing, tree morphing and
//! quantum Harmony checks.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 usage error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{parse_usize_list, CliError, UsizeList};

#[derive(Debug, Parser)]
#[command(name = "harmonia", version, about = "Harmony grammar experiments")]
struct Cli {
    /// Fill every unset hyperparameter with its calibrated value.
    #[arg(long, global = true)]
    paper_defaults: bool,
    /// Worker threads for trial fan-out.
    #[arg(long, global = true, env = "HARMONIA_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Anneal AⁿBⁿ herring-bone trees and report evaluation counts.
    AnnealAnbn(AnnealArgs),
    /// List every Harmony −1 subtree with the given leaves and depth.
    EnumTrees(EnumArgs),
    /// Morph random trees into grammatical ones and report move counts.
    MorphTree(MorphArgs),
    /// Compare the supervised gradient with finite differences.
    GradCheck(GradArgs),
    /// Compare the relative-entropy gradient with finite differences.
    RelentCheck(RelentArgs),
    /// Spectrum of the toric-code Harmony operator.
    Toric(ToricArgs),
    /// Spectral checks of the circuit family on single-gate diamonds.
    CircuitHarmony(CircuitArgs),
    /// Zeno-style measured sweeps through the circuit family.
    Zeno(ZenoArgs),
    /// Gradient-ascent training of a random supervised model.
    Train(TrainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleKind {
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RestartKind {
    /// Repetitions are consecutive stages of one schedule.
    Staged,
    /// Each repetition reruns the schedule from a fresh assignment.
    Fresh,
}

#[derive(Debug, Args)]
pub struct AnnealArgs {
    /// Depths, e.g. `4,16,64` or `2..64`.
    #[arg(long, value_parser = parse_usize_list)]
    n: Option<UsizeList>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Temperature steps per repetition, one sweep each.
    #[arg(long, default_value_t = 20)]
    sweeps: usize,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ScheduleKind::Geometric)]
    schedule: ScheduleKind,
    #[arg(long, value_enum, default_value_t = RestartKind::Staged)]
    restart: RestartKind,
    #[arg(long, default_value_t = harmonia_core::anneal::DEFAULT_T0)]
    t0: f64,
    #[arg(long, default_value_t = harmonia_core::anneal::DEFAULT_T_FINAL)]
    t_final: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumArgs {
    #[arg(long)]
    leaves: usize,
    #[arg(long)]
    depth: usize,
    /// Grammar file; the balanced-parentheses grammar by default.
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MorphArgs {
    #[arg(long)]
    leaves: usize,
    #[arg(long)]
    depth: usize,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Proposal budget per trial.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = harmonia_core::trees::DEFAULT_TABU_WINDOW)]
    tabu: usize,
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradArgs {
    #[arg(long, default_value_t = 1)]
    visible: usize,
    #[arg(long, default_value_t = 1)]
    hidden: usize,
    #[arg(long, default_value_t = 4)]
    terms: usize,
    #[arg(long, default_value_t = 2)]
    examples: usize,
    /// Random models to check.
    #[arg(long)]
    models: Option<usize>,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    #[arg(long, default_value_t = 1e4)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Dataset file; sizes then come from its header.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RelentArgs {
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[arg(long, default_value_t = 2)]
    terms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToricArgs {
    #[arg(long, default_value_t = 2)]
    rows: usize,
    #[arg(long, default_value_t = 2)]
    cols: usize,
    /// Open boundaries instead of a torus.
    #[arg(long)]
    open: bool,
    /// Also write the operator in the text dump format.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    /// Gate names: identity, cnot, cz, swap, hadamard.
    #[arg(long, value_delimiter = ',')]
    gates: Option<Vec<String>>,
    /// Number of evenly spaced points in [0, 1].
    #[arg(long)]
    s_grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZenoArgs {
    #[arg(long, default_value = "cnot")]
    gate: String,
    /// Measurement counts to compare, e.g. `4,64`.
    #[arg(long, value_parser = parse_usize_list)]
    r: Option<UsizeList>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid intervals for the failure bound.
    #[arg(long, default_value_t = 50)]
    bound_grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 1)]
    visible: usize,
    #[arg(long, default_value_t = 0)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    terms: usize,
    #[arg(long, default_value_t = 1)]
    examples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step is 1/L.
    #[arg(long, default_value_t = 4.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Shots per Hadamard test; 0 uses exact gradients.
    #[arg(long, default_value_t = 0)]
    samples: u64,
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> report::Result<bool> {
    if cli.jobs == 0 {
        return Err(report::usage("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| report::usage(e.to_string()))?;
    let paper = cli.paper_defaults;
    pool.install(|| {
        let (rep, out) = match cli.command {
            Command::AnnealAnbn(a) => (commands::anneal_anbn(&a, paper)?, a.out),
            Command::EnumTrees(a) => (commands::enum_trees(&a)?, a.out),
            Command::MorphTree(a) => (commands::morph_tree(&a, paper)?, a.out),
            Command::GradCheck(a) => (commands::grad_check(&a, paper)?, a.out),
            Command::RelentCheck(a) => (commands::relent_check(&a)?, a.out),
            Command::Toric(a) => (commands::toric(&a)?, a.out),
            Command::CircuitHarmony(a) => (commands::circuit_harmony(&a, paper)?, a.out),
            Command::Zeno(a) => (commands::zeno(&a, paper)?, a.out),
            Command::Train(a) => (commands::train(&a)?, a.out),
        };
        rep.emit(out.as_deref())?;
        Ok(rep.passed)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = run(cli);
    eprintln!("wall_time={:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
