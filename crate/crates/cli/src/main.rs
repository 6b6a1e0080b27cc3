//! `formctl`: command-line front end for formation controllability analysis.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "formctl",
    version,
    about = "Controllability of multi-agent formations on digraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strong component decomposition and structural verdict.
    Analyze(AnalyzeArgs),
    /// Transitive closure and the Lie closure of the edge generators.
    Closure(ClosureArgs),
    /// Lie algebra rank condition at a configuration.
    Larc(LarcArgs),
    /// Explicit basis of the tangent space built from closure edges.
    Witness(WitnessArgs),
    /// Local chart of a rank stratum around a configuration.
    Chart(ChartArgs),
    /// Integrate the formation dynamics under piecewise-constant controls.
    Simulate(SimulateArgs),
    /// Find controls driving one configuration to another.
    Steer(SteerArgs),
    /// Follow a path of waypoints within a tolerance.
    Track(TrackArgs),
    /// Seeded random configurations and graphs.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Write the machine-readable result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the machine-readable result.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Ambient dimension.
    #[arg(long = "n")]
    pub dim: usize,
    /// Also report membership of this configuration in Q.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ClosureArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct LarcArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Relative singular value threshold for numeric rank.
    #[arg(long, default_value_t = formctl_core::RANK_TOLERANCE)]
    pub tol: f64,
    /// Cross-check the rank against the stacked fields and the exact closure.
    #[arg(long)]
    pub debug_slow_path: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ChartArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Stratum rank; defaults to the rank of the configuration.
    #[arg(long)]
    pub k: Option<usize>,
    /// Configuration to express in the chart; defaults to the center.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ScheduleArgs {
    /// Fixed interaction graph.
    #[arg(
        long,
        conflicts_with = "schedule",
        required_unless_present = "schedule"
    )]
    pub graph: Option<PathBuf>,
    /// Switching graph schedule (JSON list of {"t", "graph"}).
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Initial configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Control schedule CSV; zero controls when absent.
    #[arg(long)]
    pub controls: Option<PathBuf>,
    /// Sampling step; defaults to T/100.
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SteerArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Initial configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Goal configuration.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub segments: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Residual at which a start counts as converged.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// JSON list of {"t", "config"} where config is a path or an inline object.
    #[arg(long)]
    pub waypoints: PathBuf,
    /// Starting configuration; defaults to the first waypoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Control segments per leg.
    #[arg(long, default_value_t = 2)]
    pub segments: usize,
    /// Intermediate targets per leg.
    #[arg(long, default_value_t = 1)]
    pub substeps: usize,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleTarget {
    Config,
    Graph,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "config")]
    pub kind: SampleTarget,
    /// Ambient dimension (configurations).
    #[arg(long = "n", default_value_t = 2)]
    pub dim: usize,
    /// Number of agents or vertices.
    #[arg(long)]
    pub agents: usize,
    /// Rank of the sampled configuration; uniform when absent.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Edge probability (graphs).
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Closure(a) => commands::closure(a),
        Command::Larc(a) => commands::larc(a),
        Command::Witness(a) => commands::witness(a),
        Command::Chart(a) => commands::chart(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Steer(a) => commands::steer(a),
        Command::Track(a) => commands::track(a),
        Command::Sample(a) => commands::sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_format_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
