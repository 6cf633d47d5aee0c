use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tilesa", version, about = "Tile self-assembly simulation and concentration tuning")]
pub struct Cli {
    /// Worker threads for batch runs. Defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of kinetic simulations and report errors per run.
    Simulate(SimulateArgs),
    /// Sweep the X:Y concentration ratio and report error rates.
    Experiment(ExperimentArgs),
    /// Concentrations that minimize the expected number of growth errors.
    Optimize(OptimizeArgs),
    /// Monte Carlo estimate of the expected assembly time.
    EstimateTime(EstimateTimeArgs),
    /// Print the terminal assembly as a text grid.
    Terminal(TerminalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Kinetics {
    /// Free energy of a strength-1 bond.
    #[arg(long)]
    pub gse: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub kf: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kr: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(flatten)]
    pub kinetics: Kinetics,
    /// Tile concentration as NAME=VALUE. Repeat for each tile. Without any,
    /// growth tiles share `--ctotal` equally.
    #[arg(long = "conc", value_parser = parse_conc)]
    pub conc: Vec<(String, f64)>,
    #[arg(long, default_value_t = (-16f64).exp())]
    pub ctotal: f64,
    /// Event budget per run. Defaults to 50 times the footprint size.
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub time_cap: Option<f64>,
    /// Allow attachments that match no glue.
    #[arg(long)]
    pub allow_zero_bond: bool,
    /// Write every event of every run to this file.
    #[arg(long)]
    pub events_log: Option<PathBuf>,
    /// Exit 0 even if some runs stop on the budget or time cap.
    #[arg(long)]
    pub allow_truncated: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// A1, A2, B1, B2, chain or fanout.
    #[arg(long, required_unless_present = "system", conflicts_with = "system")]
    pub builtin: Option<String>,
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Growth height override for the A and B builtins.
    #[arg(long, requires = "builtin")]
    pub height: Option<usize>,
    /// Length of the chain builtin or number of fan-out positions.
    #[arg(long, requires = "builtin")]
    pub length: Option<usize>,
    /// Write the system in file format to this path before sweeping.
    #[arg(long)]
    pub emit_system: Option<PathBuf>,
    /// Values of c_X / c_Y.
    #[arg(long, value_delimiter = ',', default_value = "1,2.5,5,7.5,10")]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(flatten)]
    pub kinetics: Kinetics,
    /// c_X + c_Y.
    #[arg(long, default_value_t = (-16f64).exp())]
    pub ctotal: f64,
    #[arg(long, default_value_t = 50_000_000)]
    pub max_events: u64,
    #[arg(long)]
    pub allow_zero_bond: bool,
    #[arg(long)]
    pub allow_truncated: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[command(flatten)]
    pub kinetics: Kinetics,
    /// Tile concentration scale used for the error model (c_min = c_max).
    #[arg(long, default_value_t = (-16f64).exp())]
    pub conc_scale: f64,
    /// Lock-in rate. Defaults to 2 kf c_max.
    #[arg(long)]
    pub r: Option<f64>,
    /// Also run the numeric minimizer from the uniform vector.
    #[arg(long)]
    pub numeric: bool,
    /// Box bounds on each relative concentration as LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub bounds: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct EstimateTimeArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, conflicts_with = "eps")]
    pub runs: Option<u64>,
    /// Target accuracy; the run count is planned from the depth bound.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(flatten)]
    pub kinetics: Kinetics,
    /// Tile concentration as NAME=VALUE. Without any, growth tiles share a
    /// total of 1 equally.
    #[arg(long = "conc", value_parser = parse_conc)]
    pub conc: Vec<(String, f64)>,
    /// Run the full kinetic model instead of error-free irreversible growth.
    #[arg(long)]
    pub kinetic: bool,
    /// With --kinetic, accept runs that finish with wrong tiles.
    #[arg(long, requires = "kinetic")]
    pub ignore_errors: bool,
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub time_cap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TerminalArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = 4_000_000)]
    pub max_positions: usize,
}

fn parse_conc(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value: f64 = value.parse().map_err(|e| format!("bad concentration '{value}': {e}"))?;
    if name.is_empty() {
        return Err("empty tile name".into());
    }
    Ok((name.to_string(), value))
}
