//! Command-line front end for run-chain analysis.
//!
//! Exit codes: 0 success, 1 validation failure, 2 classification left
//! undetermined under `--strict`, 3 I/O error, 64 usage error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "runchain",
    version,
    about = "Upward and downward run Markov chains on posets: validate, analyze, reverse, simulate",
    max_term_width = 100
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Validate a poset file or generator, and optionally a kernel on it.
    Validate(ValidateArgs),
    /// Compute the standard invariant function and classification report.
    Invariant(AnalyzeArgs),
    /// Classify recurrence; with --strict, exit 2 when undetermined.
    Classify(AnalyzeArgs),
    /// Time-reverse a kernel (up → down or down → up).
    Reverse(ReverseArgs),
    /// Seeded excursion simulation, with optional occupancy estimation.
    Simulate(SimulateArgs),
    /// Closed forms for the homogeneous chain on the grid ℕ^k.
    GridDemo(GridDemoArgs),
    /// Closed forms for success-runs level parameters.
    LevelsDemo(LevelsDemoArgs),
    /// Expand the rooted tree of paths of a poset.
    Paths(PathsArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

/// Where the poset comes from: an explicit file or a named generator
/// (`grid:<k>`, `free:<letters>`, `tree:<file.json>`) enumerated to
/// `--depth`.
#[derive(Args, Clone)]
pub struct PosetSource {
    /// Poset file: {"elements": [...], "edges": [[from, to], ...]}.
    #[arg(long, value_name = "FILE")]
    pub poset: Option<PathBuf>,
    /// Built-in generator: grid:<k>, free:<letters> or tree:<file.json>.
    #[arg(long = "gen", value_name = "SPEC", conflicts_with = "poset")]
    pub generator: Option<String>,
    /// Enumeration depth for generators (ignored for explicit files).
    #[arg(long, default_value_t = 32)]
    pub depth: u32,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: PosetSource,
    /// Kernel file to validate on the poset.
    #[arg(long, value_name = "FILE")]
    pub kernel: Option<PathBuf>,
    /// Kernel direction, required with --kernel.
    #[arg(long, value_enum, requires = "kernel")]
    pub direction: Option<Direction>,
    /// Require positive mass on every legal target.
    #[arg(long)]
    pub strict: bool,
    /// Declared e-row mass beyond the enumerated region (downward kernels).
    #[arg(long, default_value_t = 0.0)]
    pub root_tail: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: PosetSource,
    #[arg(long, value_name = "FILE")]
    pub kernel: PathBuf,
    #[arg(long, value_enum, default_value = "up")]
    pub direction: Direction,
    /// Classification tolerance for certified tail bounds.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 0.0)]
    pub root_tail: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also export the invariant density table (label, f, F, r) as CSV;
    /// needs a positive-recurrent classification.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReverseArgs {
    #[command(flatten)]
    pub source: PosetSource,
    /// Kernel to reverse; either a bare rows map or a previous reverse
    /// output (its embedded kernel is used).
    #[arg(long, value_name = "FILE")]
    pub kernel: PathBuf,
    /// Direction of the INPUT kernel.
    #[arg(long, value_enum, default_value = "up")]
    pub direction: Direction,
    /// Reverse even when recurrence is not certified; the e-row may then be
    /// sub-stochastic.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 0.0)]
    pub root_tail: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: PosetSource,
    #[arg(long, value_name = "FILE")]
    pub kernel: PathBuf,
    #[arg(long, value_enum, default_value = "up")]
    pub direction: Direction,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub excursions: u64,
    /// Step limit per excursion before it counts as truncated.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: u64,
    /// Also estimate occupancy over one trajectory of this many steps.
    #[arg(long, default_value_t = 0)]
    pub steps: u64,
    /// Burn-in discarded from the occupancy trajectory.
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: u64,
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 0.0)]
    pub root_tail: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also export per-element hit estimates as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct GridDemoArgs {
    /// Dimension of the grid.
    #[arg(long)]
    pub k: usize,
    /// Comma-separated rates, one per coordinate, summing below 1.
    #[arg(long, value_name = "r1,r2,...")]
    pub rates: String,
    /// Grid point, comma-separated coordinates.
    #[arg(long, value_name = "x1,x2,...")]
    pub point: String,
    /// Enumeration depth used for the reversal cross-check.
    #[arg(long, default_value_t = 12)]
    pub depth: u32,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct LevelsDemoArgs {
    /// Explicit level-advance prefix α_0, α_1, ... (may be empty).
    #[arg(long, value_name = "a0,a1,...", default_value = "")]
    pub alpha: String,
    /// Tail descriptor: constant:<c>, power:<c>,<p> or undetermined.
    #[arg(long, value_name = "SPEC", default_value = "undetermined")]
    pub tail: String,
    /// How many levels of F̂ to evaluate.
    #[arg(long, default_value_t = 32)]
    pub depth: u32,
    #[arg(long)]
    pub strict: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PathsArgs {
    #[command(flatten)]
    pub source: PosetSource,
    /// Maximum path length to expand.
    #[arg(long, default_value_t = 6)]
    pub max_len: u32,
    /// Restrict the listing to paths ending at this element.
    #[arg(long, value_name = "LABEL")]
    pub element: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage problems exit 64; --help/--version exit 0.
            let code = if err.use_stderr() { 64 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
