//! The `cbw` command-line tool.
//!
//! Exit status: 0 on success, 1 for usage, configuration and I/O errors, 2
//! when a trace cannot be analyzed (too few fringes, ambiguous period).

mod commands;
pub mod config;
pub mod phase;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cbw",
    version,
    about = "Simulate fringe-multiplying chains of Mach-Zehnder interferometers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form output intensities over a psi sweep, as CSV.
    Analytic(AnalyticArgs),
    /// Monte Carlo photon-counting scan, as trace CSV.
    Simulate(SimulateArgs),
    /// Full scan reproduction: trace CSVs, SVG plots and a JSON summary.
    Scan(ScanCmdArgs),
    /// Fringe statistics of a trace CSV, as JSON.
    Analyze(AnalyzeArgs),
    /// Phase-sensitivity scaling over a range of chain lengths, as JSON.
    Sensitivity(SensitivityArgs),
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// `key=value` file supplying defaults for any long option.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the simulation (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file, or directory for `scan`. Standard output if omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn phase_arg(text: &str) -> Result<f64, String> {
    phase::parse_phase(text)
}

#[derive(Debug, Clone, Args)]
struct ChainArgs {
    /// Number of cascaded interferometer stages.
    #[arg(long)]
    modules: Option<usize>,
    /// Control phase between stages: radians, `pi`, `pi/2`, `deg:90`, ...
    #[arg(long, value_parser = phase_arg, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Circuit file replacing the generated chain.
    #[arg(long, value_name = "FILE")]
    circuit: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct ScanArgs {
    /// Acquisition bins in the scan.
    #[arg(long)]
    points: Option<usize>,
    /// Scan duration in seconds (default: points x bin).
    #[arg(long)]
    duration: Option<f64>,
    /// Acquisition bin in seconds.
    #[arg(long)]
    bin: Option<f64>,
    /// PZT ramp start voltage.
    #[arg(long, allow_hyphen_values = true)]
    ramp_start: Option<f64>,
    /// PZT ramp end voltage.
    #[arg(long, allow_hyphen_values = true)]
    ramp_end: Option<f64>,
    /// Single-interferometer phase cycles across the full ramp.
    #[arg(long)]
    cycles: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CountingArg {
    Auto,
    PerWindow,
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoisePreset {
    /// Fitted table-top imperfections.
    Default,
    /// Ideal, noiseless setup.
    None,
}

#[derive(Debug, Clone, Args)]
struct SourceArgs {
    /// Mean photon number per coincidence window.
    #[arg(long)]
    mean_photons: Option<f64>,
    /// Coincidence window in seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Window counting strategy.
    #[arg(long, value_enum)]
    counting: Option<CountingArg>,
}

#[derive(Debug, Clone, Args)]
struct NoiseArgs {
    /// Noise preset that the options below modify.
    #[arg(long, value_enum)]
    noise: Option<NoisePreset>,
    /// Phase jitter standard deviation, radians.
    #[arg(long)]
    jitter_sigma: Option<f64>,
    /// Phase jitter correlation time, seconds.
    #[arg(long)]
    jitter_correlation: Option<f64>,
    /// Relative source intensity drift per bin.
    #[arg(long)]
    drift: Option<f64>,
    /// Dark counts per second per detector.
    #[arg(long)]
    dark_rate: Option<f64>,
    /// Detector efficiency.
    #[arg(long)]
    efficiency: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct AnalyticArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    modules: Option<usize>,
    #[arg(long, value_parser = phase_arg, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Sweep points, endpoints included.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_parser = phase_arg, allow_hyphen_values = true)]
    psi_start: Option<f64>,
    #[arg(long, value_parser = phase_arg, allow_hyphen_values = true)]
    psi_end: Option<f64>,
    /// Input intensity.
    #[arg(long)]
    intensity: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    scan: ScanArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScanMode {
    Photon,
    Classical,
    Both,
}

#[derive(Debug, Clone, Args)]
struct ScanCmdArgs {
    #[command(flatten)]
    sim: SimulateArgs,
    /// Which source to simulate.
    #[arg(long, value_enum)]
    mode: Option<ScanMode>,
    /// Extremum threshold as a fraction of each trace's range.
    #[arg(long)]
    prominence: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trace CSV to analyze.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Analyze only this column.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    prominence: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct SensitivityArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    m_min: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    /// Grid points over one single-interferometer period.
    #[arg(long)]
    grid: Option<usize>,
}

/// A failure carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Analysis(_) => EXIT_ANALYSIS,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Analysis(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<cbw_core::Error> for CliError {
    fn from(e: cbw_core::Error) -> Self {
        if e.is_analysis() {
            CliError::Analysis(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

/// Runs the tool on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            // Help and version go to stdout; usage errors to stderr.
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
