use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::{Format, Report};

#[derive(Parser)]
#[command(
    name = "racsim",
    version,
    about = "Random access code and Bell-expression simulator"
)]
struct Cli {
    /// Worker threads for parallel sections; results do not depend on it.
    #[arg(long, global = true, env = "RACSIM_WORKERS")]
    workers: Option<usize>,

    #[arg(long, global = true, value_enum, default_value = "jsonl")]
    format: Format,

    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical codes: exhaustive strategy search or the closed-form optimum.
    Classical(ClassicalArgs),
    /// Classical bound, quantum maximum and margins for n = 1..n-max.
    Bounds(BoundsArgs),
    /// Single-stage quantum codes for n = 2, 3.
    Quantum(QuantumArgs),
    /// Shot-level interferometer sampling.
    Mzi(MziArgs),
    /// Concatenated codes from 2- and 3-bit subunits.
    Concat(ConcatArgs),
    /// Every reference number in one table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassicalMode {
    Enumerate,
    Formula,
}

#[derive(Args)]
pub struct ClassicalArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "enumerate")]
    pub mode: ClassicalMode,
    /// Permit the 4-bit enumeration (about 1.7e7 strategies).
    #[arg(long)]
    pub allow_large: bool,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=30))]
    pub n_max: u64,
}

#[derive(Args)]
pub struct QuantumArgs {
    #[arg(long)]
    pub n: usize,
    /// JSON file `{"alice": [[x,y,z], ...], "bob": [[x,y,z], ...]}`.
    #[arg(long)]
    pub bases: Option<PathBuf>,
    /// Run the multi-start seesaw search.
    #[arg(long, requires = "seed")]
    pub maximize: bool,
    #[arg(long, default_value_t = 100)]
    pub starts: usize,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Readout {
    Steered,
    Direct,
}

#[derive(Args)]
pub struct MziArgs {
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    /// JSONL settings, one `{"i","j","theta","phi","spin_axis"}` per line.
    #[arg(long)]
    pub settings_file: Option<PathBuf>,
    /// Amplitude of the spin-flipped branch.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub a: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub b: f64,
    /// Phase shifter PS1 in radians.
    #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "steered")]
    pub readout: Readout,
    /// Write the per-shot event log (JSONL) here.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Write the per-setting detector tallies (JSONL) here.
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Analytic,
    Born,
    Mzi,
}

#[derive(Args)]
pub struct ConcatArgs {
    /// Input bits; padded to the next 2^k 3^j size when needed.
    #[arg(long, required_unless_present = "tree")]
    pub n: Option<usize>,
    /// Explicit scheme such as `[2,[2,·,·],[2,·,·]]`.
    #[arg(long)]
    pub tree: Option<String>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 200_000)]
    pub shots: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1-based bit index or `all`.
    #[arg(long, default_value = "all")]
    pub query: String,
    /// Input string such as `0110`; defaults to alternating `1010...`.
    #[arg(long)]
    pub input: Option<String>,
    /// Place input bits on padded leaves by a seeded permutation.
    #[arg(long, requires = "seed")]
    pub shared_permutation: bool,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Run every check (the default and only mode).
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub seed: u64,
    /// Shots per setting for the interferometer checks.
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
}

fn run(cli: Cli) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().context("building worker pool")?;
    pool.install(|| match &cli.command {
        Command::Classical(a) => commands::classical(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Quantum(a) => commands::quantum(a),
        Command::Mzi(a) => commands::mzi(a),
        Command::Concat(a) => commands::concat(a),
        Command::Report(a) => commands::report(a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, path) = (cli.format, cli.output.clone());
    let report = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.write(format, path.as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
