mod commands;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use siftmatch_core::ThresholdMode;

use crate::error::{Category, CliError};
use crate::report::Engine;

#[derive(Debug, Parser)]
#[command(
    name = "siftmatch",
    version,
    about = "Cosine-angle SIFT descriptor matching and accelerator model"
)]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic query/database pair and its ground truth.
    Generate(GenerateArgs),
    /// Match a query file against a database file.
    Match(MatchArgs),
    /// Report verdict agreement between two engines or two match reports.
    Compare(CompareArgs),
    /// Attainable throughput against memory bandwidth, as CSV.
    Roofline(RooflineArgs),
    /// Exhaustive CORDIC arc-cosine error sweep, as CSV.
    Characterize(CharacterizeArgs),
    /// Modeled and wall-clock timing of the pipeline at reference-hardware sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    #[value(name = "binary_10011")]
    Binary10011,
    #[value(name = "exact_0_6")]
    Exact06,
}

impl From<Mode> for ThresholdMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Binary10011 => ThresholdMode::Binary10011,
            Mode::Exact06 => ThresholdMode::Exact0_6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetFormat {
    Binary,
    Text,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Descriptors per set.
    #[arg(short = 'm', long = "count")]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of queries planted as noisy copies of database entries.
    #[arg(long, default_value_t = 0.5)]
    match_fraction: f64,
    /// Standard deviation of the noise added to planted copies.
    #[arg(long = "noise", default_value_t = 0.02)]
    noise_sigma: f64,
    #[arg(short, long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = SetFormat::Binary)]
    format: SetFormat,
}

#[derive(Debug, Args)]
struct PipelineOptions {
    /// Clock frequency of the modeled core.
    #[arg(long, default_value_t = 100e6)]
    clock_hz: f64,
    /// Query descriptors per DES_MEM block.
    #[arg(long, default_value_t = 33)]
    block_size: usize,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(short, long)]
    queries: PathBuf,
    #[arg(short, long)]
    database: PathBuf,
    #[arg(short, long, value_enum, default_value_t = Engine::Pipeline)]
    engine: Engine,
    /// Ratio-test threshold. The pipeline engine supports only 0.6.
    #[arg(short, long, default_value_t = 0.6)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Mode::Binary10011)]
    threshold_mode: Mode,
    #[command(flatten)]
    pipeline: PipelineOptions,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long = "format", value_enum, default_value_t = OutputFormat::Json)]
    output_format: OutputFormat,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Query descriptors; with --database, runs both engines.
    #[arg(short, long, requires = "database")]
    queries: Option<PathBuf>,
    #[arg(short, long, requires = "queries")]
    database: Option<PathBuf>,
    /// A match report to compare; needs --right.
    #[arg(long, requires = "right")]
    left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    right: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Exact06)]
    threshold_mode: Mode,
    #[command(flatten)]
    pipeline: PipelineOptions,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RooflineArgs {
    /// Bandwidths in bytes per second, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "step"])]
    bandwidths: Vec<f64>,
    /// Range start in bytes per second.
    #[arg(long, requires_all = ["to", "step"])]
    from: Option<f64>,
    #[arg(long, requires_all = ["from", "step"])]
    to: Option<f64>,
    #[arg(long, requires_all = ["from", "to"])]
    step: Option<f64>,
    #[arg(long, default_value_t = 100e6)]
    clock_hz: f64,
    /// Bytes fetched per dot product.
    #[arg(long, default_value_t = 256)]
    descriptor_bytes: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long = "format", value_enum, default_value_t = OutputFormat::Csv)]
    output_format: OutputFormat,
}

#[derive(Debug, Args)]
struct CharacterizeArgs {
    #[arg(long, default_value_t = 37)]
    sqrt_iterations: u32,
    #[arg(long, default_value_t = 16)]
    polar_iterations: u32,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Query counts to run against the database.
    #[arg(long, value_delimiter = ',', default_values_t = [579usize, 638, 882, 1021])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1021)]
    database_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    pipeline: PipelineOptions,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Match(a) => commands::match_files(a),
        Command::Compare(a) => commands::compare(a),
        Command::Roofline(a) => commands::roofline(a),
        Command::Characterize(a) => commands::characterize(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            eprint!("{rendered}");
            return Category::Usage.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.category.exit_code()
        }
    }
}
