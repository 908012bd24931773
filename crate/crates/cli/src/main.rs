//! `orbitcount`: lattice orbit counts, Haar volumes and ergodic averages
//! from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orbitcount_core::Error;

#[derive(Parser, Debug)]
#[command(name = "orbitcount", version, about = "Lattice orbit counting experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump every lattice element of norm below T, one per line.
    Enumerate(EnumerateArgs),
    /// Count orbit points in boundary regions over a grid of radii.
    Count(CountArgs),
    /// Haar volumes of norm balls in the Borel group.
    Volume(VolumeArgs),
    /// Invariant measures of the regions in a region file.
    Measure(MeasureArgs),
    /// Ergodic averages over Haar balls on the modular surface.
    Ergodic(ErgodicArgs),
    /// Re-render a stored count table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[arg(long)]
    n: usize,
    /// Strict norm bound.
    #[arg(long = "T")]
    t: f64,
    /// `full` or a congruence level q.
    #[arg(long, default_value = "full")]
    subgroup: String,
    /// Abort once more elements than this have been produced.
    #[arg(long)]
    ceiling: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CountArgs {
    /// Experiment file with `[experiment]` and `[region]` stanzas.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Ascending radii, comma or space separated.
    #[arg(long = "T-grid")]
    t_grid: Option<String>,
    #[arg(long)]
    subgroup: Option<String>,
    #[arg(long = "region-file")]
    region_file: Option<PathBuf>,
    /// Repeat for several basepoints.
    #[arg(long = "basepoint")]
    basepoints: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ceiling: Option<u64>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VolumeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "T-grid")]
    t_grid: String,
    /// Cone parameters; `-inf` gives the whole ball.
    #[arg(long = "C", default_value = "-inf", allow_hyphen_values = true)]
    c: String,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "region-file")]
    region_file: PathBuf,
    /// Monte Carlo samples for caps outside P^2.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ErgodicArgs {
    #[arg(long = "T-grid", default_value = "10 100 1000")]
    t_grid: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Samples for the reference integral; defaults to `--samples`.
    #[arg(long = "nu-samples")]
    nu_samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `re_min,re_max,im_min,im_max`.
    #[arg(long = "box", default_value = "-0.5,0.5,1,2", allow_hyphen_values = true)]
    region: String,
    /// `indicator` or `bump`.
    #[arg(long, default_value = "indicator")]
    function: String,
    /// `right` or `left`.
    #[arg(long, default_value = "right")]
    chirality: String,
    /// `identity` or a row-major matrix `a,b,c,d` of determinant 1.
    #[arg(long, default_value = "identity", allow_hyphen_values = true)]
    basepoint: String,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// CSV or JSON table written by `count`.
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Print the exponent fit and, with `--n`, covolume estimates to stderr.
    #[arg(long)]
    summary: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::Dimension { .. }
        | Error::InvalidInput(_)
        | Error::Parse { .. }
        | Error::VariantMismatch
        | Error::NotUnimodular { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = commands::init_threads(cli.threads).and_then(|()| match cli.command {
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Count(a) => commands::count(a, cli.threads),
        Command::Volume(a) => commands::volume(a),
        Command::Measure(a) => commands::measure(a),
        Command::Ergodic(a) => commands::ergodic(a),
        Command::Report(a) => commands::report(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
