mod config;
mod demo;
mod error;
mod fuzz;
mod output;
mod sweep;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nmsparse::SparsityMode;

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nmsparse",
    version,
    about = "Dynamic N:M sparse attention toolkit"
)]
struct Cli {
    /// key=value file supplying defaults for flags not given on the command line
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fuzz compress/decompress, the tile layout and the container format
    RoundtripFuzz(FuzzArgs),
    /// Compress a seeded random matrix and write it as a container file
    Pack(PackArgs),
    /// Theoretical and empirical ticket quality per pattern and density
    QualitySweep(SweepArgs),
    /// Model speedups over sequence lengths, plus crossover points
    SpeedupTable(SpeedupArgs),
    /// Run sparse and full attention on seeded Gaussian inputs and compare
    AttnDemo(DemoArgs),
    /// Memory-access counts per attention stage
    Traffic(TrafficArgs),
}

#[derive(Debug, Args)]
struct FuzzArgs {
    /// 1:2 or 2:4; both when omitted
    #[arg(long)]
    mode: Option<SparsityMode>,
    #[arg(long, default_value_t = 1000)]
    iters: u64,
    #[arg(long, env = "NM_SPARSE_SEED", default_value_t = 0)]
    seed: u64,
    /// Validate this container file instead of fuzzing
    #[arg(long, value_name = "FILE")]
    container: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PackArgs {
    #[arg(long, default_value = "2:4")]
    mode: SparsityMode,
    #[arg(long, default_value_t = 32)]
    rows: usize,
    #[arg(long, default_value_t = 32)]
    cols: usize,
    #[arg(long, env = "NM_SPARSE_SEED", default_value_t = 0)]
    seed: u64,
    /// Store metadata in the tile-interleaved layout
    #[arg(long)]
    tiled: bool,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = nmsparse::theory::ANCHOR_P)]
    p: f64,
    /// Standard deviation of the attention scores
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25,0.5,0.75")]
    densities: Vec<f64>,
    /// Sequence length of each sampled attention matrix
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Attention matrices sampled per row of output
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, env = "NM_SPARSE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpeedupArgs {
    #[arg(long, default_value_t = 64.0)]
    d: f64,
    #[arg(long = "T", default_value_t = 128.0)]
    tile: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "256,512,672,1024,2048,4096,16384"
    )]
    n_list: Vec<f64>,
    /// Densities at which the top-k and fixed models are evaluated
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.045,0.1,0.5,0.63")]
    densities: Vec<f64>,
    /// Performer random features; round(d ln d) when omitted
    #[arg(long)]
    m: Option<f64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value = "1:2")]
    mode: SparsityMode,
    #[arg(long, default_value_t = 1)]
    heads: usize,
    #[arg(long, env = "NM_SPARSE_SEED", default_value_t = 0)]
    seed: u64,
    /// Write dense and sparse attention weights of every head as CSV here
    #[arg(long, value_name = "DIR")]
    dump_heatmaps: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TrafficKind {
    Full,
    Topk,
    Fixed,
    Nm,
    All,
}

#[derive(Debug, Args)]
struct TrafficArgs {
    #[arg(long, value_enum, default_value_t = TrafficKind::All)]
    kind: TrafficKind,
    #[arg(long, default_value_t = 1024.0)]
    n: f64,
    #[arg(long, default_value_t = 64.0)]
    d: f64,
    #[arg(long = "T", default_value_t = 128.0)]
    tile: f64,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RoundtripFuzz(a) => fuzz::run(&a),
        Command::Pack(a) => fuzz::pack(&a),
        Command::QualitySweep(a) => sweep::run(&a),
        Command::SpeedupTable(a) => tables::speedup(&a),
        Command::AttnDemo(a) => demo::run(&a),
        Command::Traffic(a) => tables::traffic(&a),
    }
}

fn main() -> ExitCode {
    let cli = match config::parse_with_config(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => return e.report(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
