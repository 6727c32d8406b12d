//! `dvrp` command line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dvrp_core::synthetic::Layout;
use dvrp_core::{Algorithm, DvrpError};

#[derive(Parser, Debug)]
#[command(
    name = "dvrp",
    version,
    about = "Dynamic vehicle routing solvers and solver selection"
)]
pub struct Cli {
    /// TOML file with solver, feature and experiment settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print CSV instead of a text table.
    #[arg(long, global = true)]
    pub csv: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AlgoArg {
    Memso,
    #[value(name = "2mpso")]
    TwoMpso,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Memso => Algorithm::Memso,
            AlgoArg::TwoMpso => Algorithm::TwoMpso,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LayoutArg {
    Uniform,
    Clustered,
    Mixed,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Uniform => Layout::Uniform,
            LayoutArg::Clustered => Layout::Clustered,
            LayoutArg::Mixed => Layout::Mixed,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one working day with one solver.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Fitness evaluations for the whole day.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the configured number of time slices.
        #[arg(long)]
        slices: Option<usize>,
        /// Treat every request as known at the start of the day.
        #[arg(long = "static")]
        static_day: bool,
    },
    /// Print the ten selection features of an instance.
    Features { instance: PathBuf },
    /// Fit the selector on stored runs and save the model.
    Train {
        /// Directory of run files written by `bench`.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Instance files; defaults to the runs directory.
        #[arg(long)]
        instances: Option<PathBuf>,
        /// Precomputed features CSV instead of instance files.
        #[arg(long, conflicts_with = "instances")]
        features: Option<PathBuf>,
    },
    /// Pick a solver for an instance with a trained model.
    Select {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Leave-one-out selection experiment.
    Loocv {
        /// Directory of run files written by `bench`.
        #[arg(long, required_unless_present = "summary")]
        runs: Option<PathBuf>,
        /// Per-instance min/avg summary CSV instead of run files.
        #[arg(long, conflicts_with = "runs")]
        summary: Option<PathBuf>,
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Repeated runs of both solvers over a directory of instances.
    Bench {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value_t = 30)]
        runs_memso: usize,
        #[arg(long = "runs-2mpso", default_value_t = 20)]
        runs_two_mpso: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// First seed; run `i` uses `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where run files are appended; reruns resume from them.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Write a seeded synthetic instance.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        requests: usize,
        #[arg(long, value_enum, default_value = "mixed")]
        layout: LayoutArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        name: Option<String>,
        #[arg(long = "static")]
        static_day: bool,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<DvrpError>() {
            return match e {
                DvrpError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
                e if e.is_validation() => 2,
                _ => 3,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
    }
    3
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
