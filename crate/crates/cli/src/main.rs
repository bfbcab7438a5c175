//! `qgk`: estimates, Gram matrices, LS-SVM training and benchmark tables
//! from CSV datasets.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{EstimatorArgs, KernelArgs};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input; exit code 2.
    Input(String),
    /// Valid input the model cannot handle; exit code 3.
    Domain(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<qgk_core::Error> for CliError {
    fn from(e: qgk_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "qgk", version, about = "Swap-test Gaussian kernel simulator")]
struct Cli {
    /// Worker threads for pair-parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV dataset, one vector per row; `#` starts a comment.
    #[arg(long)]
    pub data: PathBuf,
    /// The first non-comment row is a header.
    #[arg(long)]
    pub header: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate Z, |x_i - x_j|^2 or x_i . x_j for one pair.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, group = "quantity")]
        dot: bool,
        #[arg(long, group = "quantity")]
        z: bool,
        #[arg(long, group = "quantity")]
        distance: bool,
        #[arg(short = 'i', default_value_t = 0)]
        i: usize,
        #[arg(short = 'j', default_value_t = 1)]
        j: usize,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Kernel matrix over every row of a dataset.
    Gram {
        #[command(flatten)]
        data: DataArgs,
        /// Matrix CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Also write the JSON report here (it is always printed).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Skip eigenvalue clipping.
        #[arg(long)]
        no_repair: bool,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// LS-SVM training, prediction and evaluation.
    #[command(subcommand)]
    Svm(SvmCommand),
    /// Growth series, error-scaling fits and cost tables.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand, Debug)]
pub enum SvmCommand {
    /// Train on a labelled CSV (last column ±1) and write the model JSON.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        /// Regularization; the system diagonal is K + I/gamma.
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Score unlabelled rows; prints `index,score,label` CSV.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// The input's last column is a label to ignore.
        #[arg(long)]
        labels: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy and confusion matrix on a labelled CSV.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GrowthChoice {
    Classical,
    Quantum,
}

#[derive(Subcommand, Debug)]
pub enum BenchCommand {
    /// Series terms N^d/d! or d.log2(N)/d! as CSV.
    Growth {
        #[arg(long, value_enum)]
        kind: GrowthChoice,
        #[arg(long = "N", alias = "n")]
        n: u64,
        #[arg(long, default_value_t = 40)]
        d_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RMSE of the dot estimate versus shots, with a log-log fit.
    Scaling {
        #[command(flatten)]
        data: DataArgs,
        #[arg(short = 'i', default_value_t = 0)]
        i: usize,
        #[arg(short = 'j', default_value_t = 1)]
        j: usize,
        /// Comma-separated shot counts.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        shot_grid: Vec<u64>,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Recorded versus modelled QRAM cost for every operation on one pair.
    Cost {
        #[command(flatten)]
        data: DataArgs,
        #[arg(short = 'i', default_value_t = 0)]
        i: usize,
        #[arg(short = 'j', default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        est: EstimatorArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Domain("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }
    match cli.command {
        Command::Estimate {
            data,
            dot,
            z,
            distance,
            i,
            j,
            est,
        } => {
            let quantity = match (dot, z, distance) {
                (_, true, _) => commands::Quantity::Z,
                (_, _, true) => commands::Quantity::DistanceSq,
                _ => commands::Quantity::Dot,
            };
            commands::estimate(&data, quantity, i, j, &est)
        }
        Command::Gram {
            data,
            out,
            report,
            no_repair,
            est,
            kernel,
        } => commands::gram(&data, &out, report.as_deref(), !no_repair, &est, &kernel),
        Command::Svm(cmd) => commands::svm(cmd),
        Command::Bench(cmd) => commands::bench(cmd),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
