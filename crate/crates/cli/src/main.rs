//! `taskcomp`: generate disrupted-path datasets, train and evaluate the four
//! learners, and run or summarize seeded experiment sweeps.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use taskcomp_core::harness::Regime;
use taskcomp_core::networks::NetworkKind;

#[derive(Parser, Debug)]
#[command(name = "taskcomp", version, about = "Behavior-module composition benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset and write it as text and JSON.
    Generate(GenerateArgs),
    /// Train one network under one regime and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset, optionally with a per-step trace.
    Eval(EvalArgs),
    /// Run a seeded sweep and write results, summary and plot-data CSVs.
    Experiment(ExperimentArgs),
    /// Summarize a results CSV and print the comparison findings.
    Report(ReportArgs),
}

/// Dataset shape flags shared by `generate` and `experiment`.
#[derive(Args, Debug, Clone)]
pub struct GenFlags {
    /// Modules (modular paths) per dataset.
    #[arg(long = "modules", value_delimiter = ',')]
    pub modules: Vec<usize>,
    /// Length of the base path.
    #[arg(long = "base-length", value_delimiter = ',')]
    pub base_length: Vec<usize>,
    #[arg(long = "module-min")]
    pub module_min: Option<usize>,
    #[arg(long = "module-max")]
    pub module_max: Option<usize>,
    /// Test paths per disruption kind.
    #[arg(long = "tests-per-type")]
    pub tests_per_type: Option<usize>,
    /// Number of distinct stimulus values and responses.
    #[arg(long)]
    pub alphabet: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub gen: GenFlags,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// JSON dataset config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset file (.json, or .txt in the text layout).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_network)]
    pub network: NetworkKind,
    #[arg(long, value_parser = parse_regime, default_value = "comprehensive")]
    pub regime: Regime,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub skew: Option<f64>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// Checkpoint path (default `<out-dir>/<network>-<regime>.ckpt.json`).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// JSON hyperparameter file; `--skew` overrides its skew.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Regime whose training paths are scored as the training set.
    #[arg(long, value_parser = parse_regime, default_value = "comprehensive")]
    pub regime: Regime,
    /// Print and write a per-step trace of every test path.
    #[arg(long)]
    pub trace: bool,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Networks to run (comma separated).
    #[arg(long = "network", alias = "networks", value_delimiter = ',', value_parser = parse_network)]
    pub networks: Vec<NetworkKind>,
    /// Regimes to run (comma separated).
    #[arg(long = "regime", alias = "regimes", value_delimiter = ',', value_parser = parse_regime)]
    pub regimes: Vec<Regime>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long = "master-seed")]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub skew: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Results CSV (default `<out-dir>/results.csv`).
    #[arg(long)]
    pub results: Option<PathBuf>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

fn parse_network(s: &str) -> Result<NetworkKind, String> {
    s.parse().map_err(|e: taskcomp_core::networks::NetworkError| e.to_string())
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse()
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config or a missing input file.
    Usage(String),
    /// Anything that goes wrong after the inputs were accepted.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Single line, so scripts can split on the first colon.
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        write!(f, "error[{kind}]: {}", msg.replace('\n', " "))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
