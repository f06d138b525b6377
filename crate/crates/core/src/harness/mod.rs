//! Experiment protocol: train each learner under a regime, score it on the
//! disrupted test paths, and aggregate seeded runs into comparable tables.

mod compare;
mod experiment;
mod results;
mod run;

pub use compare::{compare, mann_whitney, ConfigFindings, Findings, PairTest, RankEntry, RankTest, RegimeDelta, ALPHA};
pub use experiment::{run_experiment, run_seed, ExperimentConfig, RunCoord};
pub use results::{
    read_results_csv, write_plot_csv, write_results_csv, write_summary_csv, GroupKey, GroupSummary, Metric,
    ResultRow, ResultsTable,
};
pub use run::{evaluate, model_rng, run_single, step_trace, Evaluation, KindTally, Regime, RunRecord, StepTrace};

use thiserror::Error;

use crate::networks::NetworkError;
use crate::path_composer::ComposeError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] ComposeError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("missing results group: {0}")]
    MissingGroup(String),
    #[error("results file: {0}")]
    Results(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
