use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::networks::{Hyperparams, Model, ModelSpec, NetworkKind};
use crate::numerics::{derive_seed, SeededRng};
use crate::path_composer::{generate_dataset, Dataset, DisruptionKind, GenConfig, Path, Stimulus};

/// Which paths a learner is trained on before testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Base path only.
    Baseline,
    /// Base path plus every module path.
    Comprehensive,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::Baseline, Regime::Comprehensive];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Baseline => "baseline",
            Regime::Comprehensive => "comprehensive",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn training_paths(self, ds: &Dataset) -> Vec<Path> {
        match self {
            Regime::Baseline => vec![ds.base().clone()],
            Regime::Comprehensive => ds.train.clone(),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown regime `{s}` (expected baseline or comprehensive)"))
    }
}

/// Error and step counts for one slice of the test set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTally {
    pub errors: usize,
    pub steps: usize,
    /// Paths with at least one wrong step.
    pub failed_paths: usize,
    pub paths: usize,
}

impl KindTally {
    /// `None` when the slice is empty.
    pub fn rate(&self) -> Option<f64> {
        (self.steps > 0).then(|| self.errors as f64 / self.steps as f64)
    }

    fn add(&mut self, other: &KindTally) {
        self.errors += other.errors;
        self.steps += other.steps;
        self.failed_paths += other.failed_paths;
        self.paths += other.paths;
    }
}

/// Per-step argmax scoring of a model on a dataset under a regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub train: KindTally,
    /// Indexed by [`DisruptionKind::index`].
    pub by_kind: [KindTally; 3],
}

impl Evaluation {
    pub fn overall(&self) -> KindTally {
        let mut t = KindTally::default();
        for k in &self.by_kind {
            t.add(k);
        }
        t
    }

    pub fn kind(&self, kind: DisruptionKind) -> KindTally {
        self.by_kind[kind.index()]
    }
}

fn tally(predicted: &[Vec<usize>], paths: &[&Path]) -> KindTally {
    let mut t = KindTally::default();
    for (pred, path) in predicted.iter().zip(paths) {
        let wrong = pred.iter().zip(&path.responses).filter(|(a, b)| a != b).count();
        t.errors += wrong;
        t.steps += path.len();
        t.paths += 1;
        t.failed_paths += usize::from(wrong > 0);
    }
    t
}

pub fn evaluate(model: &Model, ds: &Dataset, regime: Regime) -> Result<Evaluation, HarnessError> {
    let train = regime.training_paths(ds);
    let train_refs: Vec<&Path> = train.iter().collect();
    let train_pred = model.predict_batch(&model.encode(&train)?)?;
    let mut by_kind = [KindTally::default(); 3];
    for kind in DisruptionKind::ALL {
        let paths: Vec<Path> = ds.tests_of(kind).map(|c| c.path.clone()).collect();
        if paths.is_empty() {
            continue;
        }
        let pred = model.predict_batch(&model.encode(&paths)?)?;
        by_kind[kind.index()] = tally(&pred, &paths.iter().collect::<Vec<_>>());
    }
    Ok(Evaluation {
        train: tally(&train_pred, &train_refs),
        by_kind,
    })
}

/// One step of a per-path evaluation trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub stimulus: Stimulus,
    pub target: usize,
    pub predicted: usize,
    pub correct: bool,
}

pub fn step_trace(model: &Model, path: &Path) -> Result<Vec<StepTrace>, HarnessError> {
    let pred = model.predict_responses(path)?;
    Ok(path
        .steps()
        .zip(pred)
        .enumerate()
        .map(|(step, ((stimulus, target), predicted))| StepTrace {
            step,
            stimulus,
            target,
            predicted,
            correct: predicted == target,
        })
        .collect())
}

/// Outcome of one seeded train-and-test run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub network: NetworkKind,
    pub regime: Regime,
    pub gen: GenConfig,
    pub run: usize,
    pub seed: u64,
    pub epochs: usize,
    pub evaluation: Evaluation,
    pub train_error: f64,
    pub test_error_overall: f64,
    pub test_error_by_kind: [Option<f64>; 3],
    /// Fraction of test paths with at least one wrong step.
    pub path_failure_rate: f64,
    pub final_loss: Option<f64>,
    pub failed: bool,
    /// Epoch whose update hit a non-finite value.
    pub failed_epoch: Option<usize>,
    pub failure: Option<String>,
    pub wall_time_secs: f64,
}

impl RunRecord {
    pub fn test_error(&self, kind: DisruptionKind) -> Option<f64> {
        self.test_error_by_kind[kind.index()]
    }

    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        let strip = |r: &RunRecord| RunRecord {
            wall_time_secs: 0.0,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

/// Stream for the model initializer, kept apart from the dataset draw.
const MODEL_STREAM: u64 = 1;

/// Generator for initializing the model of the run seeded with `seed`.
pub fn model_rng(seed: u64) -> SeededRng {
    SeededRng::new(derive_seed(seed, MODEL_STREAM))
}

/// Generates a dataset from `seed`, trains `kind` on the regime's paths for
/// `epochs` full-batch steps and scores it. Non-finite training values mark
/// the record failed instead of returning an error.
pub fn run_single(
    kind: NetworkKind,
    regime: Regime,
    gen: &GenConfig,
    epochs: usize,
    seed: u64,
    hp: &Hyperparams,
) -> Result<RunRecord, HarnessError> {
    let started = Instant::now();
    let gen = GenConfig { seed, ..gen.clone() };
    let ds = generate_dataset(&gen)?;
    let spec = ModelSpec::for_dataset(kind, &gen, hp);
    let mut model = Model::build(spec, &mut model_rng(seed))?;
    let batch = model.encode(&regime.training_paths(&ds))?;

    let mut final_loss = None;
    let mut failed_epoch = None;
    let mut failure = None;
    for epoch in 0..epochs {
        match model.train_step(&batch) {
            Ok(l) => final_loss = Some(l),
            Err(e) => {
                failed_epoch = Some(epoch);
                failure = Some(e.to_string());
                break;
            }
        }
    }

    let evaluation = evaluate(&model, &ds, regime)?;
    let overall = evaluation.overall();
    Ok(RunRecord {
        network: kind,
        regime,
        run: 0,
        seed,
        epochs,
        train_error: evaluation.train.rate().unwrap_or(0.0),
        test_error_overall: overall.rate().unwrap_or(0.0),
        test_error_by_kind: DisruptionKind::ALL.map(|k| evaluation.kind(k).rate()),
        path_failure_rate: if overall.paths > 0 {
            overall.failed_paths as f64 / overall.paths as f64
        } else {
            0.0
        },
        final_loss,
        failed: failed_epoch.is_some(),
        failed_epoch,
        failure,
        evaluation,
        gen,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Hyperparams {
        Hyperparams {
            mlp_hidden: vec![16],
            lstm_units: 8,
            tcn_filters: 8,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn regimes_select_training_paths() {
        let ds = generate_dataset(&GenConfig::default()).unwrap();
        assert_eq!(Regime::Baseline.training_paths(&ds), vec![ds.base().clone()]);
        assert_eq!(Regime::Comprehensive.training_paths(&ds).len(), 6);
        assert_eq!("Baseline".parse::<Regime>().unwrap(), Regime::Baseline);
        assert!("full".parse::<Regime>().is_err());
    }

    #[test]
    fn per_kind_counts_sum_to_overall() {
        let gen = GenConfig {
            tests_per_type: crate::path_composer::TestCounts {
                insertion: 3,
                substitution: 1,
                deletion: 2,
            },
            ..GenConfig::default()
        };
        for kind in NetworkKind::ALL {
            let r = run_single(kind, Regime::Comprehensive, &gen, 5, 11, &small()).unwrap();
            let overall = r.evaluation.overall();
            let errors: usize = r.evaluation.by_kind.iter().map(|t| t.errors).sum();
            let steps: usize = r.evaluation.by_kind.iter().map(|t| t.steps).sum();
            assert_eq!(overall.errors, errors);
            assert_eq!(overall.steps, steps);
            assert_eq!(r.evaluation.by_kind.iter().map(|t| t.paths).collect::<Vec<_>>(), vec![3, 1, 2]);
            assert_eq!(r.test_error_overall, errors as f64 / steps as f64);
            for rate in [r.train_error, r.test_error_overall, r.path_failure_rate] {
                assert!((0.0..=1.0).contains(&rate));
            }
        }
    }

    #[test]
    fn empty_kind_has_no_rate() {
        let gen = GenConfig {
            tests_per_type: crate::path_composer::TestCounts {
                insertion: 2,
                substitution: 0,
                deletion: 0,
            },
            ..GenConfig::default()
        };
        let r = run_single(NetworkKind::Tdnn, Regime::Baseline, &gen, 1, 0, &small()).unwrap();
        assert!(r.test_error(DisruptionKind::Insertion).is_some());
        assert_eq!(r.test_error(DisruptionKind::Substitution), None);
        assert_eq!(r.test_error(DisruptionKind::Deletion), None);
    }

    #[test]
    fn zero_epochs_scores_the_untrained_model() {
        let r = run_single(NetworkKind::Lstm, Regime::Comprehensive, &GenConfig::default(), 0, 3, &small()).unwrap();
        assert_eq!(r.final_loss, None);
        assert!(!r.failed);
        assert!((0.0..=1.0).contains(&r.train_error));
    }

    #[test]
    fn trace_marks_each_step() {
        let ds = generate_dataset(&GenConfig::default()).unwrap();
        let spec = ModelSpec::for_dataset(NetworkKind::Tcn, &ds.config, &small());
        let model = Model::build(spec, &mut SeededRng::new(0)).unwrap();
        let path = &ds.test[0].path;
        let trace = step_trace(&model, path).unwrap();
        assert_eq!(trace.len(), path.len());
        for (t, s) in trace.iter().enumerate() {
            assert_eq!(s.step, t);
            assert_eq!(s.target, path.responses[t]);
            assert_eq!(s.correct, s.predicted == s.target);
        }
    }
}
