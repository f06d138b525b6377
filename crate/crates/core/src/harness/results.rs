use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{HarnessError, Regime, RunRecord};
use crate::networks::NetworkKind;
use crate::path_composer::DisruptionKind;

/// Column order of the per-run results file.
pub const RESULTS_HEADER: [&str; 12] = [
    "network",
    "regime",
    "base_length",
    "num_modules",
    "run",
    "seed",
    "train_error",
    "test_error_overall",
    "test_error_insertion",
    "test_error_substitution",
    "test_error_deletion",
    "failed",
];

/// One line of the results file. Per-kind rates are empty when the kind had no tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub network: NetworkKind,
    pub regime: Regime,
    pub base_length: usize,
    pub num_modules: usize,
    pub run: usize,
    pub seed: u64,
    pub train_error: f64,
    pub test_error_overall: f64,
    pub test_error_insertion: Option<f64>,
    pub test_error_substitution: Option<f64>,
    pub test_error_deletion: Option<f64>,
    pub failed: bool,
}

impl From<&RunRecord> for ResultRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            network: r.network,
            regime: r.regime,
            base_length: r.gen.base_length,
            num_modules: r.gen.num_modules,
            run: r.run,
            seed: r.seed,
            train_error: r.train_error,
            test_error_overall: r.test_error_overall,
            test_error_insertion: r.test_error(DisruptionKind::Insertion),
            test_error_substitution: r.test_error(DisruptionKind::Substitution),
            test_error_deletion: r.test_error(DisruptionKind::Deletion),
            failed: r.failed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TrainError,
    TestErrorOverall,
    TestErrorInsertion,
    TestErrorSubstitution,
    TestErrorDeletion,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::TrainError,
        Metric::TestErrorOverall,
        Metric::TestErrorInsertion,
        Metric::TestErrorSubstitution,
        Metric::TestErrorDeletion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TrainError => "train_error",
            Metric::TestErrorOverall => "test_error_overall",
            Metric::TestErrorInsertion => "test_error_insertion",
            Metric::TestErrorSubstitution => "test_error_substitution",
            Metric::TestErrorDeletion => "test_error_deletion",
        }
    }

    pub fn of(self, row: &ResultRow) -> Option<f64> {
        match self {
            Metric::TrainError => Some(row.train_error),
            Metric::TestErrorOverall => Some(row.test_error_overall),
            Metric::TestErrorInsertion => row.test_error_insertion,
            Metric::TestErrorSubstitution => row.test_error_substitution,
            Metric::TestErrorDeletion => row.test_error_deletion,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub network: NetworkKind,
    pub regime: Regime,
    pub base_length: usize,
    pub num_modules: usize,
}

impl GroupKey {
    pub fn of(row: &ResultRow) -> Self {
        Self {
            network: row.network,
            regime: row.regime,
            base_length: row.base_length,
            num_modules: row.num_modules,
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/base{}/modules{}/{}",
            self.regime, self.base_length, self.num_modules, self.network
        )
    }
}

/// Aggregate of one metric over the runs of one group. Failed runs count
/// towards `count` but not towards the statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub metric: Metric,
    pub count: usize,
    pub failed: usize,
    /// Values from successful runs, sorted ascending.
    pub samples: Vec<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1); 0 for a single value.
    pub stddev: Option<f64>,
}

fn summarize(key: GroupKey, metric: Metric, rows: &[&ResultRow]) -> GroupSummary {
    let mut samples: Vec<f64> = rows.iter().filter(|r| !r.failed).filter_map(|r| metric.of(r)).collect();
    // Sorting first makes the sums independent of run order.
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let mean = (n > 0).then(|| samples.iter().sum::<f64>() / n as f64);
    let stddev = mean.map(|m| {
        if n < 2 {
            0.0
        } else {
            (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    });
    GroupSummary {
        key,
        metric,
        count: rows.len(),
        failed: rows.iter().filter(|r| r.failed).count(),
        samples,
        mean,
        stddev,
    }
}

/// Per-run rows plus per-group, per-metric summaries, sorted by key then metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultsTable {
    /// Full records when the table came from a live experiment; empty when read from CSV.
    pub records: Vec<RunRecord>,
    pub rows: Vec<ResultRow>,
    pub groups: Vec<GroupSummary>,
}

impl ResultsTable {
    pub fn from_records(records: Vec<RunRecord>) -> Self {
        let rows = records.iter().map(ResultRow::from).collect();
        Self {
            records,
            ..Self::from_rows(rows)
        }
    }

    pub fn from_rows(rows: Vec<ResultRow>) -> Self {
        let mut keys: Vec<GroupKey> = rows.iter().map(GroupKey::of).collect();
        keys.sort();
        keys.dedup();
        let mut groups = Vec::with_capacity(keys.len() * Metric::ALL.len());
        for key in keys {
            let members: Vec<&ResultRow> = rows.iter().filter(|r| GroupKey::of(r) == key).collect();
            for metric in Metric::ALL {
                groups.push(summarize(key, metric, &members));
            }
        }
        Self {
            records: Vec::new(),
            rows,
            groups,
        }
    }

    pub fn group(&self, key: GroupKey, metric: Metric) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.key == key && g.metric == metric)
    }

    pub fn mean(&self, key: GroupKey, metric: Metric) -> Option<f64> {
        self.group(key, metric).and_then(|g| g.mean)
    }

    /// Distinct group keys in table order.
    pub fn keys(&self) -> Vec<GroupKey> {
        let mut k: Vec<GroupKey> = self.groups.iter().map(|g| g.key).collect();
        k.dedup();
        k
    }

    /// Distinct (base length, module count) pairs.
    pub fn configs(&self) -> Vec<(usize, usize)> {
        let mut c: Vec<(usize, usize)> = self.rows.iter().map(|r| (r.base_length, r.num_modules)).collect();
        c.sort();
        c.dedup();
        c
    }

    pub fn failed_runs(&self) -> usize {
        self.rows.iter().filter(|r| r.failed).count()
    }
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Results(e.to_string())
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Results(e.to_string()))
}

/// Reads a results file; the header must match exactly and at least one row must follow.
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(HarnessError::Results(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = r
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| HarnessError::Results(format!("row {}: {e}", i + 2))))
        .collect::<Result<Vec<ResultRow>, _>>()?;
    if rows.is_empty() {
        return Err(HarnessError::Results("no result rows".into()));
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Means and standard deviations per group and metric.
pub fn write_summary_csv<W: Write>(table: &ResultsTable, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "network",
        "regime",
        "base_length",
        "num_modules",
        "metric",
        "count",
        "failed",
        "mean",
        "stddev",
    ])
    .map_err(csv_err)?;
    for g in &table.groups {
        w.write_record([
            g.key.network.name().to_string(),
            g.key.regime.name().to_string(),
            g.key.base_length.to_string(),
            g.key.num_modules.to_string(),
            g.metric.name().to_string(),
            g.count.to_string(),
            g.failed.to_string(),
            opt(g.mean),
            opt(g.stddev),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Results(e.to_string()))
}

/// One row per bar: test-error metrics with a defined mean.
pub fn write_plot_csv<W: Write>(table: &ResultsTable, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "mean", "stddev"]).map_err(csv_err)?;
    for g in table.groups.iter().filter(|g| g.metric != Metric::TrainError) {
        if let (Some(m), Some(s)) = (g.mean, g.stddev) {
            w.write_record([format!("{}/{}", g.key, g.metric), m.to_string(), s.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| HarnessError::Results(e.to_string()))
}
