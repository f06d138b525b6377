use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{GroupKey, HarnessError, Metric, Regime, ResultsTable};
use crate::networks::NetworkKind;

/// Significance level for the rank tests.
pub const ALPHA: f64 = 0.05;

/// Two-sided Mann–Whitney U test, normal approximation with tie and continuity corrections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    /// U statistic of the first sample.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
    pub significant: bool,
}

pub fn mann_whitney(x: &[f64], y: &[f64]) -> Option<RankTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return None;
    }
    let mut all: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // positions i..=j share the midrank
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_x += mid * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_x - f1 * (f1 + 1.0) / 2.0;
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let (z, p) = if var > 0.0 {
        let diff = u - mean;
        let corrected = (diff.abs() - 0.5).max(0.0) * diff.signum();
        let z = corrected / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (z, (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0))
    } else {
        (0.0, 1.0)
    };
    Some(RankTest {
        u,
        z,
        p_value: p,
        significant: p < ALPHA,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub network: NetworkKind,
    /// Competition rank: equal means share a rank (1, 1, 3, ...).
    pub rank: usize,
    pub mean: f64,
    pub tied: bool,
}

/// Baseline minus comprehensive mean test error for one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeDelta {
    pub network: NetworkKind,
    pub baseline_mean: f64,
    pub comprehensive_mean: f64,
    pub delta: f64,
    /// Comprehensive samples against baseline samples.
    pub test: Option<RankTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: NetworkKind,
    pub b: NetworkKind,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: Option<RankTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigFindings {
    pub base_length: usize,
    pub num_modules: usize,
    /// Networks by mean comprehensive test error, best first.
    pub ranking: Vec<RankEntry>,
    pub all_tied: bool,
    pub deltas: Vec<RegimeDelta>,
    /// Comprehensive-regime comparisons for every pair of networks.
    pub pairwise: Vec<PairTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Findings {
    pub configs: Vec<ConfigFindings>,
}

impl Findings {
    /// Human-readable report, one finding per line.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.configs {
            let head = format!("base={} modules={}", c.base_length, c.num_modules);
            let ranking: Vec<String> = c
                .ranking
                .iter()
                .map(|r| format!("{}.{}{} ({:.4})", r.rank, r.network, if r.tied { "=" } else { "" }, r.mean))
                .collect();
            out.push(format!(
                "{head} ranking{}: {}",
                if c.all_tied { " (all tied)" } else { "" },
                ranking.join(" ")
            ));
            for d in &c.deltas {
                out.push(format!(
                    "{head} {} baseline={:.4} comprehensive={:.4} delta={:+.4}{}",
                    d.network,
                    d.baseline_mean,
                    d.comprehensive_mean,
                    d.delta,
                    fmt_test(d.test)
                ));
            }
            for p in &c.pairwise {
                out.push(format!(
                    "{head} {} vs {}: {:.4} vs {:.4}{}",
                    p.a,
                    p.b,
                    p.mean_a,
                    p.mean_b,
                    fmt_test(p.test)
                ));
            }
        }
        out
    }
}

fn fmt_test(t: Option<RankTest>) -> String {
    match t {
        Some(t) => format!(
            " U={} z={:.3} p={:.4}{}",
            t.u,
            t.z,
            t.p_value,
            if t.significant { " significant" } else { "" }
        ),
        None => String::new(),
    }
}

/// Per sweep config: ranking by mean comprehensive test error, the
/// baseline-vs-comprehensive delta per network, and pairwise rank tests.
/// Every network with results must have a usable mean in both regimes.
pub fn compare(table: &ResultsTable) -> Result<Findings, HarnessError> {
    let metric = Metric::TestErrorOverall;
    let mut configs = Vec::new();
    for (base_length, num_modules) in table.configs() {
        let mut networks: Vec<NetworkKind> = table
            .keys()
            .into_iter()
            .filter(|k| k.base_length == base_length && k.num_modules == num_modules)
            .map(|k| k.network)
            .collect();
        networks.dedup();
        let key = |network, regime| GroupKey {
            network,
            regime,
            base_length,
            num_modules,
        };
        let fetch = |network, regime| {
            let k = key(network, regime);
            table
                .group(k, metric)
                .filter(|g| g.mean.is_some())
                .ok_or_else(|| HarnessError::MissingGroup(format!("{k} has no successful runs")))
        };

        let mut means = Vec::new();
        let mut deltas = Vec::new();
        for &n in &networks {
            let c = fetch(n, Regime::Comprehensive)?;
            let b = fetch(n, Regime::Baseline)?;
            let (cm, bm) = (c.mean.unwrap_or_default(), b.mean.unwrap_or_default());
            means.push((n, cm, c.samples.clone()));
            deltas.push(RegimeDelta {
                network: n,
                baseline_mean: bm,
                comprehensive_mean: cm,
                delta: bm - cm,
                test: mann_whitney(&c.samples, &b.samples),
            });
        }

        let mut order = means.clone();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let ranking: Vec<RankEntry> = order
            .iter()
            .map(|(n, m, _)| RankEntry {
                network: *n,
                rank: 1 + order.iter().filter(|o| o.1 < *m).count(),
                mean: *m,
                tied: order.iter().filter(|o| o.1 == *m).count() > 1,
            })
            .collect();
        let all_tied = ranking.len() > 1 && ranking.iter().all(|r| r.rank == 1);

        let mut pairwise = Vec::new();
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                let (a, b) = (&means[i], &means[j]);
                pairwise.push(PairTest {
                    a: a.0,
                    b: b.0,
                    mean_a: a.1,
                    mean_b: b.1,
                    test: mann_whitney(&a.2, &b.2),
                });
            }
        }
        configs.push(ConfigFindings {
            base_length,
            num_modules,
            ranking,
            all_tied,
            deltas,
            pairwise,
        });
    }
    if configs.is_empty() {
        return Err(HarnessError::MissingGroup("table has no results".into()));
    }
    Ok(Findings { configs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ResultRow;

    fn row(network: NetworkKind, regime: Regime, run: usize, err: f64) -> ResultRow {
        ResultRow {
            network,
            regime,
            base_length: 10,
            num_modules: 5,
            run,
            seed: 0,
            train_error: 0.0,
            test_error_overall: err,
            test_error_insertion: None,
            test_error_substitution: None,
            test_error_deletion: None,
            failed: false,
        }
    }

    // Reference values from scipy.stats.mannwhitneyu(method="asymptotic", use_continuity=True).
    #[test]
    fn mann_whitney_matches_reference_values() {
        let t = mann_whitney(&[0.1, 0.2, 0.2, 0.4, 0.5], &[0.3, 0.6, 0.7, 0.2, 0.9]).unwrap();
        assert_eq!(t.u, 5.0);
        assert!((t.p_value - 0.13879173842360976).abs() < 1e-9, "{t:?}");
        assert!(!t.significant);

        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y: Vec<f64> = (11..=20).map(f64::from).collect();
        let t = mann_whitney(&x, &y).unwrap();
        assert_eq!(t.u, 0.0);
        assert!((t.p_value - 0.00018267179110955002).abs() < 1e-9);
        assert!(t.significant && t.z < 0.0);

        let t = mann_whitney(&[0.5; 4], &[0.5; 3]).unwrap();
        assert_eq!((t.u, t.p_value), (6.0, 1.0));
        assert!(mann_whitney(&[], &[1.0]).is_none());
    }

    #[test]
    fn equal_rates_tie_everywhere() {
        let rows: Vec<ResultRow> = NetworkKind::ALL
            .iter()
            .flat_map(|&n| Regime::ALL.map(|r| (n, r)))
            .flat_map(|(n, r)| (0..3).map(move |i| row(n, r, i, 0.25)))
            .collect();
        let f = compare(&ResultsTable::from_rows(rows)).unwrap();
        let c = &f.configs[0];
        assert!(c.all_tied);
        assert!(c.ranking.iter().all(|r| r.rank == 1 && r.tied));
        assert!(c.deltas.iter().all(|d| d.delta == 0.0));
        assert!(c.pairwise.iter().all(|p| !p.test.unwrap().significant));
        assert_eq!(c.pairwise.len(), 6);
    }

    #[test]
    fn ranking_matches_hand_computation() {
        // comprehensive means: tdnn 0.5, lstm 0.125, tcn 0.5, morphognosis 0.0625
        let comp = [
            (NetworkKind::Tdnn, [0.25, 0.75]),
            (NetworkKind::Lstm, [0.125, 0.125]),
            (NetworkKind::Tcn, [0.5, 0.5]),
            (NetworkKind::Morphognosis, [0.0, 0.125]),
        ];
        let mut rows = Vec::new();
        for (n, errs) in comp {
            for (i, e) in errs.into_iter().enumerate() {
                rows.push(row(n, Regime::Comprehensive, i, e));
                rows.push(row(n, Regime::Baseline, i, 0.75));
            }
        }
        let f = compare(&ResultsTable::from_rows(rows)).unwrap();
        let c = &f.configs[0];
        let got: Vec<(NetworkKind, usize, bool)> = c.ranking.iter().map(|r| (r.network, r.rank, r.tied)).collect();
        assert_eq!(
            got,
            vec![
                (NetworkKind::Morphognosis, 1, false),
                (NetworkKind::Lstm, 2, false),
                (NetworkKind::Tdnn, 3, true),
                (NetworkKind::Tcn, 3, true),
            ]
        );
        let lstm = c.deltas.iter().find(|d| d.network == NetworkKind::Lstm).unwrap();
        assert_eq!(lstm.delta, 0.625);
        assert!(!c.all_tied);
        assert!(f.lines().iter().any(|l| l.contains("ranking: 1.morphognosis")));
    }

    #[test]
    fn missing_regime_is_reported() {
        let rows = vec![row(NetworkKind::Lstm, Regime::Comprehensive, 0, 0.1)];
        assert!(matches!(
            compare(&ResultsTable::from_rows(rows)),
            Err(HarnessError::MissingGroup(_))
        ));
        let failed = vec![
            ResultRow {
                failed: true,
                ..row(NetworkKind::Lstm, Regime::Comprehensive, 0, 0.1)
            },
            row(NetworkKind::Lstm, Regime::Baseline, 0, 0.1),
        ];
        assert!(compare(&ResultsTable::from_rows(failed)).is_err());
        assert!(compare(&ResultsTable::from_rows(vec![])).is_err());
    }
}
