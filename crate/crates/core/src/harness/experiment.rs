use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_single, HarnessError, Regime, ResultsTable, RunRecord};
use crate::networks::{Hyperparams, NetworkKind};
use crate::numerics::derive_seed;
use crate::path_composer::{GenConfig, TestCounts, DEFAULT_ALPHABET};

/// A full sweep: every network × regime × (base length, module count) × run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base_lengths: Vec<usize>,
    pub num_modules: Vec<usize>,
    pub module_length_min: usize,
    pub module_length_max: usize,
    pub alphabet: usize,
    pub tests_per_type: TestCounts,
    pub networks: Vec<NetworkKind>,
    pub regimes: Vec<Regime>,
    pub epochs: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub hyperparams: Hyperparams,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            base_lengths: vec![10, 20],
            num_modules: vec![5, 10],
            module_length_min: 2,
            module_length_max: 5,
            alphabet: DEFAULT_ALPHABET,
            tests_per_type: TestCounts::default(),
            networks: NetworkKind::ALL.to_vec(),
            regimes: Regime::ALL.to_vec(),
            epochs: 500,
            runs: 10,
            master_seed: 0,
            hyperparams: Hyperparams::default(),
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    /// Sweep configurations in (base length, module count) order. Their
    /// `seed` is a placeholder; each run overrides it.
    pub fn gen_configs(&self) -> Vec<GenConfig> {
        let mut out = Vec::new();
        for &base_length in &self.base_lengths {
            for &num_modules in &self.num_modules {
                out.push(GenConfig {
                    seed: 0,
                    base_length,
                    num_modules,
                    module_length_min: self.module_length_min,
                    module_length_max: self.module_length_max,
                    alphabet: self.alphabet,
                    tests_per_type: self.tests_per_type,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.networks.is_empty() || self.regimes.is_empty() {
            return bad("at least one network and one regime are required");
        }
        if self.base_lengths.is_empty() || self.num_modules.is_empty() {
            return bad("sweep lists must not be empty");
        }
        if self.gen_configs().len() > u16::MAX as usize || self.runs > u32::MAX as usize {
            return bad("sweep too large for seed derivation");
        }
        for gen in self.gen_configs() {
            gen.validate()?;
        }
        Ok(())
    }

    /// Every run coordinate, in deterministic order.
    pub fn coordinates(&self) -> Vec<RunCoord> {
        let gens = self.gen_configs();
        let mut out = Vec::new();
        for &network in &self.networks {
            for &regime in &self.regimes {
                for config in 0..gens.len() {
                    for run in 0..self.runs {
                        out.push(RunCoord {
                            network,
                            regime,
                            config,
                            run,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Position of one run in the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunCoord {
    pub network: NetworkKind,
    pub regime: Regime,
    /// Index into [`ExperimentConfig::gen_configs`].
    pub config: usize,
    pub run: usize,
}

/// Seed for a run. The coordinates are packed into disjoint bit fields and
/// passed through a bijective mix, so distinct coordinates never share a seed.
pub fn run_seed(master_seed: u64, c: RunCoord) -> u64 {
    let packed = (c.network.index() as u64) << 56
        | (c.regime.index() as u64) << 48
        | (c.config as u64 & 0xFFFF) << 32
        | (c.run as u64 & 0xFFFF_FFFF);
    derive_seed(master_seed, packed)
}

/// Runs the whole sweep (in parallel when `jobs ≠ 1`) and aggregates it.
/// Records come back in coordinate order regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable, HarnessError> {
    config.validate()?;
    let gens = config.gen_configs();
    let coords = config.coordinates();
    let job = |c: &RunCoord| -> Result<RunRecord, HarnessError> {
        let seed = run_seed(config.master_seed, *c);
        let mut r = run_single(c.network, c.regime, &gens[c.config], config.epochs, seed, &config.hyperparams)?;
        r.run = c.run;
        Ok(r)
    };
    let records: Vec<RunRecord> = if config.jobs == 1 {
        coords.iter().map(job).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| coords.par_iter().map(job).collect::<Result<_, _>>())?
    };
    Ok(ResultsTable::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn default_sweep_has_four_configs() {
        let c = ExperimentConfig::default();
        let sizes: Vec<(usize, usize)> = c.gen_configs().iter().map(|g| (g.base_length, g.num_modules)).collect();
        assert_eq!(sizes, vec![(10, 5), (10, 10), (20, 5), (20, 10)]);
        assert_eq!(c.coordinates().len(), 4 * 2 * 4 * 10);
        c.validate().unwrap();
        let full = ExperimentConfig { runs: 50, ..c };
        assert_eq!(full.coordinates().len(), 1600);
    }

    #[test]
    fn seeds_are_distinct_across_the_default_sweep() {
        let c = ExperimentConfig {
            runs: 50,
            ..ExperimentConfig::default()
        };
        let seeds: HashSet<u64> = c.coordinates().into_iter().map(|k| run_seed(c.master_seed, k)).collect();
        assert_eq!(seeds.len(), 1600);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for c in [
            ExperimentConfig {
                runs: 0,
                ..Default::default()
            },
            ExperimentConfig {
                epochs: 0,
                ..Default::default()
            },
            ExperimentConfig {
                networks: vec![],
                ..Default::default()
            },
            ExperimentConfig {
                num_modules: vec![0],
                ..Default::default()
            },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn config_json_accepts_partial_documents() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"runs": 3, "networks": ["lstm"]}"#).unwrap();
        assert_eq!(c.runs, 3);
        assert_eq!(c.networks, vec![NetworkKind::Lstm]);
        assert_eq!(c.epochs, 500);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"rnus": 3}"#).is_err());
    }
}
