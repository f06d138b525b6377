use std::fmt;

use serde::{Deserialize, Serialize};

use super::path::{delete, insert, substitute, Path, Stimulus};
use super::ComposeError;
use crate::numerics::SeededRng;

pub const DEFAULT_ALPHABET: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisruptionKind {
    Insertion,
    Substitution,
    Deletion,
}

impl DisruptionKind {
    pub const ALL: [DisruptionKind; 3] = [
        DisruptionKind::Insertion,
        DisruptionKind::Substitution,
        DisruptionKind::Deletion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DisruptionKind::Insertion => "insertion",
            DisruptionKind::Substitution => "substitution",
            DisruptionKind::Deletion => "deletion",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DisruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of test paths generated for each disruption kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCounts {
    pub insertion: usize,
    pub substitution: usize,
    pub deletion: usize,
}

impl TestCounts {
    pub fn uniform(n: usize) -> Self {
        Self {
            insertion: n,
            substitution: n,
            deletion: n,
        }
    }

    pub fn get(&self, kind: DisruptionKind) -> usize {
        match kind {
            DisruptionKind::Insertion => self.insertion,
            DisruptionKind::Substitution => self.substitution,
            DisruptionKind::Deletion => self.deletion,
        }
    }

    pub fn total(&self) -> usize {
        self.insertion + self.substitution + self.deletion
    }
}

impl Default for TestCounts {
    fn default() -> Self {
        Self::uniform(2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub base_length: usize,
    pub num_modules: usize,
    pub module_length_min: usize,
    pub module_length_max: usize,
    pub alphabet: usize,
    pub tests_per_type: TestCounts,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            base_length: 10,
            num_modules: 5,
            module_length_min: 2,
            module_length_max: 5,
            alphabet: DEFAULT_ALPHABET,
            tests_per_type: TestCounts::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ComposeError> {
        let bad = |msg: String| Err(ComposeError::Config(msg));
        if self.base_length == 0 {
            return bad("base_length must be positive".into());
        }
        if self.num_modules == 0 {
            return bad("num_modules must be positive".into());
        }
        if self.alphabet == 0 {
            return bad("alphabet must be positive".into());
        }
        if self.module_length_min == 0 || self.module_length_min > self.module_length_max {
            return bad(format!(
                "module length range {}..={} is invalid",
                self.module_length_min, self.module_length_max
            ));
        }
        if self.module_length_max > self.base_length {
            return bad(format!(
                "module_length_max {} exceeds base_length {}",
                self.module_length_max, self.base_length
            ));
        }
        if self.tests_per_type.deletion > 0 && self.module_length_max >= self.base_length {
            return bad(format!(
                "deletion tests need module_length_max < base_length ({} >= {})",
                self.module_length_max, self.base_length
            ));
        }
        Ok(())
    }

    /// Width of one encoded stimulus: path-id block plus value block.
    pub fn stimulus_width(&self) -> usize {
        self.num_modules + 1 + self.alphabet
    }

    /// Longest path the generator can produce (an insertion of the longest module).
    pub fn max_path_len(&self) -> usize {
        self.base_length + self.module_length_max
    }
}

/// A disrupted base path together with the choice that produced it.
///
/// `module_id` is the source module for every kind; for deletions only its
/// length matters and it may be unknown (`None`) when parsed from text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub kind: DisruptionKind,
    pub module_id: Option<usize>,
    pub position: usize,
    pub path: Path,
}

impl TestCase {
    /// Number of base steps removed, for deletions.
    pub fn deleted_length(&self, base: &Path) -> Option<usize> {
        (self.kind == DisruptionKind::Deletion).then(|| base.len().saturating_sub(self.path.len()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub config: GenConfig,
    /// Base path (id 0) followed by modular paths 1..=num_modules.
    pub train: Vec<Path>,
    pub test: Vec<TestCase>,
}

impl Dataset {
    pub fn base(&self) -> &Path {
        &self.train[0]
    }

    pub fn modules(&self) -> &[Path] {
        &self.train[1..]
    }

    pub fn module(&self, id: usize) -> Option<&Path> {
        if id == 0 {
            None
        } else {
            self.train.get(id)
        }
    }

    pub fn tests_of(&self, kind: DisruptionKind) -> impl Iterator<Item = &TestCase> {
        self.test.iter().filter(move |t| t.kind == kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ComposeError> {
        let ds: Dataset = serde_json::from_str(text).map_err(|e| ComposeError::Json(e.to_string()))?;
        ds.validate()?;
        Ok(ds)
    }

    /// Checks the structural invariants: ids, value ranges, and that every
    /// test path is exactly the disruption it claims to be.
    pub fn validate(&self) -> Result<(), ComposeError> {
        let cfg = &self.config;
        let invalid = |msg: String| Err(ComposeError::Invalid(msg));
        if self.train.len() != cfg.num_modules + 1 {
            return invalid(format!(
                "expected {} training paths, found {}",
                cfg.num_modules + 1,
                self.train.len()
            ));
        }
        for (i, p) in self.train.iter().enumerate() {
            if p.id != i {
                return invalid(format!("training path {i} has id {}", p.id));
            }
            if p.stimuli.len() != p.responses.len() || p.is_empty() {
                return invalid(format!("training path {i} has inconsistent lengths"));
            }
            if let Some(s) = p.stimuli.iter().find(|s| s.path_id != i) {
                return invalid(format!("training path {i} contains foreign stimulus {s}"));
            }
            check_ranges(p, cfg)?;
        }
        let base = self.base();
        for (n, t) in self.test.iter().enumerate() {
            check_ranges(&t.path, cfg)?;
            let rebuilt = match t.kind {
                DisruptionKind::Insertion | DisruptionKind::Substitution => {
                    let id = t.module_id.ok_or_else(|| {
                        ComposeError::Invalid(format!("test path {n} lacks a module id"))
                    })?;
                    let module = self
                        .module(id)
                        .ok_or_else(|| ComposeError::Invalid(format!("test path {n} names unknown module {id}")))?;
                    if t.kind == DisruptionKind::Insertion {
                        insert(base, module, t.position)?
                    } else {
                        substitute(base, module, t.position)?
                    }
                }
                DisruptionKind::Deletion => {
                    let len = t.deleted_length(base).unwrap_or(0);
                    if let Some(id) = t.module_id {
                        match self.module(id) {
                            Some(m) if m.len() == len => {}
                            _ => return invalid(format!("test path {n}: deletion length {len} does not match module {id}")),
                        }
                    }
                    delete(base, len, t.position)?
                }
            };
            if rebuilt != t.path {
                return invalid(format!(
                    "test path {n} is not the {} it claims (module {:?}, position {})",
                    t.kind, t.module_id, t.position
                ));
            }
        }
        Ok(())
    }
}

fn check_ranges(p: &Path, cfg: &GenConfig) -> Result<(), ComposeError> {
    for (s, r) in p.steps() {
        if s.path_id > cfg.num_modules || s.value >= cfg.alphabet || r >= cfg.alphabet {
            return Err(ComposeError::Invalid(format!(
                "step {s} -> {r} outside {} modules / alphabet {}",
                cfg.num_modules, cfg.alphabet
            )));
        }
    }
    Ok(())
}

fn random_path(id: usize, len: usize, alphabet: usize, rng: &mut SeededRng) -> Path {
    let mut stimuli = Vec::with_capacity(len);
    let mut responses = Vec::with_capacity(len);
    for _ in 0..len {
        stimuli.push(Stimulus::new(id, rng.uniform_int(0, alphabet - 1)));
        responses.push(rng.uniform_int(0, alphabet - 1));
    }
    Path { id, stimuli, responses }
}

/// Draws a dataset from `config.seed`.
///
/// Draw order: base path steps as (value, response) pairs, then each module's
/// length followed by its steps, then test cases kind by kind (insertion,
/// substitution, deletion), each as (module, position).
pub fn generate_dataset(config: &GenConfig) -> Result<Dataset, ComposeError> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let v = config.alphabet;
    let mut train = Vec::with_capacity(config.num_modules + 1);
    train.push(random_path(0, config.base_length, v, &mut rng));
    for id in 1..=config.num_modules {
        let len = rng.uniform_int(config.module_length_min, config.module_length_max);
        train.push(random_path(id, len, v, &mut rng));
    }
    let base = &train[0];
    let mut test = Vec::with_capacity(config.tests_per_type.total());
    for kind in DisruptionKind::ALL {
        for _ in 0..config.tests_per_type.get(kind) {
            let id = rng.uniform_int(1, config.num_modules);
            let module = &train[id];
            let (position, path) = match kind {
                DisruptionKind::Insertion => {
                    let pos = rng.uniform_int(0, base.len());
                    (pos, insert(base, module, pos)?)
                }
                DisruptionKind::Substitution => {
                    let pos = rng.uniform_int(0, base.len() - module.len());
                    (pos, substitute(base, module, pos)?)
                }
                DisruptionKind::Deletion => {
                    let pos = rng.uniform_int(0, base.len() - module.len());
                    (pos, delete(base, module.len(), pos)?)
                }
            };
            test.push(TestCase {
                kind,
                module_id: Some(id),
                position,
                path,
            });
        }
    }
    Ok(Dataset {
        config: config.clone(),
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tests_gives_only_training_paths() {
        let cfg = GenConfig {
            tests_per_type: TestCounts::uniform(0),
            ..GenConfig::default()
        };
        let ds = generate_dataset(&cfg).unwrap();
        assert!(ds.test.is_empty());
        assert_eq!(ds.train.len(), cfg.num_modules + 1);
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let cfg = GenConfig { seed: 77, ..GenConfig::default() };
        let a = generate_dataset(&cfg).unwrap().to_json();
        let b = generate_dataset(&cfg).unwrap().to_json();
        assert_eq!(a, b);
        let c = generate_dataset(&GenConfig { seed: 78, ..cfg }).unwrap().to_json();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_dataset_shape() {
        let cfg = GenConfig {
            seed: 1,
            base_length: 15,
            num_modules: 5,
            ..GenConfig::default()
        };
        let ds = generate_dataset(&cfg).unwrap();
        assert_eq!(ds.base().len(), 15);
        assert_eq!(ds.modules().len(), 5);
        assert!(ds.modules().iter().all(|m| (2..=5).contains(&m.len())));
        assert_eq!(ds.test.len(), 6);
        for kind in DisruptionKind::ALL {
            assert_eq!(ds.tests_of(kind).count(), 2);
        }
        ds.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = GenConfig::default();
        for cfg in [
            GenConfig { num_modules: 0, ..base.clone() },
            GenConfig { module_length_min: 0, ..base.clone() },
            GenConfig { module_length_min: 4, module_length_max: 3, ..base.clone() },
            GenConfig { base_length: 4, ..base.clone() },
            GenConfig { base_length: 5, ..base.clone() },
            GenConfig { alphabet: 0, ..base.clone() },
        ] {
            assert!(matches!(generate_dataset(&cfg), Err(ComposeError::Config(_))), "{cfg:?}");
        }
        // With no deletion tests a module may span the whole base.
        let cfg = GenConfig {
            base_length: 5,
            tests_per_type: TestCounts { insertion: 2, substitution: 2, deletion: 0 },
            ..base
        };
        assert!(generate_dataset(&cfg).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let ds = generate_dataset(&GenConfig { seed: 5, ..GenConfig::default() }).unwrap();
        let back = Dataset::from_json(&ds.to_json()).unwrap();
        assert_eq!(back, ds);
        let v: serde_json::Value = serde_json::from_str(&ds.to_json()).unwrap();
        assert!(v["train"][0]["stimuli"][0].is_array());
        assert!(v["test"][0]["kind"].is_string());
        assert!(v["test"][0]["module_id"].is_number());
        assert!(v["test"][0]["position"].is_number());
        assert!(v["test"][0]["path"]["responses"].is_array());
    }

    #[test]
    fn tampered_test_path_fails_validation() {
        let mut ds = generate_dataset(&GenConfig { seed: 6, ..GenConfig::default() }).unwrap();
        let r = &mut ds.test[0].path.responses[0];
        *r = (*r + 1) % 15;
        assert!(matches!(ds.validate(), Err(ComposeError::Invalid(_))));
    }
}
