use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::numerics::LossKind;
use crate::path_composer::{BatchLayout, GenConfig, StimulusLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Tdnn,
    Lstm,
    Tcn,
    Morphognosis,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 4] = [
        NetworkKind::Tdnn,
        NetworkKind::Lstm,
        NetworkKind::Tcn,
        NetworkKind::Morphognosis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Tdnn => "tdnn",
            NetworkKind::Lstm => "lstm",
            NetworkKind::Tcn => "tcn",
            NetworkKind::Morphognosis => "morphognosis",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Window kinds see one sliding-window row per step; the others see whole sequences.
    pub fn uses_window(self) -> bool {
        matches!(self, NetworkKind::Tdnn | NetworkKind::Morphognosis)
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkKind {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NetworkKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| NetworkError::Spec(format!("unknown network `{s}` (expected tdnn, lstm, tcn or morphognosis)")))
    }
}

/// Architecture-specific knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    /// Dense stack on a raw sliding window of `window` stimuli.
    Tdnn { window: usize, hidden: Vec<usize> },
    /// Dense stack on the interval encoding of a `window`-stimulus history.
    Morphognosis { window: usize, hidden: Vec<usize>, skew: f64 },
    /// One LSTM layer with a per-step linear head.
    Lstm { units: usize },
    /// Residual blocks of two dilated causal convolutions, per-step linear head.
    Tcn { kernel: usize, dilations: Vec<usize>, filters: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layout: StimulusLayout,
    /// Longest path the model must handle.
    pub max_len: usize,
    pub learning_rate: f64,
    pub arch: Architecture,
}

/// Hyperparameters shared by every model built for an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub mlp_hidden: Vec<usize>,
    pub lstm_units: usize,
    pub tcn_kernel: usize,
    pub tcn_dilations: Vec<usize>,
    pub tcn_filters: usize,
    pub skew: f64,
    pub learning_rate: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            mlp_hidden: vec![256, 256],
            lstm_units: 256,
            tcn_kernel: 2,
            tcn_dilations: vec![1, 2, 4, 8, 16],
            tcn_filters: 64,
            skew: 0.5,
            learning_rate: 0.001,
        }
    }
}

impl ModelSpec {
    /// Spec for `kind` sized to every path a dataset generated from `gen` can contain.
    pub fn for_dataset(kind: NetworkKind, gen: &GenConfig, hp: &Hyperparams) -> Self {
        let max_len = gen.max_path_len();
        let arch = match kind {
            NetworkKind::Tdnn => Architecture::Tdnn {
                window: max_len,
                hidden: hp.mlp_hidden.clone(),
            },
            NetworkKind::Morphognosis => Architecture::Morphognosis {
                window: max_len,
                hidden: hp.mlp_hidden.clone(),
                skew: hp.skew,
            },
            NetworkKind::Lstm => Architecture::Lstm { units: hp.lstm_units },
            NetworkKind::Tcn => Architecture::Tcn {
                kernel: hp.tcn_kernel,
                dilations: hp.tcn_dilations.clone(),
                filters: hp.tcn_filters,
            },
        };
        Self {
            layout: StimulusLayout::new(gen.num_modules, gen.alphabet),
            max_len,
            learning_rate: hp.learning_rate,
            arch,
        }
    }

    pub fn kind(&self) -> NetworkKind {
        match self.arch {
            Architecture::Tdnn { .. } => NetworkKind::Tdnn,
            Architecture::Morphognosis { .. } => NetworkKind::Morphognosis,
            Architecture::Lstm { .. } => NetworkKind::Lstm,
            Architecture::Tcn { .. } => NetworkKind::Tcn,
        }
    }

    pub fn stimulus_width(&self) -> usize {
        self.layout.stimulus_width()
    }

    pub fn output_width(&self) -> usize {
        self.layout.response_width()
    }

    pub fn batch_layout(&self) -> BatchLayout {
        match self.arch {
            Architecture::Tdnn { window, .. } | Architecture::Morphognosis { window, .. } => {
                BatchLayout::Window { window }
            }
            _ => BatchLayout::Sequence,
        }
    }

    pub fn loss_kind(&self) -> LossKind {
        if self.kind().uses_window() {
            LossKind::Bce
        } else {
            LossKind::Mse
        }
    }

    /// Steps of history visible to one TCN output: `1 + 2·(kernel−1)·Σ dilations`
    /// (two convolutions per residual block).
    pub fn tcn_receptive_field(&self) -> Option<usize> {
        match &self.arch {
            Architecture::Tcn { kernel, dilations, .. } => {
                Some(1 + 2 * (kernel - 1) * dilations.iter().sum::<usize>())
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: String| Err(NetworkError::Spec(m));
        if self.layout.alphabet == 0 {
            return bad("output width must be positive".into());
        }
        if self.max_len == 0 {
            return bad("max_len must be positive".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} is invalid", self.learning_rate));
        }
        match &self.arch {
            Architecture::Tdnn { window, hidden } | Architecture::Morphognosis { window, hidden, .. } => {
                if *window < self.max_len {
                    return bad(format!("window {window} shorter than max_len {}", self.max_len));
                }
                if hidden.iter().any(|&h| h == 0) {
                    return bad("hidden widths must be positive".into());
                }
                if let Architecture::Morphognosis { skew, window, .. } = &self.arch {
                    if !(0.0..=1.0).contains(skew) {
                        return bad(format!("skew {skew} outside [0, 1]"));
                    }
                    if *window < 2 {
                        return bad("morphognosis window needs at least two steps".into());
                    }
                }
            }
            Architecture::Lstm { units } => {
                if *units == 0 {
                    return bad("LSTM needs at least one unit".into());
                }
            }
            Architecture::Tcn { kernel, dilations, filters } => {
                if *kernel < 2 || *filters == 0 || dilations.is_empty() || dilations.contains(&0) {
                    return bad("TCN needs kernel ≥ 2, filters ≥ 1 and positive dilations".into());
                }
                let rf = self.tcn_receptive_field().unwrap_or(0);
                if rf < self.max_len {
                    return bad(format!("TCN receptive field {rf} is shorter than max_len {}", self.max_len));
                }
            }
        }
        Ok(())
    }
}
