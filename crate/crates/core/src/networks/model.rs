use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{Architecture, Lstm, Mlp, ModelSpec, NetworkError, NetworkKind, Tcn};
use crate::morphognostic::MorphognosticEncoder;
use crate::numerics::{adam_step, loss, AdamConfig, AdamState, SeededRng, Tensor};
use crate::path_composer::{argmax, to_sequence_batch, to_window_batch, BatchLayout, EncodedBatch, Path};

/// Tag written into every checkpoint document.
pub const CHECKPOINT_FORMAT: &str = "taskcomp-checkpoint/1";

#[derive(Clone, Debug)]
pub enum Net {
    Mlp(Mlp),
    Lstm(Lstm),
    Tcn(Tcn),
}

enum Cache {
    Mlp(super::MlpCache),
    Lstm(super::LstmCache),
    Tcn(super::TcnCache),
}

/// A network with its spec and one Adam state per parameter tensor.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    net: Net,
    adam: Vec<AdamState>,
}

/// One named parameter tensor in a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Serialized model: spec plus parameters in [`Model::param_names`] order.
/// Optimizer moments are not stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub spec: ModelSpec,
    pub params: Vec<ParamRecord>,
}

impl Model {
    pub fn build(spec: ModelSpec, rng: &mut SeededRng) -> Result<Self, NetworkError> {
        spec.validate()?;
        let s = spec.stimulus_width();
        let v = spec.output_width();
        let net = match &spec.arch {
            Architecture::Tdnn { window, hidden } => Net::Mlp(Mlp::new(window * s, hidden, v, None, rng)),
            Architecture::Morphognosis { window, hidden, skew } => {
                let enc = MorphognosticEncoder::new(window - 1, *skew, s)
                    .map_err(|e| NetworkError::Spec(e.to_string()))?;
                Net::Mlp(Mlp::new(window * s, hidden, v, Some(enc), rng))
            }
            Architecture::Lstm { units } => Net::Lstm(Lstm::new(s, *units, v, rng)),
            Architecture::Tcn {
                kernel,
                dilations,
                filters,
            } => Net::Tcn(Tcn::new(s, *kernel, dilations, *filters, v, rng)),
        };
        let config = AdamConfig {
            lr: spec.learning_rate,
            ..AdamConfig::default()
        };
        let mut model = Self {
            spec,
            net,
            adam: Vec::new(),
        };
        model.reset_optimizer(config);
        Ok(model)
    }

    fn reset_optimizer(&mut self, config: AdamConfig) {
        self.adam = self.params().iter().map(|p| AdamState::new(p.shape(), config)).collect();
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> NetworkKind {
        self.spec.kind()
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn lstm(&self) -> Option<&Lstm> {
        match &self.net {
            Net::Lstm(l) => Some(l),
            _ => None,
        }
    }

    /// Encodes `paths` in the layout this model consumes.
    pub fn encode(&self, paths: &[Path]) -> Result<EncodedBatch, NetworkError> {
        Ok(match self.spec.batch_layout() {
            BatchLayout::Sequence => to_sequence_batch(paths, self.spec.layout)?,
            BatchLayout::Window { window } => to_window_batch(paths, self.spec.layout, window)?,
        })
    }

    fn check_batch(&self, batch: &EncodedBatch) -> Result<(), NetworkError> {
        let want = self.spec.batch_layout();
        if batch.layout != want {
            return Err(NetworkError::Layout(format!(
                "{} expects {want:?} batches, got {:?}",
                self.kind(),
                batch.layout
            )));
        }
        if batch.targets.cols() != self.spec.output_width() {
            return Err(NetworkError::Layout(format!(
                "target width {} for output width {}",
                batch.targets.cols(),
                self.spec.output_width()
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, inputs: &Tensor) -> Result<(Tensor, Cache), NetworkError> {
        Ok(match &self.net {
            Net::Mlp(m) => {
                let (y, c) = m.forward(inputs)?;
                (y, Cache::Mlp(c))
            }
            Net::Lstm(l) => {
                let (y, c) = l.forward(inputs)?;
                (y, Cache::Lstm(c))
            }
            Net::Tcn(t) => {
                let (y, c) = t.forward(inputs)?;
                (y, Cache::Tcn(c))
            }
        })
    }

    /// Output rows for `batch`, shaped like `batch.targets`.
    pub fn forward(&self, batch: &EncodedBatch) -> Result<Tensor, NetworkError> {
        self.check_batch(batch)?;
        Ok(self.forward_cached(&batch.inputs)?.0)
    }

    /// Masked loss and exact parameter gradients (in [`Model::params`] order).
    pub fn loss_and_grads(&self, batch: &EncodedBatch) -> Result<(f64, Vec<Tensor>), NetworkError> {
        self.check_batch(batch)?;
        let (out, cache) = self.forward_cached(&batch.inputs)?;
        if let Some(r) = out.data().chunks(out.cols()).position(|row| row.iter().any(|v| !v.is_finite())) {
            let (path, step) = locate(batch, r);
            return Err(NetworkError::NonFinite {
                what: "output".into(),
                path,
                step,
            });
        }
        let (value, grad) = loss(self.spec.loss_kind(), &out, &batch.targets, &batch.mask)?;
        if !value.is_finite() {
            let r = batch.mask.iter().position(|&m| m).unwrap_or(0);
            let (path, step) = locate(batch, r);
            return Err(NetworkError::NonFinite {
                what: "loss".into(),
                path,
                step,
            });
        }
        let grads = match (&self.net, &cache) {
            (Net::Mlp(m), Cache::Mlp(c)) => m.backward(c, &grad)?,
            (Net::Lstm(l), Cache::Lstm(c)) => l.backward(c, &grad)?,
            (Net::Tcn(t), Cache::Tcn(c)) => t.backward(c, &grad)?,
            _ => unreachable!("cache always matches its network"),
        };
        Ok((value, grads))
    }

    /// One full-batch Adam update. Returns the loss before the update; on any
    /// non-finite value the parameters are left untouched.
    pub fn train_step(&mut self, batch: &EncodedBatch) -> Result<f64, NetworkError> {
        let (value, grads) = self.loss_and_grads(batch)?;
        let names = self.param_names();
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(crate::numerics::NumericsError::NonFinite(format!("gradient of {}", names[i])).into());
        }
        let mut params = match &mut self.net {
            Net::Mlp(m) => m.params_mut(),
            Net::Lstm(l) => l.params_mut(),
            Net::Tcn(t) => t.params_mut(),
        };
        for ((p, g), st) in params.iter_mut().zip(&grads).zip(&mut self.adam) {
            adam_step(p, g, st)?;
        }
        Ok(value)
    }

    /// Per-path argmax predictions over each path's valid steps.
    pub fn predict_batch(&self, batch: &EncodedBatch) -> Result<Vec<Vec<usize>>, NetworkError> {
        let out = self.forward(batch)?;
        Ok((0..batch.num_paths())
            .map(|p| {
                (0..batch.lengths[p])
                    .map(|t| argmax(out.row(batch.row_index(p, t))))
                    .collect()
            })
            .collect())
    }

    /// Predicted response per step of `path`, built from the path's own history.
    pub fn predict_responses(&self, path: &Path) -> Result<Vec<usize>, NetworkError> {
        let batch = self.encode(std::slice::from_ref(path))?;
        Ok(self.predict_batch(&batch)?.remove(0))
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match &self.net {
            Net::Mlp(m) => m.params(),
            Net::Lstm(l) => l.params(),
            Net::Tcn(t) => t.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match &mut self.net {
            Net::Mlp(m) => m.params_mut(),
            Net::Lstm(l) => l.params_mut(),
            Net::Tcn(t) => t.params_mut(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match &self.net {
            Net::Mlp(m) => m.param_names(),
            Net::Lstm(l) => l.param_names(),
            Net::Tcn(t) => t.param_names(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Multiplies the output layer's weights and bias by `factor`, which
    /// scales every head pre-activation by the same amount.
    pub fn scale_head(&mut self, factor: f64) {
        let mut params = self.params_mut();
        let n = params.len();
        params[n - 2].scale(factor);
        params[n - 1].scale(factor);
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            spec: self.spec.clone(),
            params: self
                .param_names()
                .into_iter()
                .zip(self.params())
                .map(|(name, t)| ParamRecord {
                    name,
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, NetworkError> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(NetworkError::Checkpoint(format!(
                "unknown format `{}` (expected `{CHECKPOINT_FORMAT}`)",
                ck.format
            )));
        }
        let mut model = Self::build(ck.spec, &mut SeededRng::new(0))?;
        let names = model.param_names();
        if names.len() != ck.params.len() {
            return Err(NetworkError::Checkpoint(format!(
                "{} parameter tensors, expected {}",
                ck.params.len(),
                names.len()
            )));
        }
        for ((slot, name), rec) in model.params_mut().into_iter().zip(&names).zip(ck.params) {
            if &rec.name != name || rec.shape != slot.shape() {
                return Err(NetworkError::Checkpoint(format!(
                    "parameter `{}` {:?} does not match `{name}` {:?}",
                    rec.name,
                    rec.shape,
                    slot.shape()
                )));
            }
            *slot = Tensor::from_vec(&rec.shape, rec.data)?;
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| NetworkError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(ck)
    }

    pub fn save(&self, file: &FsPath) -> Result<(), NetworkError> {
        std::fs::write(file, self.to_json())
            .map_err(|e| NetworkError::Checkpoint(format!("{}: {e}", file.display())))
    }

    pub fn load(file: &FsPath) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| NetworkError::Checkpoint(format!("{}: {e}", file.display())))?;
        Self::from_json(&text)
    }
}

/// Maps an output row back to its (path, step).
fn locate(batch: &EncodedBatch, row: usize) -> (usize, usize) {
    match batch.layout {
        BatchLayout::Sequence => {
            let t = batch.max_len().max(1);
            (row / t, row % t)
        }
        BatchLayout::Window { .. } => {
            let mut r = row;
            for (p, &len) in batch.lengths.iter().enumerate() {
                if r < len {
                    return (p, r);
                }
                r -= len;
            }
            (batch.num_paths(), 0)
        }
    }
}
