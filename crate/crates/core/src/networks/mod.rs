//! The four sequence learners behind one [`Model`] interface.
//!
//! Window kinds (TDNN, Morphognosis) consume one sliding-window row per step
//! and train with BCE on a sigmoid head. Sequence kinds (LSTM, TCN) consume
//! whole padded sequences and train with MSE on a linear head.

mod lstm;
mod mlp;
mod model;
mod spec;
mod tcn;

pub use lstm::{Lstm, LstmCache, LstmGates};
pub use mlp::{Mlp, MlpCache};
pub use model::{Checkpoint, Model, Net, ParamRecord, CHECKPOINT_FORMAT};
pub use spec::{Architecture, Hyperparams, ModelSpec, NetworkKind};
pub use tcn::{CausalConv, ResidualBlock, Tcn, TcnCache};

use thiserror::Error;

use crate::numerics::NumericsError;
use crate::path_composer::ComposeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid model spec: {0}")]
    Spec(String),
    #[error("batch does not match model: {0}")]
    Layout(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Encode(#[from] ComposeError),
    #[error("non-finite {what} at path {path}, step {step}")]
    NonFinite { what: String, path: usize, step: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
