//! Dense numeric kernel: tensors, dense layers, losses, Adam and a
//! finite-difference gradient oracle. Everything is `f64`.

mod adam;
mod dense;
mod gradcheck;
mod loss;
mod rng;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dense::{dense_backward, dense_forward, glorot_uniform, sigmoid, Activation, DenseCache, DenseGrads};
pub use gradcheck::{finite_difference_grad, max_relative_error};
pub use loss::{loss, LossKind, BCE_EPSILON};
pub use rng::{derive_seed, mix64, SeededRng};
pub use tensor::{dot, matmul_a_bt_acc, matmul_acc, matmul_at_b_acc, Tensor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("loss mask selects no valid steps")]
    EmptyMask,
}
