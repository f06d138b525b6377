use serde::{Deserialize, Serialize};

use super::{NumericsError, Tensor};

/// Probabilities fed to binary cross entropy are clamped to `[BCE_EPSILON, 1 − BCE_EPSILON]`.
pub const BCE_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Bce,
}

/// Masked mean loss over the `[rows × cols]` view of `prediction`.
///
/// `mask[r]` selects which rows count. Returns the scalar loss and its exact
/// gradient with respect to `prediction`; masked rows get zero gradient.
pub fn loss(
    kind: LossKind,
    prediction: &Tensor,
    target: &Tensor,
    mask: &[bool],
) -> Result<(f64, Tensor), NumericsError> {
    if prediction.shape() != target.shape() {
        return Err(NumericsError::Shape(format!(
            "prediction {:?} and target {:?} differ",
            prediction.shape(),
            target.shape()
        )));
    }
    let rows = prediction.rows();
    let cols = prediction.cols();
    if mask.len() != rows {
        return Err(NumericsError::Shape(format!(
            "mask has {} entries for {rows} rows",
            mask.len()
        )));
    }
    let valid = mask.iter().filter(|&&m| m).count();
    if valid == 0 {
        return Err(NumericsError::EmptyMask);
    }
    let n = (valid * cols) as f64;
    let mut grad = Tensor::zeros(prediction.shape());
    let mut total = 0.0;
    for r in (0..rows).filter(|&r| mask[r]) {
        let p_row = prediction.row(r);
        let t_row = target.row(r);
        let g_row = grad.row_mut(r);
        for ((&p, &t), g) in p_row.iter().zip(t_row).zip(g_row.iter_mut()) {
            match kind {
                LossKind::Mse => {
                    let d = p - t;
                    total += d * d;
                    *g = 2.0 * d / n;
                }
                LossKind::Bce => {
                    let clamped = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
                    total -= t * clamped.ln() + (1.0 - t) * (1.0 - clamped).ln();
                    // Outside the clamp window the loss is flat in p.
                    *g = if p == clamped {
                        (clamped - t) / (clamped * (1.0 - clamped)) / n
                    } else {
                        0.0
                    };
                }
            }
        }
    }
    Ok((total / n, grad))
}
