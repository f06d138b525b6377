use serde::{Deserialize, Serialize};

use super::tensor::{matmul_a_bt_acc, matmul_acc, matmul_at_b_acc};
use super::{NumericsError, SeededRng, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Logistic function, evaluated without overflowing `exp` for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Scaled-uniform (Glorot) initialization: U(±√(6/(fan_in+fan_out))).
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.uniform_range(-limit, limit);
    }
    t
}

/// Values saved by [`dense_forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct DenseCache {
    pub input: Tensor,
    pub pre_activation: Tensor,
    pub output: Tensor,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct DenseGrads {
    /// `None` when the caller asked not to propagate into the input.
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// `act(input · weights + bias)` for `input [batch×in]`, `weights [in×out]`, `bias [out]`.
pub fn dense_forward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    activation: Activation,
) -> Result<(Tensor, DenseCache), NumericsError> {
    let (batch, in_w) = matrix_dims(input, "input")?;
    let (w_in, out_w) = matrix_dims(weights, "weights")?;
    if w_in != in_w {
        return Err(NumericsError::Shape(format!(
            "input has {in_w} features but weights expect {w_in}"
        )));
    }
    if bias.shape() != [out_w] {
        return Err(NumericsError::Shape(format!(
            "bias shape {:?} does not match output width {out_w}",
            bias.shape()
        )));
    }
    let mut pre = vec![0.0; batch * out_w];
    for row in pre.chunks_mut(out_w) {
        row.copy_from_slice(bias.data());
    }
    matmul_acc(input.data(), weights.data(), &mut pre, batch, in_w, out_w);
    let out: Vec<f64> = pre.iter().map(|&x| activation.apply(x)).collect();
    let pre = Tensor::from_vec(&[batch, out_w], pre)?;
    let out = Tensor::from_vec(&[batch, out_w], out)?;
    let cache = DenseCache {
        input: input.clone(),
        pre_activation: pre,
        output: out.clone(),
        activation,
    };
    Ok((out, cache))
}

/// Exact gradients of [`dense_forward`] given `upstream = ∂L/∂output`.
pub fn dense_backward(
    cache: &DenseCache,
    weights: &Tensor,
    upstream: &Tensor,
    want_input_grad: bool,
) -> Result<DenseGrads, NumericsError> {
    if upstream.shape() != cache.output.shape() {
        return Err(NumericsError::Shape(format!(
            "upstream gradient {:?} does not match cached output {:?}",
            upstream.shape(),
            cache.output.shape()
        )));
    }
    let (batch, in_w) = matrix_dims(&cache.input, "cached input")?;
    let out_w = cache.output.cols();
    if weights.shape() != [in_w, out_w] {
        return Err(NumericsError::Shape(format!(
            "weights {:?} do not match cache [{in_w}, {out_w}]",
            weights.shape()
        )));
    }
    let act = cache.activation;
    let delta: Vec<f64> = upstream
        .data()
        .iter()
        .zip(cache.pre_activation.data())
        .zip(cache.output.data())
        .map(|((&g, &x), &y)| g * act.derivative(x, y))
        .collect();

    let mut grad_w = vec![0.0; in_w * out_w];
    matmul_at_b_acc(cache.input.data(), &delta, &mut grad_w, batch, in_w, out_w);
    let mut grad_b = vec![0.0; out_w];
    for row in delta.chunks(out_w) {
        for (b, d) in grad_b.iter_mut().zip(row) {
            *b += d;
        }
    }
    let input = if want_input_grad {
        let mut gi = vec![0.0; batch * in_w];
        matmul_a_bt_acc(&delta, weights.data(), &mut gi, batch, out_w, in_w);
        Some(Tensor::from_vec(&[batch, in_w], gi)?)
    } else {
        None
    };
    Ok(DenseGrads {
        input,
        weights: Tensor::from_vec(&[in_w, out_w], grad_w)?,
        bias: Tensor::from_vec(&[out_w], grad_b)?,
    })
}

fn matrix_dims(t: &Tensor, what: &str) -> Result<(usize, usize), NumericsError> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        other => Err(NumericsError::Shape(format!(
            "{what} must be a matrix, got shape {other:?}"
        ))),
    }
}
