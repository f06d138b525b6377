use crate::morphognostic::MorphognosticEncoder;
use crate::numerics::{dense_backward, dense_forward, glorot_uniform, Activation, DenseCache, SeededRng, Tensor};

use super::NetworkError;

/// Relu dense stack with a sigmoid output layer, optionally preceded by the
/// interval encoder.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub(crate) encoder: Option<MorphognosticEncoder>,
    pub(crate) weights: Vec<Tensor>,
    pub(crate) biases: Vec<Tensor>,
    pub(crate) activations: Vec<Activation>,
}

pub struct MlpCache {
    layers: Vec<DenseCache>,
}

impl Mlp {
    pub fn new(
        input_width: usize,
        hidden: &[usize],
        output_width: usize,
        encoder: Option<MorphognosticEncoder>,
        rng: &mut SeededRng,
    ) -> Self {
        let first = encoder.as_ref().map_or(input_width, MorphognosticEncoder::output_width);
        let mut widths = vec![first];
        widths.extend_from_slice(hidden);
        widths.push(output_width);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut activations = Vec::new();
        for (l, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            weights.push(glorot_uniform(&[fan_in, fan_out], fan_in, fan_out, rng));
            biases.push(Tensor::zeros(&[fan_out]));
            activations.push(if l + 2 == widths.len() {
                Activation::Sigmoid
            } else {
                Activation::Relu
            });
        }
        Self {
            encoder,
            weights,
            biases,
            activations,
        }
    }

    /// Layer widths from input to output, after any encoding.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.weights[0].shape()[0]];
        w.extend(self.weights.iter().map(|t| t.shape()[1]));
        w
    }

    fn encode(&self, inputs: &Tensor) -> Result<Tensor, NetworkError> {
        let Some(enc) = &self.encoder else {
            return Ok(inputs.clone());
        };
        let rows = inputs.rows();
        let mut out = Tensor::zeros(&[rows, enc.output_width()]);
        for r in 0..rows {
            enc.encode_window_row(inputs.row(r), out.row_mut(r))
                .map_err(|e| NetworkError::Layout(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn forward(&self, inputs: &Tensor) -> Result<(Tensor, MlpCache), NetworkError> {
        let mut x = self.encode(inputs)?;
        let mut layers = Vec::with_capacity(self.weights.len());
        for ((w, b), &act) in self.weights.iter().zip(&self.biases).zip(&self.activations) {
            let (y, cache) = dense_forward(&x, w, b, act)?;
            layers.push(cache);
            x = y;
        }
        Ok((x, MlpCache { layers }))
    }

    /// Gradients in parameter order (weights, bias per layer).
    pub fn backward(&self, cache: &MlpCache, grad_out: &Tensor) -> Result<Vec<Tensor>, NetworkError> {
        let n = self.weights.len();
        let mut grads = vec![None; 2 * n];
        let mut upstream = grad_out.clone();
        for l in (0..n).rev() {
            let g = dense_backward(&cache.layers[l], &self.weights[l], &upstream, l > 0)?;
            grads[2 * l] = Some(g.weights);
            grads[2 * l + 1] = Some(g.bias);
            if let Some(gi) = g.input {
                upstream = gi;
            }
        }
        Ok(grads.into_iter().map(|g| g.expect("every layer visited")).collect())
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| [w, b]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn param_names(&self) -> Vec<String> {
        (0..self.weights.len())
            .flat_map(|l| [format!("dense{l}.weights"), format!("dense{l}.bias")])
            .collect()
    }

    /// Index of the output layer's (weights, bias) in parameter order.
    pub fn head_indices(&self) -> (usize, usize) {
        let l = self.weights.len() - 1;
        (2 * l, 2 * l + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = SeededRng::new(2);
        let mut m = Mlp::new(4, &[3, 2], 3, None, &mut rng);
        for p in m.params_mut() {
            p.data_mut().iter_mut().for_each(|v| *v = rng.uniform_range(-1.0, 1.0));
        }
        let x = [[0.5, -1.0, 0.0, 2.0], [1.0, 1.0, 1.0, 1.0]];
        let flat: Vec<f64> = x.iter().flatten().copied().collect();
        let (out, _) = m.forward(&Tensor::from_vec(&[2, 4], flat).unwrap()).unwrap();
        for (r, row) in x.iter().enumerate() {
            let mut h = row.to_vec();
            for l in 0..3 {
                let (w, b) = (&m.weights[l], &m.biases[l]);
                let n_out = w.shape()[1];
                h = (0..n_out)
                    .map(|o| {
                        let z = b.data()[o] + h.iter().enumerate().map(|(i, v)| v * w.data()[i * n_out + o]).sum::<f64>();
                        if l == 2 {
                            1.0 / (1.0 + (-z).exp())
                        } else {
                            z.max(0.0)
                        }
                    })
                    .collect();
            }
            for o in 0..3 {
                assert!((out.row(r)[o] - h[o]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn encoder_sets_first_layer_width() {
        let enc = MorphognosticEncoder::new(13, 0.5, 4).unwrap();
        let m = Mlp::new(14 * 4, &[8], 3, Some(enc), &mut SeededRng::new(0));
        // 5 intervals plus the current step, 4 wide each.
        assert_eq!(m.widths(), vec![24, 8, 3]);
        assert_eq!(m.head_indices(), (2, 3));
        assert!(matches!(
            m.forward(&Tensor::zeros(&[1, 13 * 4])),
            Err(NetworkError::Layout(_))
        ));
    }
}
