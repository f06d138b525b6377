use crate::numerics::{
    dense_backward, dense_forward, glorot_uniform, matmul_a_bt_acc, matmul_acc, matmul_at_b_acc, sigmoid,
    Activation, DenseCache, SeededRng, Tensor,
};

use super::NetworkError;

/// Single-layer LSTM (forget gate, no peepholes) with a linear head applied at every step.
///
/// Gate pre-activations are `z = x·Wx + h·Wh + b`, laid out as four blocks
/// of `units` columns in the order input, forget, candidate, output:
///
/// ```text
/// i = σ(z_i)  f = σ(z_f)  g = tanh(z_g)  o = σ(z_o)
/// c_t = f ⊙ c_{t−1} + i ⊙ g
/// h_t = o ⊙ tanh(c_t)
/// ```
#[derive(Clone, Debug)]
pub struct Lstm {
    pub(crate) units: usize,
    pub(crate) w_x: Tensor,
    pub(crate) w_h: Tensor,
    pub(crate) bias: Tensor,
    pub(crate) head_w: Tensor,
    pub(crate) head_b: Tensor,
}

/// Gate activations and states at one timestep, `[paths × units]` each.
#[derive(Clone, Debug)]
pub struct LstmGates {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
    pub cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

pub struct LstmCache {
    paths: usize,
    steps: usize,
    x: Vec<Vec<f64>>,
    gates: Vec<LstmGates>,
    head: DenseCache,
}

impl Lstm {
    pub fn new(input_width: usize, units: usize, output_width: usize, rng: &mut SeededRng) -> Self {
        let g = 4 * units;
        let mut bias = Tensor::zeros(&[g]);
        // Forget-gate bias starts at 1 so early gradients flow through the cell.
        bias.data_mut()[units..2 * units].iter_mut().for_each(|b| *b = 1.0);
        Self {
            units,
            w_x: glorot_uniform(&[input_width, g], input_width, g, rng),
            w_h: glorot_uniform(&[units, g], units, g, rng),
            bias,
            head_w: glorot_uniform(&[units, output_width], units, output_width, rng),
            head_b: Tensor::zeros(&[output_width]),
        }
    }

    /// Runs the recurrence over `inputs [paths × steps × width]`; returns outputs
    /// `[paths × steps × out]` and the per-step gate history.
    pub fn forward(&self, inputs: &Tensor) -> Result<(Tensor, LstmCache), NetworkError> {
        let (paths, steps, width) = match inputs.shape() {
            [p, t, w] => (*p, *t, *w),
            s => return Err(NetworkError::Layout(format!("LSTM expects [paths, steps, width], got {s:?}"))),
        };
        if width != self.w_x.shape()[0] {
            return Err(NetworkError::Layout(format!(
                "LSTM input width {width}, expected {}",
                self.w_x.shape()[0]
            )));
        }
        let h_n = self.units;
        let g_n = 4 * h_n;
        let mut h = vec![0.0; paths * h_n];
        let mut c = vec![0.0; paths * h_n];
        let mut xs = Vec::with_capacity(steps);
        let mut gates = Vec::with_capacity(steps);
        let mut hidden_all = vec![0.0; paths * steps * h_n];
        for t in 0..steps {
            let mut x_t = vec![0.0; paths * width];
            for p in 0..paths {
                let src = (p * steps + t) * width;
                x_t[p * width..(p + 1) * width].copy_from_slice(&inputs.data()[src..src + width]);
            }
            let mut z = vec![0.0; paths * g_n];
            for row in z.chunks_mut(g_n) {
                row.copy_from_slice(self.bias.data());
            }
            matmul_acc(&x_t, self.w_x.data(), &mut z, paths, width, g_n);
            matmul_acc(&h, self.w_h.data(), &mut z, paths, h_n, g_n);

            let mut st = LstmGates {
                input: vec![0.0; paths * h_n],
                forget: vec![0.0; paths * h_n],
                candidate: vec![0.0; paths * h_n],
                output: vec![0.0; paths * h_n],
                cell: vec![0.0; paths * h_n],
                hidden: vec![0.0; paths * h_n],
            };
            for p in 0..paths {
                let zr = &z[p * g_n..(p + 1) * g_n];
                for u in 0..h_n {
                    let k = p * h_n + u;
                    let i = sigmoid(zr[u]);
                    let f = sigmoid(zr[h_n + u]);
                    let g = zr[2 * h_n + u].tanh();
                    let o = sigmoid(zr[3 * h_n + u]);
                    let cell = f * c[k] + i * g;
                    let hid = o * cell.tanh();
                    st.input[k] = i;
                    st.forget[k] = f;
                    st.candidate[k] = g;
                    st.output[k] = o;
                    st.cell[k] = cell;
                    st.hidden[k] = hid;
                }
            }
            c.copy_from_slice(&st.cell);
            h.copy_from_slice(&st.hidden);
            for p in 0..paths {
                let dst = (p * steps + t) * h_n;
                hidden_all[dst..dst + h_n].copy_from_slice(&h[p * h_n..(p + 1) * h_n]);
            }
            xs.push(x_t);
            gates.push(st);
        }
        let hidden_all = Tensor::from_vec(&[paths * steps, h_n], hidden_all)?;
        let (out, head) = dense_forward(&hidden_all, &self.head_w, &self.head_b, Activation::Linear)?;
        let v = self.head_w.shape()[1];
        let out = out.reshape(&[paths, steps, v])?;
        Ok((
            out,
            LstmCache {
                paths,
                steps,
                x: xs,
                gates,
                head,
            },
        ))
    }

    /// Backpropagation through time over the full sequence. Gradients follow
    /// [`Lstm::params`] order.
    pub fn backward(&self, cache: &LstmCache, grad_out: &Tensor) -> Result<Vec<Tensor>, NetworkError> {
        let (paths, steps) = (cache.paths, cache.steps);
        let h_n = self.units;
        let g_n = 4 * h_n;
        let width = self.w_x.shape()[0];
        let v = self.head_w.shape()[1];
        let grad_out = grad_out.clone().reshape(&[paths * steps, v])?;
        let head = dense_backward(&cache.head, &self.head_w, &grad_out, true)?;
        let d_hidden_all = head.input.expect("requested input gradient");

        let mut d_wx = vec![0.0; width * g_n];
        let mut d_wh = vec![0.0; h_n * g_n];
        let mut d_b = vec![0.0; g_n];
        let mut dh_next = vec![0.0; paths * h_n];
        let mut dc_next = vec![0.0; paths * h_n];
        let zeros = vec![0.0; paths * h_n];
        let mut dz = vec![0.0; paths * g_n];
        for t in (0..steps).rev() {
            let st = &cache.gates[t];
            let c_prev = if t > 0 { &cache.gates[t - 1].cell } else { &zeros };
            let h_prev = if t > 0 { &cache.gates[t - 1].hidden } else { &zeros };
            for p in 0..paths {
                let src = (p * steps + t) * h_n;
                for u in 0..h_n {
                    let k = p * h_n + u;
                    let dh = d_hidden_all.data()[src + u] + dh_next[k];
                    let (i, f, g, o) = (st.input[k], st.forget[k], st.candidate[k], st.output[k]);
                    let tc = st.cell[k].tanh();
                    let d_o = dh * tc;
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                    let d_i = dc * g;
                    let d_g = dc * i;
                    let d_f = dc * c_prev[k];
                    dc_next[k] = dc * f;
                    let row = &mut dz[p * g_n..(p + 1) * g_n];
                    row[u] = d_i * i * (1.0 - i);
                    row[h_n + u] = d_f * f * (1.0 - f);
                    row[2 * h_n + u] = d_g * (1.0 - g * g);
                    row[3 * h_n + u] = d_o * o * (1.0 - o);
                }
            }
            matmul_at_b_acc(&cache.x[t], &dz, &mut d_wx, paths, width, g_n);
            matmul_at_b_acc(h_prev, &dz, &mut d_wh, paths, h_n, g_n);
            for row in dz.chunks(g_n) {
                for (b, d) in d_b.iter_mut().zip(row) {
                    *b += d;
                }
            }
            dh_next.iter_mut().for_each(|x| *x = 0.0);
            matmul_a_bt_acc(&dz, self.w_h.data(), &mut dh_next, paths, g_n, h_n);
        }
        Ok(vec![
            Tensor::from_vec(&[width, g_n], d_wx)?,
            Tensor::from_vec(&[h_n, g_n], d_wh)?,
            Tensor::from_vec(&[g_n], d_b)?,
            head.weights,
            head.bias,
        ])
    }

    /// Gate history for inspection, one entry per timestep.
    pub fn gate_trace(&self, inputs: &Tensor) -> Result<Vec<LstmGates>, NetworkError> {
        Ok(self.forward(inputs)?.1.gates)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_x, &self.w_h, &self.bias, &self.head_w, &self.head_b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_x,
            &mut self.w_h,
            &mut self.bias,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn param_names(&self) -> Vec<String> {
        ["lstm.w_x", "lstm.w_h", "lstm.bias", "head.weights", "head.bias"]
            .into_iter()
            .map(String::from)
            .collect()
    }
}
