use crate::numerics::{
    dense_backward, dense_forward, glorot_uniform, matmul_a_bt_acc, matmul_acc, matmul_at_b_acc, Activation,
    DenseCache, SeededRng, Tensor,
};

use super::NetworkError;

/// Dilated causal 1-D convolution. Weights are `[kernel × in × out]`; tap
/// `j` reads the input `(kernel−1−j)·dilation` steps back, so only current
/// and earlier steps contribute (zero left padding).
#[derive(Clone, Debug)]
pub struct CausalConv {
    pub(crate) weights: Tensor,
    pub(crate) bias: Tensor,
    pub(crate) dilation: usize,
}

impl CausalConv {
    fn new(kernel: usize, c_in: usize, c_out: usize, dilation: usize, rng: &mut SeededRng) -> Self {
        Self {
            weights: glorot_uniform(&[kernel, c_in, c_out], kernel * c_in, kernel * c_out, rng),
            bias: Tensor::zeros(&[c_out]),
            dilation,
        }
    }

    fn dims(&self) -> (usize, usize, usize) {
        let s = self.weights.shape();
        (s[0], s[1], s[2])
    }

    /// `x` is `[paths × steps × in]` flattened; returns the pre-activation `[paths × steps × out]`.
    fn forward(&self, x: &[f64], paths: usize, steps: usize) -> Vec<f64> {
        let (k, c_in, c_out) = self.dims();
        let mut out = vec![0.0; paths * steps * c_out];
        for row in out.chunks_mut(c_out) {
            row.copy_from_slice(self.bias.data());
        }
        for j in 0..k {
            let shift = (k - 1 - j) * self.dilation;
            if shift >= steps {
                continue;
            }
            let n = steps - shift;
            let w = &self.weights.data()[j * c_in * c_out..(j + 1) * c_in * c_out];
            for p in 0..paths {
                let xs = &x[p * steps * c_in..(p * steps + n) * c_in];
                let os = &mut out[(p * steps + shift) * c_out..(p + 1) * steps * c_out];
                matmul_acc(xs, w, os, n, c_in, c_out);
            }
        }
        out
    }

    /// Accumulates weight/bias gradients; returns the input gradient when asked.
    fn backward(
        &self,
        x: &[f64],
        d_out: &[f64],
        paths: usize,
        steps: usize,
        d_w: &mut [f64],
        d_b: &mut [f64],
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let (k, c_in, c_out) = self.dims();
        for row in d_out.chunks(c_out) {
            for (b, d) in d_b.iter_mut().zip(row) {
                *b += d;
            }
        }
        let mut d_x = want_input.then(|| vec![0.0; paths * steps * c_in]);
        for j in 0..k {
            let shift = (k - 1 - j) * self.dilation;
            if shift >= steps {
                continue;
            }
            let n = steps - shift;
            let w = &self.weights.data()[j * c_in * c_out..(j + 1) * c_in * c_out];
            let dw = &mut d_w[j * c_in * c_out..(j + 1) * c_in * c_out];
            for p in 0..paths {
                let xs = &x[p * steps * c_in..(p * steps + n) * c_in];
                let ds = &d_out[(p * steps + shift) * c_out..(p + 1) * steps * c_out];
                matmul_at_b_acc(xs, ds, dw, n, c_in, c_out);
                if let Some(dx) = d_x.as_mut() {
                    let dxs = &mut dx[p * steps * c_in..(p * steps + n) * c_in];
                    matmul_a_bt_acc(ds, w, dxs, n, c_out, c_in);
                }
            }
        }
        d_x
    }
}

/// `relu(residual(x) + relu(conv2(relu(conv1(x)))))`, with a 1×1 convolution
/// on the residual path when the channel count changes.
#[derive(Clone, Debug)]
pub struct ResidualBlock {
    pub(crate) conv1: CausalConv,
    pub(crate) conv2: CausalConv,
    pub(crate) downsample: Option<CausalConv>,
}

struct BlockCache {
    input: Vec<f64>,
    a1: Vec<f64>,
    z1: Vec<f64>,
    z2: Vec<f64>,
    sum: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Tcn {
    pub(crate) blocks: Vec<ResidualBlock>,
    pub(crate) head_w: Tensor,
    pub(crate) head_b: Tensor,
}

pub struct TcnCache {
    paths: usize,
    steps: usize,
    blocks: Vec<BlockCache>,
    head: DenseCache,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn relu_grad(d: &mut [f64], pre: &[f64]) {
    for (g, &z) in d.iter_mut().zip(pre) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

impl Tcn {
    pub fn new(
        input_width: usize,
        kernel: usize,
        dilations: &[usize],
        filters: usize,
        output_width: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let mut blocks = Vec::with_capacity(dilations.len());
        let mut c_in = input_width;
        for &d in dilations {
            let conv1 = CausalConv::new(kernel, c_in, filters, d, rng);
            let conv2 = CausalConv::new(kernel, filters, filters, d, rng);
            let downsample = (c_in != filters).then(|| CausalConv::new(1, c_in, filters, 1, rng));
            blocks.push(ResidualBlock { conv1, conv2, downsample });
            c_in = filters;
        }
        Self {
            blocks,
            head_w: glorot_uniform(&[filters, output_width], filters, output_width, rng),
            head_b: Tensor::zeros(&[output_width]),
        }
    }

    pub fn forward(&self, inputs: &Tensor) -> Result<(Tensor, TcnCache), NetworkError> {
        let (paths, steps, width) = match inputs.shape() {
            [p, t, w] => (*p, *t, *w),
            s => return Err(NetworkError::Layout(format!("TCN expects [paths, steps, width], got {s:?}"))),
        };
        let expected = self.blocks[0].conv1.dims().1;
        if width != expected {
            return Err(NetworkError::Layout(format!("TCN input width {width}, expected {expected}")));
        }
        let mut x = inputs.data().to_vec();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let z1 = block.conv1.forward(&x, paths, steps);
            let a1 = relu(&z1);
            let z2 = block.conv2.forward(&a1, paths, steps);
            let a2 = relu(&z2);
            let mut sum = match &block.downsample {
                Some(ds) => ds.forward(&x, paths, steps),
                None => x.clone(),
            };
            for (s, a) in sum.iter_mut().zip(&a2) {
                *s += a;
            }
            let out = relu(&sum);
            caches.push(BlockCache {
                input: std::mem::replace(&mut x, out),
                a1,
                z1,
                z2,
                sum,
            });
        }
        let filters = self.head_w.shape()[0];
        let feats = Tensor::from_vec(&[paths * steps, filters], x)?;
        let (out, head) = dense_forward(&feats, &self.head_w, &self.head_b, Activation::Linear)?;
        let v = self.head_w.shape()[1];
        Ok((
            out.reshape(&[paths, steps, v])?,
            TcnCache {
                paths,
                steps,
                blocks: caches,
                head,
            },
        ))
    }

    pub fn backward(&self, cache: &TcnCache, grad_out: &Tensor) -> Result<Vec<Tensor>, NetworkError> {
        let (paths, steps) = (cache.paths, cache.steps);
        let v = self.head_w.shape()[1];
        let grad_out = grad_out.clone().reshape(&[paths * steps, v])?;
        let head = dense_backward(&cache.head, &self.head_w, &grad_out, true)?;
        let mut d_x = head.input.expect("requested input gradient").into_data();

        let mut block_grads: Vec<Vec<Tensor>> = Vec::with_capacity(self.blocks.len());
        for (bi, (block, bc)) in self.blocks.iter().zip(&cache.blocks).enumerate().rev() {
            // through the output relu
            let mut d_sum = d_x;
            relu_grad(&mut d_sum, &bc.sum);
            let mut d_a2 = d_sum.clone();
            relu_grad(&mut d_a2, &bc.z2);

            let mut g2w = vec![0.0; block.conv2.weights.len()];
            let mut g2b = vec![0.0; block.conv2.bias.len()];
            let mut d_a1 = block
                .conv2
                .backward(&bc.a1, &d_a2, paths, steps, &mut g2w, &mut g2b, true)
                .expect("input gradient");
            relu_grad(&mut d_a1, &bc.z1);

            let want_input = bi > 0;
            let mut g1w = vec![0.0; block.conv1.weights.len()];
            let mut g1b = vec![0.0; block.conv1.bias.len()];
            let d_in_conv = block
                .conv1
                .backward(&bc.input, &d_a1, paths, steps, &mut g1w, &mut g1b, want_input);

            let mut grads = vec![
                Tensor::from_vec(block.conv1.weights.shape(), g1w)?,
                Tensor::from_vec(block.conv1.bias.shape(), g1b)?,
                Tensor::from_vec(block.conv2.weights.shape(), g2w)?,
                Tensor::from_vec(block.conv2.bias.shape(), g2b)?,
            ];
            let d_in_res = match &block.downsample {
                Some(ds) => {
                    let mut gdw = vec![0.0; ds.weights.len()];
                    let mut gdb = vec![0.0; ds.bias.len()];
                    let d = ds.backward(&bc.input, &d_sum, paths, steps, &mut gdw, &mut gdb, want_input);
                    grads.push(Tensor::from_vec(ds.weights.shape(), gdw)?);
                    grads.push(Tensor::from_vec(ds.bias.shape(), gdb)?);
                    d
                }
                None => want_input.then(|| d_sum.clone()),
            };
            block_grads.push(grads);
            d_x = match (d_in_conv, d_in_res) {
                (Some(mut a), Some(b)) => {
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x += y;
                    }
                    a
                }
                _ => Vec::new(),
            };
        }
        block_grads.reverse();
        let mut out: Vec<Tensor> = block_grads.into_iter().flatten().collect();
        out.push(head.weights);
        out.push(head.bias);
        Ok(out)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut v = Vec::new();
        for b in &self.blocks {
            v.extend([&b.conv1.weights, &b.conv1.bias, &b.conv2.weights, &b.conv2.bias]);
            if let Some(ds) = &b.downsample {
                v.extend([&ds.weights, &ds.bias]);
            }
        }
        v.push(&self.head_w);
        v.push(&self.head_b);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = Vec::new();
        for b in &mut self.blocks {
            v.push(&mut b.conv1.weights);
            v.push(&mut b.conv1.bias);
            v.push(&mut b.conv2.weights);
            v.push(&mut b.conv2.bias);
            if let Some(ds) = &mut b.downsample {
                v.push(&mut ds.weights);
                v.push(&mut ds.bias);
            }
        }
        v.push(&mut self.head_w);
        v.push(&mut self.head_b);
        v
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for n in ["conv1.weights", "conv1.bias", "conv2.weights", "conv2.bias"] {
                v.push(format!("block{i}.{n}"));
            }
            if b.downsample.is_some() {
                v.push(format!("block{i}.downsample.weights"));
                v.push(format!("block{i}.downsample.bias"));
            }
        }
        v.push("head.weights".into());
        v.push("head.bias".into());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_tcn(width: usize, kernel: usize, dilations: &[usize], filters: usize, out: usize, seed: u64) -> Tcn {
        let mut rng = SeededRng::new(seed);
        let mut t = Tcn::new(width, kernel, dilations, filters, out, &mut rng);
        for p in t.params_mut() {
            p.data_mut().iter_mut().for_each(|v| *v = rng.uniform_range(-0.7, 0.7));
        }
        t
    }

    /// Direct causal convolution over one sequence `x[t][c]`.
    fn conv(c: &CausalConv, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (k, c_in, c_out) = c.dims();
        let w = |j: usize, i: usize, o: usize| c.weights.data()[(j * c_in + i) * c_out + o];
        (0..x.len())
            .map(|t| {
                (0..c_out)
                    .map(|o| {
                        let mut acc = c.bias.data()[o];
                        for j in 0..k {
                            let back = (k - 1 - j) * c.dilation;
                            if back <= t {
                                for i in 0..c_in {
                                    acc += x[t - back][i] * w(j, i, o);
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    fn oracle(net: &Tcn, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let relu = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.into_iter().map(|r| r.into_iter().map(|v| v.max(0.0)).collect()).collect()
        };
        let mut h = x.to_vec();
        for b in &net.blocks {
            let y = relu(conv(&b.conv2, &relu(conv(&b.conv1, &h))));
            let res = match &b.downsample {
                Some(d) => conv(d, &h),
                None => h.clone(),
            };
            h = relu(
                res.iter()
                    .zip(&y)
                    .map(|(r, y)| r.iter().zip(y).map(|(a, b)| a + b).collect())
                    .collect(),
            );
        }
        let (f, v) = (net.head_w.shape()[0], net.head_w.shape()[1]);
        h.iter()
            .map(|r| {
                (0..v)
                    .map(|o| net.head_b.data()[o] + (0..f).map(|i| r[i] * net.head_w.data()[i * v + o]).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_scalar_oracle() {
        let (steps, width) = (5, 3);
        let net = random_tcn(width, 2, &[1, 2], 4, 3, 3);
        let mut rng = SeededRng::new(9);
        let x: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..width).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
            .collect();
        let flat: Vec<f64> = x.iter().flatten().copied().collect();
        let (out, _) = net.forward(&Tensor::from_vec(&[1, steps, width], flat).unwrap()).unwrap();
        let want = oracle(&net, &x);
        for t in 0..steps {
            for o in 0..3 {
                assert!((out.data()[t * 3 + o] - want[t][o]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_residual_when_widths_match() {
        let net = random_tcn(4, 2, &[1, 2, 4], 4, 2, 0);
        assert!(net.blocks.iter().all(|b| b.downsample.is_none()));
        let net = random_tcn(3, 2, &[1, 2, 4], 4, 2, 0);
        assert!(net.blocks[0].downsample.is_some());
        assert!(net.blocks[1..].iter().all(|b| b.downsample.is_none()));
        assert_eq!(net.params().len(), net.param_names().len());
    }

    #[test]
    fn later_inputs_never_reach_earlier_outputs() {
        let net = random_tcn(3, 3, &[1, 2, 4], 5, 2, 4);
        let steps = 9;
        let mut rng = SeededRng::new(1);
        let base: Vec<f64> = (0..steps * 3).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let (ref_out, _) = net.forward(&Tensor::from_vec(&[1, steps, 3], base.clone()).unwrap()).unwrap();
        for k in 0..steps {
            let mut x = base.clone();
            x[k * 3 + 1] += 5.0;
            let (out, _) = net.forward(&Tensor::from_vec(&[1, steps, 3], x).unwrap()).unwrap();
            for t in 0..k {
                for o in 0..2 {
                    let (a, b) = (out.data()[t * 2 + o], ref_out.data()[t * 2 + o]);
                    assert_eq!(a.to_bits(), b.to_bits(), "step {t} moved after perturbing {k}");
                }
            }
        }
    }
}
