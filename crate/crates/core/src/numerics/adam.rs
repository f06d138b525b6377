use serde::{Deserialize, Serialize};

use super::{NumericsError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Tensor,
    pub v: Tensor,
    pub step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(param_shape: &[usize], config: AdamConfig) -> Self {
        Self {
            m: Tensor::zeros(param_shape),
            v: Tensor::zeros(param_shape),
            step: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step(param: &mut Tensor, grad: &Tensor, state: &mut AdamState) -> Result<(), NumericsError> {
    if param.shape() != grad.shape() || state.m.shape() != param.shape() {
        return Err(NumericsError::Shape(format!(
            "parameter {:?}, gradient {:?}, moments {:?} must agree",
            param.shape(),
            grad.shape(),
            state.m.shape()
        )));
    }
    if !grad.is_finite() {
        return Err(NumericsError::NonFinite("gradient passed to adam_step".into()));
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - beta1.powf(t);
    let c2 = 1.0 - beta2.powf(t);
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for (((p, &g), m), v) in param.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_param_unchanged() {
        let mut p = Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(&[3], AdamConfig::default());
        adam_step(&mut p, &Tensor::zeros(&[3]), &mut s).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Tensor::zeros(&[1]);
        let mut s = AdamState::new(&[1], AdamConfig::default());
        adam_step(&mut p, &Tensor::filled(&[1], 1.0), &mut s).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = −lr·1/(1+1e-8)
        let want = -0.001 / (1.0 + 1e-8);
        assert!((p.data()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn two_constant_steps_follow_scripted_trace() {
        // Hand-scripted trace for g = 0.5 constant, p0 = 1, defaults.
        // step 1: m=0.05 v=0.00025 m̂=0.5 v̂=0.25 → p = 1 − 0.001·0.5/(0.5+1e-8)
        // step 2: m=0.095 v=0.00049975 m̂=0.095/0.19=0.5 v̂=0.00049975/0.001999=0.25
        let mut p = Tensor::filled(&[1], 1.0);
        let mut s = AdamState::new(&[1], AdamConfig::default());
        let g = Tensor::filled(&[1], 0.5);
        adam_step(&mut p, &g, &mut s).unwrap();
        let p1 = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
        assert!((p.data()[0] - p1).abs() < 1e-15);
        adam_step(&mut p, &g, &mut s).unwrap();
        let m = 0.9 * 0.05 + 0.1 * 0.5;
        let v = 0.999 * 0.00025 + 0.001 * 0.25;
        let m_hat = m / (1.0 - 0.9f64 * 0.9);
        let v_hat = v / (1.0 - 0.999f64 * 0.999);
        let p2 = p1 - 0.001 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p.data()[0] - p2).abs() < 1e-15);
        assert_eq!(s.step, 2);
    }

    #[test]
    fn zero_learning_rate_never_changes_params() {
        let mut p = Tensor::from_vec(&[2], vec![0.3, -0.7]).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(&[2], AdamConfig { lr: 0.0, ..AdamConfig::default() });
        for k in 0..10 {
            let g = Tensor::from_vec(&[2], vec![k as f64, -(k as f64) * 0.5]).unwrap();
            adam_step(&mut p, &g, &mut s).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = Tensor::zeros(&[2]);
        let mut s = AdamState::new(&[2], AdamConfig::default());
        let g = Tensor::from_vec(&[2], vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(adam_step(&mut p, &g, &mut s), Err(NumericsError::NonFinite(_))));
        assert_eq!(s.step, 0);
    }
}
