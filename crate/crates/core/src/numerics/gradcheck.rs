use super::{NumericsError, Tensor};

/// Central finite-difference gradient of a scalar function at `x`.
pub fn finite_difference_grad<F>(mut f: F, x: &Tensor, h: f64) -> Result<Tensor, NumericsError>
where
    F: FnMut(&Tensor) -> Result<f64, NumericsError>,
{
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NumericsError::NonFinite(format!(
                "function value at element {i} (f+ = {plus}, f- = {minus})"
            )));
        }
        grad.data_mut()[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Element-wise relative error `|a−b| / max(|a|, |b|, 1e-8)`, maximized over all elements.
pub fn max_relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let g = finite_difference_grad(|t| Ok(t.data().iter().map(|v| v * v).sum()), &x, 1e-6).unwrap();
        assert!((g.data()[0] - 2.0).abs() < 1e-6);
        assert!((g.data()[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let x = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let g = finite_difference_grad(|_| Ok(3.25), &x, 1e-6).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn non_finite_value_is_reported() {
        let x = Tensor::from_vec(&[1], vec![0.0]).unwrap();
        let r = finite_difference_grad(|t| Ok(1.0 / t.data()[0].max(0.0)), &x, 1e-6);
        assert!(matches!(r, Err(NumericsError::NonFinite(_))));
    }
}
