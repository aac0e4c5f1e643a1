use crate::error::{Error, Result};

/// Central-difference gradient `(f(θ + h e_k) − f(θ − h e_k)) / 2h`.
pub fn fd_gradient_oracle<F>(mut f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        probe[k] = theta[k] + h;
        let fp = f(&probe);
        probe[k] = theta[k] - h;
        let fm = f(&probe);
        probe[k] = theta[k];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::numeric(
                "fd_gradient_oracle",
                format!("non-finite evaluation at coordinate {k}"),
            ));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// `‖a − b‖ / max(‖b‖, floor)`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let g = fd_gradient_oracle(|t| t[0], &[0.3], 1e-6).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_is_exactly_zero() {
        let g = fd_gradient_oracle(|_| 4.25, &[1.0, -2.0], 1e-6).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn sine_at_zero() {
        let g = fd_gradient_oracle(|t| t[0].sin(), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_step_and_nan() {
        assert!(fd_gradient_oracle(|t| t[0], &[0.0], 0.0).is_err());
        assert!(fd_gradient_oracle(|t| t[0].ln(), &[0.0], 1e-3).is_err());
    }
}
