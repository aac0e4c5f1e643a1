use serde::{Deserialize, Serialize};

/// Closed-form factor multiplying a network's outputs so that they vanish on
/// part of the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Multiplier {
    /// `slope * x[axis] + intercept`
    Affine { axis: usize, slope: f64, intercept: f64 },
    /// `tanh(slope * x[axis] + intercept)`
    Tanh { axis: usize, slope: f64, intercept: f64 },
    Product { factors: Vec<Multiplier> },
}

/// Value, gradient and diagonal second derivatives of a scalar function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Multiplier {
    pub fn max_axis(&self) -> usize {
        match self {
            Multiplier::Affine { axis, .. } | Multiplier::Tanh { axis, .. } => *axis,
            Multiplier::Product { factors } => factors.iter().map(Multiplier::max_axis).max().unwrap_or(0),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Multiplier::Affine { axis, slope, intercept } => slope * x[*axis] + intercept,
            Multiplier::Tanh { axis, slope, intercept } => (slope * x[*axis] + intercept).tanh(),
            Multiplier::Product { factors } => factors.iter().map(|f| f.value(x)).product(),
        }
    }

    pub fn jet(&self, x: &[f64]) -> ScalarJet {
        let d = x.len();
        match self {
            Multiplier::Affine { axis, slope, intercept } => {
                let mut grad = vec![0.0; d];
                grad[*axis] = *slope;
                ScalarJet {
                    value: slope * x[*axis] + intercept,
                    grad,
                    hess: vec![0.0; d],
                }
            }
            Multiplier::Tanh { axis, slope, intercept } => {
                let t = (slope * x[*axis] + intercept).tanh();
                let sech2 = 1.0 - t * t;
                let mut grad = vec![0.0; d];
                let mut hess = vec![0.0; d];
                grad[*axis] = slope * sech2;
                hess[*axis] = -2.0 * slope * slope * t * sech2;
                ScalarJet { value: t, grad, hess }
            }
            Multiplier::Product { factors } => {
                let mut acc = ScalarJet {
                    value: 1.0,
                    grad: vec![0.0; d],
                    hess: vec![0.0; d],
                };
                for f in factors {
                    let g = f.jet(x);
                    for i in 0..d {
                        acc.hess[i] = acc.hess[i] * g.value + 2.0 * acc.grad[i] * g.grad[i] + acc.value * g.hess[i];
                        acc.grad[i] = acc.grad[i] * g.value + acc.value * g.grad[i];
                    }
                    acc.value *= g.value;
                }
                acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(m: &Multiplier, x: &[f64]) {
        let j = m.jet(x);
        let h = 1e-4;
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let (fp, f0, fm) = (m.value(&xp), m.value(x), m.value(&xm));
            assert!((j.grad[i] - (fp - fm) / (2.0 * h)).abs() < 1e-6);
            assert!((j.hess[i] - (fp - 2.0 * f0 + fm) / (h * h)).abs() < 1e-4);
        }
        assert_eq!(j.value, m.value(x));
    }

    #[test]
    fn clamp_both_ends_matches_differences() {
        let m = Multiplier::Product {
            factors: vec![
                Multiplier::Tanh { axis: 0, slope: 3.0, intercept: 3.0 },
                Multiplier::Tanh { axis: 0, slope: -3.0, intercept: 3.0 },
                Multiplier::Affine { axis: 1, slope: 2.0, intercept: 0.5 },
            ],
        };
        fd_check(&m, &[0.3, -0.1]);
        fd_check(&m, &[-0.8, 0.4]);
    }

    #[test]
    fn vanishes_on_clamped_edge() {
        let m = Multiplier::Affine { axis: 0, slope: 1.0, intercept: 1.0 };
        assert_eq!(m.value(&[-1.0, 0.3]), 0.0);
        let t = Multiplier::Tanh { axis: 0, slope: 100.0, intercept: 100.0 };
        assert_eq!(t.value(&[-1.0, 0.0]), 0.0);
    }
}
