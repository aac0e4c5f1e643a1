//! Fourier feature networks with sine hidden layers.
//!
//! All parameters live in one flat vector: the frequency matrix first
//! (`m × d`, row-major), then for each dense layer its weight matrix
//! (`out × in`, row-major) followed by its bias.

mod batch;
pub mod features;
pub(crate) mod gemm;
pub mod multiplier;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::autodiff::{JetBatch, JetOrder, SpatialJet};
use crate::error::{Error, Result};

pub use batch::ParamTape;
pub use features::{fourier_features, init_grid_frequencies, init_gaussian_frequencies};
pub use multiplier::{Multiplier, ScalarJet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    Identity,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FreqInit {
    /// Integer grid `[0, max_freq]^d` without the origin.
    Grid { max_freq: usize },
    /// `features` rows drawn from `Normal(0, scale²)`.
    Gaussian { features: usize, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputInit {
    Zero,
    Normal { std: f64 },
}

/// Architecture and initialization of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub freq_init: FreqInit,
    pub hidden: Vec<usize>,
    pub freq_trainable: bool,
    pub output_init: OutputInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub n_in: usize,
    pub n_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierNet {
    pub dim: usize,
    pub n_freq: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    pub transform: OutputTransform,
    pub freq_trainable: bool,
    pub multiplier: Option<Multiplier>,
    /// Seed the parameters were drawn from.
    pub seed: u64,
    pub params: Vec<f64>,
}

impl FourierNet {
    pub fn new(
        spec: &NetSpec,
        dim: usize,
        outputs: usize,
        transform: OutputTransform,
        multiplier: Option<Multiplier>,
        seed: u64,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::config(format!("network input dimension {dim} not in 1..=3")));
        }
        if outputs == 0 {
            return Err(Error::config("network needs at least one output"));
        }
        if spec.hidden.iter().any(|&w| w == 0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        if let Some(m) = &multiplier {
            if m.max_axis() >= dim {
                return Err(Error::config(format!("multiplier refers to axis {} of a {dim}-d input", m.max_axis())));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let freq = match spec.freq_init {
            FreqInit::Grid { max_freq } => init_grid_frequencies(max_freq, dim)?,
            FreqInit::Gaussian { features, scale } => {
                init_gaussian_frequencies(features, scale, dim, seed ^ 0x9e37_79b9_7f4a_7c15)?
            }
        };
        let n_freq = freq.len() / dim;
        let mut net = FourierNet {
            dim,
            n_freq,
            hidden: spec.hidden.clone(),
            outputs,
            transform,
            freq_trainable: spec.freq_trainable,
            multiplier,
            seed,
            params: Vec::new(),
        };
        let total = net.param_count();
        let mut params = Vec::with_capacity(total);
        params.extend_from_slice(&freq);
        let layers = net.layers();
        let last = layers.len() - 1;
        for (l, shape) in layers.iter().enumerate() {
            if l == last {
                match spec.output_init {
                    OutputInit::Zero => params.extend(std::iter::repeat(0.0).take(shape.n_out * shape.n_in)),
                    OutputInit::Normal { std } => {
                        let normal = Normal::new(0.0, std).map_err(|e| Error::config(e.to_string()))?;
                        params.extend((0..shape.n_out * shape.n_in).map(|_| normal.sample(&mut rng)));
                    }
                }
            } else {
                let a = (6.0 / (shape.n_in + shape.n_out) as f64).sqrt();
                let uniform = Uniform::new_inclusive(-a, a).map_err(|e| Error::config(e.to_string()))?;
                params.extend((0..shape.n_out * shape.n_in).map(|_| uniform.sample(&mut rng)));
            }
            params.extend(std::iter::repeat(0.0).take(shape.n_out));
        }
        debug_assert_eq!(params.len(), total);
        net.params = params;
        Ok(net)
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut out = Vec::with_capacity(self.hidden.len() + 1);
        let mut offset = self.n_freq * self.dim;
        let mut n_in = 2 * self.n_freq;
        for &n_out in self.hidden.iter().chain(std::iter::once(&self.outputs)) {
            out.push(LayerShape {
                n_in,
                n_out,
                weight_offset: offset,
                bias_offset: offset + n_in * n_out,
            });
            offset += n_in * n_out + n_out;
            n_in = n_out;
        }
        out
    }

    pub fn param_count(&self) -> usize {
        let l = self.layers();
        let last = l.last().expect("at least the output layer");
        last.bias_offset + last.n_out
    }

    pub fn freq(&self) -> &[f64] {
        &self.params[..self.n_freq * self.dim]
    }

    /// Parameter range of the final dense layer (weights then bias).
    pub fn output_layer_range(&self) -> std::ops::Range<usize> {
        let l = *self.layers().last().unwrap();
        l.weight_offset..l.bias_offset + l.n_out
    }

    /// Zeroes the final layer; earlier layers are untouched.
    pub fn init_output_zero(&mut self) {
        let r = self.output_layer_range();
        self.params[r].iter_mut().for_each(|v| *v = 0.0);
    }

    /// Mask of parameters updated by training (frequencies only if trainable).
    pub fn trainable_mask(&self) -> Vec<bool> {
        let nf = self.n_freq * self.dim;
        (0..self.params.len()).map(|k| k >= nf || self.freq_trainable).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_freq == 0 || !(1..=3).contains(&self.dim) || self.outputs == 0 {
            return Err(Error::config("network has empty frequency matrix, bad dimension or no outputs"));
        }
        if self.params.len() != self.param_count() {
            return Err(Error::config(format!(
                "network parameter vector has {} entries, layout needs {}",
                self.params.len(),
                self.param_count()
            )));
        }
        Ok(())
    }

    fn check_points(&self, points: &[f64]) -> Result<usize> {
        if points.len() % self.dim != 0 {
            return Err(Error::config(format!(
                "point buffer of length {} is not a multiple of dimension {}",
                points.len(),
                self.dim
            )));
        }
        Ok(points.len() / self.dim)
    }

    /// Outputs at one point.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::config(format!("point has {} coordinates, network expects {}", x.len(), self.dim)));
        }
        let b = self.eval(x, JetOrder::Value)?;
        Ok(b.data)
    }

    /// Outputs with first and diagonal second derivatives at one point.
    pub fn forward_jet(&self, x: &[f64]) -> Result<SpatialJet> {
        if x.len() != self.dim {
            return Err(Error::config(format!("point has {} coordinates, network expects {}", x.len(), self.dim)));
        }
        Ok(self.eval(x, JetOrder::Hessian)?.jet(0))
    }

    /// Jets at every point of a flat `n × d` buffer.
    pub fn eval(&self, points: &[f64], order: JetOrder) -> Result<JetBatch> {
        let n = self.check_points(points)?;
        Ok(batch::forward(self, points, n, order, false).0)
    }

    /// As [`eval`](Self::eval), keeping what [`backward`](Self::backward) needs.
    pub fn eval_recorded(&self, points: &[f64], order: JetOrder) -> Result<(JetBatch, ParamTape)> {
        let n = self.check_points(points)?;
        let (jets, tape) = batch::forward(self, points, n, order, true);
        Ok((jets, tape.expect("recording requested")))
    }

    /// Jets of the last hidden layer (the input of the output layer).
    pub fn eval_last_hidden(&self, points: &[f64], order: JetOrder) -> Result<JetBatch> {
        let n = self.check_points(points)?;
        Ok(batch::forward_hidden(self, points, n, order))
    }

    /// Parameter gradient of `Σ cotangent · output jets`.
    pub fn backward(&self, tape: &ParamTape, cotangent: &JetBatch) -> Result<Vec<f64>> {
        batch::backward(self, tape, cotangent)
    }

    pub fn checksum(&self) -> u64 {
        // FNV-1a over the parameter bits
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.params {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(max_freq: usize, hidden: Vec<usize>) -> NetSpec {
        NetSpec {
            freq_init: FreqInit::Grid { max_freq },
            hidden,
            freq_trainable: true,
            output_init: OutputInit::Zero,
        }
    }

    #[test]
    fn layout_sizes() {
        let net = FourierNet::new(&spec(1, vec![4, 5]), 2, 3, OutputTransform::Identity, None, 1).unwrap();
        // freq 3x2, 6->4, 4->5, 5->3
        assert_eq!(net.param_count(), 6 + (24 + 4) + (20 + 5) + (15 + 3));
        assert_eq!(net.params.len(), net.param_count());
        assert_eq!(net.output_layer_range(), (6 + 28 + 25)..net.param_count());
    }

    #[test]
    fn zero_output_is_constant() {
        let net = FourierNet::new(&spec(2, vec![8]), 2, 2, OutputTransform::Identity, None, 3).unwrap();
        assert_eq!(net.forward(&[0.3, -0.2]).unwrap(), vec![0.0, 0.0]);
        let topo = FourierNet::new(&spec(2, vec![8]), 2, 1, OutputTransform::Sigmoid, None, 3).unwrap();
        assert_eq!(topo.forward(&[0.9, 0.1]).unwrap(), vec![0.5]);
    }

    #[test]
    fn zero_network_outputs_bias() {
        let mut net = FourierNet::new(&spec(1, vec![3]), 2, 2, OutputTransform::Identity, None, 3).unwrap();
        net.params.iter_mut().for_each(|v| *v = 0.0);
        let r = net.output_layer_range();
        net.params[r.end - 2] = 1.5;
        net.params[r.end - 1] = -2.0;
        let jet = net.forward_jet(&[0.1, 0.2]).unwrap();
        assert_eq!(jet.value, vec![1.5, -2.0]);
        assert!(jet.grad.iter().flatten().all(|&g| g == 0.0));
        assert!(jet.hess_diag.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn grid_init_is_deterministic() {
        let a = FourierNet::new(&spec(3, vec![6]), 2, 1, OutputTransform::Sigmoid, None, 9).unwrap();
        let b = FourierNet::new(&spec(3, vec![6]), 2, 1, OutputTransform::Sigmoid, None, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
    }

    #[test]
    fn rejects_bad_shapes() {
        let net = FourierNet::new(&spec(1, vec![3]), 2, 1, OutputTransform::Identity, None, 0).unwrap();
        assert!(net.forward(&[0.0]).is_err());
        assert!(net.eval(&[0.0, 1.0, 2.0], JetOrder::Value).is_err());
        let bad = Multiplier::Affine { axis: 2, slope: 1.0, intercept: 0.0 };
        assert!(FourierNet::new(&spec(1, vec![3]), 2, 1, OutputTransform::Identity, Some(bad), 0).is_err());
    }
}
