use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// `[cos(2πBx); sin(2πBx)]` for an `m × d` row-major frequency matrix.
pub fn fourier_features(x: &[f64], freq: &[f64], dim: usize) -> Result<Vec<f64>> {
    if x.len() != dim || freq.len() % dim.max(1) != 0 {
        return Err(Error::config(format!(
            "fourier features: point has {} coordinates, frequency matrix has {} entries for dimension {dim}",
            x.len(),
            freq.len()
        )));
    }
    let m = freq.len() / dim;
    let mut out = vec![0.0; 2 * m];
    for j in 0..m {
        let theta = TAU * (0..dim).map(|k| freq[j * dim + k] * x[k]).sum::<f64>();
        let (s, c) = theta.sin_cos();
        out[j] = c;
        out[m + j] = s;
    }
    Ok(out)
}

/// All integer tuples in `[0, max_freq]^d` except the origin, lexicographic.
pub fn init_grid_frequencies(max_freq: usize, dim: usize) -> Result<Vec<f64>> {
    if max_freq == 0 {
        return Err(Error::config("grid frequency initialization needs max_freq >= 1"));
    }
    if dim == 0 {
        return Err(Error::config("grid frequency initialization needs dim >= 1"));
    }
    let side = max_freq + 1;
    let total = side.pow(dim as u32);
    let mut out = Vec::with_capacity((total - 1) * dim);
    let mut tuple = vec![0usize; dim];
    for _ in 1..total {
        // advance odometer; last axis fastest
        for k in (0..dim).rev() {
            tuple[k] += 1;
            if tuple[k] < side {
                break;
            }
            tuple[k] = 0;
        }
        out.extend(tuple.iter().map(|&v| v as f64));
    }
    Ok(out)
}

/// `m × d` matrix of i.i.d. `Normal(0, scale²)` draws.
pub fn init_gaussian_frequencies(m: usize, scale: f64, dim: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::config("gaussian frequency initialization needs m >= 1"));
    }
    if !(scale > 0.0) {
        return Err(Error::config(format!("gaussian frequency scale must be positive, got {scale}")));
    }
    let normal = Normal::new(0.0, scale).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m * dim).map(|_| normal.sample(&mut rng)).collect())
}
