//! Spatial jets: value, gradient and diagonal Hessian of vector-valued fields.

use crate::error::{Error, Result};

/// Derivative order carried by a jet batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetOrder {
    Value,
    Gradient,
    Hessian,
}

impl JetOrder {
    /// Rows per point: the value row, then `d` gradient rows, then `d`
    /// second-derivative rows.
    pub fn rows(self, dim: usize) -> usize {
        match self {
            JetOrder::Value => 1,
            JetOrder::Gradient => 1 + dim,
            JetOrder::Hessian => 1 + 2 * dim,
        }
    }
}

/// Jet of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialJet {
    pub value: Vec<f64>,
    /// `grad[c][i] = ∂ output_c / ∂ x_i`
    pub grad: Vec<Vec<f64>>,
    /// `hess_diag[c][i] = ∂² output_c / ∂ x_i²`
    pub hess_diag: Vec<Vec<f64>>,
}

impl SpatialJet {
    pub fn channels(&self) -> usize {
        self.value.len()
    }

    pub fn dim(&self) -> usize {
        self.grad.first().map_or(0, Vec::len)
    }

    pub fn laplacian(&self, c: usize) -> f64 {
        self.hess_diag[c].iter().sum()
    }
}

/// Jets of many points stored as one row-major matrix.
///
/// Row `p * rows_per_point + r` holds derivative row `r` of point `p`
/// (see [`JetOrder::rows`]); there is one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct JetBatch {
    pub points: usize,
    pub dim: usize,
    pub order: JetOrder,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl JetBatch {
    pub fn zeros(points: usize, dim: usize, order: JetOrder, channels: usize) -> Self {
        JetBatch {
            points,
            dim,
            order,
            channels,
            data: vec![0.0; points * order.rows(dim) * channels],
        }
    }

    pub fn rows_per_point(&self) -> usize {
        self.order.rows(self.dim)
    }

    pub fn total_rows(&self) -> usize {
        self.points * self.rows_per_point()
    }

    #[inline]
    pub fn index(&self, p: usize, row: usize, c: usize) -> usize {
        (p * self.rows_per_point() + row) * self.channels + c
    }

    #[inline]
    pub fn value(&self, p: usize, c: usize) -> f64 {
        self.data[self.index(p, 0, c)]
    }

    #[inline]
    pub fn grad(&self, p: usize, c: usize, i: usize) -> f64 {
        debug_assert!(self.order >= JetOrder::Gradient);
        self.data[self.index(p, 1 + i, c)]
    }

    #[inline]
    pub fn hess(&self, p: usize, c: usize, i: usize) -> f64 {
        debug_assert!(self.order == JetOrder::Hessian);
        self.data[self.index(p, 1 + self.dim + i, c)]
    }

    pub fn laplacian(&self, p: usize, c: usize) -> f64 {
        (0..self.dim).map(|i| self.hess(p, c, i)).sum()
    }

    /// Value column of channel `c` across all points.
    pub fn values(&self, c: usize) -> Vec<f64> {
        (0..self.points).map(|p| self.value(p, c)).collect()
    }

    /// All rows of point `p` (row-major, `rows_per_point × channels`).
    pub fn point_slice(&self, p: usize) -> &[f64] {
        let w = self.rows_per_point() * self.channels;
        &self.data[p * w..(p + 1) * w]
    }

    pub fn point_slice_mut(&mut self, p: usize) -> &mut [f64] {
        let w = self.rows_per_point() * self.channels;
        &mut self.data[p * w..(p + 1) * w]
    }

    pub fn jet(&self, p: usize) -> SpatialJet {
        let d = self.dim;
        let grad = (0..self.channels)
            .map(|c| {
                if self.order >= JetOrder::Gradient {
                    (0..d).map(|i| self.grad(p, c, i)).collect()
                } else {
                    vec![0.0; d]
                }
            })
            .collect();
        let hess_diag = (0..self.channels)
            .map(|c| {
                if self.order == JetOrder::Hessian {
                    (0..d).map(|i| self.hess(p, c, i)).collect()
                } else {
                    vec![0.0; d]
                }
            })
            .collect();
        SpatialJet {
            value: (0..self.channels).map(|c| self.value(p, c)).collect(),
            grad,
            hess_diag,
        }
    }

    /// Errors with the first non-finite entry's point and channel.
    pub fn check_finite(&self, term: &str) -> Result<()> {
        if let Some(k) = self.data.iter().position(|v| !v.is_finite()) {
            let per_point = self.rows_per_point() * self.channels;
            return Err(Error::numeric(
                term,
                format!(
                    "non-finite jet entry at point {}, row {}, channel {}",
                    k / per_point,
                    (k % per_point) / self.channels,
                    k % self.channels
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut b = JetBatch::zeros(2, 2, JetOrder::Hessian, 3);
        assert_eq!(b.rows_per_point(), 5);
        let k = b.index(1, 4, 2);
        b.data[k] = 7.0;
        assert_eq!(b.hess(1, 2, 1), 7.0);
        assert_eq!(b.jet(1).hess_diag[2], vec![0.0, 7.0]);
        assert_eq!(b.laplacian(1, 2), 7.0);
    }

    #[test]
    fn finite_check_names_location() {
        let mut b = JetBatch::zeros(3, 2, JetOrder::Gradient, 2);
        let k = b.index(2, 1, 1);
        b.data[k] = f64::INFINITY;
        let msg = b.check_finite("probe").unwrap_err().to_string();
        assert!(msg.contains("point 2, row 1, channel 1"), "{msg}");
    }
}
