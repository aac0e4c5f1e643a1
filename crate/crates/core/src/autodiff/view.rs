//! Uniform read access to jet batches, either as plain numbers or as leaves
//! of a [`Tape`].

use super::jet::{JetBatch, JetOrder};
use super::real::Real;
use super::tape::{Gradient, Tape, Var};

pub trait FieldView<T: Real> {
    fn points(&self) -> usize;
    fn dim(&self) -> usize;
    fn channels(&self) -> usize;
    fn value(&self, p: usize, c: usize) -> T;
    fn grad(&self, p: usize, c: usize, i: usize) -> T;
    fn hess(&self, p: usize, c: usize, i: usize) -> T;

    /// `∂ channel_c / ∂ x_i` for `c` in `first..first + d`, row-major `d × d`.
    fn grad_block(&self, p: usize, first: usize) -> Vec<T> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for c in first..first + d {
            for i in 0..d {
                out.push(self.grad(p, c, i));
            }
        }
        out
    }

    fn values(&self, p: usize, first: usize, count: usize) -> Vec<T> {
        (first..first + count).map(|c| self.value(p, c)).collect()
    }

    fn laplacian(&self, p: usize, c: usize) -> T {
        let mut acc = self.hess(p, c, 0);
        for i in 1..self.dim() {
            acc = acc + self.hess(p, c, i);
        }
        acc
    }

    fn grads(&self, p: usize, c: usize) -> Vec<T> {
        (0..self.dim()).map(|i| self.grad(p, c, i)).collect()
    }
}

impl FieldView<f64> for JetBatch {
    fn points(&self) -> usize {
        self.points
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn channels(&self) -> usize {
        self.channels
    }
    fn value(&self, p: usize, c: usize) -> f64 {
        JetBatch::value(self, p, c)
    }
    fn grad(&self, p: usize, c: usize, i: usize) -> f64 {
        JetBatch::grad(self, p, c, i)
    }
    fn hess(&self, p: usize, c: usize, i: usize) -> f64 {
        JetBatch::hess(self, p, c, i)
    }
}

/// Every entry of a [`JetBatch`] as a tape leaf, in the batch's layout.
pub struct JetVars<'t> {
    pub points: usize,
    pub dim: usize,
    pub order: JetOrder,
    pub channels: usize,
    pub vars: Vec<Var<'t>>,
}

impl<'t> JetVars<'t> {
    pub fn leaves(tape: &'t Tape, batch: &JetBatch) -> Self {
        JetVars {
            points: batch.points,
            dim: batch.dim,
            order: batch.order,
            channels: batch.channels,
            vars: tape.leaves(&batch.data),
        }
    }

    #[inline]
    fn index(&self, p: usize, row: usize, c: usize) -> usize {
        (p * self.order.rows(self.dim) + row) * self.channels + c
    }

    /// Adjoints of all leaves arranged as a batch (the backward cotangent).
    pub fn cotangent(&self, g: &Gradient) -> JetBatch {
        let data = match self.vars.first() {
            Some(first) => g.wrt_run(*first, self.vars.len()).to_vec(),
            None => Vec::new(),
        };
        JetBatch {
            points: self.points,
            dim: self.dim,
            order: self.order,
            channels: self.channels,
            data,
        }
    }
}

impl<'t> FieldView<Var<'t>> for JetVars<'t> {
    fn points(&self) -> usize {
        self.points
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn channels(&self) -> usize {
        self.channels
    }
    fn value(&self, p: usize, c: usize) -> Var<'t> {
        self.vars[self.index(p, 0, c)]
    }
    fn grad(&self, p: usize, c: usize, i: usize) -> Var<'t> {
        debug_assert!(self.order >= JetOrder::Gradient);
        self.vars[self.index(p, 1 + i, c)]
    }
    fn hess(&self, p: usize, c: usize, i: usize) -> Var<'t> {
        debug_assert!(self.order == JetOrder::Hessian);
        self.vars[self.index(p, 1 + self.dim + i, c)]
    }
}
