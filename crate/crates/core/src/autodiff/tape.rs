//! Reverse-mode scalar tape.
//!
//! Every operation appends one node holding its value and the local partials
//! with respect to its parents. Nodes are stored in evaluation order, so the
//! backward sweep is a single reverse pass over the node list.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::Real;
use super::reduce::pairwise_sum;

#[derive(Default)]
struct Nodes {
    values: Vec<f64>,
    /// `edge_start[i]..edge_start[i + 1]` indexes the parents of node `i`.
    edge_start: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

impl Nodes {
    fn push(&mut self, value: f64, edges: &[(u32, f64)]) -> u32 {
        let idx = self.values.len() as u32;
        if self.edge_start.is_empty() {
            self.edge_start.push(0);
        }
        self.values.push(value);
        for &(p, d) in edges {
            self.parents.push(p);
            self.partials.push(d);
        }
        self.edge_start.push(self.parents.len() as u32);
        idx
    }
}

/// Operation record for one scalar loss evaluation.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Nodes>,
}

/// Handle to a node on a [`Tape`]; carries its value for cheap forward reads.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var(#{} = {})", self.idx, self.val)
    }
}

/// Adjoints of every node on a tape after one backward sweep.
pub struct Gradient {
    adjoint: Vec<f64>,
}

impl Gradient {
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        self.adjoint[v.idx as usize]
    }

    /// Adjoints of a contiguous run of leaves created by [`Tape::leaves`].
    pub fn wrt_run(&self, first: Var<'_>, len: usize) -> &[f64] {
        let s = first.idx as usize;
        &self.adjoint[s..s + len]
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        let t = Tape::default();
        {
            let mut n = t.nodes.borrow_mut();
            n.values.reserve(nodes);
            n.edge_start.reserve(nodes + 1);
            n.parents.reserve(2 * nodes);
            n.partials.reserve(2 * nodes);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A new independent leaf.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.nodes.borrow_mut().push(value, &[]);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    /// Leaves for every entry of `values`; their node indices are contiguous.
    pub fn leaves(&self, values: &[f64]) -> Vec<Var<'_>> {
        let mut n = self.nodes.borrow_mut();
        values
            .iter()
            .map(|&v| Var {
                tape: self,
                idx: n.push(v, &[]),
                val: v,
            })
            .collect()
    }

    /// A node with caller-supplied value and local partials.
    ///
    /// Used where the backpropagated sensitivity is not the derivative of the
    /// recorded value (custom vector-Jacobian products).
    pub fn custom<'t>(&'t self, value: f64, deps: &[(Var<'t>, f64)]) -> Var<'t> {
        let edges: Vec<(u32, f64)> = deps.iter().map(|(v, d)| (v.idx, *d)).collect();
        let idx = self.nodes.borrow_mut().push(value, &edges);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    /// Sum with a fixed pairwise order; see [`pairwise_sum`].
    pub fn sum<'t>(&'t self, xs: &[Var<'t>]) -> Var<'t> {
        let vals: Vec<f64> = xs.iter().map(|v| v.val).collect();
        let value = pairwise_sum(&vals);
        let edges: Vec<(u32, f64)> = xs.iter().map(|v| (v.idx, 1.0)).collect();
        let idx = self.nodes.borrow_mut().push(value, &edges);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    /// `Σ w_i x_i` as a single node.
    pub fn weighted_sum<'t>(&'t self, xs: &[Var<'t>], w: &[f64]) -> Var<'t> {
        assert_eq!(xs.len(), w.len());
        let vals: Vec<f64> = xs.iter().zip(w).map(|(v, w)| v.val * w).collect();
        let value = pairwise_sum(&vals);
        let edges: Vec<(u32, f64)> = xs.iter().zip(w).map(|(v, w)| (v.idx, *w)).collect();
        let idx = self.nodes.borrow_mut().push(value, &edges);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    fn unary<'t>(&'t self, a: Var<'t>, value: f64, da: f64) -> Var<'t> {
        let idx = self.nodes.borrow_mut().push(value, &[(a.idx, da)]);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    fn binary<'t>(&'t self, a: Var<'t>, b: Var<'t>, value: f64, da: f64, db: f64) -> Var<'t> {
        let idx = self
            .nodes
            .borrow_mut()
            .push(value, &[(a.idx, da), (b.idx, db)]);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    /// Backward sweep seeded with `d out / d out = 1`.
    pub fn gradient(&self, out: Var<'_>) -> Gradient {
        assert!(
            std::ptr::eq(out.tape, self),
            "output variable belongs to a different tape"
        );
        let n = self.nodes.borrow();
        let mut adjoint = vec![0.0; n.values.len()];
        adjoint[out.idx as usize] = 1.0;
        for i in (0..=out.idx as usize).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            let (s, e) = (n.edge_start[i] as usize, n.edge_start[i + 1] as usize);
            for k in s..e {
                adjoint[n.parents[k] as usize] += a * n.partials[k];
            }
        }
        Gradient { adjoint }
    }
}

impl<'t> Var<'t> {
    pub fn val(&self) -> f64 {
        self.val
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn index(&self) -> usize {
        self.idx as usize
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.binary(self, rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.binary(self, rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .binary(self, rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let q = self.val / rhs.val;
        self.tape
            .binary(self, rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.unary(self, -self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.tape.unary(self, self.val + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.tape.unary(self, self.val - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.tape.unary(self, self.val * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Var<'t> {
        self.tape.unary(self, self.val / rhs, 1.0 / rhs)
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        rhs + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        rhs.rsub(self)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs * self
    }
}

impl<'t> Real for Var<'t> {
    fn value(self) -> f64 {
        self.val
    }
    fn lift(self, c: f64) -> Self {
        self.tape.var(c)
    }
    fn sin(self) -> Self {
        self.tape.unary(self, self.val.sin(), self.val.cos())
    }
    fn cos(self) -> Self {
        self.tape.unary(self, self.val.cos(), -self.val.sin())
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        self.tape.unary(self, e, e)
    }
    fn ln(self) -> Self {
        self.tape.unary(self, self.val.ln(), 1.0 / self.val)
    }
    fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.tape.unary(self, t, 1.0 - t * t)
    }
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.tape.unary(self, s, 0.5 / s)
    }
    fn powi(self, n: i32) -> Self {
        let v = self.val.powi(n);
        let d = if n == 0 {
            0.0
        } else {
            n as f64 * self.val.powi(n - 1)
        };
        self.tape.unary(self, v, d)
    }
    fn square(self) -> Self {
        self.tape.unary(self, self.val * self.val, 2.0 * self.val)
    }
    fn rsub(self, c: f64) -> Self {
        self.tape.unary(self, c - self.val, -1.0)
    }
    fn sigmoid(self) -> Self {
        let s = super::real::sigmoid(self.val);
        self.tape.unary(self, s, s * (1.0 - s))
    }
    fn sum_of(xs: &[Self]) -> Self {
        let first = xs.first().expect("taped sum needs at least one term");
        first.tape.sum(xs)
    }
    fn custom(value: f64, deps: &[(Self, f64)]) -> Self {
        let first = deps.first().expect("custom node needs at least one dependency");
        first.0.tape.custom(value, deps)
    }
}
