//! Batched jet propagation through a [`FourierNet`] and its reverse sweep.
//!
//! Buffers are row-major with `rows_per_point` consecutive rows per point
//! (value, gradient rows, second-derivative rows) and one column per unit.
//! Dense layers act on every row at once through one matrix product; biases
//! only touch value rows since they do not depend on `x`.

use std::f64::consts::TAU;

use super::gemm;
use super::{FourierNet, OutputTransform};
use crate::autodiff::{JetBatch, JetOrder};
use crate::error::{Error, Result};

enum Node {
    Features { out: Vec<f64> },
    Dense { layer: usize },
    Sine { pre: Vec<f64>, cos: Vec<f64>, out: Vec<f64> },
    Sigmoid { pre: Vec<f64> },
    Multiply { factor: Vec<f64> },
}

/// Record of one batched forward pass: the layer operations in evaluation
/// order with the intermediate buffers their reverse sweep needs.
pub struct ParamTape {
    points: Vec<f64>,
    n: usize,
    order: JetOrder,
    params_checksum: u64,
    nodes: Vec<Node>,
}

impl ParamTape {
    pub fn points(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> JetOrder {
        self.order
    }
}

struct Shape {
    n: usize,
    d: usize,
    rows: usize,
    grad: bool,
    hess: bool,
}

impl Shape {
    fn new(n: usize, d: usize, order: JetOrder) -> Self {
        Shape {
            n,
            d,
            rows: order.rows(d),
            grad: order >= JetOrder::Gradient,
            hess: order == JetOrder::Hessian,
        }
    }

    fn total_rows(&self) -> usize {
        self.n * self.rows
    }
}

fn features_forward(net: &FourierNet, points: &[f64], sh: &Shape) -> Vec<f64> {
    let m = net.n_freq;
    let d = sh.d;
    let w = 2 * m;
    let freq = net.freq();
    let mut out = vec![0.0; sh.total_rows() * w];
    for p in 0..sh.n {
        let x = &points[p * d..(p + 1) * d];
        let blk = &mut out[p * sh.rows * w..(p + 1) * sh.rows * w];
        for j in 0..m {
            let b = &freq[j * d..(j + 1) * d];
            let mut t = 0.0;
            for k in 0..d {
                t += b[k] * x[k];
            }
            let (s, c) = (TAU * t).sin_cos();
            blk[j] = c;
            blk[m + j] = s;
            if sh.grad {
                for i in 0..d {
                    let om = TAU * b[i];
                    blk[(1 + i) * w + j] = -s * om;
                    blk[(1 + i) * w + m + j] = c * om;
                    if sh.hess {
                        blk[(1 + d + i) * w + j] = -c * om * om;
                        blk[(1 + d + i) * w + m + j] = -s * om * om;
                    }
                }
            }
        }
    }
    out
}

fn features_backward(net: &FourierNet, points: &[f64], h0: &[f64], g: &[f64], sh: &Shape, dfreq: &mut [f64]) {
    let m = net.n_freq;
    let d = sh.d;
    let w = 2 * m;
    let freq = net.freq();
    let mut om = [0.0f64; 3];
    let mut dom = [0.0f64; 3];
    for p in 0..sh.n {
        let x = &points[p * d..(p + 1) * d];
        let hb = &h0[p * sh.rows * w..(p + 1) * sh.rows * w];
        let gb = &g[p * sh.rows * w..(p + 1) * sh.rows * w];
        for j in 0..m {
            let (c, s) = (hb[j], hb[m + j]);
            let mut dtheta = -gb[j] * s + gb[m + j] * c;
            for i in 0..d {
                om[i] = TAU * freq[j * d + i];
                dom[i] = 0.0;
            }
            if sh.grad {
                for i in 0..d {
                    let (ag, bg) = (gb[(1 + i) * w + j], gb[(1 + i) * w + m + j]);
                    dtheta += -ag * c * om[i] - bg * s * om[i];
                    dom[i] += -ag * s + bg * c;
                    if sh.hess {
                        let (ah, bh) = (gb[(1 + d + i) * w + j], gb[(1 + d + i) * w + m + j]);
                        dtheta += ah * s * om[i] * om[i] - bh * c * om[i] * om[i];
                        dom[i] += -2.0 * ah * c * om[i] - 2.0 * bh * s * om[i];
                    }
                }
            }
            for k in 0..d {
                dfreq[j * d + k] += TAU * (dom[k] + dtheta * x[k]);
            }
        }
    }
}

fn add_bias(z: &mut [f64], bias: &[f64], sh: &Shape) {
    let w = bias.len();
    for p in 0..sh.n {
        let row = &mut z[p * sh.rows * w..p * sh.rows * w + w];
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Returns (activation, cos of value rows).
fn sine_forward(z: &[f64], w: usize, sh: &Shape) -> (Vec<f64>, Vec<f64>) {
    let d = sh.d;
    let mut a = vec![0.0; z.len()];
    let mut cos = vec![0.0; sh.n * w];
    for p in 0..sh.n {
        let zb = &z[p * sh.rows * w..(p + 1) * sh.rows * w];
        let ab = &mut a[p * sh.rows * w..(p + 1) * sh.rows * w];
        let cb = &mut cos[p * w..(p + 1) * w];
        for u in 0..w {
            let (s, c) = zb[u].sin_cos();
            ab[u] = s;
            cb[u] = c;
        }
        if sh.grad {
            for i in 0..d {
                let gr = (1 + i) * w;
                for u in 0..w {
                    ab[gr + u] = cb[u] * zb[gr + u];
                }
                if sh.hess {
                    let hr = (1 + d + i) * w;
                    for u in 0..w {
                        let zi = zb[gr + u];
                        ab[hr + u] = cb[u] * zb[hr + u] - ab[u] * zi * zi;
                    }
                }
            }
        }
    }
    (a, cos)
}

fn sine_backward(g: &mut [f64], pre: &[f64], cos: &[f64], out: &[f64], w: usize, sh: &Shape) {
    let d = sh.d;
    let mut dz0 = vec![0.0; w];
    for p in 0..sh.n {
        let off = p * sh.rows * w;
        let gb = &mut g[off..off + sh.rows * w];
        let zb = &pre[off..off + sh.rows * w];
        let sb = &out[off..off + w];
        let cb = &cos[p * w..(p + 1) * w];
        for u in 0..w {
            dz0[u] = gb[u] * cb[u];
        }
        if sh.grad {
            for i in 0..d {
                let gr = (1 + i) * w;
                if sh.hess {
                    let hr = (1 + d + i) * w;
                    for u in 0..w {
                        let (s, c) = (sb[u], cb[u]);
                        let (zi, zii) = (zb[gr + u], zb[hr + u]);
                        let (ai, aii) = (gb[gr + u], gb[hr + u]);
                        dz0[u] += -s * zi * ai + aii * (-s * zii - c * zi * zi);
                        gb[gr + u] = ai * c - 2.0 * aii * s * zi;
                        gb[hr + u] = aii * c;
                    }
                } else {
                    for u in 0..w {
                        let zi = zb[gr + u];
                        let ai = gb[gr + u];
                        dz0[u] += -sb[u] * zi * ai;
                        gb[gr + u] = ai * cb[u];
                    }
                }
            }
        }
        gb[..w].copy_from_slice(&dz0);
    }
}

fn sigmoid_forward(o: &mut [f64], w: usize, sh: &Shape) {
    let d = sh.d;
    for p in 0..sh.n {
        let ob = &mut o[p * sh.rows * w..(p + 1) * sh.rows * w];
        for u in 0..w {
            let sg = crate::autodiff::sigmoid(ob[u]);
            let s1 = sg * (1.0 - sg);
            let s2 = s1 * (1.0 - 2.0 * sg);
            if sh.grad {
                for i in 0..d {
                    let oi = ob[(1 + i) * w + u];
                    ob[(1 + i) * w + u] = s1 * oi;
                    if sh.hess {
                        let hr = (1 + d + i) * w + u;
                        ob[hr] = s1 * ob[hr] + s2 * oi * oi;
                    }
                }
            }
            ob[u] = sg;
        }
    }
}

fn sigmoid_backward(g: &mut [f64], pre: &[f64], w: usize, sh: &Shape) {
    let d = sh.d;
    for p in 0..sh.n {
        let off = p * sh.rows * w;
        let gb = &mut g[off..off + sh.rows * w];
        let ob = &pre[off..off + sh.rows * w];
        for u in 0..w {
            let sg = crate::autodiff::sigmoid(ob[u]);
            let s1 = sg * (1.0 - sg);
            let s2 = s1 * (1.0 - 2.0 * sg);
            let s3 = s2 * (1.0 - 2.0 * sg) - 2.0 * s1 * s1;
            let mut d0 = gb[u] * s1;
            if sh.grad {
                for i in 0..d {
                    let gr = (1 + i) * w + u;
                    let oi = ob[gr];
                    let yi = gb[gr];
                    if sh.hess {
                        let hr = (1 + d + i) * w + u;
                        let yii = gb[hr];
                        d0 += yi * s2 * oi + yii * (s2 * ob[hr] + s3 * oi * oi);
                        gb[gr] = yi * s1 + 2.0 * yii * s2 * oi;
                        gb[hr] = yii * s1;
                    } else {
                        d0 += yi * s2 * oi;
                        gb[gr] = yi * s1;
                    }
                }
            }
            gb[u] = d0;
        }
    }
}

/// Per-point jets of the multiplier, `rows` entries each.
fn multiplier_jets(net: &FourierNet, points: &[f64], sh: &Shape) -> Vec<f64> {
    let m = net.multiplier.as_ref().expect("multiplier present");
    let d = sh.d;
    let mut out = vec![0.0; sh.n * sh.rows];
    for p in 0..sh.n {
        let j = m.jet(&points[p * d..(p + 1) * d]);
        let o = &mut out[p * sh.rows..(p + 1) * sh.rows];
        o[0] = j.value;
        if sh.grad {
            o[1..1 + d].copy_from_slice(&j.grad);
        }
        if sh.hess {
            o[1 + d..1 + 2 * d].copy_from_slice(&j.hess);
        }
    }
    out
}

fn multiply_forward(y: &mut [f64], factor: &[f64], w: usize, sh: &Shape) {
    let d = sh.d;
    for p in 0..sh.n {
        let yb = &mut y[p * sh.rows * w..(p + 1) * sh.rows * w];
        let gj = &factor[p * sh.rows..(p + 1) * sh.rows];
        for u in 0..w {
            let f0 = yb[u];
            if sh.grad {
                for i in 0..d {
                    let gr = (1 + i) * w + u;
                    let fi = yb[gr];
                    if sh.hess {
                        let hr = (1 + d + i) * w + u;
                        yb[hr] = yb[hr] * gj[0] + 2.0 * fi * gj[1 + i] + f0 * gj[1 + d + i];
                    }
                    yb[gr] = fi * gj[0] + f0 * gj[1 + i];
                }
            }
            yb[u] = f0 * gj[0];
        }
    }
}

fn multiply_backward(g: &mut [f64], factor: &[f64], w: usize, sh: &Shape) {
    let d = sh.d;
    for p in 0..sh.n {
        let gb = &mut g[p * sh.rows * w..(p + 1) * sh.rows * w];
        let gj = &factor[p * sh.rows..(p + 1) * sh.rows];
        for u in 0..w {
            let mut d0 = gb[u] * gj[0];
            if sh.grad {
                for i in 0..d {
                    let gr = (1 + i) * w + u;
                    let yi = gb[gr];
                    d0 += yi * gj[1 + i];
                    if sh.hess {
                        let hr = (1 + d + i) * w + u;
                        let yii = gb[hr];
                        d0 += yii * gj[1 + d + i];
                        gb[gr] = yi * gj[0] + 2.0 * yii * gj[1 + i];
                        gb[hr] = yii * gj[0];
                    } else {
                        gb[gr] = yi * gj[0];
                    }
                }
            }
            gb[u] = d0;
        }
    }
}

fn dense(net: &FourierNet, layer: usize, input: &[f64], sh: &Shape) -> Vec<f64> {
    let l = net.layers()[layer];
    let w = &net.params[l.weight_offset..l.bias_offset];
    let b = &net.params[l.bias_offset..l.bias_offset + l.n_out];
    let mut z = vec![0.0; sh.total_rows() * l.n_out];
    gemm::mul_transposed(input, sh.total_rows(), l.n_in, w, l.n_out, &mut z);
    add_bias(&mut z, b, sh);
    z
}

/// Hidden stack; returns the last hidden activation (or the features if
/// there are no hidden layers).
fn hidden_forward(net: &FourierNet, points: &[f64], sh: &Shape, mut nodes: Option<&mut Vec<Node>>) -> Vec<f64> {
    let mut act = features_forward(net, points, sh);
    for (l, &w) in net.hidden.iter().enumerate() {
        let z = dense(net, l, &act, sh);
        let (a, cos) = sine_forward(&z, w, sh);
        if let Some(nodes) = nodes.as_deref_mut() {
            let prev = std::mem::take(&mut act);
            if l == 0 {
                nodes.push(Node::Features { out: prev });
            } else if let Some(Node::Sine { out, .. }) = nodes.last_mut() {
                *out = prev;
            }
            nodes.push(Node::Dense { layer: l });
            nodes.push(Node::Sine { pre: z, cos, out: Vec::new() });
        }
        act = a;
    }
    if let Some(nodes) = nodes {
        if net.hidden.is_empty() {
            nodes.push(Node::Features { out: act.clone() });
        } else if let Some(Node::Sine { out, .. }) = nodes.last_mut() {
            *out = act.clone();
        }
    }
    act
}

pub(super) fn forward_hidden(net: &FourierNet, points: &[f64], n: usize, order: JetOrder) -> JetBatch {
    let sh = Shape::new(n, net.dim, order);
    let act = hidden_forward(net, points, &sh, None);
    let channels = net.hidden.last().copied().unwrap_or(2 * net.n_freq);
    JetBatch {
        points: n,
        dim: net.dim,
        order,
        channels,
        data: act,
    }
}

pub(super) fn forward(
    net: &FourierNet,
    points: &[f64],
    n: usize,
    order: JetOrder,
    record: bool,
) -> (JetBatch, Option<ParamTape>) {
    let sh = Shape::new(n, net.dim, order);
    let mut nodes = Vec::new();
    let act = hidden_forward(net, points, &sh, record.then_some(&mut nodes));
    let last = net.hidden.len();
    let mut y = dense(net, last, &act, &sh);
    drop(act);
    if record {
        nodes.push(Node::Dense { layer: last });
    }
    if net.transform == OutputTransform::Sigmoid {
        if record {
            nodes.push(Node::Sigmoid { pre: y.clone() });
        }
        sigmoid_forward(&mut y, net.outputs, &sh);
    }
    if net.multiplier.is_some() {
        let factor = multiplier_jets(net, points, &sh);
        multiply_forward(&mut y, &factor, net.outputs, &sh);
        if record {
            nodes.push(Node::Multiply { factor });
        }
    }
    let tape = record.then(|| ParamTape {
        points: points.to_vec(),
        n,
        order,
        params_checksum: net.checksum(),
        nodes,
    });
    (
        JetBatch {
            points: n,
            dim: net.dim,
            order,
            channels: net.outputs,
            data: y,
        },
        tape,
    )
}

pub(super) fn backward(net: &FourierNet, tape: &ParamTape, cot: &JetBatch) -> Result<Vec<f64>> {
    if cot.points != tape.n || cot.order != tape.order || cot.channels != net.outputs || cot.dim != net.dim {
        return Err(Error::config(format!(
            "cotangent shape ({} points, {:?}, {} channels) does not match recorded pass ({} points, {:?}, {} channels)",
            cot.points, cot.order, cot.channels, tape.n, tape.order, net.outputs
        )));
    }
    if tape.params_checksum != net.checksum() {
        return Err(Error::config("parameters changed between recording and backward pass"));
    }
    cot.check_finite("backward cotangent")?;
    let sh = Shape::new(tape.n, net.dim, tape.order);
    let layers = net.layers();
    let mut grad = vec![0.0; net.param_count()];
    let mut g = cot.data.clone();
    let mut width = net.outputs;
    for k in (0..tape.nodes.len()).rev() {
        match &tape.nodes[k] {
            Node::Multiply { factor } => multiply_backward(&mut g, factor, width, &sh),
            Node::Sigmoid { pre } => sigmoid_backward(&mut g, pre, width, &sh),
            Node::Sine { pre, cos, out } => sine_backward(&mut g, pre, cos, out, width, &sh),
            Node::Dense { layer } => {
                let l = layers[*layer];
                let input = match &tape.nodes[k - 1] {
                    Node::Features { out } | Node::Sine { out, .. } => out,
                    _ => unreachable!("dense layers follow features or activations"),
                };
                let rows = sh.total_rows();
                let (head, tail) = grad.split_at_mut(l.bias_offset);
                gemm::accumulate_weight_grad(&g, input, rows, l.n_in, l.n_out, &mut head[l.weight_offset..]);
                let db = &mut tail[..l.n_out];
                for p in 0..sh.n {
                    let row = &g[p * sh.rows * l.n_out..p * sh.rows * l.n_out + l.n_out];
                    for (acc, v) in db.iter_mut().zip(row) {
                        *acc += v;
                    }
                }
                let needs_input_grad = *layer > 0 || net.freq_trainable;
                if needs_input_grad {
                    let w = &net.params[l.weight_offset..l.bias_offset];
                    let mut da = vec![0.0; rows * l.n_in];
                    gemm::mul_plain(&g, rows, l.n_out, w, l.n_in, &mut da);
                    g = da;
                } else {
                    g = Vec::new();
                }
                width = l.n_in;
            }
            Node::Features { out } => {
                if net.freq_trainable {
                    let nf = net.n_freq * net.dim;
                    features_backward(net, &tape.points, out, &g, &sh, &mut grad[..nf]);
                }
            }
        }
    }
    Ok(grad)
}
