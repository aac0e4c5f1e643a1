//! Incompressible Stokes and Navier–Stokes with Brinkman friction: residual
//! losses for velocity–pressure and adjoint networks, the dissipation
//! objective and the adjoint-based phase sensitivity.
//!
//! Flow networks emit `d + 1` channels: velocity in `0..d`, pressure at `d`.

use serde::{Deserialize, Serialize};

use crate::autodiff::{pairwise_sum, FieldView, JetBatch, JetOrder, Real};
use crate::elasticity::TopologyLoss;
use crate::error::{Error, Result};
use crate::phasefield::{darcy_friction, darcy_friction_slope, phase_terms, PhaseFieldConfig};
use crate::sampling::{CollocationSet, SegmentKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub mu: f64,
    pub body_force: Vec<f64>,
    pub lambda_div: f64,
    pub lambda_dir: f64,
    pub lambda_neu: f64,
    pub lambda_adj_div: f64,
    pub lambda_adj_bc: f64,
    pub lambda_adj_neu: f64,
    pub convective: bool,
    /// Weight of the mean-zero pressure penalty; 0 disables it.
    #[serde(default)]
    pub pressure_gauge: f64,
}

impl FlowSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::config(format!("flow.mu must be positive, got {}", self.mu)));
        }
        if self.body_force.len() != dim {
            return Err(Error::config(format!("flow.body_force needs {dim} components")));
        }
        let w = [
            self.lambda_div,
            self.lambda_dir,
            self.lambda_neu,
            self.lambda_adj_div,
            self.lambda_adj_bc,
            self.lambda_adj_neu,
            self.pressure_gauge,
        ];
        if w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("flow weights must be non-negative"));
        }
        Ok(())
    }

    /// Jet order the interior residual needs.
    pub fn interior_order() -> JetOrder {
        JetOrder::Hessian
    }

    /// Jet order needed on a segment of the given kind.
    pub fn segment_order(kind: SegmentKind) -> JetOrder {
        match kind {
            SegmentKind::Neumann => JetOrder::Gradient,
            SegmentKind::Dirichlet | SegmentKind::Noslip => JetOrder::Value,
        }
    }
}

fn require_channels<T: Real, V: FieldView<T>>(v: &V) -> Result<()> {
    let d = v.dim();
    if v.channels() != d + 1 {
        return Err(Error::config(format!("flow fields need {} channels, got {}", d + 1, v.channels())));
    }
    Ok(())
}

fn check_order(batch: &JetBatch, order: JetOrder, what: &str) -> Result<()> {
    if batch.order < order {
        return Err(Error::config(format!("{what} needs {order:?} jets, got {:?}", batch.order)));
    }
    Ok(())
}

/// Per-point `[(u·∇)u] − μΔu + ∇p + Π u − f`.
pub fn momentum_residual<T: Real, V: FieldView<T>>(v: &V, p: usize, friction: f64, spec: &FlowSpec) -> Vec<T> {
    let d = v.dim();
    let u = v.values(p, 0, d);
    (0..d)
        .map(|c| {
            let mut r = v.grad(p, d, c) - v.laplacian(p, c) * spec.mu + u[c] * friction;
            if spec.convective {
                for i in 0..d {
                    r = r + u[i] * v.grad(p, c, i);
                }
            }
            if spec.body_force[c] != 0.0 {
                r = r - spec.body_force[c];
            }
            r
        })
        .collect()
}

/// `∇·u` of the velocity block starting at channel 0.
pub fn divergence<T: Real, V: FieldView<T>>(v: &V, p: usize) -> T {
    let mut div = v.grad(p, 0, 0);
    for c in 1..v.dim() {
        div = div + v.grad(p, c, c);
    }
    div
}

/// `(−p I + μ(∇u + ∇uᵀ)) n`
pub fn traction<T: Real, V: FieldView<T>>(v: &V, p: usize, normal: &[f64], mu: f64) -> Vec<T> {
    let d = v.dim();
    let pr = v.value(p, d);
    (0..d)
        .map(|c| {
            let mut t = pr * (-normal[c]);
            for i in 0..d {
                if normal[i] != 0.0 {
                    t = t + (v.grad(p, c, i) + v.grad(p, i, c)) * (mu * normal[i]);
                }
            }
            t
        })
        .collect()
}

fn norm2<T: Real>(xs: &[T]) -> T {
    let mut acc = xs[0].square();
    for x in &xs[1..] {
        acc = acc + x.square();
    }
    acc
}

fn finite<T: Real>(x: T, term: &str) -> Result<T> {
    if x.value().is_finite() {
        Ok(x)
    } else {
        Err(Error::numeric(term, format!("value {}", x.value())))
    }
}

/// Boundary penalties shared by state and adjoint losses. With `homogeneous`
/// the prescribed data are replaced by zero.
fn boundary_terms<T: Real, V: FieldView<T>>(
    colloc: &CollocationSet,
    segment_fields: &[V],
    mu: f64,
    lambda_dir: f64,
    lambda_neu: f64,
    homogeneous: bool,
) -> Result<Option<T>> {
    if segment_fields.len() != colloc.segments.len() {
        return Err(Error::config("one field batch per sampled segment required"));
    }
    let d = colloc.dim;
    let mut acc: Option<T> = None;
    for (s, f) in colloc.segments.iter().zip(segment_fields) {
        let target = |p: usize, c: usize| if homogeneous { 0.0 } else { s.prescribed[p * d + c] };
        let (lambda, terms): (f64, Vec<T>) = match s.kind {
            SegmentKind::Dirichlet | SegmentKind::Noslip => (
                lambda_dir,
                (0..s.len())
                    .map(|p| {
                        let diff: Vec<T> = (0..d).map(|c| f.value(p, c) - target(p, c)).collect();
                        norm2(&diff)
                    })
                    .collect(),
            ),
            SegmentKind::Neumann => (
                lambda_neu,
                (0..s.len())
                    .map(|p| {
                        let t = traction(f, p, &s.normal, mu);
                        let diff: Vec<T> = t.into_iter().enumerate().map(|(c, t)| t - target(p, c)).collect();
                        norm2(&diff)
                    })
                    .collect(),
            ),
        };
        if lambda == 0.0 || terms.is_empty() {
            continue;
        }
        let t = T::sum_of(&terms) * (lambda * s.weight);
        acc = Some(match acc {
            Some(a) => a + t,
            None => t,
        });
    }
    Ok(acc)
}

/// Squared strong-form residuals of the velocity–pressure network.
///
/// `v` holds second-order jets at interior points and `friction` the frozen
/// Brinkman coefficient there; `segment_fields[k]` has at least the order
/// [`FlowSpec::segment_order`] asks for.
pub fn flow_state_loss<T: Real, V: FieldView<T>>(
    v: &V,
    friction: &[f64],
    colloc: &CollocationSet,
    segment_fields: &[V],
    spec: &FlowSpec,
) -> Result<T> {
    require_channels(v)?;
    let n = v.points();
    if n == 0 || friction.len() != n {
        return Err(Error::config("flow state loss needs one friction value per interior point"));
    }
    let mut dens = Vec::with_capacity(n);
    for p in 0..n {
        let r = momentum_residual(v, p, friction[p], spec);
        let mut e = norm2(&r);
        if spec.lambda_div != 0.0 {
            e = e + divergence(v, p).square() * spec.lambda_div;
        }
        dens.push(e);
    }
    let mut loss = T::sum_of(&dens) * colloc.interior_weight;
    if spec.pressure_gauge > 0.0 {
        let d = v.dim();
        let ps: Vec<T> = (0..n).map(|p| v.value(p, d)).collect();
        loss = loss + (T::sum_of(&ps) * (1.0 / n as f64)).square() * spec.pressure_gauge;
    }
    if let Some(b) = boundary_terms(colloc, segment_fields, spec.mu, spec.lambda_dir, spec.lambda_neu, false)? {
        loss = loss + b;
    }
    finite(loss, "flow_state_loss")
}

/// Frozen per-point quantities of a velocity field used by topology losses.
#[derive(Debug, Clone)]
pub struct FlowPointData {
    /// `|u|²`
    pub speed2: Vec<f64>,
    /// `(μ/2)|∇u|² − f·u`
    pub rest: Vec<f64>,
    /// `w·u`, present once an adjoint is available.
    pub adjoint_dot: Option<Vec<f64>>,
}

impl FlowPointData {
    pub fn new(state: &JetBatch, adjoint: Option<&JetBatch>, spec: &FlowSpec) -> Result<Self> {
        check_order(state, JetOrder::Gradient, "dissipation")?;
        let d = state.dim;
        let mut speed2 = Vec::with_capacity(state.points);
        let mut rest = Vec::with_capacity(state.points);
        for p in 0..state.points {
            let u = FieldView::values(state, p, 0, d);
            let g = FieldView::grad_block(state, p, 0);
            speed2.push(u.iter().map(|x| x * x).sum());
            let fu: f64 = u.iter().zip(&spec.body_force).map(|(a, b)| a * b).sum();
            rest.push(0.5 * spec.mu * g.iter().map(|x| x * x).sum::<f64>() - fu);
        }
        let adjoint_dot = match adjoint {
            Some(a) => {
                if a.points != state.points || a.channels != state.channels {
                    return Err(Error::config("adjoint batch does not match the state batch"));
                }
                Some(
                    (0..state.points)
                        .map(|p| (0..d).map(|c| a.value(p, c) * state.value(p, c)).sum())
                        .collect(),
                )
            }
            None => None,
        };
        Ok(FlowPointData { speed2, rest, adjoint_dot })
    }
}

/// `∫ ½Π(φ)|u|² + (μ/2)|∇u|² − f·u` for frozen fields.
pub fn dissipation_objective(data: &FlowPointData, phi: &[f64], eta: f64, weight: f64) -> f64 {
    let dens: Vec<f64> = phi
        .iter()
        .zip(&data.speed2)
        .zip(&data.rest)
        .map(|((&f, &s), &r)| 0.5 * darcy_friction(f, eta) * s + r)
        .collect();
    pairwise_sum(&dens) * weight
}

/// `Π'(φ)(½|u|² − w·u) = −2η(1 − φ)(½|u|² − w·u)`
pub fn ns_phase_sensitivity(u: &[f64], w: &[f64], phi: f64, eta: f64) -> f64 {
    let u2: f64 = u.iter().map(|x| x * x).sum();
    let wu: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    darcy_friction_slope(phi, eta) * (0.5 * u2 - wu)
}

/// Dissipation + GL + volume penalty over a first-order view of φ.
///
/// Without adjoint data the dissipation is differentiated plainly through
/// Π(φ); with it, the adjoint-based sensitivity is injected per point.
pub fn flow_topology_loss<T: Real, V: FieldView<T>>(
    phi: &V,
    data: &FlowPointData,
    eta: f64,
    weight: f64,
    domain_volume: f64,
    cfg: &PhaseFieldConfig,
) -> Result<TopologyLoss<T>> {
    let n = phi.points();
    if n == 0 || data.speed2.len() != n {
        return Err(Error::config("flow topology loss needs frozen state values per point"));
    }
    let objective = match &data.adjoint_dot {
        None => {
            let dens: Vec<T> = (0..n)
                .map(|p| darcy_friction(phi.value(p, 0), eta) * (0.5 * data.speed2[p]) + data.rest[p])
                .collect();
            T::sum_of(&dens) * weight
        }
        Some(wu) => {
            let vals: Vec<f64> = (0..n).map(|p| phi.value(p, 0).value()).collect();
            let value = dissipation_objective(data, &vals, eta, weight);
            let deps: Vec<(T, f64)> = (0..n)
                .map(|p| {
                    let s = darcy_friction_slope(vals[p], eta) * (0.5 * data.speed2[p] - wu[p]);
                    (phi.value(p, 0), s * weight)
                })
                .collect();
            T::custom(value, &deps)
        }
    };
    let phase = phase_terms(phi, cfg, weight, domain_volume);
    let objective = finite(objective, "flow_topology_loss")?;
    Ok(TopologyLoss {
        objective_value: objective.value(),
        objective,
        phase,
    })
}

/// Adjoint momentum residual
/// `(∇u)ᵀw − (u·∇)w − μΔw + ∇q + Πw − (Πu − μΔu − f)`.
///
/// The objective source enters with a minus sign so that the adjoint pairs
/// with [`ns_phase_sensitivity`] as written.
pub fn adjoint_residual<T: Real, V: FieldView<T>>(
    adj: &V,
    state: &JetBatch,
    p: usize,
    friction: f64,
    spec: &FlowSpec,
) -> Vec<T> {
    let d = adj.dim();
    let w = adj.values(p, 0, d);
    (0..d)
        .map(|c| {
            let mut r = adj.grad(p, d, c) - adj.laplacian(p, c) * spec.mu + w[c] * friction;
            for i in 0..d {
                r = r + w[i] * state.grad(p, i, c) - adj.grad(p, c, i) * state.value(p, i);
            }
            let source = friction * state.value(p, c) - spec.mu * state.laplacian(p, c) - spec.body_force[c];
            r - source
        })
        .collect()
}

/// Squared residuals of the adjoint network with homogeneous boundary data.
pub fn adjoint_loss<T: Real, V: FieldView<T>>(
    adj: &V,
    state: &JetBatch,
    friction: &[f64],
    colloc: &CollocationSet,
    segment_fields: &[V],
    spec: &FlowSpec,
) -> Result<T> {
    require_channels(adj)?;
    check_order(state, JetOrder::Hessian, "adjoint residual")?;
    let n = adj.points();
    if n == 0 || friction.len() != n || state.points != n {
        return Err(Error::config("adjoint loss needs state and friction values per interior point"));
    }
    let mut dens = Vec::with_capacity(n);
    for p in 0..n {
        let r = adjoint_residual(adj, state, p, friction[p], spec);
        let mut e = norm2(&r);
        if spec.lambda_adj_div != 0.0 {
            e = e + divergence(adj, p).square() * spec.lambda_adj_div;
        }
        dens.push(e);
    }
    let mut loss = T::sum_of(&dens) * colloc.interior_weight;
    if spec.pressure_gauge > 0.0 {
        let d = adj.dim();
        let qs: Vec<T> = (0..n).map(|p| adj.value(p, d)).collect();
        loss = loss + (T::sum_of(&qs) * (1.0 / n as f64)).square() * spec.pressure_gauge;
    }
    if let Some(b) = boundary_terms(colloc, segment_fields, spec.mu, spec.lambda_adj_bc, spec.lambda_adj_neu, true)? {
        loss = loss + b;
    }
    finite(loss, "adjoint_loss")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(convective: bool) -> FlowSpec {
        FlowSpec {
            mu: 0.01,
            body_force: vec![0.0, 0.0],
            lambda_div: 1.0,
            lambda_dir: 10.0,
            lambda_neu: 10.0,
            lambda_adj_div: 1.0,
            lambda_adj_bc: 10.0,
            lambda_adj_neu: 10.0,
            convective,
            pressure_gauge: 0.0,
        }
    }

    /// Second-order jets of `u = (1 − y², 0)`, `p = −2μx + c` (plus optional
    /// adjoint-like extra scaling of the velocity).
    fn poiseuille(points: &[[f64; 2]], mu: f64, c: f64) -> JetBatch {
        let mut b = JetBatch::zeros(points.len(), 2, JetOrder::Hessian, 3);
        for (p, x) in points.iter().enumerate() {
            let mut set = |row: usize, ch: usize, v: f64| {
                let i = b.index(p, row, ch);
                b.data[i] = v;
            };
            set(0, 0, 1.0 - x[1] * x[1]);
            set(2, 0, -2.0 * x[1]);
            set(4, 0, -2.0);
            set(0, 2, -2.0 * mu * x[0] + c);
            set(1, 2, -2.0 * mu);
        }
        b
    }

    fn pts() -> Vec<[f64; 2]> {
        vec![[0.1, 0.2], [0.5, -0.7], [0.9, 0.0], [0.3, 0.99]]
    }

    #[test]
    fn poiseuille_residual_vanishes() {
        for conv in [false, true] {
            let s = spec(conv);
            let b = poiseuille(&pts(), s.mu, 0.3);
            for p in 0..4 {
                for r in momentum_residual::<f64, _>(&b, p, 0.0, &s) {
                    assert!(r.abs() <= 1e-12);
                }
                assert_eq!(divergence::<f64, _>(&b, p), 0.0);
            }
        }
    }

    #[test]
    fn pure_darcy_drag() {
        let s = spec(true);
        let mut b = JetBatch::zeros(1, 2, JetOrder::Hessian, 3);
        b.data[0] = 1.0;
        b.data[2] = 0.7;
        let r = momentum_residual::<f64, _>(&b, 0, darcy_friction(0.0, 50.0), &s);
        assert_eq!(r, vec![50.0, 0.0]);
    }

    #[test]
    fn sensitivity_examples() {
        assert_eq!(ns_phase_sensitivity(&[0.3, 0.4], &[1.0, 2.0], 1.0, 100.0), 0.0);
        assert_eq!(ns_phase_sensitivity(&[0.3, 0.4], &[0.15, 0.2], 0.3, 100.0), 0.0);
        assert_eq!(ns_phase_sensitivity(&[1.0, 0.0], &[0.0, 0.0], 0.5, 100.0), -50.0);
    }

    #[test]
    fn dissipation_examples() {
        let s = spec(false);
        // u = (y, 0) on the unit square, Π = 0.
        let n = 16;
        let mut b = JetBatch::zeros(n, 2, JetOrder::Gradient, 3);
        for p in 0..n {
            let y = (p as f64 + 0.5) / n as f64;
            let i = b.index(p, 0, 0);
            b.data[i] = y;
            let i = b.index(p, 2, 0);
            b.data[i] = 1.0;
        }
        let data = FlowPointData::new(&b, None, &s).unwrap();
        let phi = vec![1.0; n];
        let j = dissipation_objective(&data, &phi, 50.0, 1.0 / n as f64);
        assert!((j - s.mu / 2.0).abs() < 1e-15);

        let mut b2 = b.clone();
        b2.data.iter_mut().for_each(|v| *v *= 2.0);
        let d2 = FlowPointData::new(&b2, None, &s).unwrap();
        let phi = vec![0.3; n];
        let j1 = dissipation_objective(&data, &phi, 50.0, 1.0 / n as f64);
        let j2 = dissipation_objective(&d2, &phi, 50.0, 1.0 / n as f64);
        assert!((j2 - 4.0 * j1).abs() < 1e-12 * j2);
        let zero = FlowPointData::new(&JetBatch::zeros(n, 2, JetOrder::Gradient, 3), None, &s).unwrap();
        assert_eq!(dissipation_objective(&zero, &phi, 50.0, 0.1), 0.0);
    }

    #[test]
    fn adjoint_residual_structure() {
        let s = spec(true);
        let state = poiseuille(&pts(), s.mu, 0.0);
        let mut adj = JetBatch::zeros(4, 2, JetOrder::Hessian, 3);
        for p in 0..4 {
            let i = adj.index(p, 0, 2);
            adj.data[i] = 0.8;
        }
        let friction = 3.0;
        for p in 0..4 {
            let r = adjoint_residual::<f64, _>(&adj, &state, p, friction, &s);
            for c in 0..2 {
                let source = friction * state.value(p, c) - s.mu * state.laplacian(p, c);
                assert!((r[c] + source).abs() < 1e-15);
            }
        }
        // f = −μΔu cancels the source at Π = 0.
        let mut s2 = s.clone();
        s2.body_force = vec![2.0 * s.mu, 0.0];
        for p in 0..4 {
            for r in adjoint_residual::<f64, _>(&adj, &state, p, 0.0, &s2) {
                assert!(r.abs() < 1e-15);
            }
        }
    }
}
