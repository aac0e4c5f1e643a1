//! Linear elasticity: energy-based state losses for compliance and the
//! fundamental eigenvalue, and the matching topology losses.
//!
//! Displacement gradients are row-major `d × d` with entry `(c, i)` equal to
//! `∂u_c/∂x_i`.

use serde::{Deserialize, Serialize};

use crate::autodiff::{FieldView, JetBatch, Real};
use crate::error::{Error, Result};
use crate::phasefield::{mass_density, phase_terms, simp_density, simp_density_slope, PhaseFieldConfig, PhaseTerms};
use crate::sampling::{CollocationSet, SegmentKind};

/// Denominators of the Rayleigh quotient below this are a trivial mode.
pub const TRIVIAL_MODE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialInput", into = "MaterialInput")]
pub struct ElasticMaterial {
    pub e: f64,
    pub nu: f64,
    pub mu: f64,
    pub lambda_lame: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialInput {
    e: f64,
    nu: f64,
}

impl TryFrom<MaterialInput> for ElasticMaterial {
    type Error = Error;
    fn try_from(m: MaterialInput) -> Result<Self> {
        ElasticMaterial::new(m.e, m.nu)
    }
}

impl From<ElasticMaterial> for MaterialInput {
    fn from(m: ElasticMaterial) -> Self {
        MaterialInput { e: m.e, nu: m.nu }
    }
}

impl ElasticMaterial {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        let (mu, lambda_lame) = lame_params(e, nu)?;
        Ok(ElasticMaterial { e, nu, mu, lambda_lame })
    }
}

pub fn lame_params(e: f64, nu: f64) -> Result<(f64, f64)> {
    if !(e > 0.0) {
        return Err(Error::config(format!("Young's modulus must be positive, got {e}")));
    }
    if nu == 0.5 {
        return Err(Error::config("Poisson ratio 0.5 is the incompressible limit"));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::config(format!("Poisson ratio must lie in (-1, 0.5), got {nu}")));
    }
    Ok((e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticLoads {
    pub body_force: Vec<f64>,
    /// Weight of the Dirichlet penalty on sampled Dirichlet segments.
    #[serde(default)]
    pub lambda_dir: f64,
    /// Mass-normalization weight (eigenvalue problems).
    #[serde(default)]
    pub lambda_norm: f64,
}

impl ElasticLoads {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.body_force.len() != dim {
            return Err(Error::config(format!("body_force needs {dim} components")));
        }
        if !(self.lambda_dir >= 0.0 && self.lambda_norm >= 0.0) {
            return Err(Error::config("elastic penalty weights must be non-negative"));
        }
        Ok(())
    }
}

/// `½ (∇u + ∇uᵀ)`
pub fn strain_tensor<T: Real>(grad_u: &[T], d: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push((grad_u[i * d + j] + grad_u[j * d + i]) * 0.5);
        }
    }
    out
}

/// `2μ ε:ε + λ tr(ε)²` for a symmetric strain.
pub fn stiffness_contraction<T: Real>(strain: &[T], d: usize, mat: &ElasticMaterial) -> T {
    let mut ee = strain[0].square();
    let mut tr = strain[0];
    for k in 1..d * d {
        ee = ee + strain[k].square();
    }
    for i in 1..d {
        tr = tr + strain[i * d + i];
    }
    ee * (2.0 * mat.mu) + tr.square() * mat.lambda_lame
}

/// `½ ρ (2μ ε:ε + λ tr(ε)²)`
pub fn elastic_energy_density<T: Real>(strain: &[T], d: usize, mat: &ElasticMaterial, rho: f64) -> T {
    stiffness_contraction(strain, d, mat) * (0.5 * rho)
}

/// Negated strain-energy sensitivity `−ρ'(φ) (2μ ε:ε + λ tr(ε)²)`.
pub fn compliance_phase_sensitivity(phi: f64, strain: &[f64], d: usize, mat: &ElasticMaterial, cfg: &PhaseFieldConfig) -> f64 {
    -simp_density_slope(phi, cfg) * stiffness_contraction(strain, d, mat)
}

/// The compliance-relevant energy term `ρ(φ)(2μ ε:ε + λ tr(ε)²)` whose plain
/// derivative in `φ` is the negation of the compliance sensitivity.
pub fn compliance_energy_term<T: Real>(phi: T, contraction: f64, cfg: &PhaseFieldConfig) -> T {
    simp_density(phi, cfg) * contraction
}

fn check_views<V>(colloc: &CollocationSet, segment_fields: &[V]) -> Result<()> {
    if segment_fields.len() != colloc.segments.len() {
        return Err(Error::config(format!(
            "{} segment fields for {} sampled segments",
            segment_fields.len(),
            colloc.segments.len()
        )));
    }
    Ok(())
}

fn finite<T: Real>(x: T, term: &str) -> Result<T> {
    if x.value().is_finite() {
        Ok(x)
    } else {
        Err(Error::numeric(term, format!("value {}", x.value())))
    }
}

/// Penalty on sampled Dirichlet segments `λ Σ_seg w Σ |u − u₀|²`.
fn dirichlet_penalty<T: Real, V: FieldView<T>>(colloc: &CollocationSet, segment_fields: &[V], lambda: f64) -> Option<T> {
    let d = colloc.dim;
    let mut acc: Option<T> = None;
    for (s, f) in colloc.segments.iter().zip(segment_fields) {
        if !matches!(s.kind, SegmentKind::Dirichlet | SegmentKind::Noslip) || lambda == 0.0 {
            continue;
        }
        let terms: Vec<T> = (0..s.len())
            .map(|p| {
                let mut e = (f.value(p, 0) - s.prescribed[p * d]).square();
                for c in 1..d {
                    e = e + (f.value(p, c) - s.prescribed[p * d + c]).square();
                }
                e
            })
            .collect();
        let t = T::sum_of(&terms) * (lambda * s.weight);
        acc = Some(match acc {
            Some(a) => a + t,
            None => t,
        });
    }
    acc
}

fn add_opt<T: Real>(x: T, y: Option<T>) -> T {
    match y {
        Some(y) => x + y,
        None => x,
    }
}

/// Potential energy of the displacement network.
///
/// `u` holds first-order jets at the interior points, `rho` the frozen SIMP
/// factor there, and `segment_fields[k]` at least values on sampled segment
/// `k`.
pub fn compliance_state_loss<T: Real, V: FieldView<T>>(
    u: &V,
    rho: &[f64],
    colloc: &CollocationSet,
    segment_fields: &[V],
    mat: &ElasticMaterial,
    loads: &ElasticLoads,
) -> Result<T> {
    check_views(colloc, segment_fields)?;
    let d = colloc.dim;
    let n = u.points();
    if n == 0 || rho.len() != n {
        return Err(Error::config("compliance state loss needs one density per interior point"));
    }
    let b = &loads.body_force;
    let dens: Vec<T> = (0..n)
        .map(|p| {
            let strain = strain_tensor(&u.grad_block(p, 0), d);
            let mut e = elastic_energy_density(&strain, d, mat, rho[p]);
            for c in 0..d {
                if b[c] != 0.0 {
                    e = e - u.value(p, c) * b[c];
                }
            }
            e
        })
        .collect();
    let mut loss = T::sum_of(&dens) * colloc.interior_weight;
    for (s, f) in colloc.segments.iter().zip(segment_fields) {
        if s.kind != SegmentKind::Neumann {
            continue;
        }
        let work: Vec<T> = (0..s.len())
            .map(|p| {
                let mut w = f.value(p, 0) * s.prescribed[p * d];
                for c in 1..d {
                    w = w + f.value(p, c) * s.prescribed[p * d + c];
                }
                w
            })
            .collect();
        loss = loss - T::sum_of(&work) * s.weight;
    }
    loss = add_opt(loss, dirichlet_penalty(colloc, segment_fields, loads.lambda_dir));
    finite(loss, "compliance_state_loss")
}

/// External work `∫ b·u + ∫_ΓN t·u` of a frozen displacement.
pub fn compliance_value(u: &JetBatch, colloc: &CollocationSet, segment_fields: &[JetBatch], loads: &ElasticLoads) -> Result<f64> {
    check_views(colloc, segment_fields)?;
    let d = colloc.dim;
    let mut c = 0.0;
    if loads.body_force.iter().any(|&v| v != 0.0) {
        let w: Vec<f64> = (0..u.points)
            .map(|p| (0..d).map(|k| u.value(p, k) * loads.body_force[k]).sum())
            .collect();
        c += crate::autodiff::pairwise_sum(&w) * colloc.interior_weight;
    }
    for (s, f) in colloc.segments.iter().zip(segment_fields) {
        if s.kind != SegmentKind::Neumann {
            continue;
        }
        let w: Vec<f64> = (0..s.len())
            .map(|p| (0..d).map(|k| f.value(p, k) * s.prescribed[p * d + k]).sum())
            .collect();
        c += crate::autodiff::pairwise_sum(&w) * s.weight;
    }
    Ok(c)
}

/// How the compliance term of the topology loss is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceGradient {
    /// Negated strain-energy sensitivity injected per point.
    Sensitivity,
    /// Plain derivative of `∫ρ(φ)(2μ ε:ε + λ tr²)`; for comparison only.
    EnergyTerm,
}

/// Topology loss pieces; `objective` carries the gradient of the physics
/// term and `objective_value` its physical value.
#[derive(Debug, Clone, Copy)]
pub struct TopologyLoss<T> {
    pub objective: T,
    pub objective_value: f64,
    pub phase: PhaseTerms<T>,
}

impl<T: Real> TopologyLoss<T> {
    pub fn total(&self) -> T {
        self.objective + self.phase.gl + self.phase.penalty
    }
}

/// Per-point `2μ ε:ε + λ tr²` of a frozen displacement.
pub fn contractions(u: &JetBatch, mat: &ElasticMaterial) -> Vec<f64> {
    let d = u.dim;
    (0..u.points)
        .map(|p| stiffness_contraction(&strain_tensor(&FieldView::grad_block(u, p, 0), d), d, mat))
        .collect()
}

/// Compliance topology loss over a first-order view of φ with the state frozen.
pub fn compliance_topology_loss<T: Real, V: FieldView<T>>(
    phi: &V,
    contraction: &[f64],
    compliance: f64,
    weight: f64,
    domain_volume: f64,
    cfg: &PhaseFieldConfig,
    mode: ComplianceGradient,
) -> Result<TopologyLoss<T>> {
    let n = phi.points();
    if n == 0 || contraction.len() != n {
        return Err(Error::config("compliance topology loss needs one contraction per point"));
    }
    let objective = match mode {
        ComplianceGradient::Sensitivity => {
            let deps: Vec<(T, f64)> = (0..n)
                .map(|p| {
                    let v = phi.value(p, 0);
                    (v, -simp_density_slope(v.value(), cfg) * contraction[p] * weight)
                })
                .collect();
            T::custom(compliance, &deps)
        }
        ComplianceGradient::EnergyTerm => {
            let terms: Vec<T> = (0..n)
                .map(|p| compliance_energy_term(phi.value(p, 0), contraction[p], cfg))
                .collect();
            T::sum_of(&terms) * weight
        }
    };
    let phase = phase_terms(phi, cfg, weight, domain_volume);
    finite(phase.gl + phase.penalty, "compliance_topology_loss")?;
    Ok(TopologyLoss {
        objective,
        objective_value: compliance,
        phase,
    })
}

/// Numerator and denominator of the Rayleigh quotient.
#[derive(Debug, Clone, Copy)]
pub struct RayleighParts<T> {
    pub stiffness: T,
    pub mass: T,
}

impl<T: Real> RayleighParts<T> {
    pub fn quotient(&self) -> Result<T> {
        if !(self.mass.value() > TRIVIAL_MODE_TOL) {
            return Err(Error::numeric(
                "rayleigh_quotient",
                format!("mass integral {} indicates a trivial mode", self.mass.value()),
            ));
        }
        finite(self.stiffness / self.mass, "rayleigh_quotient")
    }
}

/// Rayleigh parts with the displacement as the unknown and densities frozen.
pub fn rayleigh_parts_state<T: Real, V: FieldView<T>>(
    u: &V,
    stiffness_factor: &[f64],
    mass_factor: &[f64],
    weight: f64,
    mat: &ElasticMaterial,
) -> RayleighParts<T> {
    let d = u.dim();
    let n = u.points();
    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    for p in 0..n {
        let strain = strain_tensor(&u.grad_block(p, 0), d);
        num.push(stiffness_contraction(&strain, d, mat) * stiffness_factor[p]);
        let mut m = u.value(p, 0).square();
        for c in 1..d {
            m = m + u.value(p, c).square();
        }
        den.push(m * mass_factor[p]);
    }
    RayleighParts {
        stiffness: T::sum_of(&num) * weight,
        mass: T::sum_of(&den) * weight,
    }
}

/// Rayleigh parts with φ as the unknown and per-point `2μ ε:ε + λ tr²` and
/// `|u|²` frozen.
pub fn rayleigh_parts_phase<T: Real, V: FieldView<T>>(
    phi: &V,
    contraction: &[f64],
    speed2: &[f64],
    weight: f64,
    cfg: &PhaseFieldConfig,
) -> RayleighParts<T> {
    let n = phi.points();
    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    for p in 0..n {
        let v = phi.value(p, 0);
        num.push(simp_density(v, cfg) * contraction[p]);
        den.push(mass_density(v, cfg) * speed2[p]);
    }
    RayleighParts {
        stiffness: T::sum_of(&num) * weight,
        mass: T::sum_of(&den) * weight,
    }
}

/// `∫ρ(φ)(2μ ε:ε + λ tr²) / ∫ϱ(φ)|u|²` for frozen fields.
pub fn rayleigh_quotient(u: &JetBatch, phi: &[f64], weight: f64, mat: &ElasticMaterial, cfg: &PhaseFieldConfig) -> Result<f64> {
    let rho: Vec<f64> = phi.iter().map(|&f| simp_density(f, cfg)).collect();
    let mass: Vec<f64> = phi.iter().map(|&f| mass_density(f, cfg)).collect();
    rayleigh_parts_state::<f64, _>(u, &rho, &mass, weight, mat).quotient()
}

/// Rayleigh quotient plus mass normalization and Dirichlet penalties.
pub fn eigen_state_loss<T: Real, V: FieldView<T>>(
    u: &V,
    phi: &[f64],
    colloc: &CollocationSet,
    segment_fields: &[V],
    mat: &ElasticMaterial,
    loads: &ElasticLoads,
    cfg: &PhaseFieldConfig,
) -> Result<T> {
    check_views(colloc, segment_fields)?;
    if phi.len() != u.points() {
        return Err(Error::config("eigen state loss needs one phase value per interior point"));
    }
    let rho: Vec<f64> = phi.iter().map(|&f| simp_density(f, cfg)).collect();
    let mass: Vec<f64> = phi.iter().map(|&f| mass_density(f, cfg)).collect();
    let parts = rayleigh_parts_state(u, &rho, &mass, colloc.interior_weight, mat);
    let loss = parts.quotient()? + (parts.mass - 1.0).square() * loads.lambda_norm;
    let loss = add_opt(loss, dirichlet_penalty(colloc, segment_fields, loads.lambda_dir));
    finite(loss, "eigen_state_loss")
}

/// `−RQ + GL + volume penalty`, differentiated plainly through φ.
pub fn eigen_topology_loss<T: Real, V: FieldView<T>>(
    phi: &V,
    contraction: &[f64],
    speed2: &[f64],
    weight: f64,
    domain_volume: f64,
    cfg: &PhaseFieldConfig,
) -> Result<TopologyLoss<T>> {
    if contraction.len() != phi.points() || speed2.len() != phi.points() {
        return Err(Error::config("eigen topology loss needs frozen state values per point"));
    }
    let rq = rayleigh_parts_phase(phi, contraction, speed2, weight, cfg).quotient()?;
    let phase = phase_terms(phi, cfg, weight, domain_volume);
    Ok(TopologyLoss {
        objective: -rq,
        objective_value: rq.value(),
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{JetOrder, Tape};

    fn steel() -> ElasticMaterial {
        ElasticMaterial::new(1.0, 0.3).unwrap()
    }

    #[test]
    fn lame_examples() {
        assert_eq!(lame_params(1.0, 0.0).unwrap(), (0.5, 0.0));
        let (mu, lam) = lame_params(1.0, 0.3).unwrap();
        assert!((mu - 0.384_615_384_615_384_6).abs() < 1e-15);
        assert!((lam - 0.576_923_076_923_077).abs() < 1e-15);
        let (mu2, lam2) = lame_params(2.0, 0.3).unwrap();
        assert_eq!((mu2, lam2), (2.0 * mu, 2.0 * lam));
        assert!(lame_params(1.0, 0.5).is_err());
        assert!(lame_params(0.0, 0.3).is_err());
    }

    #[test]
    fn strain_examples() {
        assert_eq!(strain_tensor(&[0.0; 4], 2), vec![0.0; 4]);
        assert_eq!(strain_tensor(&[0.0, 1.0, -1.0, 0.0], 2), vec![0.0; 4]);
        assert_eq!(strain_tensor(&[1.0, 2.0, 0.0, 0.0], 2), vec![1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn energy_density_examples() {
        let m = steel();
        let id = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(elastic_energy_density(&[0.0; 4], 2, &m, 1.0), 0.0);
        let expected = 0.5 * (2.0 * m.mu * 2.0 + m.lambda_lame * 4.0);
        let e = elastic_energy_density(&id, 2, &m, 1.0);
        assert!((e - 1.923_076_923_076_923).abs() < 1e-14);
        assert!((e - expected).abs() < 1e-15);
        assert!((elastic_energy_density(&id, 2, &m, 1e-4) - 1e-4 * e).abs() < 1e-18);
    }

    #[test]
    fn sensitivity_examples() {
        let m = steel();
        let cfg = PhaseFieldConfig::default();
        assert_eq!(compliance_phase_sensitivity(0.7, &[0.0; 4], 2, &m, &cfg), -0.0);
        let s = compliance_phase_sensitivity(1.0, &[1.0, 0.0, 0.0, 1.0], 2, &m, &cfg);
        let expected = -3.0 * (1.0 - 1e-4) * 2.0 * 1.923_076_923_076_923;
        assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");
    }

    #[test]
    fn sensitivity_negates_energy_partial() {
        let m = steel();
        let cfg = PhaseFieldConfig::default();
        for (phi, strain) in [(0.3, [0.1, 0.2, 0.2, -0.4]), (0.8, [1.0, -0.5, -0.5, 0.3])] {
            let c = stiffness_contraction(&strain, 2, &m);
            let t = Tape::new();
            let x = t.var(phi);
            let g = t.gradient(compliance_energy_term(x, c, &cfg)).wrt(x);
            let s = compliance_phase_sensitivity(phi, &strain, 2, &m, &cfg);
            assert!((s + g).abs() <= 1e-15 * g.abs(), "{s} vs {g}");
        }
    }

    fn grad_batch(values: &[f64], grads: &[f64], d: usize) -> JetBatch {
        let n = values.len() / d;
        let mut b = JetBatch::zeros(n, d, JetOrder::Gradient, d);
        for p in 0..n {
            for c in 0..d {
                let i = b.index(p, 0, c);
                b.data[i] = values[p * d + c];
                for k in 0..d {
                    let i = b.index(p, 1 + k, c);
                    b.data[i] = grads[p * d * d + c * d + k];
                }
            }
        }
        b
    }

    #[test]
    fn rayleigh_scale_invariant_and_trivial_rejected() {
        let m = steel();
        let cfg = PhaseFieldConfig::default();
        let vals = [0.1, -0.3, 0.5, 0.2, -0.7, 0.4];
        let grads = [0.3, 0.1, -0.2, 0.5, 1.0, 0.0, 0.2, -0.1, -0.4, 0.8, 0.6, 0.2];
        let phi = [0.9, 0.4, 0.7];
        let base = rayleigh_quotient(&grad_batch(&vals, &grads, 2), &phi, 0.2, &m, &cfg).unwrap();
        for c in [0.1, 10.0] {
            let v: Vec<f64> = vals.iter().map(|x| x * c).collect();
            let g: Vec<f64> = grads.iter().map(|x| x * c).collect();
            let rq = rayleigh_quotient(&grad_batch(&v, &g, 2), &phi, 0.2, &m, &cfg).unwrap();
            assert!((rq - base).abs() <= 1e-12 * base.abs());
        }
        assert!(rayleigh_quotient(&grad_batch(&[0.0; 6], &[0.0; 12], 2), &phi, 0.2, &m, &cfg).is_err());
    }

    #[test]
    fn compliance_topology_components() {
        let cfg = PhaseFieldConfig::default();
        let phi = grad_batch(&[0.5; 4], &[0.0; 4], 1);
        let l = compliance_topology_loss::<f64, _>(&phi, &[0.0; 4], 0.0, 0.25, 1.0, &cfg, ComplianceGradient::Sensitivity).unwrap();
        assert_eq!(l.phase.penalty, 0.0);
        assert_eq!(l.total(), l.phase.gl + l.phase.penalty);
    }
}
