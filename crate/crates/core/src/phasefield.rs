//! Phase-field ingredients shared by every physics: double-well potential,
//! Ginzburg–Landau energy, volume penalty and material interpolations.

use serde::{Deserialize, Serialize};

use crate::autodiff::{FieldView, Real};
use crate::error::{Error, Result};
use crate::sampling::mc_estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltyRule {
    /// `λ ← λ / ζ`
    Divide,
    /// `λ ← λ ζ`
    Multiply,
    /// `λ ← min(λ ζ, cap)`
    MultiplyCapped { cap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFieldConfig {
    pub eps: f64,
    pub gamma: f64,
    pub beta: f64,
    pub phi_min: f64,
    pub lambda_penal: f64,
    pub zeta: f64,
    pub penalty_rule: PenaltyRule,
    pub p_simp: i32,
    pub eta: f64,
}

impl Default for PhaseFieldConfig {
    fn default() -> Self {
        PhaseFieldConfig {
            eps: 1e-2,
            gamma: 1e-2,
            beta: 0.5,
            phi_min: 1e-4,
            lambda_penal: 1.0,
            zeta: 0.98,
            penalty_rule: PenaltyRule::Divide,
            p_simp: 3,
            eta: 50.0,
        }
    }
}

impl PhaseFieldConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps", self.eps),
            ("gamma", self.gamma),
            ("phi_min", self.phi_min),
            ("eta", self.eta),
            ("zeta", self.zeta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::config(format!("phase_field.{name} must be positive, got {v}")));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(format!("phase_field.beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.lambda_penal >= 0.0) {
            return Err(Error::config("phase_field.lambda_penal must be non-negative"));
        }
        if self.p_simp < 2 {
            return Err(Error::config(format!("phase_field.p_simp must be at least 2, got {}", self.p_simp)));
        }
        Ok(())
    }

    /// One continuation step of the volume penalty weight.
    pub fn update_penalty(&mut self) -> Result<()> {
        if !(self.zeta > 0.0) {
            return Err(Error::config(format!("penalty factor zeta must be positive, got {}", self.zeta)));
        }
        self.lambda_penal = match self.penalty_rule {
            PenaltyRule::Divide => self.lambda_penal / self.zeta,
            PenaltyRule::Multiply => self.lambda_penal * self.zeta,
            PenaltyRule::MultiplyCapped { cap } => (self.lambda_penal * self.zeta).min(cap),
        };
        Ok(())
    }
}

/// `¼ φ² (1 − φ)²`
pub fn double_well<T: Real>(phi: T) -> T {
    (phi * phi.rsub(1.0)).square() * 0.25
}

/// Pointwise Ginzburg–Landau density `(ε/2)|∇φ|² + W(φ)/ε` (without γ).
pub fn gl_density<T: Real>(phi: T, grad: &[T], eps: f64) -> T {
    let mut g2 = grad[0].square();
    for g in &grad[1..] {
        g2 = g2 + g.square();
    }
    g2 * (0.5 * eps) + double_well(phi) * (1.0 / eps)
}

/// `γ ∫ (ε/2)|∇φ|² + W(φ)/ε` by Monte Carlo; `grads` is `n × d`.
pub fn gl_energy(phi: &[f64], grads: &[f64], cfg: &PhaseFieldConfig, weight: f64) -> Result<f64> {
    let d = grads.len() / phi.len().max(1);
    let dens: Vec<f64> = phi
        .iter()
        .zip(grads.chunks(d.max(1)))
        .map(|(&p, g)| gl_density(p, g, cfg.eps))
        .collect();
    Ok(cfg.gamma * mc_estimate(&dens, weight).map_err(|e| e.in_phase("gl_energy"))?)
}

/// `λ (∫φ − β|Ω|)²` given the volume integral `∫φ`.
pub fn volume_penalty_of<T: Real>(volume: T, cfg: &PhaseFieldConfig, domain_volume: f64) -> T {
    (volume - cfg.beta * domain_volume).square() * cfg.lambda_penal
}

pub fn volume_penalty(phi: &[f64], cfg: &PhaseFieldConfig, weight: f64, domain_volume: f64) -> Result<f64> {
    let v = mc_estimate(phi, weight)?;
    Ok(volume_penalty_of(v, cfg, domain_volume))
}

/// Regularization terms of a topology loss.
#[derive(Debug, Clone, Copy)]
pub struct PhaseTerms<T> {
    /// `γ ∫ (ε/2)|∇φ|² + W(φ)/ε`
    pub gl: T,
    /// `∫ φ`
    pub volume: T,
    /// `λ (∫φ − β|Ω|)²`
    pub penalty: T,
}

/// GL energy and volume penalty from channel 0 of a first-order jet view.
pub fn phase_terms<T: Real, V: FieldView<T>>(
    phi: &V,
    cfg: &PhaseFieldConfig,
    weight: f64,
    domain_volume: f64,
) -> PhaseTerms<T> {
    let n = phi.points();
    assert!(n > 0, "phase terms need at least one point");
    let mut dens = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for p in 0..n {
        let v = phi.value(p, 0);
        dens.push(gl_density(v, &phi.grads(p, 0), cfg.eps));
        vals.push(v);
    }
    let gl = T::sum_of(&dens) * (cfg.gamma * weight);
    let volume = T::sum_of(&vals) * weight;
    PhaseTerms {
        gl,
        volume,
        penalty: volume_penalty_of(volume, cfg, domain_volume),
    }
}

/// SIMP stiffness factor `(1 − φ_min) φ^p + φ_min`.
pub fn simp_density<T: Real>(phi: T, cfg: &PhaseFieldConfig) -> T {
    phi.powi(cfg.p_simp) * (1.0 - cfg.phi_min) + cfg.phi_min
}

/// `d ρ / d φ = (1 − φ_min) p φ^(p−1)`
pub fn simp_density_slope(phi: f64, cfg: &PhaseFieldConfig) -> f64 {
    (1.0 - cfg.phi_min) * cfg.p_simp as f64 * phi.powi(cfg.p_simp - 1)
}

/// Mass interpolation `(1 − φ_min) φ + φ_min`.
pub fn mass_density<T: Real>(phi: T, cfg: &PhaseFieldConfig) -> T {
    phi * (1.0 - cfg.phi_min) + cfg.phi_min
}

/// Brinkman friction `η (1 − φ)²`.
pub fn darcy_friction<T: Real>(phi: T, eta: f64) -> T {
    phi.rsub(1.0).square() * eta
}

/// `dΠ/dφ = −2η(1 − φ)`
pub fn darcy_friction_slope(phi: f64, eta: f64) -> f64 {
    -2.0 * eta * (1.0 - phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn cfg() -> PhaseFieldConfig {
        PhaseFieldConfig::default()
    }

    #[test]
    fn double_well_values() {
        assert_eq!(double_well(0.0), 0.0);
        assert_eq!(double_well(1.0), 0.0);
        assert_eq!(double_well(0.5), 0.015625);
    }

    #[test]
    fn gl_constant_fields() {
        let c = cfg();
        assert_eq!(gl_energy(&[1.0; 4], &[0.0; 8], &c, 0.25).unwrap(), 0.0);
        let e = gl_energy(&[0.5; 4], &[0.0; 8], &c, 0.25).unwrap();
        assert!((e - 0.015625).abs() < 1e-17);
    }

    #[test]
    fn volume_penalty_values() {
        let mut c = cfg();
        assert_eq!(volume_penalty(&[0.5; 8], &c, 0.25, 2.0).unwrap(), 0.0);
        c.beta = 0.5;
        assert_eq!(volume_penalty(&[1.0; 8], &c, 0.25, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn interpolations() {
        let c = cfg();
        assert_eq!(simp_density(1.0, &c), 1.0);
        assert_eq!(simp_density(0.0, &c), 1e-4);
        assert!((simp_density(0.5, &c) - 0.1250875).abs() < 1e-15);
        assert_eq!(mass_density(1.0, &c), 1.0);
        assert_eq!(mass_density(0.0, &c), 1e-4);
        assert!((mass_density(0.5, &c) - 0.50005).abs() < 1e-15);
        assert_eq!(darcy_friction(1.0, 50.0), 0.0);
        assert_eq!(darcy_friction(0.0, 50.0), 50.0);
        assert_eq!(darcy_friction(0.5, 100.0), 25.0);
    }

    #[test]
    fn penalty_rules() {
        let mut c = cfg();
        c.update_penalty().unwrap();
        assert!((c.lambda_penal - 1.0 / 0.98).abs() < 1e-15);

        let mut m = PhaseFieldConfig {
            zeta: 1.02,
            penalty_rule: PenaltyRule::Multiply,
            ..cfg()
        };
        m.update_penalty().unwrap();
        assert_eq!(m.lambda_penal, 1.02);

        let mut capped = PhaseFieldConfig {
            lambda_penal: 100.0,
            zeta: 1.01,
            penalty_rule: PenaltyRule::MultiplyCapped { cap: 1000.0 },
            ..cfg()
        };
        for _ in 0..300 {
            capped.update_penalty().unwrap();
        }
        assert_eq!(capped.lambda_penal, 1000.0);

        let mut bad = PhaseFieldConfig { zeta: 0.0, ..cfg() };
        assert!(bad.update_penalty().is_err());
    }

    #[test]
    fn divide_rule_closed_form() {
        let mut c = PhaseFieldConfig { lambda_penal: 1.3, ..cfg() };
        for _ in 0..500 {
            c.update_penalty().unwrap();
        }
        let expected = 1.3 / 0.98f64.powi(500);
        assert!((c.lambda_penal - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn volume_penalty_pointwise_derivative() {
        let c = PhaseFieldConfig { lambda_penal: 3.0, ..cfg() };
        let phi = [0.2, 0.9, 0.4, 0.7, 0.55];
        let w = 0.4;
        let t = Tape::new();
        let leaves = t.leaves(&phi);
        let vol = t.weighted_sum(&leaves, &[w; 5]);
        let pen = volume_penalty_of(vol, &c, 2.0);
        let g = t.gradient(pen);
        let v: f64 = phi.iter().sum::<f64>() * w;
        let analytic = 2.0 * 3.0 * (v - 0.5 * 2.0) * w;
        for l in &leaves {
            assert!((g.wrt(*l) - analytic).abs() < 1e-10);
        }
    }
}
