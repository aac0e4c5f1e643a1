//! Gradient-identity suite on tiny random instances of each physics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{fd_gradient_oracle, relative_error, FieldView, JetBatch, JetOrder, Tape, Var};
use crate::config::{CaseConfig, Physics};
use crate::elasticity::{compliance_phase_sensitivity, compliance_energy_term, rayleigh_parts_state, strain_tensor, ComplianceGradient};
use crate::error::{Error, Result};
use crate::flow::ns_phase_sensitivity;
use crate::net::{FourierNet, FreqInit, NetSpec, OutputInit};
use crate::phasefield::{darcy_friction_slope, mass_density, simp_density};
use crate::problem::{Frozen, Problem};
use crate::registry::builtin_case;
use crate::sampling::{sub_seed, InteriorSampling};

pub const PHYSICS_TAGS: [&str; 4] = ["compliance", "eigenvalue", "stokes", "navier_stokes"];
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

/// A registry case shrunk to a few points and a few units per layer, with
/// random output layers so that no gradient vanishes identically.
pub fn tiny_case(physics: &str, seed: u64) -> Result<CaseConfig> {
    let base = match physics {
        "compliance" => "mbb2d",
        "eigenvalue" => "eigen_partial2d",
        "stokes" => "stokes_bend2d",
        "navier_stokes" => "ns_bend2d",
        other => return Err(Error::config(format!("unknown physics tag `{other}`"))),
    };
    let mut c = builtin_case(base)?;
    c.seed = seed;
    c.interior = InteriorSampling::Random { count: 24 };
    for s in &mut c.segments {
        if s.points > 0 {
            s.points = 4;
        }
    }
    c.state_net = NetSpec {
        freq_init: FreqInit::Gaussian {
            features: 6,
            scale: 1.0,
        },
        hidden: vec![5, 5],
        freq_trainable: true,
        output_init: OutputInit::Normal { std: 0.3 },
    };
    c.topology_net = NetSpec {
        freq_init: FreqInit::Grid { max_freq: 2 },
        hidden: vec![5],
        freq_trainable: true,
        output_init: OutputInit::Normal { std: 0.5 },
    };
    c.validate()?;
    Ok(c)
}

fn jitter(net: &mut FourierNet, seed: u64, std: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("positive std");
    let freq_len = net.n_freq * net.dim;
    for (k, p) in net.params.iter_mut().enumerate() {
        if k >= freq_len {
            *p += normal.sample(&mut rng);
        }
    }
}

fn fd_check<F>(name: &str, net: &FourierNet, analytic: &[f64], mut loss: F) -> Result<Check>
where
    F: FnMut(&FourierNet) -> Result<f64>,
{
    let mut probe = net.clone();
    let fd = fd_gradient_oracle(
        |theta| {
            probe.params.copy_from_slice(theta);
            loss(&probe).unwrap_or(f64::NAN)
        },
        &net.params,
        FD_STEP,
    )?;
    Ok(Check {
        name: name.to_string(),
        error: relative_error(analytic, &fd, 1e-8),
        tolerance: FD_TOL,
    })
}

/// Velocity block of a batch multiplied by a taped scalar.
struct ScaledView<'a, 't> {
    base: &'a JetBatch,
    c: Var<'t>,
}

impl<'t> FieldView<Var<'t>> for ScaledView<'_, 't> {
    fn points(&self) -> usize {
        self.base.points
    }
    fn dim(&self) -> usize {
        self.base.dim
    }
    fn channels(&self) -> usize {
        self.base.channels
    }
    fn value(&self, p: usize, c: usize) -> Var<'t> {
        self.c * self.base.value(p, c)
    }
    fn grad(&self, p: usize, c: usize, i: usize) -> Var<'t> {
        self.c * self.base.grad(p, c, i)
    }
    fn hess(&self, p: usize, c: usize, i: usize) -> Var<'t> {
        self.c * self.base.hess(p, c, i)
    }
}

/// `d/dc RQ(c u)` at `c = 1` and `|RQ(c u) − RQ(u)| / |RQ(u)|` for
/// `c ∈ {0.1, 10}`.
pub fn rayleigh_scale_checks(problem: &Problem, state: &FourierNet, phi: &[f64]) -> Result<(f64, f64)> {
    let Physics::Eigenvalue { material, .. } = &problem.cfg.physics else {
        return Err(Error::config("rayleigh checks need an eigenvalue case"));
    };
    let pf = &problem.cfg.phase_field;
    let u = state.eval(&problem.colloc.interior, JetOrder::Gradient)?;
    let rho: Vec<f64> = phi.iter().map(|&f| simp_density(f, pf)).collect();
    let mass: Vec<f64> = phi.iter().map(|&f| mass_density(f, pf)).collect();
    let w = problem.colloc.interior_weight;
    let tape = Tape::new();
    let c = tape.var(1.0);
    let rq = rayleigh_parts_state(&ScaledView { base: &u, c }, &rho, &mass, w, material).quotient()?;
    let slope = tape.gradient(rq).wrt(c).abs();
    let base = rq.val();
    let mut invariance: f64 = 0.0;
    for s in [0.1, 10.0] {
        let t = Tape::new();
        let cv = t.var(s);
        let v = rayleigh_parts_state(&ScaledView { base: &u, c: cv }, &rho, &mass, w, material)
            .quotient()?
            .val();
        invariance = invariance.max((v - base).abs() / base.abs());
    }
    Ok((slope, invariance))
}

/// Per-point `max |s(x) + ∂E/∂φ(x)|` between the injected compliance
/// sensitivity and the plain derivative of the energy term.
pub fn compliance_sign_identity(problem: &Problem, state: &FourierNet, phi: &[f64]) -> Result<f64> {
    let Physics::Compliance { material, .. } = &problem.cfg.physics else {
        return Err(Error::config("sign identity needs a compliance case"));
    };
    let pf = &problem.cfg.phase_field;
    let u = state.eval(&problem.colloc.interior, JetOrder::Gradient)?;
    let d = u.dim;
    let mut worst: f64 = 0.0;
    for (p, &f) in phi.iter().enumerate() {
        let strain = strain_tensor(&FieldView::grad_block(&u, p, 0), d);
        let s = compliance_phase_sensitivity(f, &strain, d, material, pf);
        let contraction = crate::elasticity::stiffness_contraction(&strain, d, material);
        let t = Tape::new();
        let x = t.var(f);
        let partial = t.gradient(compliance_energy_term(x, contraction, pf)).wrt(x);
        worst = worst.max((s + partial).abs());
    }
    Ok(worst)
}

/// Runs every check for one physics tag on the tiny instance with `seed`.
pub fn run_checks(physics: &str, seed: u64) -> Result<Vec<Check>> {
    let mut problem = Problem::new(tiny_case(physics, seed)?)?;
    let mut nets = problem.build_nets()?;
    jitter(&mut nets.state, sub_seed(seed, 7), 0.2);
    jitter(&mut nets.topology, sub_seed(seed, 8), 0.2);
    let pf = problem.cfg.phase_field.clone();
    let phi = problem.phase_values(&nets.topology)?;
    let coeff = problem.state_coefficients(&phi, &pf);
    let mut checks = Vec::new();

    let (_, g) = problem.state_loss_grad(&nets.state, &coeff, &pf)?;
    checks.push(fd_check(&format!("{physics}/state_gradient"), &nets.state, &g, |n| {
        problem.state_loss(n, &coeff, &pf)
    })?);

    if physics == "navier_stokes" {
        let state_jets = problem.adjoint_inputs(&nets.state)?;
        let mut adj = nets.state.clone();
        jitter(&mut adj, sub_seed(seed, 9), 0.2);
        let (_, g) = problem.adjoint_loss_grad(&adj, &state_jets, &coeff)?;
        checks.push(fd_check("navier_stokes/adjoint_gradient", &adj, &g, |n| {
            problem.adjoint_loss(n, &state_jets, &coeff)
        })?);
        let frozen = problem.frozen(&nets.state, Some(&adj))?;
        let Frozen::Flow(data) = &frozen else { unreachable!("flow physics") };
        let w = adj.eval(&problem.colloc.interior, JetOrder::Value)?;
        let u = nets.state.eval(&problem.colloc.interior, JetOrder::Value)?;
        let d = u.dim;
        let mut worst: f64 = 0.0;
        for (p, &f) in phi.iter().enumerate() {
            let uu = FieldView::values(&u, p, 0, d);
            let ww = FieldView::values(&w, p, 0, d);
            let s = ns_phase_sensitivity(&uu, &ww, f, pf.eta);
            let expected = darcy_friction_slope(f, pf.eta) * (0.5 * data.speed2[p] - data.adjoint_dot.as_ref().expect("adjoint")[p]);
            worst = worst.max((s - expected).abs());
        }
        checks.push(Check {
            name: "navier_stokes/sensitivity_formula".into(),
            error: worst,
            tolerance: 1e-12,
        });
        // the injected design gradient equals the per-point sensitivity pushed
        // through the topology network
        let (_, g_design) = problem.topology_loss_grad(&nets.topology, &frozen, &pf)?;
        let zero = crate::flow::FlowPointData {
            speed2: vec![0.0; phi.len()],
            rest: vec![0.0; phi.len()],
            adjoint_dot: Some(vec![0.0; phi.len()]),
        };
        let (_, g_phase) = problem.topology_loss_grad(&nets.topology, &Frozen::Flow(zero), &pf)?;
        let g_obj: Vec<f64> = g_design.iter().zip(&g_phase).map(|(a, b)| a - b).collect();
        let weights: Vec<f64> = (0..phi.len())
            .map(|p| {
                darcy_friction_slope(phi[p], pf.eta)
                    * (0.5 * data.speed2[p] - data.adjoint_dot.as_ref().expect("adjoint")[p])
                    * problem.colloc.interior_weight
            })
            .collect();
        let pushed = {
            let (jets, tape) = nets.topology.eval_recorded(&problem.colloc.interior, JetOrder::Value)?;
            let mut cot = JetBatch::zeros(jets.points, jets.dim, JetOrder::Value, 1);
            cot.data.copy_from_slice(&weights);
            nets.topology.backward(&tape, &cot)?
        };
        checks.push(Check {
            name: "navier_stokes/design_gradient_assembly".into(),
            error: relative_error(&g_obj, &pushed, 1e-12),
            tolerance: 1e-10,
        });
        return Ok(checks);
    }

    if physics == "compliance" {
        checks.push(Check {
            name: "compliance/sign_identity".into(),
            error: compliance_sign_identity(&problem, &nets.state, &phi)?,
            tolerance: 1e-12,
        });
        let frozen = problem.frozen(&nets.state, None)?;
        let (_, g_sens) = problem.topology_loss_grad(&nets.topology, &frozen, &pf)?;
        problem.compliance_gradient = ComplianceGradient::EnergyTerm;
        let (_, g_energy) = problem.topology_loss_grad(&nets.topology, &frozen, &pf)?;
        let Frozen::Compliance { contraction, .. } = &frozen else { unreachable!("compliance physics") };
        let zero = Frozen::Compliance {
            contraction: vec![0.0; contraction.len()],
            compliance: 0.0,
        };
        let (_, g_phase) = problem.topology_loss_grad(&nets.topology, &zero, &pf)?;
        // sensitivity part = −(energy part), component-wise
        let worst = g_sens
            .iter()
            .zip(&g_energy)
            .zip(&g_phase)
            .map(|((s, e), p)| ((s - p) + (e - p)).abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "compliance/assembled_vs_flipped".into(),
            error: worst,
            tolerance: 1e-12,
        });
        checks.push(fd_check("compliance/topology_gradient", &nets.topology, &g_energy, |n| {
            Ok(problem.topology_loss(n, &frozen, &pf)?.total)
        })?);
        return Ok(checks);
    }

    let frozen = problem.frozen(&nets.state, None)?;
    let (_, g) = problem.topology_loss_grad(&nets.topology, &frozen, &pf)?;
    checks.push(fd_check(&format!("{physics}/topology_gradient"), &nets.topology, &g, |n| {
        Ok(problem.topology_loss(n, &frozen, &pf)?.total)
    })?);
    if physics == "eigenvalue" {
        let (slope, invariance) = rayleigh_scale_checks(&problem, &nets.state, &phi)?;
        checks.push(Check {
            name: "eigenvalue/stationarity".into(),
            error: slope,
            tolerance: 1e-8,
        });
        checks.push(Check {
            name: "eigenvalue/scale_invariance".into(),
            error: invariance,
            tolerance: 1e-12,
        });
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_passes() {
        for tag in PHYSICS_TAGS {
            for c in run_checks(tag, 11).unwrap() {
                assert!(c.passed(), "{}: {} > {}", c.name, c.error, c.tolerance);
            }
        }
    }
}
