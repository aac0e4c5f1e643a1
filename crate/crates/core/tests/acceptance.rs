//! Acceptance gate: one verdict line per criterion, tolerances pinned here.

mod support;

use std::time::Instant;

use support::{channel_case, newton_output_layer, poiseuille_batch, report, small_flow_net};
use topopt::autodiff::{JetOrder, Tape};
use topopt::config::Physics;
use topopt::flow::{dissipation_objective, divergence, momentum_residual, ns_phase_sensitivity, FlowPointData};
use topopt::gradcheck::{run_checks, PHYSICS_TAGS};
use topopt::net::FourierNet;
use topopt::optim::Adam;
use topopt::phasefield::{darcy_friction, gl_energy, PhaseFieldConfig};
use topopt::problem::Problem;
use topopt::registry::builtin_case;
use topopt::run::{run_optimization, FieldGrid};

fn verdict(name: &str, pass: bool, detail: String, started: Instant) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    report(&format!(
        "ACCEPTANCE {tag} {name}: {detail} [{:.1}s]",
        started.elapsed().as_secs_f64()
    ));
    pass
}

#[test]
fn gradient_correctness() {
    let t = Instant::now();
    let tol = 1e-5;
    let mut worst: f64 = 0.0;
    let mut nets = 0;
    for seed in 0..5 {
        for tag in PHYSICS_TAGS {
            for c in run_checks(tag, 100 + seed).unwrap() {
                if c.name.ends_with("_gradient") {
                    worst = worst.max(c.error);
                    nets += 1;
                }
            }
        }
    }
    let pass = nets >= 20 && worst <= tol;
    assert!(verdict(
        "gradient_correctness",
        pass,
        format!("{nets} networks, worst relative error {worst:.2e} (tol {tol:.0e})"),
        t
    ));
}

#[test]
fn compliance_sign_identity() {
    let t = Instant::now();
    let tol = 1e-12;
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        for c in run_checks("compliance", 200 + seed).unwrap() {
            if c.name == "compliance/sign_identity" || c.name == "compliance/assembled_vs_flipped" {
                worst = worst.max(c.error);
            }
        }
    }
    assert!(verdict(
        "compliance_sign_identity",
        worst <= tol,
        format!("max abs deviation {worst:.2e} (tol {tol:.0e})"),
        t
    ));
}

#[test]
fn eigen_stationarity() {
    let t = Instant::now();
    let (mut slope, mut inv): (f64, f64) = (0.0, 0.0);
    for seed in 0..10 {
        for c in run_checks("eigenvalue", 300 + seed).unwrap() {
            match c.name.as_str() {
                "eigenvalue/stationarity" => slope = slope.max(c.error),
                "eigenvalue/scale_invariance" => inv = inv.max(c.error),
                _ => {}
            }
        }
    }
    assert!(verdict(
        "eigen_stationarity",
        slope <= 1e-8 && inv <= 1e-12,
        format!("10 fields: max |dRQ/dc| {slope:.2e} (tol 1e-8), max scale drift {inv:.2e} (tol 1e-12)"),
        t
    ));
}

#[test]
fn manufactured_poiseuille() {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for convective in [false, true] {
        let cfg = channel_case(convective, 0.05, 10.0, 20, 40, small_flow_net(32, vec![32, 32]));
        let (Physics::Stokes { flow } | Physics::NavierStokes { flow }) = &cfg.physics else { unreachable!() };
        let problem = Problem::new(cfg.clone()).unwrap();
        let exact = poiseuille_batch(&problem.colloc.interior, flow.mu, 0.37);
        for p in 0..exact.points {
            for r in momentum_residual(&exact, p, 0.0, flow) {
                worst = worst.max(r.abs());
            }
            worst = worst.max(divergence(&exact, p).abs());
        }
    }
    // training a two-hidden-layer state net on the fluid-only channel
    let cfg = channel_case(false, 0.05, 10.0, 20, 40, small_flow_net(32, vec![32, 32]));
    let problem = Problem::new(cfg).unwrap();
    let pf = problem.cfg.phase_field.clone();
    let mut net = problem.build_nets().unwrap().state;
    let coeff = vec![0.0; problem.colloc.interior_len()];
    let initial = problem.state_loss(&net, &coeff, &pf).unwrap();
    let mut adam = Adam::new(net.params.len(), 5e-3);
    for _ in 0..5000 {
        let (_, g) = problem.state_loss_grad(&net, &coeff, &pf).unwrap();
        adam.step(&mut net.params, &g).unwrap();
    }
    let last = problem.state_loss(&net, &coeff, &pf).unwrap();
    let ratio = last / initial;
    assert!(verdict(
        "manufactured_poiseuille",
        worst <= 1e-12 && ratio <= 1e-3,
        format!("exact-field residual {worst:.2e} (tol 1e-12); training loss ratio {ratio:.2e} after 5000 steps (tol 1e-3)"),
        t
    ));
}

/// Frozen-design flow experiment on the channel with a soft obstacle.
struct FlowLab {
    problem: Problem,
    pf: PhaseFieldConfig,
    phi0: Vec<f64>,
    bump: Vec<f64>,
    net: FourierNet,
}

fn gaussian(x: &[f64], c: [f64; 2], width2: f64) -> f64 {
    (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / width2).exp()
}

impl FlowLab {
    /// Channel with a soft obstacle, `grid²` interior points, `edge` points
    /// per side and a one-hidden-layer net of `width` features and neurons.
    fn new(convective: bool, grid: usize, edge: usize, width: usize) -> Self {
        let cfg = channel_case(convective, 0.05, 10.0, grid, edge, small_flow_net(width, vec![width]));
        let problem = Problem::new(cfg).unwrap();
        let pf = problem.cfg.phase_field.clone();
        let pts = &problem.colloc.interior;
        let phi0: Vec<f64> = pts.chunks(2).map(|x| 1.0 - 0.6 * gaussian(x, [0.5, 0.5], 0.04)).collect();
        let bump: Vec<f64> = pts.chunks(2).map(|x| gaussian(x, [0.4, 0.35], 0.01)).collect();
        let mut net = problem.build_nets().unwrap().state;
        let coeff = Self::friction_of(&phi0, pf.eta);
        let mut adam = Adam::new(net.params.len(), 5e-3);
        for _ in 0..2000 {
            let (_, g) = problem.state_loss_grad(&net, &coeff, &pf).unwrap();
            adam.step(&mut net.params, &g).unwrap();
        }
        let mut lab = FlowLab {
            problem,
            pf,
            phi0,
            bump,
            net,
        };
        let phi0 = lab.phi0.clone();
        let mut net = lab.net.clone();
        lab.solve_state(&mut net, &phi0);
        lab.net = net;
        lab
    }

    fn friction_of(phi: &[f64], eta: f64) -> Vec<f64> {
        phi.iter().map(|&f| darcy_friction(f, eta)).collect()
    }

    fn perturbed(&self, delta: f64) -> Vec<f64> {
        self.phi0.iter().zip(&self.bump).map(|(f, b)| f + delta * b).collect()
    }

    fn solve_state(&self, net: &mut FourierNet, phi: &[f64]) -> f64 {
        let coeff = Self::friction_of(phi, self.pf.eta);
        newton_output_layer(net, 4, |n| self.problem.state_loss_grad(n, &coeff, &self.pf).unwrap().1)
    }

    fn point_data(&self, net: &FourierNet) -> FlowPointData {
        let (Physics::Stokes { flow } | Physics::NavierStokes { flow }) = &self.problem.cfg.physics else { unreachable!() };
        let jets = net.eval(&self.problem.colloc.interior, JetOrder::Gradient).unwrap();
        FlowPointData::new(&jets, None, flow).unwrap()
    }

    fn objective(&self, net: &FourierNet, phi: &[f64]) -> f64 {
        let data = self.point_data(net);
        dissipation_objective(&data, phi, self.pf.eta, self.problem.colloc.interior_weight)
    }

    /// Objective after re-solving the state at `φ₀ + δ·bump`.
    fn resolved_objective(&self, delta: f64) -> f64 {
        let phi = self.perturbed(delta);
        let mut net = self.net.clone();
        self.solve_state(&mut net, &phi);
        self.objective(&net, &phi)
    }

    fn central_difference(&self, delta: f64) -> f64 {
        (self.resolved_objective(delta) - self.resolved_objective(-delta)) / (2.0 * delta)
    }
}

#[test]
fn stokes_identity() {
    let t = Instant::now();
    let lab = FlowLab::new(false, 24, 48, 48);
    let data = lab.point_data(&lab.net);
    // partial derivative along the bump with the state held fixed, by AD
    let tape = Tape::new();
    let delta = tape.var(0.0);
    let w = lab.problem.colloc.interior_weight;
    let terms: Vec<_> = (0..lab.phi0.len())
        .map(|i| darcy_friction(delta * lab.bump[i] + lab.phi0[i], lab.pf.eta) * (0.5 * w * data.speed2[i]))
        .collect();
    let partial = tape.gradient(tape.sum(&terms)).wrt(delta);
    let total = lab.central_difference(0.05);
    let rel = (total - partial).abs() / total.abs();
    assert!(verdict(
        "stokes_identity",
        rel <= 0.1,
        format!("re-solved total {total:.6e}, partial {partial:.6e}, relative gap {rel:.3} (tol 0.10)"),
        t
    ));
}

#[test]
fn navier_stokes_adjoint_sensitivity() {
    let t = Instant::now();
    // the smaller Stokes lab leaves an 8% basis error in the re-solved change
    let lab = FlowLab::new(true, 40, 80, 120);
    let state_jets = lab.problem.adjoint_inputs(&lab.net).unwrap();
    let friction = FlowLab::friction_of(&lab.phi0, lab.pf.eta);
    let mut adj = lab.net.clone();
    let adj_grad = newton_output_layer(&mut adj, 2, |n| {
        lab.problem.adjoint_loss_grad(n, &state_jets, &friction).unwrap().1
    });
    let pts = &lab.problem.colloc.interior;
    let u = lab.net.eval(pts, JetOrder::Value).unwrap();
    let wv = adj.eval(pts, JetOrder::Value).unwrap();
    let w = lab.problem.colloc.interior_weight;
    let delta = 1e-3;
    let (mut predicted, mut explicit_only) = (0.0, 0.0);
    for i in 0..lab.phi0.len() {
        let ui = [u.value(i, 0), u.value(i, 1)];
        let wi = [wv.value(i, 0), wv.value(i, 1)];
        predicted += w * ns_phase_sensitivity(&ui, &wi, lab.phi0[i], lab.pf.eta) * lab.bump[i] * delta;
        explicit_only += w * ns_phase_sensitivity(&ui, &[0.0, 0.0], lab.phi0[i], lab.pf.eta) * lab.bump[i] * delta;
    }
    let fd = (lab.resolved_objective(delta) - lab.resolved_objective(-delta)) / 2.0;
    let rel = (predicted - fd).abs() / fd.abs();
    assert!(verdict(
        "navier_stokes_adjoint",
        rel <= 0.1,
        format!(
            "re-solved change {fd:.6e}, adjoint prediction {predicted:.6e} (explicit term alone {explicit_only:.6e}), relative gap {rel:.3} (tol 0.10); adjoint gradient norm {adj_grad:.1e}"
        ),
        t
    ));
}

#[test]
fn ginzburg_landau_quadrature() {
    let t = Instant::now();
    let pf = PhaseFieldConfig::default();
    let eps = pf.eps;
    let k = 1.0 / (2.0 * 2f64.sqrt() * eps);
    let profile = |x: f64| 0.5 * (1.0 + (k * x).tanh());
    let slope = |x: f64| 0.5 * k / (k * x).cosh().powi(2);
    // engine: 4000 midpoints on [−0.5, 0.5]
    let n = 4000;
    let h = 1.0 / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -0.5 + (i as f64 + 0.5) * h).collect();
    let phi: Vec<f64> = xs.iter().map(|&x| profile(x)).collect();
    let grads: Vec<f64> = xs.iter().map(|&x| slope(x)).collect();
    let engine = gl_energy(&phi, &grads, &pf, h).unwrap();
    // oracle: 10⁶-point trapezoid of γ[(ε/2)φ'² + φ²(1−φ)²/(4ε)]
    let m = 1_000_000;
    let hh = 1.0 / (m - 1) as f64;
    let dens = |x: f64| {
        let f = profile(x);
        let g = slope(x);
        pf.gamma * (0.5 * eps * g * g + 0.25 * f * f * (1.0 - f) * (1.0 - f) / eps)
    };
    let mut oracle = 0.5 * (dens(-0.5) + dens(0.5));
    for i in 1..m - 1 {
        oracle += dens(-0.5 + i as f64 * hh);
    }
    oracle *= hh;
    let rel = (engine - oracle).abs() / oracle;
    assert!(verdict(
        "ginzburg_landau_quadrature",
        rel <= 0.01,
        format!("engine {engine:.8e}, trapezoid {oracle:.8e}, relative {rel:.2e} (tol 1e-2)"),
        t
    ));
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn desk_cantilever() {
    let t = Instant::now();
    let cfg = builtin_case("cantilever2d").unwrap().scaled(0.25).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = run_optimization(&cfg, dir_a.path(), None).unwrap();
    run_optimization(&cfg, dir_b.path(), None).unwrap();
    let csv_a = std::fs::read(dir_a.path().join("convergence.csv")).unwrap();
    let csv_b = std::fs::read(dir_b.path().join("convergence.csv")).unwrap();
    let reproducible = csv_a == csv_b;
    let grid = FieldGrid::evaluate(&cfg, &a.nets, &[200, 100]).unwrap();
    let (fraction, intermediate) = grid.phase_statistics();
    let losses: Vec<f64> = a.records.iter().map(|r| r.topology_loss).collect();
    let n = losses.len();
    let (first, trailing) = (mean(&losses[..50.min(n)]), mean(&losses[n.saturating_sub(50)..]));
    let volume_gap = (fraction - 0.5).abs();
    let pass = volume_gap <= 0.03 && intermediate <= 0.25 && trailing < first && reproducible;
    assert!(verdict(
        "desk_cantilever",
        pass,
        format!(
            "{n} epochs; volume fraction {fraction:.4} (|gap| {volume_gap:.4}, tol 0.03); intermediate {:.1}% (tol 25%); topology loss first-50 {first:.5e} trailing-50 {trailing:.5e}; csv reproducible {reproducible}",
            100.0 * intermediate
        ),
        t
    ));
}

#[test]
fn desk_stokes_bend() {
    let t = Instant::now();
    let cfg = builtin_case("stokes_bend2d").unwrap().scaled(0.25).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let run = run_optimization(&cfg, dir.path(), None).unwrap();
    let obj: Vec<f64> = run.records.iter().map(|r| r.objective).collect();
    let n = obj.len();
    // trailing window: the last 50 epochs; compare its last and first tenths
    let window = &obj[n.saturating_sub(50)..];
    let (head, tail) = (mean(&window[..10]), mean(&window[window.len() - 10..]));
    let limit = 0.05 * cfg.phase_field.beta * cfg.domain.volume();
    let vol = run.records.last().unwrap().volume_error.abs();
    assert!(verdict(
        "desk_stokes_bend",
        tail < head && vol <= limit,
        format!("{n} epochs; dissipation window head {head:.5e} tail {tail:.5e}; |volume error| {vol:.4e} (tol {limit:.4e})"),
        t
    ));
}
