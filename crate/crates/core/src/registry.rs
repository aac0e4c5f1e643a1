//! Built-in benchmark cases.

use crate::config::{CaseConfig, DesignStage, Physics, PretrainStop, TrainingSchedule};
use crate::elasticity::{ElasticLoads, ElasticMaterial};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::net::{FreqInit, Multiplier, NetSpec, OutputInit};
use crate::phasefield::{PenaltyRule, PhaseFieldConfig};
use crate::sampling::{BoundarySegment, BoxDomain, Disk, InteriorSampling, Profile, SegmentKind, SegmentShape};

pub const CASE_IDS: [&str; 19] = [
    "cantilever2d",
    "offset2d",
    "mbb2d",
    "eigen_partial2d",
    "eigen_clamped2d",
    "stokes_bend2d",
    "stokes_diffuser2d",
    "stokes_double2d",
    "ns_bend2d",
    "ns_expand2d",
    "ns_double2d",
    "cantilever3d",
    "offset3d",
    "mbb3d",
    "eigen3d_a",
    "eigen3d_b",
    "stokes_mixer3d",
    "stokes_duct3d",
    "ns_mixer3d",
];

const DEFAULT_SEED: u64 = 7;

pub fn case_registry() -> Vec<&'static str> {
    CASE_IDS.to_vec()
}

pub fn builtin_case(id: &str) -> Result<CaseConfig> {
    let cfg = match id {
        "cantilever2d" => compliance2d(id, [-0.05, 0.05], 10),
        "offset2d" => compliance2d(id, [-0.5, -0.4], 20),
        "mbb2d" => mbb2d(),
        "eigen_partial2d" => eigen2d(id, false),
        "eigen_clamped2d" => eigen2d(id, true),
        "stokes_bend2d" => stokes_bend2d(),
        "stokes_diffuser2d" => stokes_diffuser2d(),
        "stokes_double2d" => stokes_double2d(),
        "ns_bend2d" => ns_bend2d(),
        "ns_expand2d" => ns_expand2d(),
        "ns_double2d" => ns_double2d(),
        "cantilever3d" => compliance3d(id, [-0.05, 0.05], 10),
        "offset3d" => compliance3d(id, [-0.5, -0.4], 20),
        "mbb3d" => mbb3d(),
        "eigen3d_a" => eigen3d(id, false),
        "eigen3d_b" => eigen3d(id, true),
        "stokes_mixer3d" => mixer3d(id, false),
        "stokes_duct3d" => duct3d(),
        "ns_mixer3d" => mixer3d(id, true),
        other => {
            return Err(Error::config(format!(
                "unknown case `{other}`; known cases: {}",
                CASE_IDS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn rect(name: &str, kind: SegmentKind, axis: usize, value: f64, ranges: Vec<[f64; 2]>, profile: Profile, points: usize) -> BoundarySegment {
    BoundarySegment {
        name: name.to_string(),
        kind,
        fixed_axis: axis,
        fixed_value: value,
        shape: SegmentShape::Rect { ranges },
        profile,
        points,
    }
}

fn constant(v: &[f64]) -> Profile {
    Profile::Constant { value: v.to_vec() }
}

fn parabolic(component: usize, axis: usize, center: f64, peak: f64, curvature: f64) -> Profile {
    Profile::Parabolic {
        component,
        axis,
        center,
        peak,
        curvature,
    }
}

fn net(freq_init: FreqInit, hidden: Vec<usize>, freq_trainable: bool, output_init: OutputInit) -> NetSpec {
    NetSpec {
        freq_init,
        hidden,
        freq_trainable,
        output_init,
    }
}

/// Single sine layer whose frequencies start on the integer grid, read out
/// linearly: a Fourier series with trainable frequencies.
fn grid_net(max_freq: usize) -> NetSpec {
    net(FreqInit::Grid { max_freq }, vec![], true, OutputInit::Zero)
}

fn elastic(material_loads: (f64, f64), dim: usize, lambda_dir: f64, lambda_norm: f64, eigen: bool) -> Physics {
    let material = ElasticMaterial::new(material_loads.0, material_loads.1).expect("valid material");
    let loads = ElasticLoads {
        body_force: vec![0.0; dim],
        lambda_dir,
        lambda_norm,
    };
    if eigen {
        Physics::Eigenvalue { material, loads }
    } else {
        Physics::Compliance { material, loads }
    }
}

fn clamp_left() -> Multiplier {
    Multiplier::Affine {
        axis: 0,
        slope: 1.0,
        intercept: 1.0,
    }
}

fn compliance_phase() -> PhaseFieldConfig {
    PhaseFieldConfig::default()
}

fn compliance_schedule(epochs: usize, late_steps: usize, pretrain: PretrainStop, lr: (f64, f64, f64)) -> TrainingSchedule {
    TrainingSchedule {
        pretrain,
        epochs,
        state_steps: 20,
        adjoint_steps: None,
        design_steps: vec![
            DesignStage { from_epoch: 0, steps: 1 },
            DesignStage {
                from_epoch: 200,
                steps: late_steps,
            },
        ],
        lr_state_init: lr.0,
        lr_state_opt: lr.1,
        lr_adjoint: lr.1,
        lr_topology: lr.2,
    }
}

fn compliance2d(id: &str, load: [f64; 2], late_steps: usize) -> CaseConfig {
    let domain = BoxDomain::new(vec![-1.0, -0.5], vec![1.0, 0.5]).expect("domain");
    CaseConfig {
        case_id: id.to_string(),
        seed: DEFAULT_SEED,
        physics: elastic((1.0, 0.3), 2, 0.0, 0.0, false),
        segments: vec![
            rect("clamp", SegmentKind::Dirichlet, 0, -1.0, vec![[-0.5, 0.5]], Profile::Zero, 0),
            rect("load", SegmentKind::Neumann, 0, 1.0, vec![load], constant(&[0.0, -1.0]), 500),
        ],
        domain,
        phase_field: compliance_phase(),
        schedule: compliance_schedule(
            500,
            late_steps,
            PretrainStop {
                max_iters: 20000,
                min_iters: 1000,
                rel_tol: Some(1e-3),
                window: 100,
            },
            (1e-3, 1e-4, 1e-3),
        ),
        state_net: grid_net(35),
        topology_net: grid_net(30),
        state_multiplier: Some(clamp_left()),
        interior: InteriorSampling::Random { count: 20000 },
        export_resolution: vec![200, 100],
        scale: 1.0,
    }
}

fn mbb2d() -> CaseConfig {
    let mut c = compliance2d("mbb2d", [-0.05, 0.05], 10);
    c.physics = elastic((1.0, 0.3), 2, 5.0, 0.0, false);
    c.state_multiplier = None;
    c.segments = vec![
        rect("support_left", SegmentKind::Dirichlet, 1, -0.5, vec![[-1.0, -0.95]], Profile::Zero, 500),
        rect("support_right", SegmentKind::Dirichlet, 1, -0.5, vec![[0.95, 1.0]], Profile::Zero, 500),
        rect("load", SegmentKind::Neumann, 1, -0.5, vec![[-0.05, 0.05]], constant(&[0.0, -1.0]), 500),
    ];
    c
}

fn compliance3d(id: &str, load_y: [f64; 2], late_steps: usize) -> CaseConfig {
    let domain = BoxDomain::new(vec![-1.0, -0.5, -0.2], vec![1.0, 0.5, 0.2]).expect("domain");
    CaseConfig {
        case_id: id.to_string(),
        seed: DEFAULT_SEED,
        physics: elastic((1.0, 0.3), 3, 0.0, 0.0, false),
        segments: vec![
            rect("clamp", SegmentKind::Dirichlet, 0, -1.0, vec![[-0.5, 0.5], [-0.2, 0.2]], Profile::Zero, 0),
            rect(
                "load",
                SegmentKind::Neumann,
                0,
                1.0,
                vec![load_y, [-0.05, 0.05]],
                constant(&[0.0, -1.0, 0.0]),
                500,
            ),
        ],
        domain,
        phase_field: compliance_phase(),
        schedule: compliance_schedule(500, late_steps, fixed_pretrain(10000), (1e-3, 1e-3, 5e-3)),
        state_net: net(
            FreqInit::Gaussian {
                features: 512,
                scale: 20.0,
            },
            vec![64; 4],
            false,
            OutputInit::Zero,
        ),
        topology_net: grid_net(10),
        state_multiplier: Some(clamp_left()),
        interior: InteriorSampling::Grid {
            resolution: vec![60, 30, 30],
        },
        export_resolution: vec![60, 30, 30],
        scale: 1.0,
    }
}

fn mbb3d() -> CaseConfig {
    let mut c = compliance3d("mbb3d", [-0.05, 0.05], 10);
    c.physics = elastic((1.0, 0.3), 3, 5.0, 0.0, false);
    c.state_multiplier = None;
    let z = [-0.05, 0.05];
    c.segments = vec![
        rect("support_left", SegmentKind::Dirichlet, 1, -0.5, vec![[-1.0, -0.9], z], Profile::Zero, 500),
        rect("support_right", SegmentKind::Dirichlet, 1, -0.5, vec![[0.9, 1.0], z], Profile::Zero, 500),
        rect("load", SegmentKind::Neumann, 1, 0.5, vec![[-0.05, 0.05], z], constant(&[0.0, -1.0, 0.0]), 500),
    ];
    c
}

fn fixed_pretrain(iters: usize) -> PretrainStop {
    PretrainStop {
        max_iters: iters,
        min_iters: iters,
        rel_tol: None,
        window: 100,
    }
}

fn tanh_clamp(left: bool) -> Multiplier {
    // tanh(100(x + 1)) or tanh(100(1 − x))
    Multiplier::Tanh {
        axis: 0,
        slope: if left { 100.0 } else { -100.0 },
        intercept: 100.0,
    }
}

fn eigen_state_net(width: usize) -> NetSpec {
    net(
        FreqInit::Gaussian {
            features: 64,
            scale: 1.0,
        },
        vec![width; 2],
        false,
        OutputInit::Normal { std: 1e-2 },
    )
}

fn eigen2d(id: &str, clamped: bool) -> CaseConfig {
    let half = if clamped { 0.25 } else { 0.5 };
    let domain = BoxDomain::new(vec![-1.0, -half], vec![1.0, half]).expect("domain");
    let mut segments = vec![rect("clamp_left", SegmentKind::Dirichlet, 0, -1.0, vec![[-half, half]], Profile::Zero, 0)];
    let (multiplier, lambda_dir) = if clamped {
        segments.push(rect("clamp_right", SegmentKind::Dirichlet, 0, 1.0, vec![[-half, half]], Profile::Zero, 0));
        (
            Multiplier::Product {
                factors: vec![tanh_clamp(true), tanh_clamp(false)],
            },
            0.0,
        )
    } else {
        segments.push(rect("support_right", SegmentKind::Dirichlet, 0, 1.0, vec![[-0.05, 0.05]], Profile::Zero, 1000));
        (tanh_clamp(true), 200.0)
    };
    CaseConfig {
        case_id: id.to_string(),
        seed: DEFAULT_SEED,
        physics: elastic((1.0, 0.3), 2, lambda_dir, 50.0, true),
        segments,
        domain,
        phase_field: PhaseFieldConfig {
            lambda_penal: if clamped { 10.0 } else { 1.0 },
            zeta: if clamped { 1.01 } else { 1.02 },
            penalty_rule: PenaltyRule::Multiply,
            ..PhaseFieldConfig::default()
        },
        schedule: TrainingSchedule {
            pretrain: PretrainStop {
                max_iters: 20000,
                min_iters: 1000,
                rel_tol: Some(1e-5),
                window: 100,
            },
            epochs: 500,
            state_steps: 20,
            adjoint_steps: None,
            design_steps: vec![
                DesignStage { from_epoch: 0, steps: 1 },
                DesignStage {
                    from_epoch: 100,
                    steps: 5,
                },
            ],
            lr_state_init: 0.05,
            lr_state_opt: 1e-4,
            lr_adjoint: 1e-4,
            lr_topology: 5e-4,
        },
        state_net: eigen_state_net(32),
        topology_net: grid_net(25),
        state_multiplier: Some(multiplier),
        interior: InteriorSampling::Random { count: 20000 },
        export_resolution: if clamped { vec![200, 50] } else { vec![200, 100] },
        scale: 1.0,
    }
}

fn eigen3d(id: &str, clamped: bool) -> CaseConfig {
    let (hy, hz) = if clamped { (0.25, 0.3) } else { (0.5, 0.2) };
    let domain = BoxDomain::new(vec![-1.0, -hy, -hz], vec![1.0, hy, hz]).expect("domain");
    let face = vec![[-hy, hy], [-hz, hz]];
    let mut segments = vec![rect("clamp_left", SegmentKind::Dirichlet, 0, -1.0, face.clone(), Profile::Zero, 0)];
    let (multiplier, lambda_dir) = if clamped {
        segments.push(rect("clamp_right", SegmentKind::Dirichlet, 0, 1.0, face, Profile::Zero, 0));
        (
            Multiplier::Product {
                factors: vec![tanh_clamp(true), tanh_clamp(false)],
            },
            0.0,
        )
    } else {
        segments.push(rect(
            "support_right",
            SegmentKind::Dirichlet,
            0,
            1.0,
            vec![[-0.05, 0.05], [-hz, hz]],
            Profile::Zero,
            1000,
        ));
        (tanh_clamp(true), 200.0)
    };
    let resolution = if clamped { vec![80, 20, 20] } else { vec![60, 30, 30] };
    CaseConfig {
        case_id: id.to_string(),
        seed: DEFAULT_SEED,
        physics: elastic((1.0, 0.3), 3, lambda_dir, 50.0, true),
        segments,
        domain,
        phase_field: PhaseFieldConfig {
            lambda_penal: 100.0,
            zeta: 1.01,
            penalty_rule: PenaltyRule::MultiplyCapped { cap: 1000.0 },
            ..PhaseFieldConfig::default()
        },
        schedule: TrainingSchedule {
            pretrain: fixed_pretrain(5000),
            epochs: 600,
            state_steps: 100,
            adjoint_steps: None,
            design_steps: vec![DesignStage { from_epoch: 0, steps: 1 }],
            lr_state_init: 0.005,
            lr_state_opt: 1e-4,
            lr_adjoint: 1e-4,
            lr_topology: 5e-4,
        },
        state_net: eigen_state_net(64),
        topology_net: grid_net(25),
        state_multiplier: Some(multiplier),
        interior: InteriorSampling::Grid {
            resolution: resolution.clone(),
        },
        export_resolution: resolution,
        scale: 1.0,
    }
}

fn flow_spec(dim: usize, lambda_bc: f64, convective: bool, gauge: bool) -> FlowSpec {
    FlowSpec {
        mu: 0.01,
        body_force: vec![0.0; dim],
        lambda_div: 1.0,
        lambda_dir: lambda_bc,
        lambda_neu: lambda_bc,
        lambda_adj_div: 1.0,
        lambda_adj_bc: lambda_bc,
        lambda_adj_neu: lambda_bc,
        convective,
        pressure_gauge: if gauge { 1.0 } else { 0.0 },
    }
}

fn flow_schedule(pretrain: usize, epochs: usize, lr: (f64, f64)) -> TrainingSchedule {
    TrainingSchedule {
        pretrain: fixed_pretrain(pretrain),
        epochs,
        state_steps: 20,
        adjoint_steps: None,
        design_steps: vec![DesignStage { from_epoch: 0, steps: 1 }],
        lr_state_init: lr.0,
        lr_state_opt: lr.0,
        lr_adjoint: lr.0,
        lr_topology: lr.1,
    }
}

/// Openings on one edge of a 2-d box; the rest of the edge becomes wall.
struct Port {
    lo: f64,
    hi: f64,
    kind: SegmentKind,
    profile: Profile,
}

/// Segments covering one full edge: the ports and the wall pieces between.
fn edge(name: &str, axis: usize, value: f64, span: [f64; 2], mut ports: Vec<Port>) -> Vec<(BoundarySegment, f64)> {
    ports.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out = Vec::new();
    let mut cursor = span[0];
    let mut wall = 0;
    let mut push_wall = |out: &mut Vec<(BoundarySegment, f64)>, a: f64, b: f64| {
        if b - a > 1e-12 {
            out.push((rect(&format!("{name}_wall{wall}"), SegmentKind::Noslip, axis, value, vec![[a, b]], Profile::Zero, 0), b - a));
            wall += 1;
        }
    };
    for (k, p) in ports.into_iter().enumerate() {
        push_wall(&mut out, cursor, p.lo);
        out.push((rect(&format!("{name}_port{k}"), p.kind, axis, value, vec![[p.lo, p.hi]], p.profile, 0), p.hi - p.lo));
        cursor = p.hi;
    }
    push_wall(&mut out, cursor, span[1]);
    out
}

/// Spreads `total` boundary samples over the segments by measure.
fn distribute(segments: Vec<(BoundarySegment, f64)>, total: usize) -> Vec<BoundarySegment> {
    let length: f64 = segments.iter().map(|(_, m)| m).sum();
    segments
        .into_iter()
        .map(|(mut s, m)| {
            s.points = ((total as f64 * m / length).round() as usize).max(1);
            s
        })
        .collect()
}

fn flow2d(id: &str, hi: [f64; 2], physics: Physics, beta: f64, eta: f64, edges: Vec<(BoundarySegment, f64)>, counts: (usize, usize), epochs: usize) -> CaseConfig {
    let domain = BoxDomain::new(vec![0.0, 0.0], hi.to_vec()).expect("domain");
    CaseConfig {
        case_id: id.to_string(),
        seed: DEFAULT_SEED,
        physics,
        segments: distribute(edges, counts.1),
        domain,
        phase_field: PhaseFieldConfig {
            beta,
            eta,
            ..PhaseFieldConfig::default()
        },
        schedule: flow_schedule(10000, epochs, (1e-3, 5e-3)),
        state_net: net(
            FreqInit::Gaussian {
                features: 256,
                scale: 2.0,
            },
            vec![64; 4],
            false,
            OutputInit::Zero,
        ),
        topology_net: grid_net(20),
        state_multiplier: None,
        interior: InteriorSampling::Random { count: counts.0 },
        export_resolution: vec![(100.0 * hi[0]).round() as usize, (100.0 * hi[1]).round() as usize],
        scale: 1.0,
    }
}

fn walls(name: &str, axis: usize, value: f64, span: [f64; 2]) -> Vec<(BoundarySegment, f64)> {
    edge(name, axis, value, span, Vec::new())
}

fn port(lo: f64, hi: f64, kind: SegmentKind, profile: Profile) -> Port {
    Port { lo, hi, kind, profile }
}

fn bend_edges(inlet: Profile, outlet: Port) -> Vec<(BoundarySegment, f64)> {
    let mut e = edge("left", 0, 0.0, [0.0, 1.0], vec![port(0.7, 0.9, SegmentKind::Dirichlet, inlet)]);
    e.extend(edge("bottom", 1, 0.0, [0.0, 1.0], vec![outlet]));
    e.extend(walls("right", 0, 1.0, [0.0, 1.0]));
    e.extend(walls("top", 1, 1.0, [0.0, 1.0]));
    e
}

fn stokes_bend2d() -> CaseConfig {
    let e = bend_edges(constant(&[1.0, 0.0]), port(0.7, 0.9, SegmentKind::Neumann, Profile::Zero));
    flow2d("stokes_bend2d", [1.0, 1.0], Physics::Stokes { flow: flow_spec(2, 10.0, false, false) }, 0.3, 50.0, e, (20000, 5000), 400)
}

fn stokes_diffuser2d() -> CaseConfig {
    let mut e = edge(
        "left",
        0,
        0.0,
        [0.0, 1.0],
        vec![port(0.0, 1.0, SegmentKind::Dirichlet, parabolic(0, 1, 0.5, 1.0, 4.0))],
    );
    e.extend(edge("right", 0, 1.0, [0.0, 1.0], vec![port(0.3, 0.7, SegmentKind::Neumann, Profile::Zero)]));
    e.extend(walls("bottom", 1, 0.0, [0.0, 1.0]));
    e.extend(walls("top", 1, 1.0, [0.0, 1.0]));
    flow2d("stokes_diffuser2d", [1.0, 1.0], Physics::Stokes { flow: flow_spec(2, 10.0, false, false) }, 0.5, 100.0, e, (20000, 5000), 500)
}

fn double_ports(kind: SegmentKind) -> Vec<Port> {
    vec![
        port(1.0 / 6.0, 1.0 / 3.0, kind, parabolic(0, 1, 0.25, 1.0, 144.0)),
        port(2.0 / 3.0, 5.0 / 6.0, kind, parabolic(0, 1, 0.75, 1.0, 144.0)),
    ]
}

fn stokes_double2d() -> CaseConfig {
    let mut e = edge("left", 0, 0.0, [0.0, 1.0], double_ports(SegmentKind::Dirichlet));
    e.extend(edge("right", 0, 1.5, [0.0, 1.0], double_ports(SegmentKind::Dirichlet)));
    e.extend(walls("bottom", 1, 0.0, [0.0, 1.5]));
    e.extend(walls("top", 1, 1.0, [0.0, 1.5]));
    flow2d("stokes_double2d", [1.5, 1.0], Physics::Stokes { flow: flow_spec(2, 20.0, false, true) }, 0.5, 50.0, e, (30000, 8000), 500)
}

fn ns_bend2d() -> CaseConfig {
    let e = bend_edges(
        parabolic(0, 1, 0.8, 1.0, 100.0),
        port(0.7, 0.9, SegmentKind::Dirichlet, parabolic(1, 0, 0.8, -1.0, -100.0)),
    );
    flow2d("ns_bend2d", [1.0, 1.0], Physics::NavierStokes { flow: flow_spec(2, 10.0, true, true) }, 0.3, 100.0, e, (20000, 5000), 500)
}

fn ns_expand2d() -> CaseConfig {
    let mut e = edge(
        "left",
        0,
        0.0,
        [0.0, 1.0],
        vec![port(0.0, 1.0, SegmentKind::Dirichlet, parabolic(0, 1, 0.5, 1.0, 4.0))],
    );
    e.extend(edge(
        "right",
        0,
        1.0,
        [0.0, 1.0],
        vec![port(1.0 / 3.0, 2.0 / 3.0, SegmentKind::Dirichlet, parabolic(0, 1, 0.5, 3.0, 108.0))],
    ));
    e.extend(walls("bottom", 1, 0.0, [0.0, 1.0]));
    e.extend(walls("top", 1, 1.0, [0.0, 1.0]));
    flow2d("ns_expand2d", [1.0, 1.0], Physics::NavierStokes { flow: flow_spec(2, 10.0, true, true) }, 0.5, 100.0, e, (20000, 5000), 500)
}

fn ns_double2d() -> CaseConfig {
    let mut e = edge("left", 0, 0.0, [0.0, 1.0], double_ports(SegmentKind::Dirichlet));
    e.extend(edge("right", 0, 1.0, [0.0, 1.0], vec![port(0.0, 1.0, SegmentKind::Neumann, Profile::Zero)]));
    e.extend(walls("bottom", 1, 0.0, [0.0, 1.0]));
    e.extend(walls("top", 1, 1.0, [0.0, 1.0]));
    flow2d("ns_double2d", [1.0, 1.0], Physics::NavierStokes { flow: flow_spec(2, 10.0, true, false) }, 0.5, 100.0, e, (20000, 5000), 500)
}

const PORT_RADIUS: f64 = 0.2;

fn disk(center: [f64; 2]) -> Disk {
    Disk {
        center: center.to_vec(),
        radius: PORT_RADIUS,
    }
}

fn face(name: &str, axis: usize, value: f64, kind: SegmentKind, shape: SegmentShape, profile: Profile) -> (BoundarySegment, f64) {
    let s = BoundarySegment {
        name: name.to_string(),
        kind,
        fixed_axis: axis,
        fixed_value: value,
        shape,
        profile,
        points: 0,
    };
    let m = s.measure();
    (s, m)
}

fn unit_face() -> Vec<[f64; 2]> {
    vec![[0.0, 1.0], [0.0, 1.0]]
}

fn flow3d(id: &str, physics: Physics, beta: f64, eta: f64, faces: Vec<(BoundarySegment, f64)>, pretrain: usize, epochs: usize) -> CaseConfig {
    let domain = BoxDomain::new(vec![0.0; 3], vec![1.0; 3]).expect("domain");
    CaseConfig {
        case_id: id.to_string(),
        seed: DEFAULT_SEED,
        physics,
        segments: distribute(faces, 8000),
        domain,
        phase_field: PhaseFieldConfig {
            beta,
            eta,
            ..PhaseFieldConfig::default()
        },
        schedule: flow_schedule(pretrain, epochs, (1e-3, 5e-3)),
        state_net: net(
            FreqInit::Gaussian {
                features: 256,
                scale: 10.0,
            },
            vec![128; 4],
            false,
            OutputInit::Zero,
        ),
        topology_net: grid_net(15),
        state_multiplier: None,
        interior: InteriorSampling::Random { count: 30000 },
        export_resolution: vec![40, 40, 40],
        scale: 1.0,
    }
}

fn mixer3d(id: &str, convective: bool) -> CaseConfig {
    let c = [0.5, 0.5];
    let mut faces = Vec::new();
    for (axis, value, dir) in [(0, 0.0, 1.0), (0, 1.0, -1.0), (1, 0.0, 1.0), (1, 1.0, -1.0)] {
        let mut v = [0.0; 3];
        v[axis] = dir;
        let name = format!("side{axis}_{}", if value == 0.0 { "lo" } else { "hi" });
        faces.push(face(&format!("{name}_inlet"), axis, value, SegmentKind::Dirichlet, SegmentShape::Disk { disk: disk(c) }, constant(&v)));
        faces.push(face(
            &format!("{name}_wall"),
            axis,
            value,
            SegmentKind::Noslip,
            SegmentShape::RectMinusDisks {
                ranges: unit_face(),
                holes: vec![disk(c)],
            },
            Profile::Zero,
        ));
    }
    faces.push(face("bottom_outlet", 2, 0.0, SegmentKind::Dirichlet, SegmentShape::Disk { disk: disk(c) }, constant(&[0.0, 0.0, -4.0])));
    faces.push(face(
        "bottom_wall",
        2,
        0.0,
        SegmentKind::Noslip,
        SegmentShape::RectMinusDisks {
            ranges: unit_face(),
            holes: vec![disk(c)],
        },
        Profile::Zero,
    ));
    faces.push(face("top_wall", 2, 1.0, SegmentKind::Noslip, SegmentShape::Rect { ranges: unit_face() }, Profile::Zero));
    let physics = if convective {
        Physics::NavierStokes {
            flow: flow_spec(3, 10.0, true, true),
        }
    } else {
        Physics::Stokes {
            flow: flow_spec(3, 10.0, false, true),
        }
    };
    let eta = if convective { 100.0 } else { 50.0 };
    flow3d(id, physics, 0.25, eta, faces, 10000, 700)
}

fn duct3d() -> CaseConfig {
    let c = [0.5, 0.5];
    let r2 = PORT_RADIUS * PORT_RADIUS;
    let mut faces = vec![face(
        "inlet",
        1,
        0.0,
        SegmentKind::Dirichlet,
        SegmentShape::Rect { ranges: unit_face() },
        constant(&[0.0, 1.0, 0.0]),
    )];
    faces.push(face(
        "outlet",
        1,
        1.0,
        SegmentKind::Dirichlet,
        SegmentShape::Disk { disk: disk(c) },
        Profile::Paraboloid {
            component: 1,
            center: vec![0.5, 1.0, 0.5],
            radius: PORT_RADIUS,
            peak: 2.0 / (std::f64::consts::PI * r2),
        },
    ));
    faces.push(face(
        "outlet_wall",
        1,
        1.0,
        SegmentKind::Noslip,
        SegmentShape::RectMinusDisks {
            ranges: unit_face(),
            holes: vec![disk(c)],
        },
        Profile::Zero,
    ));
    for (axis, value) in [(0, 0.0), (0, 1.0), (2, 0.0), (2, 1.0)] {
        faces.push(face(&format!("wall{axis}_{value}"), axis, value, SegmentKind::Noslip, SegmentShape::Rect { ranges: unit_face() }, Profile::Zero));
    }
    flow3d(
        "stokes_duct3d",
        Physics::Stokes {
            flow: flow_spec(3, 10.0, false, true),
        },
        0.4,
        100.0,
        faces,
        5000,
        1000,
    )
}
