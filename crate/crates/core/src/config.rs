//! Case configuration: physics, geometry, networks, sampling and schedule.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elasticity::{ElasticLoads, ElasticMaterial};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::net::{FreqInit, Multiplier, NetSpec};
use crate::phasefield::PhaseFieldConfig;
use crate::sampling::{BoundarySegment, BoxDomain, InteriorSampling, SegmentKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Physics {
    Compliance { material: ElasticMaterial, loads: ElasticLoads },
    Eigenvalue { material: ElasticMaterial, loads: ElasticLoads },
    Stokes { flow: FlowSpec },
    NavierStokes { flow: FlowSpec },
}

impl Physics {
    pub fn tag(&self) -> &'static str {
        match self {
            Physics::Compliance { .. } => "compliance",
            Physics::Eigenvalue { .. } => "eigenvalue",
            Physics::Stokes { .. } => "stokes",
            Physics::NavierStokes { .. } => "navier_stokes",
        }
    }

    /// No dedicated adjoint network is trained.
    pub fn self_adjoint(&self) -> bool {
        !matches!(self, Physics::NavierStokes { .. })
    }

    pub fn state_outputs(&self, dim: usize) -> usize {
        match self {
            Physics::Compliance { .. } | Physics::Eigenvalue { .. } => dim,
            Physics::Stokes { .. } | Physics::NavierStokes { .. } => dim + 1,
        }
    }

    pub fn is_flow(&self) -> bool {
        matches!(self, Physics::Stokes { .. } | Physics::NavierStokes { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainStop {
    pub max_iters: usize,
    pub min_iters: usize,
    /// Stop once the relative loss change over `window` steps drops below
    /// this; `None` runs exactly `max_iters`.
    pub rel_tol: Option<f64>,
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignStage {
    pub from_epoch: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSchedule {
    pub pretrain: PretrainStop,
    pub epochs: usize,
    pub state_steps: usize,
    /// Defaults to `state_steps`.
    #[serde(default)]
    pub adjoint_steps: Option<usize>,
    /// Piecewise-constant design steps per epoch, sorted by `from_epoch`.
    pub design_steps: Vec<DesignStage>,
    pub lr_state_init: f64,
    pub lr_state_opt: f64,
    pub lr_adjoint: f64,
    pub lr_topology: f64,
}

impl TrainingSchedule {
    pub fn design_steps_at(&self, epoch: usize) -> usize {
        self.design_steps
            .iter()
            .rev()
            .find(|s| s.from_epoch <= epoch)
            .map(|s| s.steps)
            .unwrap_or(0)
    }

    pub fn adjoint_steps(&self) -> usize {
        self.adjoint_steps.unwrap_or(self.state_steps)
    }

    pub fn validate(&self, self_adjoint: bool) -> Result<()> {
        if self.epochs > 0 && self.state_steps == 0 {
            return Err(Error::config("schedule.state_steps must be at least 1"));
        }
        if !self_adjoint && self.epochs > 0 && self.adjoint_steps() == 0 {
            return Err(Error::config("schedule.adjoint_steps must be at least 1 for non-self-adjoint physics"));
        }
        if self.design_steps.first().map(|s| s.from_epoch) != Some(0) {
            return Err(Error::config("schedule.design_steps must start at epoch 0"));
        }
        if self.design_steps.windows(2).any(|w| w[0].from_epoch >= w[1].from_epoch) {
            return Err(Error::config("schedule.design_steps must be sorted by from_epoch"));
        }
        if self.design_steps.iter().any(|s| s.steps == 0) {
            return Err(Error::config("schedule.design_steps entries must be positive"));
        }
        let lrs = [self.lr_state_init, self.lr_state_opt, self.lr_adjoint, self.lr_topology];
        if lrs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::config("learning rates must be finite and non-negative"));
        }
        let p = &self.pretrain;
        if p.min_iters > p.max_iters {
            return Err(Error::config("schedule.pretrain.min_iters exceeds max_iters"));
        }
        if p.window == 0 {
            return Err(Error::config("schedule.pretrain.window must be positive"));
        }
        if let Some(t) = p.rel_tol {
            if !(t > 0.0) {
                return Err(Error::config("schedule.pretrain.rel_tol must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case_id: String,
    pub seed: u64,
    pub physics: Physics,
    pub domain: BoxDomain,
    pub segments: Vec<BoundarySegment>,
    pub phase_field: PhaseFieldConfig,
    pub schedule: TrainingSchedule,
    pub state_net: NetSpec,
    pub topology_net: NetSpec,
    /// Hard boundary-condition factor applied to the state outputs.
    #[serde(default)]
    pub state_multiplier: Option<Multiplier>,
    pub interior: InteriorSampling,
    pub export_resolution: Vec<usize>,
    /// Scale factor already applied to the counts above.
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl CaseConfig {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let d = self.dim();
        for s in &self.segments {
            s.validate(&self.domain)?;
        }
        self.phase_field.validate()?;
        self.schedule.validate(self.physics.self_adjoint())?;
        if self.export_resolution.len() != d || self.export_resolution.iter().any(|&r| r == 0) {
            return Err(Error::config(format!("export_resolution needs {d} positive entries")));
        }
        match &self.interior {
            InteriorSampling::Random { count } if *count == 0 => {
                return Err(Error::config("interior.count must be positive"));
            }
            InteriorSampling::Grid { resolution } | InteriorSampling::Stratified { resolution }
                if resolution.len() != d || resolution.contains(&0) =>
            {
                return Err(Error::config(format!("interior.resolution needs {d} positive entries")));
            }
            _ => {}
        }
        if let Some(m) = &self.state_multiplier {
            if m.max_axis() >= d {
                return Err(Error::config("state_multiplier refers to an axis outside the domain"));
            }
        }
        let sampled = |kind: SegmentKind| self.segments.iter().any(|s| s.kind == kind && s.points > 0);
        match &self.physics {
            Physics::Compliance { loads, .. } | Physics::Eigenvalue { loads, .. } => {
                loads.validate(d)?;
                let penalty = sampled(SegmentKind::Dirichlet) && loads.lambda_dir > 0.0;
                if self.state_multiplier.is_none() && !penalty {
                    return Err(Error::config("elastic cases need a hard multiplier or a weighted Dirichlet segment"));
                }
                if matches!(self.physics, Physics::Eigenvalue { .. }) && !(loads.lambda_norm > 0.0) {
                    return Err(Error::config("eigenvalue cases need loads.lambda_norm > 0"));
                }
            }
            Physics::Stokes { flow } | Physics::NavierStokes { flow } => {
                flow.validate(d)?;
                let ns = matches!(self.physics, Physics::NavierStokes { .. });
                if flow.convective != ns {
                    return Err(Error::config("flow.convective must be true exactly for navier_stokes"));
                }
                if self.state_multiplier.is_some() {
                    return Err(Error::config("flow cases impose boundary data by penalty only"));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            context: format!("case `{}`", self.case_id),
            source: e,
        })
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let cfg: CaseConfig = serde_json::from_str(text).map_err(|e| Error::Json {
            context: context.to_string(),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Shrinks point counts, epochs and network sizes by `factor`. Pretraining
    /// budgets, per-epoch step counts and learning rates are kept.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::config(format!("scale must lie in (0, 1], got {factor}")));
        }
        if factor == 1.0 {
            return Ok(self.clone());
        }
        let mut c = self.clone();
        let count = |n: usize, min: usize| -> usize {
            if n == 0 {
                0
            } else {
                ((n as f64 * factor).round() as usize).max(min)
            }
        };
        let d = c.dim() as f64;
        c.interior = match &self.interior {
            InteriorSampling::Random { count: n } => InteriorSampling::Random { count: count(*n, 64) },
            InteriorSampling::Grid { resolution } => InteriorSampling::Grid {
                resolution: scale_axes(resolution, factor, d),
            },
            InteriorSampling::Stratified { resolution } => InteriorSampling::Stratified {
                resolution: scale_axes(resolution, factor, d),
            },
        };
        for s in &mut c.segments {
            s.points = count(s.points, 16);
        }
        let sch = &mut c.schedule;
        sch.epochs = count(sch.epochs, 1);
        // same penalty trajectory over the shortened run
        if sch.epochs > 0 {
            let ratio = self.schedule.epochs as f64 / sch.epochs as f64;
            c.phase_field.zeta = self.phase_field.zeta.powf(ratio);
        }
        for (k, st) in sch.design_steps.iter_mut().enumerate() {
            if k > 0 {
                st.from_epoch = count(st.from_epoch, 1);
            }
        }
        sch.design_steps.dedup_by(|b, a| a.from_epoch == b.from_epoch);
        for net in [&mut c.state_net, &mut c.topology_net] {
            scale_net(net, factor, d);
        }
        c.scale = self.scale * factor;
        c.validate()?;
        Ok(c)
    }
}

fn scale_axes(resolution: &[usize], factor: f64, d: f64) -> Vec<usize> {
    resolution
        .iter()
        .map(|&r| ((r as f64 * factor.powf(1.0 / d)).round() as usize).max(2))
        .collect()
}

fn scale_net(net: &mut NetSpec, factor: f64, d: f64) {
    for w in &mut net.hidden {
        *w = ((*w as f64 * factor).round() as usize).max(8);
    }
    net.freq_init = match net.freq_init {
        FreqInit::Grid { max_freq } => FreqInit::Grid {
            // grid rows grow like max_freq^d
            max_freq: ((max_freq as f64 * factor.powf(1.0 / d)).round() as usize).max(2),
        },
        FreqInit::Gaussian { features, scale } => FreqInit::Gaussian {
            features: ((features as f64 * factor).round() as usize).max(8),
            scale,
        },
    };
}

pub fn load_config(path: &Path) -> Result<CaseConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CaseConfig::from_json(&text, &path.display().to_string())
}
