//! One configured case with its collocation set: network construction and
//! every loss the alternating scheme needs, with parameter gradients.

use crate::autodiff::{FieldView, JetBatch, JetOrder, JetVars, Real, Tape, Var};
use crate::config::{CaseConfig, Physics};
use crate::elasticity::{
    compliance_state_loss, compliance_topology_loss, compliance_value, contractions, eigen_state_loss,
    eigen_topology_loss, rayleigh_quotient, ComplianceGradient, TopologyLoss,
};
use crate::error::{Error, Result};
use crate::flow::{adjoint_loss, flow_state_loss, flow_topology_loss, FlowPointData, FlowSpec};
use crate::net::{FourierNet, OutputTransform};
use crate::phasefield::{darcy_friction, simp_density, PhaseFieldConfig};
use crate::sampling::{sub_seed, CollocationSet};

/// The networks of one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Nets {
    pub state: FourierNet,
    pub topology: FourierNet,
    pub adjoint: Option<FourierNet>,
}

/// State-side quantities held fixed during a design phase.
#[derive(Debug, Clone)]
pub enum Frozen {
    Compliance { contraction: Vec<f64>, compliance: f64 },
    Eigen { contraction: Vec<f64>, speed2: Vec<f64> },
    Flow(FlowPointData),
}

/// Plain values of a topology loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyValues {
    pub total: f64,
    pub objective: f64,
    pub gl_energy: f64,
    pub volume: f64,
    /// `|∫φ − β|Ω||`
    pub volume_error: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub cfg: CaseConfig,
    pub colloc: CollocationSet,
    pub domain_volume: f64,
    /// Differentiation of the compliance term in design steps.
    pub compliance_gradient: ComplianceGradient,
}

/// Loss value and parameter gradient of one network.
fn taped<F>(
    net: &FourierNet,
    interior: &[f64],
    interior_order: JetOrder,
    segments: &[(&[f64], JetOrder)],
    loss: F,
) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> FnOnce(&JetVars<'t>, &[JetVars<'t>]) -> Result<Var<'t>>,
{
    let (ib, itape) = net.eval_recorded(interior, interior_order)?;
    let mut recorded = Vec::with_capacity(segments.len());
    for (pts, order) in segments {
        recorded.push(net.eval_recorded(pts, *order)?);
    }
    let rows = ib.data.len() + recorded.iter().map(|(b, _)| b.data.len()).sum::<usize>();
    let tape = Tape::with_capacity(rows * 8);
    let iv = JetVars::leaves(&tape, &ib);
    let sv: Vec<JetVars<'_>> = recorded.iter().map(|(b, _)| JetVars::leaves(&tape, b)).collect();
    let out = loss(&iv, &sv)?;
    let value = out.val();
    let g = tape.gradient(out);
    let mut grad = net.backward(&itape, &iv.cotangent(&g))?;
    for ((_, t), v) in recorded.iter().zip(&sv) {
        let gs = net.backward(t, &v.cotangent(&g))?;
        grad.iter_mut().zip(gs).for_each(|(a, b)| *a += b);
    }
    Ok((value, grad))
}

impl TopologyValues {
    fn from_loss<T: Real>(l: &TopologyLoss<T>, cfg: &PhaseFieldConfig, domain_volume: f64) -> Self {
        let volume = l.phase.volume.value();
        TopologyValues {
            total: l.total().value(),
            objective: l.objective_value,
            gl_energy: l.phase.gl.value(),
            volume,
            volume_error: (volume - cfg.beta * domain_volume).abs(),
        }
    }
}

impl Problem {
    pub fn new(cfg: CaseConfig) -> Result<Self> {
        cfg.validate()?;
        let colloc = CollocationSet::build(&cfg.domain, &cfg.interior, &cfg.segments, cfg.seed)?;
        Ok(Problem {
            domain_volume: cfg.domain.volume(),
            colloc,
            cfg,
            compliance_gradient: ComplianceGradient::Sensitivity,
        })
    }

    /// Freshly initialized state and topology networks; the adjoint network
    /// is created at the start of the alternating stage.
    pub fn build_nets(&self) -> Result<Nets> {
        let d = self.cfg.dim();
        let state = FourierNet::new(
            &self.cfg.state_net,
            d,
            self.cfg.physics.state_outputs(d),
            OutputTransform::Identity,
            self.cfg.state_multiplier.clone(),
            sub_seed(self.cfg.seed, 1001),
        )?;
        let topology = FourierNet::new(
            &self.cfg.topology_net,
            d,
            1,
            OutputTransform::Sigmoid,
            None,
            sub_seed(self.cfg.seed, 1002),
        )?;
        Ok(Nets {
            state,
            topology,
            adjoint: None,
        })
    }

    fn flow(&self) -> Option<&FlowSpec> {
        match &self.cfg.physics {
            Physics::Stokes { flow } | Physics::NavierStokes { flow } => Some(flow),
            _ => None,
        }
    }

    fn state_orders(&self) -> (JetOrder, Vec<JetOrder>) {
        match self.flow() {
            Some(_) => (
                FlowSpec::interior_order(),
                self.colloc.segments.iter().map(|s| FlowSpec::segment_order(s.kind)).collect(),
            ),
            None => (JetOrder::Gradient, vec![JetOrder::Value; self.colloc.segments.len()]),
        }
    }

    fn segment_inputs(&self, orders: &[JetOrder]) -> Vec<(&[f64], JetOrder)> {
        self.colloc
            .segments
            .iter()
            .zip(orders)
            .map(|(s, o)| (s.points.as_slice(), *o))
            .collect()
    }

    /// φ at the interior points.
    pub fn phase_values(&self, topology: &FourierNet) -> Result<Vec<f64>> {
        let b = topology.eval(&self.colloc.interior, JetOrder::Value)?;
        b.check_finite("phase field")?;
        Ok(b.values(0))
    }

    /// Per-point coefficient a state loss reads from the frozen design: the
    /// SIMP factor, φ itself (eigenvalue) or the Brinkman friction.
    pub fn state_coefficients(&self, phi: &[f64], pf: &PhaseFieldConfig) -> Vec<f64> {
        match &self.cfg.physics {
            Physics::Compliance { .. } => phi.iter().map(|&f| simp_density(f, pf)).collect(),
            Physics::Eigenvalue { .. } => phi.to_vec(),
            Physics::Stokes { .. } | Physics::NavierStokes { .. } => {
                phi.iter().map(|&f| darcy_friction(f, pf.eta)).collect()
            }
        }
    }

    fn state_loss_view<T: Real, V: FieldView<T>>(
        &self,
        interior: &V,
        segments: &[V],
        coeff: &[f64],
        pf: &PhaseFieldConfig,
    ) -> Result<T> {
        let c = &self.colloc;
        match &self.cfg.physics {
            Physics::Compliance { material, loads } => compliance_state_loss(interior, coeff, c, segments, material, loads),
            Physics::Eigenvalue { material, loads } => eigen_state_loss(interior, coeff, c, segments, material, loads, pf),
            Physics::Stokes { flow } | Physics::NavierStokes { flow } => flow_state_loss(interior, coeff, c, segments, flow),
        }
    }

    pub fn state_loss(&self, state: &FourierNet, coeff: &[f64], pf: &PhaseFieldConfig) -> Result<f64> {
        let (io, so) = self.state_orders();
        let ib = state.eval(&self.colloc.interior, io)?;
        let sb = self
            .segment_inputs(&so)
            .into_iter()
            .map(|(p, o)| state.eval(p, o))
            .collect::<Result<Vec<_>>>()?;
        self.state_loss_view::<f64, _>(&ib, &sb, coeff, pf)
            .map_err(|e| e.in_phase("state"))
    }

    pub fn state_loss_grad(&self, state: &FourierNet, coeff: &[f64], pf: &PhaseFieldConfig) -> Result<(f64, Vec<f64>)> {
        let (io, so) = self.state_orders();
        taped(state, &self.colloc.interior, io, &self.segment_inputs(&so), |iv, sv| {
            self.state_loss_view(iv, sv, coeff, pf)
        })
        .map_err(|e| e.in_phase("state"))
    }

    /// State jets at the interior points as the adjoint residual needs them.
    pub fn adjoint_inputs(&self, state: &FourierNet) -> Result<JetBatch> {
        let b = state.eval(&self.colloc.interior, JetOrder::Hessian)?;
        b.check_finite("state field")?;
        Ok(b)
    }

    fn flow_or_err(&self) -> Result<&FlowSpec> {
        self.flow()
            .ok_or_else(|| Error::config(format!("{} physics has no adjoint network", self.cfg.physics.tag())))
    }

    pub fn adjoint_loss(&self, adjoint: &FourierNet, state: &JetBatch, friction: &[f64]) -> Result<f64> {
        let flow = self.flow_or_err()?;
        let (io, so) = self.state_orders();
        let ib = adjoint.eval(&self.colloc.interior, io)?;
        let sb = self
            .segment_inputs(&so)
            .into_iter()
            .map(|(p, o)| adjoint.eval(p, o))
            .collect::<Result<Vec<_>>>()?;
        adjoint_loss::<f64, _>(&ib, state, friction, &self.colloc, &sb, flow).map_err(|e| e.in_phase("adjoint"))
    }

    pub fn adjoint_loss_grad(&self, adjoint: &FourierNet, state: &JetBatch, friction: &[f64]) -> Result<(f64, Vec<f64>)> {
        let flow = self.flow_or_err()?;
        let (io, so) = self.state_orders();
        taped(adjoint, &self.colloc.interior, io, &self.segment_inputs(&so), |iv, sv| {
            adjoint_loss(iv, state, friction, &self.colloc, sv, flow)
        })
        .map_err(|e| e.in_phase("adjoint"))
    }

    /// Everything a design phase needs from the state (and adjoint).
    pub fn frozen(&self, state: &FourierNet, adjoint: Option<&FourierNet>) -> Result<Frozen> {
        let ib = state.eval(&self.colloc.interior, JetOrder::Gradient)?;
        ib.check_finite("state field")?;
        match &self.cfg.physics {
            Physics::Compliance { material, loads } => {
                let sb = self
                    .colloc
                    .segments
                    .iter()
                    .map(|s| state.eval(&s.points, JetOrder::Value))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Frozen::Compliance {
                    contraction: contractions(&ib, material),
                    compliance: compliance_value(&ib, &self.colloc, &sb, loads)?,
                })
            }
            Physics::Eigenvalue { material, .. } => {
                let d = ib.dim;
                Ok(Frozen::Eigen {
                    contraction: contractions(&ib, material),
                    speed2: (0..ib.points)
                        .map(|p| (0..d).map(|c| ib.value(p, c).powi(2)).sum())
                        .collect(),
                })
            }
            Physics::Stokes { flow } => Ok(Frozen::Flow(FlowPointData::new(&ib, None, flow)?)),
            Physics::NavierStokes { flow } => {
                let adj = adjoint.ok_or_else(|| Error::config("navier_stokes design step needs the adjoint network"))?;
                let ab = adj.eval(&self.colloc.interior, JetOrder::Value)?;
                ab.check_finite("adjoint field")?;
                Ok(Frozen::Flow(FlowPointData::new(&ib, Some(&ab), flow)?))
            }
        }
    }

    fn topology_loss_view<T: Real, V: FieldView<T>>(
        &self,
        phi: &V,
        frozen: &Frozen,
        pf: &PhaseFieldConfig,
    ) -> Result<TopologyLoss<T>> {
        let w = self.colloc.interior_weight;
        let vol = self.domain_volume;
        match frozen {
            Frozen::Compliance { contraction, compliance } => {
                compliance_topology_loss(phi, contraction, *compliance, w, vol, pf, self.compliance_gradient)
            }
            Frozen::Eigen { contraction, speed2 } => eigen_topology_loss(phi, contraction, speed2, w, vol, pf),
            Frozen::Flow(data) => flow_topology_loss(phi, data, pf.eta, w, vol, pf),
        }
    }

    pub fn topology_loss(&self, topology: &FourierNet, frozen: &Frozen, pf: &PhaseFieldConfig) -> Result<TopologyValues> {
        let b = topology.eval(&self.colloc.interior, JetOrder::Gradient)?;
        let l = self.topology_loss_view::<f64, _>(&b, frozen, pf).map_err(|e| e.in_phase("topology"))?;
        Ok(TopologyValues::from_loss(&l, pf, self.domain_volume))
    }

    /// Design-phase loss and the assembled topology parameter gradient.
    pub fn topology_loss_grad(
        &self,
        topology: &FourierNet,
        frozen: &Frozen,
        pf: &PhaseFieldConfig,
    ) -> Result<(TopologyValues, Vec<f64>)> {
        let mut values = None;
        let (_, grad) = taped(topology, &self.colloc.interior, JetOrder::Gradient, &[], |iv, _| {
            let l = self.topology_loss_view(iv, frozen, pf)?;
            values = Some(TopologyValues::from_loss(&l, pf, self.domain_volume));
            Ok(l.total())
        })
        .map_err(|e| e.in_phase("topology"))?;
        Ok((values.expect("loss evaluated"), grad))
    }

    /// Rayleigh quotient of the current fields (eigenvalue cases only).
    pub fn eigenvalue_estimate(&self, state: &FourierNet, phi: &[f64], pf: &PhaseFieldConfig) -> Result<Option<f64>> {
        match &self.cfg.physics {
            Physics::Eigenvalue { material, .. } => {
                let ib = state.eval(&self.colloc.interior, JetOrder::Gradient)?;
                Ok(Some(rayleigh_quotient(&ib, phi, self.colloc.interior_weight, material, pf)?))
            }
            _ => Ok(None),
        }
    }
}
