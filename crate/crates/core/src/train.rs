//! Two-stage training: state pretraining on the initial design, then
//! alternating state / adjoint / design phases.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{CaseConfig, Physics};
use crate::error::{Error, Result};
use crate::net::FourierNet;
use crate::optim::Adam;
use crate::phasefield::PhaseFieldConfig;
use crate::problem::{Nets, Problem, TopologyValues};

/// One row of the convergence log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub epoch: usize,
    pub state_loss: f64,
    pub adjoint_loss: Option<f64>,
    pub topology_loss: f64,
    pub objective: f64,
    pub gl_energy: f64,
    pub volume_error: f64,
    pub eigenvalue_estimate: Option<f64>,
    pub lambda_penal: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainReport {
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Last windowed relative change, if the window was ever filled.
    pub rel_change: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOutcome {
    /// Loss at the last evaluated iterate.
    pub last_loss: f64,
    pub steps: usize,
    pub rolled_back: bool,
}

/// A phase loss that stopped being finite or rose above its starting value
/// by nine times its scale. Energy losses start at zero and go negative, so
/// the scale is the larger of `|start|` and `|best|` (lowest loss seen), with
/// a floor of one.
pub fn diverged(loss: f64, start: f64, best: f64) -> bool {
    !loss.is_finite() || loss - start > 9.0 * start.abs().max(best.abs()).max(1.0)
}

/// Up to `steps` Adam steps; on divergence the phase is rolled back and the
/// learning rate halved.
fn guarded_phase<F>(phase: &str, net: &mut FourierNet, opt: &mut Adam, steps: usize, mut eval: F) -> Result<PhaseOutcome>
where
    F: FnMut(&FourierNet) -> Result<(f64, Vec<f64>)>,
{
    let saved_params = net.params.clone();
    let saved_opt = opt.clone();
    let mut start = None;
    let mut best = f64::INFINITY;
    let mut last = f64::NAN;
    for i in 0..steps {
        let (loss, grad) = eval(net)?;
        let s = *start.get_or_insert(loss);
        if diverged(loss, s, best) {
            net.params = saved_params;
            *opt = saved_opt;
            opt.lr *= 0.5;
            return Ok(PhaseOutcome {
                last_loss: s,
                steps: i,
                rolled_back: true,
            });
        }
        last = loss;
        best = best.min(loss);
        opt.step(&mut net.params, &grad).map_err(|e| e.in_phase(phase))?;
    }
    Ok(PhaseOutcome {
        last_loss: last,
        steps,
        rolled_back: false,
    })
}

#[derive(Debug, Clone)]
pub struct Trainer {
    pub problem: Problem,
    pub nets: Nets,
    /// Phase-field parameters including the current penalty weight.
    pub pf: PhaseFieldConfig,
    pub state_opt: Adam,
    pub adjoint_opt: Option<Adam>,
    pub topology_opt: Adam,
    pub records: Vec<ConvergenceRecord>,
    /// Number of finished alternating epochs.
    pub epoch: usize,
}

impl Trainer {
    pub fn new(cfg: CaseConfig) -> Result<Self> {
        let problem = Problem::new(cfg)?;
        let nets = problem.build_nets()?;
        let sch = &problem.cfg.schedule;
        Ok(Trainer {
            state_opt: Adam::new(nets.state.params.len(), sch.lr_state_init),
            topology_opt: Adam::new(nets.topology.params.len(), sch.lr_topology),
            adjoint_opt: None,
            pf: problem.cfg.phase_field.clone(),
            nets,
            problem,
            records: Vec::new(),
            epoch: 0,
        })
    }

    pub fn cfg(&self) -> &CaseConfig {
        &self.problem.cfg
    }

    fn state_coefficients(&self) -> Result<Vec<f64>> {
        let phi = self.problem.phase_values(&self.nets.topology)?;
        Ok(self.problem.state_coefficients(&phi, &self.pf))
    }

    /// Stage 1: fit the state network to the initial design.
    pub fn pretrain(&mut self) -> Result<PretrainReport> {
        let stop = self.cfg().schedule.pretrain.clone();
        let coeff = self.state_coefficients()?;
        let mut history: Vec<f64> = Vec::new();
        let mut rel_change = None;
        let mut iterations = 0;
        let mut best = f64::INFINITY;
        while iterations < stop.max_iters {
            let (loss, grad) = self.problem.state_loss_grad(&self.nets.state, &coeff, &self.pf)?;
            if let Some(&init) = history.first() {
                if diverged(loss, init, best) {
                    return Err(Error::PhaseAbort {
                        phase: "pretrain".into(),
                        iteration: iterations,
                        reason: format!("state loss {loss} diverged from initial {init}"),
                    });
                }
            }
            history.push(loss);
            best = best.min(loss);
            if history.len() > stop.window {
                let old = history[history.len() - 1 - stop.window];
                let rel = (loss - old).abs() / old.abs().max(f64::MIN_POSITIVE);
                rel_change = Some(rel);
                if let Some(tol) = stop.rel_tol {
                    if iterations >= stop.min_iters && rel < tol {
                        break;
                    }
                }
            }
            self.state_opt
                .step(&mut self.nets.state.params, &grad)
                .map_err(|e| e.in_phase("pretrain"))?;
            iterations += 1;
        }
        let final_loss = self.problem.state_loss(&self.nets.state, &coeff, &self.pf)?;
        Ok(PretrainReport {
            iterations,
            initial_loss: history.first().copied().unwrap_or(final_loss),
            final_loss,
            rel_change,
        })
    }

    /// Fresh optimizers for stage 2; the adjoint network starts as a copy of
    /// the state network.
    pub fn begin_alternating(&mut self) {
        let sch = &self.problem.cfg.schedule;
        self.state_opt = Adam::new(self.nets.state.params.len(), sch.lr_state_opt);
        self.topology_opt = Adam::new(self.nets.topology.params.len(), sch.lr_topology);
        if !self.problem.cfg.physics.self_adjoint() {
            let mut adj = self.nets.state.clone();
            adj.seed = crate::sampling::sub_seed(self.problem.cfg.seed, 1003);
            self.adjoint_opt = Some(Adam::new(adj.params.len(), sch.lr_adjoint));
            self.nets.adjoint = Some(adj);
        }
    }

    pub fn state_phase(&mut self) -> Result<PhaseOutcome> {
        let coeff = self.state_coefficients()?;
        let steps = self.problem.cfg.schedule.state_steps;
        let (problem, pf) = (&self.problem, &self.pf);
        guarded_phase("state", &mut self.nets.state, &mut self.state_opt, steps, |net| {
            problem.state_loss_grad(net, &coeff, pf)
        })
    }

    pub fn adjoint_phase(&mut self) -> Result<Option<PhaseOutcome>> {
        if self.problem.cfg.physics.self_adjoint() {
            return Ok(None);
        }
        let friction = self.state_coefficients()?;
        let state = self.problem.adjoint_inputs(&self.nets.state)?;
        let steps = self.problem.cfg.schedule.adjoint_steps();
        let (Some(adj), Some(opt)) = (self.nets.adjoint.as_mut(), self.adjoint_opt.as_mut()) else {
            return Err(Error::config("adjoint phase before the alternating stage started"));
        };
        let problem = &self.problem;
        guarded_phase("adjoint", adj, opt, steps, |net| problem.adjoint_loss_grad(net, &state, &friction)).map(Some)
    }

    pub fn design_phase(&mut self, steps: usize) -> Result<(TopologyValues, PhaseOutcome)> {
        let frozen = self.problem.frozen(&self.nets.state, self.nets.adjoint.as_ref())?;
        let (problem, pf) = (&self.problem, &self.pf);
        let mut values = None;
        let outcome = guarded_phase("topology", &mut self.nets.topology, &mut self.topology_opt, steps, |net| {
            let (v, g) = problem.topology_loss_grad(net, &frozen, pf)?;
            values = Some(v);
            Ok((v.total, g))
        })?;
        let values = match (outcome.rolled_back, values) {
            (false, Some(v)) => v,
            _ => self.problem.topology_loss(&self.nets.topology, &frozen, &self.pf)?,
        };
        Ok((values, outcome))
    }

    /// One epoch of the alternating stage.
    pub fn alternating_epoch(&mut self) -> Result<ConvergenceRecord> {
        if self.nets.adjoint.is_none() && !self.problem.cfg.physics.self_adjoint() {
            return Err(Error::config("alternating epoch before begin_alternating"));
        }
        let started = Instant::now();
        let n = self.epoch;
        self.pf.update_penalty()?;
        let state = self.state_phase()?;
        let adjoint = self.adjoint_phase()?;
        let steps = self.problem.cfg.schedule.design_steps_at(n);
        let (values, _) = self.design_phase(steps)?;
        let record = ConvergenceRecord {
            epoch: n,
            state_loss: state.last_loss,
            adjoint_loss: adjoint.map(|a| a.last_loss),
            topology_loss: values.total,
            objective: values.objective,
            gl_energy: values.gl_energy,
            volume_error: values.volume_error,
            eigenvalue_estimate: match self.problem.cfg.physics {
                Physics::Eigenvalue { .. } => Some(values.objective),
                _ => None,
            },
            lambda_penal: self.pf.lambda_penal,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        self.records.push(record.clone());
        self.epoch += 1;
        Ok(record)
    }
}
