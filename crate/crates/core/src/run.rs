//! Run orchestration and on-disk artifacts: checkpoints, CSV exports and the
//! run manifest. Every file is written to a temporary name and renamed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::JetOrder;
use crate::config::CaseConfig;
use crate::error::{Error, Result};
use crate::problem::Nets;
use crate::sampling::eval_grid;
use crate::train::{ConvergenceRecord, PretrainReport, Trainer};

pub const OUT_DIR_ENV: &str = "APF_OUT_DIR";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn json<T: Serialize>(value: &T, context: &str) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        context: context.to_string(),
        source: e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub stage: String,
    pub epoch: usize,
    pub lambda_penal: f64,
    pub config: CaseConfig,
    pub nets: Nets,
}

impl Checkpoint {
    pub fn of(trainer: &Trainer, stage: &str) -> Self {
        Checkpoint {
            stage: stage.to_string(),
            epoch: trainer.epoch,
            lambda_penal: trainer.pf.lambda_penal,
            config: trainer.problem.cfg.clone(),
            nets: trainer.nets.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, json(self, "checkpoint")?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Json {
            context: path.display().to_string(),
            source: e,
        })?;
        c.config.validate()?;
        for net in [Some(&c.nets.state), Some(&c.nets.topology), c.nets.adjoint.as_ref()].into_iter().flatten() {
            net.validate()?;
        }
        Ok(c)
    }
}

fn push_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Grid export: coordinates, φ and the state outputs at every grid node.
pub struct FieldGrid {
    pub header: Vec<String>,
    pub dim: usize,
    /// Row-major, `header.len()` values per node.
    pub rows: Vec<f64>,
}

impl FieldGrid {
    pub fn evaluate(cfg: &CaseConfig, nets: &Nets, resolution: &[usize]) -> Result<Self> {
        let d = cfg.dim();
        let pts = eval_grid(&cfg.domain, resolution)?;
        let phi = nets.topology.eval(&pts, JetOrder::Value)?;
        let state = nets.state.eval(&pts, JetOrder::Value)?;
        phi.check_finite("exported phase field")?;
        state.check_finite("exported state field")?;
        let axes = ["x", "y", "z"];
        let mut header: Vec<String> = axes[..d].iter().map(|s| s.to_string()).collect();
        header.push("phi".into());
        for c in 0..d {
            header.push(format!("u{}", c + 1));
        }
        if state.channels > d {
            header.push("p".into());
        }
        let n = pts.len() / d;
        let mut rows = Vec::with_capacity(n * header.len());
        for p in 0..n {
            rows.extend_from_slice(&pts[p * d..(p + 1) * d]);
            rows.push(phi.value(p, 0));
            for c in 0..state.channels {
                rows.push(state.value(p, c));
            }
        }
        Ok(FieldGrid { header, dim: d, rows })
    }

    pub fn width(&self) -> usize {
        self.header.len()
    }

    pub fn phi(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.chunks(self.width()).map(move |r| r[self.dim])
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in self.rows.chunks(self.width()) {
            push_row(&mut out, r);
        }
        out
    }

    /// Nodes with `φ ≥ 0.5` as `x,y,z,phi` rows.
    pub fn solid_points_csv(&self) -> String {
        let mut out = self.header[..self.dim].join(",");
        out.push_str(",phi\n");
        for r in self.rows.chunks(self.width()) {
            if r[self.dim] >= 0.5 {
                push_row(&mut out, &r[..=self.dim]);
            }
        }
        out
    }

    /// Mean φ and the fraction of nodes with `0.1 < φ < 0.9`.
    pub fn phase_statistics(&self) -> (f64, f64) {
        let phi: Vec<f64> = self.phi().collect();
        let n = phi.len() as f64;
        let mean = crate::autodiff::pairwise_sum(&phi) / n;
        let mid = phi.iter().filter(|&&v| v > 0.1 && v < 0.9).count() as f64 / n;
        (mean, mid)
    }
}

pub const CONVERGENCE_HEADER: &str =
    "epoch,state_loss,adjoint_loss,topology_loss,objective,gl_energy,volume_error,eigenvalue_estimate,lambda_penal";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.state_loss,
            opt(r.adjoint_loss),
            r.topology_loss,
            r.objective,
            r.gl_energy,
            r.volume_error,
            opt(r.eigenvalue_estimate),
            r.lambda_penal
        );
    }
    out
}

pub fn timing_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from("epoch,wall_seconds\n");
    for r in records {
        let _ = writeln!(out, "{},{}", r.epoch, r.wall_seconds);
    }
    out
}

/// Writes `fields.csv` (and `points.csv` in 3-d) into `dir`.
pub fn export_fields(cfg: &CaseConfig, nets: &Nets, resolution: &[usize], dir: &Path) -> Result<Vec<PathBuf>> {
    let grid = FieldGrid::evaluate(cfg, nets, resolution)?;
    let mut written = Vec::new();
    let fields = dir.join("fields.csv");
    write_atomic(&fields, grid.to_csv().as_bytes())?;
    written.push(fields);
    if cfg.dim() == 3 {
        let pts = dir.join("points.csv");
        write_atomic(&pts, grid.solid_points_csv().as_bytes())?;
        written.push(pts);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub case_id: String,
    pub config_sha256: String,
    pub artifact_version: String,
    pub seed: u64,
    pub scale: f64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub pretrain_iterations: Option<usize>,
    pub epochs_completed: usize,
    pub outputs: Vec<String>,
    pub completed: bool,
    pub failure: Option<String>,
    /// The effective (possibly scaled) configuration that was run.
    pub config: CaseConfig,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub pretrain: PretrainReport,
    pub records: Vec<ConvergenceRecord>,
    pub nets: Nets,
    pub manifest: RunManifest,
}

/// Progress callback receiving every finished epoch.
pub type Progress<'a> = &'a mut dyn FnMut(&ConvergenceRecord);

/// Stage 1, then all alternating epochs, then exports. Failures still flush
/// the convergence log and a manifest marked incomplete.
pub fn run_optimization(cfg: &CaseConfig, out_dir: &Path, mut progress: Option<Progress<'_>>) -> Result<RunSummary> {
    let started = unix_now();
    let config_json = cfg.to_json()?;
    let config_path = out_dir.join("config.json");
    write_atomic(&config_path, config_json.as_bytes())?;
    let mut manifest = RunManifest {
        case_id: cfg.case_id.clone(),
        config_sha256: sha256_hex(config_json.as_bytes()),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        scale: cfg.scale,
        started_unix: started,
        finished_unix: started,
        pretrain_iterations: None,
        epochs_completed: 0,
        outputs: vec!["config.json".into()],
        completed: false,
        failure: None,
        config: cfg.clone(),
    };
    let mut trainer = Trainer::new(cfg.clone())?;
    let result = (|| -> Result<PretrainReport> {
        let report = trainer.pretrain()?;
        manifest.pretrain_iterations = Some(report.iterations);
        Checkpoint::of(&trainer, "pretrain").save(&out_dir.join("checkpoint_pretrain.json"))?;
        manifest.outputs.push("checkpoint_pretrain.json".into());
        trainer.begin_alternating();
        for _ in 0..cfg.schedule.epochs {
            let rec = trainer.alternating_epoch()?;
            if let Some(p) = progress.as_mut() {
                p(&rec);
            }
        }
        Ok(report)
    })();
    manifest.epochs_completed = trainer.records.len();
    write_atomic(&out_dir.join("convergence.csv"), convergence_csv(&trainer.records).as_bytes())?;
    write_atomic(&out_dir.join("timing.csv"), timing_csv(&trainer.records).as_bytes())?;
    manifest.outputs.push("convergence.csv".into());
    manifest.outputs.push("timing.csv".into());
    let finish = |manifest: &mut RunManifest| -> Result<()> {
        manifest.finished_unix = unix_now();
        write_atomic(&out_dir.join("manifest.json"), json(manifest, "manifest")?.as_bytes())
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            manifest.failure = Some(e.to_string());
            finish(&mut manifest)?;
            return Err(e);
        }
    };
    Checkpoint::of(&trainer, "final").save(&out_dir.join("checkpoint_final.json"))?;
    manifest.outputs.push("checkpoint_final.json".into());
    for p in export_fields(cfg, &trainer.nets, &cfg.export_resolution, out_dir)? {
        manifest
            .outputs
            .push(p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
    }
    manifest.completed = true;
    finish(&mut manifest)?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        pretrain: report,
        records: trainer.records,
        nets: trainer.nets,
        manifest,
    })
}
