use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topopt::config::load_config;
use topopt::gradcheck::{run_checks, PHYSICS_TAGS};
use topopt::registry::{builtin_case, case_registry};
use topopt::run::{export_fields, run_optimization, Checkpoint, OUT_DIR_ENV};
use topopt::{Error, Result};

#[derive(Parser)]
#[command(name = "topopt", version, about = "Phase-field topology optimization with Fourier feature networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization case end to end.
    Run {
        /// Registry case id (see `list-cases`).
        #[arg(long)]
        case: Option<String>,
        /// JSON case configuration; overrides `--case`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory [default: $APF_OUT_DIR/<case> or ./runs/<case>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Shrinks point counts, widths and iteration counts, in (0, 1].
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Print the registry case ids.
    ListCases,
    /// Finite-difference and identity checks on tiny random instances.
    CheckGrad {
        /// compliance | eigenvalue | stokes | navier_stokes | all
        #[arg(long, default_value = "all")]
        physics: String,
        #[arg(long, default_value_t = 11)]
        seed: u64,
    },
    /// Re-export fields from a checkpoint at a chosen resolution.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Nodes per axis, e.g. `200x100`.
        #[arg(long)]
        resolution: String,
        /// Output directory [default: the checkpoint's directory].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_resolution(text: &str) -> Result<Vec<usize>> {
    text.split('x')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad resolution `{text}`, expected e.g. 200x100")))
        })
        .collect()
}

fn default_out(case_id: &str) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(case_id),
        None => Path::new("runs").join(case_id),
    }
}

fn run(
    case: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    scale: Option<f64>,
) -> Result<()> {
    let mut cfg = match (&config, &case) {
        (Some(path), _) => load_config(path)?,
        (None, Some(id)) => builtin_case(id)?,
        (None, None) => return Err(Error::config("either --case or --config is required")),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = scale {
        cfg = cfg.scaled(f)?;
    }
    cfg.validate()?;
    let out = out.unwrap_or_else(|| default_out(&cfg.case_id));
    eprintln!(
        "case {} seed {} scale {} -> {}",
        cfg.case_id,
        cfg.seed,
        cfg.scale,
        out.display()
    );
    let total = cfg.schedule.epochs;
    let mut progress = |r: &topopt::train::ConvergenceRecord| {
        eprintln!(
            "epoch {:>4}/{total} objective {:.6e} volume_error {:.3e} gl {:.4e} lambda {:.3e} ({:.2}s)",
            r.epoch + 1,
            r.objective,
            r.volume_error,
            r.gl_energy,
            r.lambda_penal,
            r.wall_seconds
        );
    };
    let summary = run_optimization(&cfg, &out, Some(&mut progress))?;
    eprintln!(
        "pretrain {} iterations, state loss {:.4e} -> {:.4e}",
        summary.pretrain.iterations, summary.pretrain.initial_loss, summary.pretrain.final_loss
    );
    println!("{}", out.display());
    Ok(())
}

fn check_grad(physics: &str, seed: u64) -> Result<bool> {
    let tags: Vec<&str> = if physics == "all" {
        PHYSICS_TAGS.to_vec()
    } else {
        vec![physics]
    };
    let mut ok = true;
    for tag in tags {
        for c in run_checks(tag, seed)? {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            println!("{verdict} {:<40} {:.3e} (tol {:.0e})", c.name, c.error, c.tolerance);
            ok &= c.passed();
        }
    }
    Ok(ok)
}

fn export(checkpoint: &Path, resolution: &str, out: Option<PathBuf>) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let res = parse_resolution(resolution)?;
    if res.len() != ckpt.config.dim() {
        return Err(Error::config(format!(
            "resolution `{resolution}` has {} axes, case is {}-d",
            res.len(),
            ckpt.config.dim()
        )));
    }
    let dir = out.unwrap_or_else(|| checkpoint.parent().map(Path::to_path_buf).unwrap_or_default());
    for p in export_fields(&ckpt.config, &ckpt.nets, &res, &dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            case,
            config,
            out,
            seed,
            scale,
        } => run(case, config, out, seed, scale).map(|_| true),
        Command::ListCases => {
            for id in case_registry() {
                println!("{id}");
            }
            Ok(true)
        }
        Command::CheckGrad { physics, seed } => check_grad(&physics, seed),
        Command::Export {
            checkpoint,
            resolution,
            out,
        } => export(&checkpoint, &resolution, out).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
