use std::path::Path;
use std::process::{Command, Output};

use topopt::gradcheck::tiny_case;

fn topopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topopt")).args(args).output().unwrap()
}

fn tiny_config(dir: &Path) -> String {
    let mut cfg = tiny_case("stokes", 3).unwrap();
    cfg.schedule.pretrain.max_iters = 2;
    cfg.schedule.pretrain.min_iters = 2;
    cfg.schedule.epochs = 2;
    cfg.schedule.state_steps = 1;
    cfg.export_resolution = vec![4, 4];
    let path = dir.join("tiny.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn list_cases_prints_registry() {
    let out = topopt(&["list-cases"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 19);
    assert!(text.lines().any(|l| l == "cantilever2d"));
}

#[test]
fn check_grad_passes_for_compliance() {
    let out = topopt(&["check-grad", "--physics", "compliance"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn unknown_physics_fails() {
    assert_eq!(topopt(&["check-grad", "--physics", "heat"]).status.code(), Some(2));
}

#[test]
fn run_without_case_fails() {
    assert_eq!(topopt(&["run"]).status.code(), Some(2));
}

#[test]
fn run_then_export() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let run_dir = dir.path().join("run");
    let out = topopt(&["run", "--config", &config, "--out", run_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.json", "manifest.json", "convergence.csv", "fields.csv", "checkpoint_final.json"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(run_dir.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let ckpt = run_dir.join("checkpoint_final.json");
    let ckpt = ckpt.to_str().unwrap();
    let export_dir = dir.path().join("export");
    let out = topopt(&["export", "--checkpoint", ckpt, "--resolution", "3x3", "--out", export_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fields = std::fs::read_to_string(export_dir.join("fields.csv")).unwrap();
    assert_eq!(fields.lines().count(), 10);

    for res in ["3x3x3", "three"] {
        let bad = topopt(&["export", "--checkpoint", ckpt, "--resolution", res]);
        assert_eq!(bad.status.code(), Some(2), "{res}");
    }
}
