use serde_json::Value;
use topopt::config::{load_config, CaseConfig};
use topopt::registry::{builtin_case, case_registry};
use topopt::run::{export_fields, sha256_hex, write_atomic};
use topopt::train::Trainer;

fn cantilever_json() -> Value {
    serde_json::from_str(&builtin_case("cantilever2d").unwrap().to_json().unwrap()).unwrap()
}

fn load_value(v: &Value) -> topopt::Result<CaseConfig> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case.json");
    write_atomic(&path, serde_json::to_string(v).unwrap().as_bytes()).unwrap();
    load_config(&path)
}

#[test]
fn file_round_trip() {
    let cfg = load_value(&cantilever_json()).unwrap();
    assert_eq!(cfg, builtin_case("cantilever2d").unwrap());
    assert_eq!(cfg.phase_field.beta, 0.5);
    assert_eq!(cfg.interior.count(), 20000);
}

#[test]
fn missing_seed_is_rejected() {
    let mut v = cantilever_json();
    v.as_object_mut().unwrap().remove("seed");
    let err = load_value(&v).unwrap_err().to_string();
    assert!(err.contains("seed"), "{err}");
}

#[test]
fn unknown_physics_is_rejected() {
    let mut v = cantilever_json();
    v["physics"]["kind"] = Value::from("heat");
    let err = load_value(&v).unwrap_err().to_string();
    assert!(err.contains("heat"), "{err}");
}

#[test]
fn unknown_key_is_named() {
    let mut v = cantilever_json();
    v["phase_field"]["epsilon"] = Value::from(0.1);
    let err = load_value(&v).unwrap_err().to_string();
    assert!(err.contains("epsilon"), "{err}");
}

#[test]
fn physics_field_mismatch_is_rejected() {
    let mut v = cantilever_json();
    v["physics"]["material"]["nu"] = Value::from(0.7);
    assert!(load_value(&v).is_err());
}

#[test]
fn config_hash_tracks_every_change() {
    let a = builtin_case("mbb2d").unwrap();
    let mut b = a.clone();
    assert_eq!(sha256_hex(a.to_json().unwrap().as_bytes()), sha256_hex(b.to_json().unwrap().as_bytes()));
    b.phase_field.gamma *= 1.0 + 1e-15;
    assert_ne!(sha256_hex(a.to_json().unwrap().as_bytes()), sha256_hex(b.to_json().unwrap().as_bytes()));
}

#[test]
fn every_case_starts_at_tenth_scale() {
    for id in case_registry() {
        let mut cfg = builtin_case(id).unwrap().scaled(0.1).unwrap();
        cfg.schedule.pretrain.max_iters = 1;
        cfg.schedule.pretrain.min_iters = 1;
        cfg.schedule.state_steps = 1;
        cfg.schedule.adjoint_steps = Some(1);
        let mut t = Trainer::new(cfg).unwrap_or_else(|e| panic!("{id}: {e}"));
        t.pretrain().unwrap_or_else(|e| panic!("{id}: {e}"));
        t.begin_alternating();
        let r = t.alternating_epoch().unwrap_or_else(|e| panic!("{id}: {e}"));
        assert!(r.topology_loss.is_finite(), "{id}");
    }
}

#[test]
fn small_export_is_deterministic() {
    let cfg = builtin_case("stokes_bend2d").unwrap().scaled(0.1).unwrap();
    let nets = Trainer::new(cfg.clone()).unwrap().nets;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export_fields(&cfg, &nets, &[3, 3], a.path()).unwrap();
    export_fields(&cfg, &nets, &[3, 3], b.path()).unwrap();
    let text = std::fs::read_to_string(a.path().join("fields.csv")).unwrap();
    assert_eq!(text, std::fs::read_to_string(b.path().join("fields.csv")).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,phi,u1,u2,p");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        assert!(r[2] > 0.0 && r[2] < 1.0);
    }
}

#[test]
fn three_dimensional_export_adds_solid_points() {
    let cfg = builtin_case("cantilever3d").unwrap().scaled(0.1).unwrap();
    let nets = Trainer::new(cfg.clone()).unwrap().nets;
    let dir = tempfile::tempdir().unwrap();
    let files = export_fields(&cfg, &nets, &[3, 3, 2], dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let pts = std::fs::read_to_string(dir.path().join("points.csv")).unwrap();
    assert_eq!(pts.lines().next().unwrap(), "x,y,z,phi");
    // φ ≡ 0.5 at initialization, so every node is on the solid side
    assert_eq!(pts.lines().count(), 1 + 18);
}

#[test]
fn scaling_keeps_final_penalty_weight() {
    let full = builtin_case("cantilever2d").unwrap();
    let quarter = full.scaled(0.25).unwrap();
    assert_eq!(quarter.schedule.epochs * 4, full.schedule.epochs);
    let end = |c: &CaseConfig| c.phase_field.lambda_penal / c.phase_field.zeta.powi(c.schedule.epochs as i32);
    assert!((end(&quarter) / end(&full) - 1.0).abs() < 1e-9);
}
