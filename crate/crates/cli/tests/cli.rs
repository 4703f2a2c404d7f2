use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morbit"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(cfg)
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn ebar_on_shift_fixed_points_is_constant_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("ebar_shift_fixed.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("ebar.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# morbit "));
    assert_eq!(lines.next().unwrap(), "horizon,value,value_exact");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1], "1.0000000000000000e0");
        assert_eq!(cols[2], "1");
    }
}

#[test]
fn density_truncation_witness_is_below_eps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("density_truncation.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("density.json"));
    let found = &doc["result"]["outcome"]["found"];
    assert!(found["cost"].as_f64().unwrap() < 0.05);
    assert!(found["n"].as_u64().unwrap() >= 64);
}

#[test]
fn outputs_are_deterministic_and_stamped() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for name in ["density_truncation.json", "aapo_shift_strict.json", "vset_rotation.json"] {
        assert_eq!(run(&config(name), a.path(), &[]).status.code(), Some(0));
        assert_eq!(run(&config(name), b.path(), &[]).status.code(), Some(0));
    }
    let mut count = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        let x = std::fs::read(&path).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name:?} differs between runs");
        count += 1;
        if path.extension().is_some_and(|e| e == "json") {
            let doc: Value = serde_json::from_slice(&x).unwrap();
            assert_eq!(doc["morbit_version"], env!("CARGO_PKG_VERSION"));
            assert_eq!(doc["config_sha256"].as_str().unwrap().len(), 64);
        }
    }
    assert!(count >= 6);
}

#[test]
fn seed_override_changes_random_points() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&config("vset_rotation.json"), a.path(), &[]);
    run(&config("vset_rotation.json"), b.path(), &["--seed", "6"]);
    let x = read_json(&a.path().join("vset.json"));
    let y = read_json(&b.path().join("vset.json"));
    assert_eq!(y["seed"], 6);
    assert_ne!(x["result"]["x"], y["result"]["x"]);
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\"kind\": \"ebar\", \"system\": ");
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"kind": "ebar", "system": {"kind": "tent"},
            "params": {"x": {"kind": "interval", "value": "1/3"}, "horizons": [4, 8]}}"#,
    );
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing field `y`"), "{err}");
}

#[test]
fn unknown_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "spectrum", "system": {"kind": "tent"}}"#);
    assert_eq!(run(&cfg, dir.path(), &[]).status.code(), Some(2));
    let out = bin().args(["describe", "spectrum"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn describe_lists_csv_headers() {
    let out = bin().args(["describe", "aapo"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("n,jump_average,jump_average_exact,prefix_bound"));
    assert!(text.contains("Exit codes"));
}

#[test]
fn validate_checks_schedules() {
    let ok = bin().arg("validate").arg(config("aapo_shift_strict.json")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let mut doc = read_json(&config("aapo_shift_strict.json"));
    doc["params"]["schedule"]["stages"][1]["generic_points"]
        .as_array_mut()
        .unwrap()
        .truncate(2);
    let cfg = write_config(dir.path(), &doc.to_string());
    let bad = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(&dir.path().join("aapo.json"));
    assert_eq!(report["status"], "validation_failed");
}

#[test]
fn cap_exhaustion_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = read_json(&config("trace_tent.json"));
    doc["caps"] = serde_json::json!({"assignment": 256});
    let cfg = write_config(dir.path(), &doc.to_string());
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let report = read_json(&dir.path().join("trace.json"));
    assert_eq!(report["status"], "cap_exhausted");
    assert_eq!(report["result"]["dropped_horizons"], serde_json::json!([512, 1024]));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn failed_search_exits_3_with_best_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = read_json(&config("density_truncation.json"));
    doc["params"]["eps"] = serde_json::json!(1e-6);
    doc["caps"]["max_period"] = serde_json::json!(16);
    let cfg = write_config(dir.path(), &doc.to_string());
    assert_eq!(run(&cfg, dir.path(), &[]).status.code(), Some(3));
    let report = read_json(&dir.path().join("density.json"));
    assert!(report["result"]["outcome"]["found"].is_null());
    assert!(report["result"]["outcome"]["best"]["cost"].is_number());
}

#[test]
fn float_flag_converts_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("dist_tent.json"), dir.path(), &["--float"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("dist.json"));
    assert_eq!(doc["arithmetic"], "float");
    assert!((doc["result"]["cost"].as_f64().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn every_sample_config_validates() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{path:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn decomposition_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&config("decomp_swap.json"), dir.path(), &[]).status.code(), Some(0));
    let doc = read_json(&dir.path().join("decomp.json"));
    assert_eq!(doc["result"]["verification"]["valid"], true);
    assert_eq!(doc["result"]["lift"]["lifted_cost"], "1/42");
}
