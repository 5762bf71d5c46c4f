use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pisco_cli::formats::{ProjectionFile, BASE};
use pisco_cli::io::read_numbered;
use pisco_core::pisco::transform;
use serde_json::json;

fn pisco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pisco")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(&value).unwrap()).unwrap();
    path
}

fn run_ok(args: &[&str]) {
    let out = pisco(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Synthesizes a small dataset into `<root>/data`.
fn synth(root: &Path, n: usize) -> PathBuf {
    let cfg = write_config(root, "synth.json", json!({ "n": n, "seed": 4, "latent": { "rho": 0.6 } }));
    let data = root.join("data");
    run_ok(&["synth", "--config", cfg.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    data
}

fn fit(root: &Path, extra: serde_json::Value) -> Output {
    let mut cfg = json!({ "data": "data" });
    cfg.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    let path = write_config(root, "fit.json", cfg);
    pisco(&["fit", "--config", path.to_str().unwrap(), "--out", root.join("fit").to_str().unwrap()])
}

#[test]
fn exact_fit_rejects_more_content_rows_than_invariant_directions() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 200);
    let out = fit(dir.path(), json!({ "k": 8 }));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("k <= 5"), "{}", stderr(&out));
}

#[test]
fn default_eta_gives_five_content_rows() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 200);
    for lambda in [json!("inf"), json!(100.0)] {
        assert!(fit(dir.path(), json!({ "lambda": lambda })).status.success());
        let (file, p) = ProjectionFile::read(&dir.path().join("fit/projection.json")).unwrap();
        assert_eq!((file.m, file.k, p.k()), (5, 5, 5));
    }
}

#[test]
fn stored_projection_transforms_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 300);
    assert!(fit(dir.path(), json!({ "lambda": 10.0 })).status.success());
    let (_, p) = ProjectionFile::read(&dir.path().join("fit/projection.json")).unwrap();

    let cfg = write_config(dir.path(), "apply.json", json!({ "projection": "fit/projection.json", "features": "data/base.csv" }));
    run_ok(&["apply", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("apply").to_str().unwrap()]);
    let written = pisco_cli::io::read_table(&dir.path().join("apply/factors.csv")).unwrap();
    assert_eq!(written.headers[..5], p.style_names()[..]);
    assert_eq!(written.headers[5], "content0");

    let expected = transform(&p, &read_numbered(&data.join(BASE), "f").unwrap()).unwrap();
    for i in 0..written.values.nrows() {
        let row = written.values.row(i);
        let want = expected.style_factors.row(i).iter().chain(expected.content_factors.row(i));
        assert!(row.iter().zip(want).all(|(a, b)| a.to_bits() == b.to_bits()), "row {i}");
    }
}

#[test]
fn tampered_data_fails_digest_verification() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 100);
    let base = data.join(BASE);
    let mut text = fs::read_to_string(&base).unwrap();
    let row = text.lines().nth(1).unwrap().to_owned();
    text.push_str(&row);
    text.push('\n');
    fs::write(&base, text).unwrap();
    let out = fit(dir.path(), json!({}));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("checksum mismatch"), "{}", stderr(&out));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "synth.json", json!({ "n": 50, "sede": 3 }));
    let out = pisco(&["synth", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sede"), "{}", stderr(&out));
}

#[test]
fn empty_sample_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "synth.json", json!({ "n": 0 }));
    let out = pisco(&["synth", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_exit_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = pisco(&["fit", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let cfg = write_config(dir.path(), "fit.json", json!({ "data": "nowhere" }));
    assert_eq!(pisco(&["fit", "--config", cfg.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn zero_jobs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = pisco(&["synth", "--jobs", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_reports_exact_mode_residuals() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 400);
    assert!(fit(dir.path(), json!({})).status.success());
    let cfg = write_config(dir.path(), "eval.json", json!({ "data": "data", "projection": "fit/projection.json" }));
    run_ok(&["eval", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("eval").to_str().unwrap()]);
    let report = pisco_cli::io::read_table(&dir.path().join("eval/report.csv"));
    assert!(report.is_err(), "report.csv carries a text lambda column");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("eval/report.json")).unwrap()).unwrap();
    assert!(json.to_string().contains("inf"));
    let text = fs::read_to_string(dir.path().join("eval/report.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "inf");
    let t2_null: f64 = row[6].parse().unwrap();
    assert!(t2_null <= 1e-8, "{t2_null:e}");
}
