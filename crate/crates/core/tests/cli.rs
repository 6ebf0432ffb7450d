use std::path::PathBuf;
use std::process::{Command, Output};

fn wdne(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdne")).args(args).output().unwrap()
}

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).display().to_string()
}

#[test]
fn unknown_mode_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o").display().to_string();
    let o = wdne(&["run", "--dataset", "heart", "--data-dir", &data(""), "--modes", "zca", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zca"));
}

#[test]
fn missing_data_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o").display().to_string();
    let nowhere = dir.path().join("none").display().to_string();
    let o = wdne(&["run", "--dataset", "heart", "--data-dir", &nowhere, "--out", &out]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"dataset":"heart","learning_rate":0.1}"#).unwrap();
    let out = dir.path().join("o").display().to_string();
    let o = wdne(&["run", "--config", cfg.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = wdne(&[
        "run", "--dataset", "heart", "--data-dir", &data(""), "--modes", "raw,wdne+", "--rounds", "1",
        "--folds", "4", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = std::fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 2);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(out.join("meta.json").exists());
}

#[test]
fn transform_writes_table_of_same_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = wdne(&["transform", "--schema", &data("heart/manifest.json"), "--mode", "pca", "--retain", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 270);
    assert!(text.lines().all(|l| l.split(',').count() == 6));
}

#[test]
fn inspect_prints_spectrum() {
    let o = wdne(&["inspect", "--schema", &data("heart/manifest.json")]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("examples: 270"));
    assert!(text.contains("class presence: 120"));
    assert!(text.lines().any(|l| l.starts_with("weights wdne+: 1.000000e0")));
}

#[test]
fn gen_waveform_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.data");
    let b = dir.path().join("b.data");
    for p in [&a, &b] {
        assert!(wdne(&["gen-waveform", "--out", p.to_str().unwrap(), "--seed", "3"]).status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 5000);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 41);
}
