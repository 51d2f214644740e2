use std::path::Path;
use std::process::{Command, Output};

fn coevo(dir: &Path, args: &[&str]) -> Output {
    let out = format!("out.dir={}", dir.join("out").display());
    Command::new(env!("CARGO_BIN_EXE_coevo"))
        .args(args)
        .args(["--set", &out])
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn unknown_key_exits_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevo(dir.path(), &["critical-temp", "--set", "gmae.b11=4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 3\nn = 4\n").unwrap();
    let out = coevo(dir.path(), &["fixed-points", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn critical_temperature_of_the_coordination_game() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevo(dir.path(), &["critical-temp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "critical-temp.csv");
    let row = csv.lines().nth(1).unwrap();
    let tc: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((tc - 0.36).abs() < 0.01);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "critical-temp.json")).unwrap();
    assert!(json.is_object());
}

#[test]
fn prisoners_dilemma_rest_points_cover_every_topology() {
    let dir = tempfile::tempdir().unwrap();
    let game = ["game.b11=3", "game.b12=0", "game.b21=5", "game.b22=1", "temperature=0"];
    let mut args = vec!["fixed-points"];
    for g in &game {
        args.extend(["--set", g]);
    }
    let out = coevo(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "fixed-points.csv");
    assert!(csv.starts_with("id,configuration,classification,max_real,residual,p_0"));
    for label in ["PairPlusIsolated", "Star", "SymmetricUniform", "CyclicNonReciprocated"] {
        assert!(csv.contains(label), "missing {label}");
    }
}

#[test]
fn stability_needs_a_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevo(dir.path(), &["stability"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stability_of_a_supplied_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    std::fs::write(&state, r#"{"n": 3, "p": [0, 0, 0], "c": [[0, 1, 0], [1, 0, 0], [0.5, 0.5, 0]]}"#).unwrap();
    let game = ["game.b11=3", "game.b12=0", "game.b21=5", "game.b22=1", "temperature=0"];
    let mut args = vec!["stability", "--state", state.to_str().unwrap()];
    for g in &game {
        args.extend(["--set", g]);
    }
    let out = coevo(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read(dir.path(), "stability.json");
    assert!(json.contains("PairPlusIsolated") && json.contains("MarginallyStable"), "{json}");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    let base = ["census", "--set", "trials=24", "--set", "n=4", "--set", "temperature=0.05"];
    for (dir, threads) in [(&one, "1"), (&four, "4")] {
        let mut args = base.to_vec();
        args.extend(["--threads", threads]);
        let out = coevo(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["basin.csv", "basin.json"] {
        assert_eq!(read(one.path(), name), read(four.path(), name), "{name}");
    }
}
