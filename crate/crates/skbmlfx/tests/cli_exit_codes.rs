use std::process::Command;

use skbmlfx::cli::{self, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(std::iter::once("skbmlfx").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn usage_errors_exit_one_with_synopsis() {
    for args in [&[][..], &["frobnicate"], &["oracle", "--m", "x"], &["sweep", "--side", "up"]] {
        let (code, _, err) = run(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(err.contains("Usage"), "{err}");
    }
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn runtime_errors_exit_two() {
    assert_eq!(run(&["tradeoff", "--config", "/nonexistent/cfg.txt"]).0, EXIT_RUNTIME);
    assert_eq!(run(&["plan", "--instance", "/nonexistent/inst.csv"]).0, EXIT_RUNTIME);
    assert_eq!(run(&["oracle", "--instances", "0"]).0, EXIT_RUNTIME);
}

#[test]
fn oracle_prints_match_rate() {
    let (code, out, _) = run(&["oracle", "--m", "6", "--instances", "50", "--seed", "9"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["instances"], 50);
    assert!(v["match_rate"].as_f64().unwrap() >= 0.9);
}

#[test]
fn tradeoff_and_sweep_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "run.trials = 2\nplan.m = 12\n").unwrap();
    let out = dir.path().join("out");
    let (o, c) = (out.to_str().unwrap(), cfg.to_str().unwrap());
    assert_eq!(run(&["tradeoff", "--config", c, "--seed", "4", "--out", o]).0, EXIT_OK);
    assert!(out.join("tradeoff.csv").exists() && out.join("summary.json").exists());
    assert_eq!(run(&["sweep", "--config", c, "--side", "tx", "--sizes", "2,5", "--out", o]).0, EXIT_OK);
    assert!(out.join("sweep_tx.csv").exists());
}

#[test]
fn data_models_and_plans_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(run(&["gen-data", "--seed", "2", "--out", o]).0, EXIT_OK);
    for f in ["tx_train.csv", "rx_train.csv", "test.csv", "prototypes.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    skbmlfx::io::load_features(&dir.path().join("test.csv")).unwrap();
    assert_eq!(run(&["train", "--seed", "2", "--out", o]).0, EXIT_OK);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model_tx.json")).unwrap()).unwrap();
    assert!(model.is_object());

    let inst = dir.path().join("inst.csv");
    skbmlfx::io::save_instance(&inst, &skbmlfx_core::planner::random_instance(6, 1)).unwrap();
    let (code, out, _) = run(&["plan", "--instance", inst.to_str().unwrap(), "--planner", "brute_force"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible"], true);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_skbmlfx");
    let st = Command::new(bin).arg("selftest").output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&st.stdout));
    assert!(!String::from_utf8_lossy(&st.stdout).contains("FAIL"));
    let bad = Command::new(bin).arg("--bogus").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
