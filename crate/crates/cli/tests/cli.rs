use std::path::PathBuf;
use std::process::Command;

fn emob() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emob"))
}

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn route_with_oracle_gap() {
    let out = emob()
        .args(["route", "--from", "O", "--to", "D", "--planner", "q", "--oracle", "--seed", "3", "--scenario"])
        .arg(repo_file("scenarios/t3-demo.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["oracle_total_time_s"], 1050.0);
    assert_eq!(v["result"]["planner"], "q");
    assert!(v["gap"].as_f64().unwrap() >= 0.0);
}

#[test]
fn route_excluding_a_mode() {
    let out = emob()
        .args(["route", "--from", "O", "--to", "D", "--planner", "oracle", "--exclude", "ECar", "--scenario"])
        .arg(repo_file("scenarios/t3-demo.json"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["total_time_s"], 1200.0);
}

#[test]
fn route_errors_exit_nonzero() {
    let out = emob()
        .args(["route", "--from", "O", "--to", "Nowhere", "--scenario"])
        .arg(repo_file("scenarios/t3-demo.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Nowhere"));

    let out = emob().args(["route", "--from", "O", "--to", "D", "--scenario", "/no/such.json"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such.json"));
}

#[test]
fn bench_and_sweep_write_results() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"id": "tiny", "n_od_pairs": 3,
            "scenario": {"kind": "grid", "grid": {"rows": 5, "cols": 5}, "n_hubs": 4},
            "aco": {"n_ants": 40, "n_iterations": 4}, "qlearning": {"n_episodes": 300}}"#,
    )
    .unwrap();
    let out = emob().args(["bench", "--spec"]).arg(&spec).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.jsonl", "summary.csv", "trace_aco.csv", "trace_q.csv"] {
        assert!(dir.path().join("tiny").join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("pref=no-ECar"));

    let sweep = dir.path().join("sweep.json");
    std::fs::write(&sweep, r#"{"id": "s", "ant_counts": [10], "episode_counts": [200], "repetitions": 3}"#).unwrap();
    let out = emob().args(["sweep", "--spec"]).arg(&sweep).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("s/sweep.csv").exists());
}
