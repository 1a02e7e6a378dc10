//! Process-level tests of the `pdae` binary: exit codes, artifact
//! formats, and the bitwise CSV round trip of initial conditions.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pdae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdae"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn solve_zero_data_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"n_cells": 16, "dt": 1e-2, "t_end": 0.05}"#,
    );
    let out_dir = dir.path().join("out");
    let out = pdae(&["solve", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next().unwrap(), "t,x,u,v,w,constraint_residual");
    // 6 output times (t=0 plus 5 steps) over 17 nodes
    assert_eq!(lines.count(), 6 * 17);
    for line in traj.lines().skip(1) {
        for field in line.split(',').skip(2) {
            let v: f64 = field.parse().expect("parsable float");
            assert_eq!(v, 0.0);
        }
    }

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "completed");
    assert!(summary["t_max_estimate"].is_null());
    assert_eq!(summary["steps_taken"], 5);
    assert!(summary["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert!(summary["max_constraint_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn solve_blowup_exits_three_with_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "blowup.json",
        r#"{
            "n_cells": 16,
            "dt": 2e-4,
            "t_end": 0.2,
            "a_disabled": true,
            "nonlinearity": "square_test",
            "output_every": 50,
            "ic_u": {"preset": "cosine_mode", "k": 0, "amplitude": 10.0}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = pdae(&["solve", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "blowup_detected");
    let t_max = summary["t_max_estimate"].as_f64().unwrap();
    assert!((t_max - 0.1).abs() <= 0.01, "estimate {t_max}");
}

#[test]
fn missing_and_malformed_configs_exit_one_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    let missing = pdae(&[
        "solve",
        dir.path().join("nope.json").to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&missing), 1);
    assert!(!missing.stderr.is_empty(), "diagnostic expected on stderr");
    assert!(!out_dir.exists(), "no artifacts on config error");

    let bad_key = write_config(dir.path(), "bad.json", r#"{"n_cellz": 16}"#);
    let malformed = pdae(&["solve", &bad_key, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&malformed), 1);
    assert!(!out_dir.exists(), "no artifacts on malformed key");

    let bad_value = write_config(dir.path(), "bad2.json", r#"{"dt": -1.0}"#);
    let invalid = pdae(&["solve", &bad_value, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&invalid), 1);
}

#[test]
fn verify_default_config_exits_zero_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "verify.json.cfg", r#"{"n_cells": 32}"#);
    let out_dir = dir.path().join("out");
    let out = pdae(&["verify", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verify.json")).unwrap()).unwrap();
    let checks = report.as_array().unwrap();
    assert_eq!(checks.len(), 9);
    for check in checks {
        assert!(check["passed"].as_bool().unwrap(), "{check}");
        assert!(check["measured"].is_number());
        assert!(check["tolerance"].is_number());
        assert!(check["name"].is_string());
    }
}

#[test]
fn converge_smooth_run_exits_zero_with_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "conv.json",
        r#"{
            "n_cells": 32,
            "scheme": "etd2",
            "dt": 2e-3,
            "t_end": 0.2,
            "ic_u": {"preset": "cosine_mode", "k": 1, "amplitude": 0.05},
            "ic_v": {"preset": "gauss_bump", "amplitude": 0.02, "center": 0.5, "width": 0.15}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = pdae(&["converge", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let table = fs::read_to_string(out_dir.join("converge.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "level,h_or_dt,error,observed_order");
    // 4 spatial levels + 3 temporal levels
    assert_eq!(lines.count(), 7);
    assert!(table.contains("h_16"));
    assert!(table.contains("dt_"));
}

#[test]
fn converge_without_dynamics_exits_two() {
    // a zero run has zero self-convergence errors, so no order can be
    // observed and the study must fail its bracket
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "flat.json",
        r#"{"n_cells": 16, "dt": 2e-3, "t_end": 0.1}"#,
    );
    let out_dir = dir.path().join("out");
    let out = pdae(&["converge", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("converge.csv").exists(), "table written regardless");
}

#[test]
fn initial_condition_csv_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");

    // run once from an analytic preset
    let cfg_a = write_config(
        dir.path(),
        "a.json",
        r#"{
            "n_cells": 24,
            "dt": 1e-3,
            "t_end": 0.02,
            "ic_u": {"preset": "gauss_bump", "amplitude": 0.3, "center": 0.4, "width": 0.2},
            "ic_v": {"preset": "cosine_mode", "k": 2, "amplitude": 0.1}
        }"#,
    );
    let out = pdae(&["solve", &cfg_a, "--output-dir", out_a.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);

    // extract the t = 0 block of the trajectory into x,value files
    let traj = fs::read_to_string(out_a.join("trajectory.csv")).unwrap();
    let mut u_csv = String::from("x,value\n");
    let mut v_csv = String::from("x,value\n");
    let t0: Vec<&str> = traj
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("0.0000000000000000e0,"))
        .collect();
    assert_eq!(t0.len(), 25);
    for line in &t0 {
        let cols: Vec<&str> = line.split(',').collect();
        u_csv.push_str(&format!("{},{}\n", cols[1], cols[2]));
        v_csv.push_str(&format!("{},{}\n", cols[1], cols[3]));
    }
    fs::write(dir.path().join("u0.csv"), &u_csv).unwrap();
    fs::write(dir.path().join("v0.csv"), &v_csv).unwrap();

    // run again from the written fields
    let cfg_b = write_config(
        dir.path(),
        "b.json",
        r#"{
            "n_cells": 24,
            "dt": 1e-3,
            "t_end": 0.02,
            "ic_u": {"preset": "from_csv", "path": "u0.csv"},
            "ic_v": {"preset": "from_csv", "path": "v0.csv"}
        }"#,
    );
    let out_b = dir.path().join("b");
    let out = pdae(&["solve", &cfg_b, "--output-dir", out_b.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // the two trajectories must agree bitwise as text
    let traj_b = fs::read_to_string(out_b.join("trajectory.csv")).unwrap();
    assert_eq!(traj, traj_b, "round-tripped run diverged");
}

#[test]
fn dirichlet_variant_also_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dirichlet.json",
        r#"{"n_cells": 16, "bc": "dirichlet", "constraint_sign": 1}"#,
    );
    let out_dir = dir.path().join("out");
    let out = pdae(&["verify", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
