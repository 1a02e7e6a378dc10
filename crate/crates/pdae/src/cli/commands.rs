//! Command implementations. Each returns the process exit code and
//! writes its artifacts into the output directory; diagnostics go to
//! standard error. Exit codes are the process-level contract:
//! 0 success, 1 config/input error, 2 verification failure,
//! 3 blow-up detected.

use std::path::Path;
use std::time::Instant;

use crate::error::Result;
use crate::integrate::{integrate, Trajectory, Verdict};

use super::config::RunConfig;
use super::converge::{spatial_study, temporal_study};
use super::io::{write_converge_csv, write_json, write_trajectory_csv, Summary};
use super::verify::run_verification;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG_ERROR: i32 = 1;
pub const EXIT_VERIFICATION_FAILED: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

fn base_dir(config_path: &Path) -> &Path {
    config_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn run_solve(config_path: &Path, output_dir: &Path) -> Result<(Trajectory, f64)> {
    let cfg = RunConfig::from_path(config_path)?;
    let session = cfg.build(base_dir(config_path))?;
    let started = Instant::now();
    let ev = session.evolution();
    let traj = integrate(&session.initial, &session.stepper, &ev)?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(output_dir)?;
    write_trajectory_csv(&output_dir.join("trajectory.csv"), &traj)?;
    write_json(
        &output_dir.join("summary.json"),
        &Summary::from_trajectory(&traj, wall),
    )?;
    Ok((traj, wall))
}

/// Integrate the configured problem; writes trajectory.csv and
/// summary.json.
pub fn cmd_solve(config_path: &Path, output_dir: &Path) -> i32 {
    match run_solve(config_path, output_dir) {
        Ok((traj, wall)) => {
            eprintln!(
                "solve: {} steps in {:.3}s, verdict {:?}, max residual {:.3e}",
                traj.steps_taken,
                wall,
                traj.verdict,
                traj.max_constraint_residual()
            );
            match traj.verdict {
                Verdict::Completed => EXIT_OK,
                Verdict::BlowupDetected => {
                    if let Some(t) = traj.t_max_estimate {
                        eprintln!("solve: escape time estimate {t:.6}");
                    }
                    EXIT_BLOWUP
                }
            }
        }
        Err(e) => {
            eprintln!("solve: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}

fn run_verify(config_path: &Path, output_dir: &Path) -> Result<Vec<super::io::CheckResult>> {
    let cfg = RunConfig::from_path(config_path)?;
    let results = run_verification(&cfg)?;
    std::fs::create_dir_all(output_dir)?;
    write_json(&output_dir.join("verify.json"), &results)?;
    Ok(results)
}

/// Run the operator-property harness; writes verify.json.
pub fn cmd_verify(config_path: &Path, output_dir: &Path) -> i32 {
    match run_verify(config_path, output_dir) {
        Ok(results) => {
            let mut failed = false;
            for r in &results {
                eprintln!(
                    "verify: {:32} {}  measured {:.6e} (tolerance {:.3e})",
                    r.name,
                    if r.passed { "pass" } else { "FAIL" },
                    r.measured,
                    r.tolerance
                );
                failed |= !r.passed;
            }
            if failed {
                EXIT_VERIFICATION_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("verify: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}

fn run_converge(config_path: &Path, output_dir: &Path) -> Result<(bool, Vec<f64>)> {
    let cfg = RunConfig::from_path(config_path)?;
    let session = cfg.build(base_dir(config_path))?;

    let spatial = spatial_study()?;
    let temporal = temporal_study(&cfg, &session)?;

    let mut rows = spatial.rows;
    rows.extend(temporal.rows);
    std::fs::create_dir_all(output_dir)?;
    write_converge_csv(&output_dir.join("converge.csv"), &rows)?;

    Ok((
        spatial.within_bracket && temporal.within_bracket,
        vec![spatial.observed_order, temporal.observed_order],
    ))
}

/// Run the spatial and temporal self-convergence studies; writes
/// converge.csv.
pub fn cmd_converge(config_path: &Path, output_dir: &Path) -> i32 {
    match run_converge(config_path, output_dir) {
        Ok((ok, orders)) => {
            eprintln!(
                "converge: spatial order {:.3}, temporal order {:.3}",
                orders[0], orders[1]
            );
            if ok {
                EXIT_OK
            } else {
                eprintln!("converge: observed order outside its bracket");
                EXIT_VERIFICATION_FAILED
            }
        }
        Err(e) => {
            eprintln!("converge: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}
