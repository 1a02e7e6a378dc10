//! File formats: the trajectory table, field CSVs for initial
//! conditions, and the JSON reports. All floating-point text is written
//! with 17 significant digits so values survive a text round trip
//! bitwise.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PdaeError, Result};
use crate::grid::{Grid1D, GridFn};
use crate::integrate::{Trajectory, Verdict};

/// 17 significant digits: enough to reproduce any finite f64 exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Columns: t, x, u, v, w, constraint_residual; one row per
/// (time, node).
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,x,u,v,w,constraint_residual")?;
    for ((t, state), residual) in traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.constraint_residuals)
    {
        let nodes = state.grid().nodes();
        let u = state.diff().u().values();
        let v = state.diff().v().values();
        let w = state.alg().field().values();
        for i in 0..nodes.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                format_f64(*t),
                format_f64(nodes[i]),
                format_f64(u[i]),
                format_f64(v[i]),
                format_f64(w[i]),
                format_f64(*residual),
            )?;
        }
    }
    Ok(())
}

/// Read a two-column `x,value` CSV (header required) into a field on
/// the given grid. Node coordinates must match the mesh.
pub fn read_field_csv(path: &Path, grid: &Arc<Grid1D>) -> Result<GridFn> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PdaeError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "x,value" => {}
        other => {
            return Err(PdaeError::Config(format!(
                "{}: expected header 'x,value', got {:?}",
                path.display(),
                other
            )))
        }
    }
    let mut values = Vec::with_capacity(grid.n_nodes());
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| {
                PdaeError::Config(format!("{}:{}: missing column", path.display(), lineno + 2))
            })?
            .trim()
            .parse::<f64>()
            .map_err(|e| {
                PdaeError::Config(format!("{}:{}: {e}", path.display(), lineno + 2))
            })
        };
        let x = parse(parts.next())?;
        let value = parse(parts.next())?;
        let idx = values.len();
        let node = grid.nodes().get(idx).copied().ok_or_else(|| {
            PdaeError::Config(format!(
                "{}: more rows than the {}-node mesh",
                path.display(),
                grid.n_nodes()
            ))
        })?;
        if (x - node).abs() > 1e-12 {
            return Err(PdaeError::Config(format!(
                "{}:{}: node {x} does not match mesh node {node}",
                path.display(),
                lineno + 2
            )));
        }
        values.push(value);
    }
    if values.len() != grid.n_nodes() {
        return Err(PdaeError::Config(format!(
            "{}: {} rows for a {}-node mesh",
            path.display(),
            values.len(),
            grid.n_nodes()
        )));
    }
    GridFn::new(grid.clone(), values)
}

/// Write one field as an `x,value` CSV, the format `from_csv` reads.
pub fn write_field_csv(path: &Path, field: &GridFn) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,value")?;
    for (x, v) in field.grid().nodes().iter().zip(field.values()) {
        writeln!(out, "{},{}", format_f64(*x), format_f64(*v))?;
    }
    Ok(())
}

/// summary.json contents.
#[derive(Debug, Serialize, Deserialize)]
pub struct Summary {
    pub verdict: String,
    pub t_max_estimate: Option<f64>,
    pub max_constraint_residual: f64,
    pub steps_taken: usize,
    pub wall_seconds: f64,
}

impl Summary {
    pub fn from_trajectory(traj: &Trajectory, wall_seconds: f64) -> Self {
        Self {
            verdict: match traj.verdict {
                Verdict::Completed => "completed".into(),
                Verdict::BlowupDetected => "blowup_detected".into(),
            },
            t_max_estimate: traj.t_max_estimate,
            max_constraint_residual: traj.max_constraint_residual(),
            steps_taken: traj.steps_taken,
            wall_seconds,
        }
    }
}

/// One entry of verify.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckResult {
    /// Pass when the measured value does not exceed the tolerance.
    pub fn upper_bound(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured.is_finite() && measured <= tolerance,
            measured,
            tolerance,
        }
    }

    /// Pass when the measured value stays within `half_width` of
    /// `center` (bracket checks such as convergence orders).
    pub fn bracket(name: &str, measured: f64, center: f64, half_width: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured.is_finite() && (measured - center).abs() <= half_width,
            measured,
            tolerance: half_width,
        }
    }

    /// Pass when the measured value is at least `-tolerance` (signed
    /// lower bounds such as eigenvalue nonnegativity).
    pub fn lower_bound(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured.is_finite() && measured >= -tolerance,
            measured,
            tolerance,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| PdaeError::Config(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// One row of converge.csv.
#[derive(Debug, Clone)]
pub struct ConvergeRow {
    pub level: String,
    pub h_or_dt: f64,
    pub error: f64,
    pub observed_order: Option<f64>,
}

pub fn write_converge_csv(path: &Path, rows: &[ConvergeRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "level,h_or_dt,error,observed_order")?;
    for row in rows {
        let order = row
            .observed_order
            .map(format_f64)
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            row.level,
            format_f64(row.h_or_dt),
            format_f64(row.error),
            order
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};

    #[test]
    fn seventeen_digits_round_trip_bitwise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-1e8..1e8) * 10f64.powi(rng.random_range(-12..12));
            let back: f64 = format_f64(x).parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{x} round-tripped to {back}");
        }
        assert_eq!(format_f64(0.0).parse::<f64>().unwrap().to_bits(), 0.0_f64.to_bits());
    }

    #[test]
    fn field_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::shared(17).unwrap();
        let field = GridFn::from_fn(grid.clone(), |x| (x * 9.7).sin() / 3.0).unwrap();
        let path = dir.path().join("field.csv");
        write_field_csv(&path, &field).unwrap();
        let back = read_field_csv(&path, &grid).unwrap();
        for (a, b) in field.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn field_csv_rejects_wrong_grid() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::shared(8).unwrap();
        let field = GridFn::zeros(grid.clone());
        let path = dir.path().join("field.csv");
        write_field_csv(&path, &field).unwrap();
        let other = Grid1D::shared(16).unwrap();
        assert!(read_field_csv(&path, &other).is_err());
    }
}
