//! Self-convergence studies: spatial order of the constraint solve on
//! the manufactured problem, and temporal order of the steppers against
//! a finer-step reference run. Refinement levels run concurrently; the
//! solves share nothing mutable.

use crate::constraint::{ConstraintSign, ConstraintSolver};
use crate::error::{PdaeError, Result};
use crate::grid::{norm_e, Grid1D, GridFn};
use crate::integrate::{integrate, Scheme, StepperConfig};
use crate::operators::{BoundaryKind, OperatorSet};

use super::config::{RunConfig, Session};
use super::io::ConvergeRow;

/// Expected-order brackets.
pub const SPATIAL_BRACKET: (f64, f64) = (1.7, 2.3);
pub const EXP_EULER_BRACKET: (f64, f64) = (0.8, 1.2);
pub const ETD2_BRACKET: (f64, f64) = (1.7, 2.3);

pub struct StudyOutcome {
    pub rows: Vec<ConvergeRow>,
    pub observed_order: f64,
    pub within_bracket: bool,
}

fn pairwise_orders(rows: &mut [ConvergeRow]) -> f64 {
    for k in 1..rows.len() {
        let order = (rows[k - 1].error / rows[k].error).log2()
            / (rows[k - 1].h_or_dt / rows[k].h_or_dt).log2();
        rows[k].observed_order = Some(order);
    }
    let orders: Vec<f64> = rows.iter().filter_map(|r| r.observed_order).collect();
    orders.iter().sum::<f64>() / orders.len().max(1) as f64
}

/// Interior max error of the manufactured constraint solve across a
/// mesh refinement sequence.
pub fn spatial_study() -> Result<StudyOutcome> {
    let levels = [16usize, 32, 64, 128];

    let solve_level = |n: usize| -> Result<(f64, f64)> {
        let grid = Grid1D::shared(n)?;
        let ops = OperatorSet::assemble(grid.clone(), BoundaryKind::Neumann)?;
        let solver = ConstraintSolver::new(&ops, ConstraintSign::Positive)?;
        let rhs = GridFn::from_fn(grid.clone(), |x| 24.0 + x * x * (1.0 - x) * (1.0 - x))?;
        let w = solver.solve(&rhs)?;
        let err = grid.nodes()[1..grid.n_nodes() - 1]
            .iter()
            .zip(w.interior())
            .map(|(&x, &wi)| (wi - x * x * (1.0 - x) * (1.0 - x)).abs())
            .fold(0.0, f64::max);
        Ok((grid.spacing(), err))
    };

    let results: Vec<Result<(f64, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&n| scope.spawn(move || solve_level(n)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level thread panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    for (n, res) in levels.iter().zip(results) {
        let (h, err) = res?;
        rows.push(ConvergeRow {
            level: format!("h_{n}"),
            h_or_dt: h,
            error: err,
            observed_order: None,
        });
    }
    let observed_order = pairwise_orders(&mut rows);
    Ok(StudyOutcome {
        rows,
        observed_order,
        within_bracket: (SPATIAL_BRACKET.0..=SPATIAL_BRACKET.1).contains(&observed_order),
    })
}

/// Final-time self-convergence of the configured scheme: the config's
/// dt spawns levels {4 dt, 2 dt, dt} compared against a dt/8 reference
/// of the same scheme.
pub fn temporal_study(cfg: &RunConfig, session: &Session) -> Result<StudyOutcome> {
    if cfg.t_end <= 0.0 {
        return Err(PdaeError::Config(
            "temporal study needs a positive t_end".into(),
        ));
    }
    let dts = [4.0 * cfg.dt, 2.0 * cfg.dt, cfg.dt];
    let dt_ref = cfg.dt / 8.0;

    let run_final = |dt: f64| -> Result<crate::grid::DiffState> {
        let mut stepper = StepperConfig::new(session.stepper.scheme, dt, cfg.t_end);
        stepper.blowup_norm_threshold = cfg.blowup_norm_threshold;
        // only the final state matters here
        stepper.output_every = usize::MAX - 1;
        let ev = session.evolution();
        let traj = integrate(&session.initial, &stepper, &ev)?;
        if traj.verdict != crate::integrate::Verdict::Completed {
            return Err(PdaeError::InvalidArgument(
                "convergence study run hit the blow-up threshold".into(),
            ));
        }
        Ok(traj.final_state().diff().clone())
    };

    let mut all: Vec<Result<crate::grid::DiffState>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &dt in &dts {
            handles.push(scope.spawn(move || run_final(dt)));
        }
        handles.push(scope.spawn(move || run_final(dt_ref)));
        handles
            .into_iter()
            .map(|h| h.join().expect("study thread panicked"))
            .collect()
    });

    let reference = all.pop().expect("reference run present")?;
    let mut rows = Vec::new();
    for (dt, res) in dts.iter().zip(all) {
        let final_state = res?;
        let err = norm_e(&final_state.lin_comb(1.0, &reference, -1.0)?);
        rows.push(ConvergeRow {
            level: format!("dt_{dt:.6e}"),
            h_or_dt: *dt,
            error: err,
            observed_order: None,
        });
    }
    let observed_order = pairwise_orders(&mut rows);
    let bracket = match session.stepper.scheme {
        Scheme::ExpEuler => EXP_EULER_BRACKET,
        Scheme::Etd2 => ETD2_BRACKET,
    };
    Ok(StudyOutcome {
        rows,
        observed_order,
        within_bracket: (bracket.0..=bracket.1).contains(&observed_order),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn spatial_orders_land_at_two() {
        let study = spatial_study().unwrap();
        assert!(
            study.within_bracket,
            "spatial order {} outside bracket (rows {:?})",
            study.observed_order,
            study
                .rows
                .iter()
                .map(|r| (r.error, r.observed_order))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn temporal_orders_match_schemes() {
        for (scheme, lo, hi) in [("exp_euler", 0.8, 1.2), ("etd2", 1.7, 2.3)] {
            let cfg: RunConfig = serde_json::from_str(&format!(
                r#"{{
                    "n_cells": 32,
                    "scheme": "{scheme}",
                    "dt": 2e-3,
                    "t_end": 0.2,
                    "ic_u": {{"preset": "cosine_mode", "k": 1, "amplitude": 0.05}},
                    "ic_v": {{"preset": "cosine_mode", "k": 2, "amplitude": 0.02}}
                }}"#
            ))
            .unwrap();
            let session = cfg.build(Path::new(".")).unwrap();
            let study = temporal_study(&cfg, &session).unwrap();
            assert!(
                study.observed_order >= lo && study.observed_order <= hi,
                "{scheme}: order {} outside [{lo}, {hi}]",
                study.observed_order
            );
        }
    }
}
