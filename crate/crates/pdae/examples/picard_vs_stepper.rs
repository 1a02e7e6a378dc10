//! Cross-check the exponential stepper against the Picard fixed point
//! of the variation-of-constants identity on a small-data run.
//!
//! ```bash
//! cargo run --example picard_vs_stepper
//! ```

use std::f64::consts::PI;

use pdae::constraint::{ConstraintSign, ConstraintSolver};
use pdae::grid::{norm_e, DiffState, Grid1D, GridFn};
use pdae::integrate::{integrate, picard_solve, Evolution, Scheme, StepperConfig};
use pdae::operators::{BoundaryKind, OperatorSet};

fn main() -> pdae::Result<()> {
    let grid = Grid1D::shared(64)?;
    let ops = OperatorSet::assemble(grid.clone(), BoundaryKind::Neumann)?;
    let solver = ConstraintSolver::new(&ops, ConstraintSign::Negative)?;
    let ev = Evolution::new(&ops, &solver);

    let v0 = DiffState::new(
        GridFn::from_fn(grid.clone(), |x| 0.01 * 2.0_f64.sqrt() * (PI * x).cos())?,
        GridFn::zeros(grid),
    )?;
    let t_end = 0.05;
    println!("initial pair norm: {:.6}", norm_e(&v0));

    let mut cfg = StepperConfig::new(Scheme::Etd2, 1e-4, t_end);
    cfg.picard.quadrature_nodes = 25;

    let picard = picard_solve(&v0, t_end, &cfg, &ev)?;
    println!(
        "picard fixed point: {} iterations, defects {:?}",
        picard.iterations,
        picard
            .defects
            .iter()
            .map(|d| format!("{d:.2e}"))
            .collect::<Vec<_>>()
    );

    let stepper = integrate(&v0, &cfg, &ev)?;
    println!(
        "stepper: {} steps, max constraint residual {:.2e}",
        stepper.steps_taken,
        stepper.max_constraint_residual()
    );

    let mut sup = 0.0_f64;
    for (tj, sj) in picard.trajectory.times.iter().zip(&picard.trajectory.states) {
        let k = stepper
            .times
            .iter()
            .position(|t| (t - tj).abs() <= 1e-9)
            .expect("common grid point");
        sup = sup.max(norm_e(&sj.diff().lin_comb(1.0, stepper.states[k].diff(), -1.0)?));
    }
    println!("sup difference over the common time grid: {sup:.3e}");

    Ok(())
}
