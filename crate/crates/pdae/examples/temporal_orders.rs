//! Self-convergence study of both steppers on a smooth small-data run:
//! errors against a dt/8 reference and the observed orders.
//!
//! ```bash
//! cargo run --example temporal_orders
//! ```

use std::f64::consts::PI;

use pdae::constraint::{ConstraintSign, ConstraintSolver};
use pdae::grid::{norm_e, DiffState, Grid1D, GridFn};
use pdae::integrate::{integrate, Evolution, Scheme, StepperConfig};
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
    let t_end = 0.5;
    let base_dt = 1e-3;

    for scheme in [Scheme::ExpEuler, Scheme::Etd2] {
        let final_state = |dt: f64| -> pdae::Result<DiffState> {
            let mut cfg = StepperConfig::new(scheme, dt, t_end);
            cfg.output_every = usize::MAX - 1;
            Ok(integrate(&v0, &cfg, &ev)?.final_state().diff().clone())
        };
        let reference = final_state(base_dt / 8.0)?;

        println!("{scheme:?}:");
        println!("  dt          error vs dt/8 ref   observed order");
        let mut prev: Option<f64> = None;
        for dt in [4.0 * base_dt, 2.0 * base_dt, base_dt] {
            let err = norm_e(&final_state(dt)?.lin_comb(1.0, &reference, -1.0)?);
            let order = prev
                .map(|p: f64| format!("{:10.3}", (p / err).log2()))
                .unwrap_or_else(|| " ".repeat(10));
            println!("  {dt:.4e}   {err:15.6e}   {order}");
            prev = Some(err);
        }
        println!();
    }

    Ok(())
}
