//! Drive the scalar blow-up oracle u' = u^2 through the integrator and
//! compare the detected escape time against the analytic value 1/u0.
//!
//! ```bash
//! cargo run --example blowup_detection
//! ```

use pdae::constraint::{ConstraintSign, ConstraintSolver};
use pdae::grid::{DiffState, Grid1D, GridFn};
use pdae::integrate::{integrate, Evolution, RhsMode, Scheme, StepperConfig, Verdict};
use pdae::operators::{BoundaryKind, OperatorSet};

fn main() -> pdae::Result<()> {
    let grid = Grid1D::shared(16)?;
    let ops = OperatorSet::assemble(grid.clone(), BoundaryKind::Neumann)?;
    let solver = ConstraintSolver::new(&ops, ConstraintSign::Negative)?;
    let ev = Evolution::new(&ops, &solver)
        .with_mode(RhsMode::SquareTest)
        .with_generator_disabled(true);

    let u0 = 10.0;
    let start = DiffState::new(
        GridFn::constant(grid.clone(), u0)?,
        GridFn::zeros(grid),
    )?;
    println!("u' = u^2 with u(0) = {u0}: analytic escape time {}", 1.0 / u0);

    println!("\nthreshold    verdict            escape estimate");
    for threshold in [1e4, 1e6, 1e8] {
        let mut cfg = StepperConfig::new(Scheme::ExpEuler, 2e-4, 0.2);
        cfg.blowup_norm_threshold = threshold;
        cfg.output_every = 100;
        let traj = integrate(&start, &cfg, &ev)?;
        match traj.verdict {
            Verdict::BlowupDetected => println!(
                "{threshold:9.0e}    blowup_detected    {:.6}",
                traj.t_max_estimate.unwrap()
            ),
            Verdict::Completed => println!("{threshold:9.0e}    completed          -"),
        }
    }

    Ok(())
}
