//! Solve the clamped fourth-order constraint against a manufactured
//! solution and print the observed convergence order plus the
//! weak-form certificate at every resolution.
//!
//! ```bash
//! cargo run --example constraint_solve
//! ```

use pdae::constraint::{weak_form_residual, ConstraintSign, ConstraintSolver};
use pdae::grid::{Grid1D, GridFn};
use pdae::operators::{BoundaryKind, OperatorSet};

fn main() -> pdae::Result<()> {
    // w*(x) = x^2 (1-x)^2 satisfies w'''' + w = 24 + w* with clamped
    // boundaries
    let exact = |x: f64| x * x * (1.0 - x) * (1.0 - x);

    println!("n_cells   max interior error   observed order   weak-form residual");
    let mut prev: Option<f64> = None;
    for n in [16usize, 32, 64, 128, 256] {
        let grid = Grid1D::shared(n)?;
        let ops = OperatorSet::assemble(grid.clone(), BoundaryKind::Neumann)?;
        let solver = ConstraintSolver::new(&ops, ConstraintSign::Positive)?;

        let rhs = GridFn::from_fn(grid.clone(), |x| 24.0 + exact(x))?;
        let field = solver.solve(&rhs)?;
        let err = grid.nodes()[1..grid.n_nodes() - 1]
            .iter()
            .zip(field.interior())
            .map(|(&x, &w)| (w - exact(x)).abs())
            .fold(0.0, f64::max);
        let certificate = weak_form_residual(&field, &rhs, &ops)?;

        let order = prev
            .map(|p: f64| format!("{:14.3}", (p / err).log2()))
            .unwrap_or_else(|| " ".repeat(14));
        println!("{n:7}   {err:18.3e}   {order}   {certificate:18.3e}");
        prev = Some(err);
    }

    Ok(())
}
