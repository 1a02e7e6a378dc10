//! Assemble the zero-flux generator, compare its spectrum against the
//! closed form, and watch the semigroup contract a heat mode.
//!
//! ```bash
//! cargo run --example semigroup_contraction
//! ```

use std::f64::consts::PI;

use pdae::grid::{l2_norm, Grid1D, GridFn};
use pdae::operators::{BoundaryKind, OperatorSet};

fn main() -> pdae::Result<()> {
    let grid = Grid1D::shared(128)?;
    let ops = OperatorSet::assemble(grid.clone(), BoundaryKind::Neumann)?;
    let h = grid.spacing();

    println!("discrete spectrum vs closed form -(4/h^2) sin^2(k pi h / 2):");
    let eigenvalues = ops.decomp().eigenvalues();
    for k in 0..6 {
        let s = (k as f64 * PI * h / 2.0).sin();
        let exact = -4.0 / (h * h) * s * s;
        println!(
            "  mode {k}: computed {:.6}, closed form {:.6}, continuum {:.6}",
            eigenvalues[k],
            exact,
            -(k as f64 * PI).powi(2)
        );
    }

    let mode = GridFn::from_fn(grid.clone(), |x| (PI * x).cos())?;
    println!("\nheat-mode decay under e^(tA), against e^(-pi^2 t):");
    for &t in &[0.0, 0.05, 0.1, 0.2, 0.5] {
        let moved = ops.decomp().semigroup_apply(t, &mode)?;
        let exact = (-PI * PI * t).exp();
        let err = moved
            .values()
            .iter()
            .zip(mode.values())
            .map(|(m, f)| (m - exact * f).abs())
            .fold(0.0, f64::max);
        println!(
            "  t = {t:.2}: |e^(tA) f| = {:.6}, exact factor {exact:.6}, max node error {err:.2e}",
            l2_norm(&moved)
        );
    }

    println!("\ncontraction on rough data:");
    let rough = GridFn::from_fn(grid, |x| (137.0 * x).sin() + 0.3 * (41.0 * x).cos())?;
    let n0 = l2_norm(&rough);
    for &t in &[0.001, 0.01, 0.1, 1.0] {
        let moved = ops.decomp().semigroup_apply(t, &rough)?;
        println!("  t = {t:>5}: norm {:.6} (initial {n0:.6})", l2_norm(&moved));
    }

    Ok(())
}
