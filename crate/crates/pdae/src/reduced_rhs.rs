//! The nonlinearity of the coupled problem, the reduced right-hand side
//! obtained by eliminating the algebraic field through the constraint
//! solve, and empirical local-Lipschitz certification.
//!
//! The certificates are sampled, not symbolic: the underlying theory
//! proves the constants exist without computing them, so we report
//! seeded, reproducible difference quotients instead. For the composite
//! bound, all component constants are measured on the sample pairs
//! induced by one set of differential states ("matched" sampling),
//! which makes the chain inequality hold pointwise rather than only in
//! distribution.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraint::ConstraintSolver;
use crate::error::{PdaeError, Result};
use crate::grid::{l2_norm, norm_e, AlgState, DiffState, FullState, GridFn};
use crate::operators::OperatorSet;

/// Pointwise nonlinearity (w v + u w, w v + u).
pub fn nonlinearity(state: &FullState) -> Result<DiffState> {
    let u = state.diff().u().values();
    let v = state.diff().v().values();
    let w = state.alg().field().values();
    let grid = state.grid().clone();
    let first: Vec<f64> = u
        .iter()
        .zip(v)
        .zip(w)
        .map(|((ui, vi), wi)| wi * vi + ui * wi)
        .collect();
    let second: Vec<f64> = u
        .iter()
        .zip(v)
        .zip(w)
        .map(|((ui, vi), wi)| wi * vi + ui)
        .collect();
    DiffState::new(
        GridFn::new(grid.clone(), first)?,
        GridFn::new(grid, second)?,
    )
}

/// One evaluation of the reduced right-hand side: the rate fed to the
/// stepper, the algebraic field recovered on the way, and the weighted
/// residual of its constraint solve.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub rate: DiffState,
    pub alg: AlgState,
    pub residual: f64,
}

/// K(V): solve the constraint for w from the coupling term, then
/// evaluate the nonlinearity at (V, w). The computed field is exposed
/// for trajectory recording.
pub fn reduced_rhs(state: &DiffState, solver: &ConstraintSolver) -> Result<RhsEval> {
    let g = solver.coupling_rhs(state)?;
    let (alg, residual) = solver.solve_with_residual(&g)?;
    let full = FullState::new(state.clone(), alg.clone(), 0.0)?;
    let rate = nonlinearity(&full)?;
    Ok(RhsEval {
        rate,
        alg,
        residual,
    })
}

/// Which map a Lipschitz estimate samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipschitzTarget {
    /// The nonlinearity, full-state norm in, pair norm out.
    Nonlinearity,
    /// The coupling term u + v, pair norm in, field norm out.
    Coupling,
    /// The constraint inverse, field norm in, bending seminorm out.
    ConstraintInverse,
    /// The reduced right-hand side, pair norm in and out.
    ReducedRhs,
}

/// Component constants measured on matched samples: the nonlinearity
/// constant, the constraint-inverse constant, and the coupling
/// constant. The reduced constant is bounded by
/// nonlinearity * (1 + inverse * coupling).
#[derive(Debug, Clone, Copy)]
pub struct ComponentConstants {
    pub nonlinearity: f64,
    pub constraint_inverse: f64,
    pub coupling: f64,
}

impl ComponentConstants {
    pub fn composite_bound(&self) -> f64 {
        self.nonlinearity * (1.0 + self.constraint_inverse * self.coupling)
    }
}

/// Result of an empirical Lipschitz estimate inside a ball.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub target: LipschitzTarget,
    pub radius: f64,
    pub samples: usize,
    pub max_ratio: f64,
    /// Populated by the matched composite estimator.
    pub components: Option<ComponentConstants>,
}

fn validate(radius: f64, samples: usize) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(PdaeError::InvalidArgument(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if samples < 2 {
        return Err(PdaeError::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    Ok(())
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// i.i.d. node values rescaled so the pair norm lands uniformly inside
/// the ball.
fn random_diff_in_ball(rng: &mut ChaCha8Rng, ops: &OperatorSet, radius: f64) -> Result<DiffState> {
    let grid = ops.grid().clone();
    let n = grid.n_nodes();
    let raw = DiffState::new(
        GridFn::new(grid.clone(), random_values(rng, n))?,
        GridFn::new(grid, random_values(rng, n))?,
    )?;
    let norm = norm_e(&raw);
    let target: f64 = radius * rng.random_range(0.0..1.0);
    if norm == 0.0 {
        return Ok(raw);
    }
    raw.scaled(target / norm)
}

/// Random full state inside the full-norm ball; the algebraic component
/// is clamped at the boundary like every admissible field.
fn random_full_in_ball(rng: &mut ChaCha8Rng, ops: &OperatorSet, radius: f64) -> Result<FullState> {
    let grid = ops.grid().clone();
    let n = grid.n_nodes();
    let diff = DiffState::new(
        GridFn::new(grid.clone(), random_values(rng, n))?,
        GridFn::new(grid.clone(), random_values(rng, n))?,
    )?;
    let alg = AlgState::from_interior(grid.clone(), &random_values(rng, n - 2))?;
    let state = FullState::new(diff, alg, 0.0)?;
    let norm = crate::grid::norm_x(&state, ops)?;
    let target: f64 = radius * rng.random_range(0.0..1.0);
    if norm == 0.0 {
        return Ok(state);
    }
    let s = target / norm;
    FullState::new(
        state.diff().scaled(s)?,
        AlgState::new(state.alg().field().scaled(s)?)?,
        0.0,
    )
}

fn random_field_in_ball(rng: &mut ChaCha8Rng, ops: &OperatorSet, radius: f64) -> Result<GridFn> {
    let grid = ops.grid().clone();
    let raw = GridFn::new(grid, random_values(rng, ops.grid().n_nodes()))?;
    let norm = l2_norm(&raw);
    let target: f64 = radius * rng.random_range(0.0..1.0);
    if norm == 0.0 {
        return Ok(raw);
    }
    raw.scaled(target / norm)
}

fn diff_norm_e(a: &DiffState, b: &DiffState) -> Result<f64> {
    Ok(norm_e(&a.lin_comb(1.0, b, -1.0)?))
}

fn bending_seminorm(ops: &OperatorSet, a: &AlgState, b: &AlgState) -> f64 {
    let diff: Vec<f64> = a
        .interior()
        .iter()
        .zip(b.interior())
        .map(|(x, y)| x - y)
        .collect();
    ops.bending().weighted_form(&diff, &diff).max(0.0).sqrt()
}

/// Empirical Lipschitz constant of one map over seeded random pairs in
/// the ball of the given radius. Deterministic for a fixed seed.
pub fn estimate_lipschitz(
    target: LipschitzTarget,
    radius: f64,
    samples: usize,
    seed: u64,
    ops: &OperatorSet,
    solver: &ConstraintSolver,
) -> Result<LipschitzReport> {
    validate(radius, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0_f64;

    for _ in 0..samples {
        match target {
            LipschitzTarget::Nonlinearity => {
                let a = random_full_in_ball(&mut rng, ops, radius)?;
                let b = random_full_in_ball(&mut rng, ops, radius)?;
                let denom = {
                    let d = a.diff().lin_comb(1.0, b.diff(), -1.0)?;
                    let bend = bending_seminorm(ops, a.alg(), b.alg());
                    let e = norm_e(&d);
                    (e * e + bend * bend).sqrt()
                };
                if denom < 1e-14 {
                    continue;
                }
                let num = diff_norm_e(&nonlinearity(&a)?, &nonlinearity(&b)?)?;
                max_ratio = max_ratio.max(num / denom);
            }
            LipschitzTarget::Coupling => {
                let a = random_diff_in_ball(&mut rng, ops, radius)?;
                let b = random_diff_in_ball(&mut rng, ops, radius)?;
                let denom = diff_norm_e(&a, &b)?;
                if denom < 1e-14 {
                    continue;
                }
                let ga = solver.coupling_rhs(&a)?;
                let gb = solver.coupling_rhs(&b)?;
                let num = l2_norm(&ga.lin_comb(1.0, &gb, -1.0)?);
                max_ratio = max_ratio.max(num / denom);
            }
            LipschitzTarget::ConstraintInverse => {
                let a = random_field_in_ball(&mut rng, ops, radius)?;
                let b = random_field_in_ball(&mut rng, ops, radius)?;
                let denom = l2_norm(&a.lin_comb(1.0, &b, -1.0)?);
                if denom < 1e-14 {
                    continue;
                }
                let wa = solver.solve(&a)?;
                let wb = solver.solve(&b)?;
                let num = bending_seminorm(ops, &wa, &wb);
                max_ratio = max_ratio.max(num / denom);
            }
            LipschitzTarget::ReducedRhs => {
                let a = random_diff_in_ball(&mut rng, ops, radius)?;
                let b = random_diff_in_ball(&mut rng, ops, radius)?;
                let denom = diff_norm_e(&a, &b)?;
                if denom < 1e-14 {
                    continue;
                }
                let ka = reduced_rhs(&a, solver)?;
                let kb = reduced_rhs(&b, solver)?;
                let num = diff_norm_e(&ka.rate, &kb.rate)?;
                max_ratio = max_ratio.max(num / denom);
            }
        }
    }

    Ok(LipschitzReport {
        target,
        radius,
        samples,
        max_ratio,
        components: None,
    })
}

/// Matched-sample composite estimate: draws pairs of differential
/// states in the ball, then measures the reduced constant and all
/// three component constants on the chain points those pairs induce
/// (coupling terms, solved fields, full states). On such matched
/// samples the bound
///   reduced <= nonlinearity * (1 + inverse * coupling)
/// holds pointwise by construction.
pub fn composite_lipschitz(
    radius: f64,
    samples: usize,
    seed: u64,
    ops: &OperatorSet,
    solver: &ConstraintSolver,
) -> Result<LipschitzReport> {
    validate(radius, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reduced = 0.0_f64;
    let mut lips_f = 0.0_f64;
    let mut lips_inv = 0.0_f64;
    let mut lips_g = 0.0_f64;

    for _ in 0..samples {
        let va = random_diff_in_ball(&mut rng, ops, radius)?;
        let vb = random_diff_in_ball(&mut rng, ops, radius)?;
        let dv = diff_norm_e(&va, &vb)?;
        if dv < 1e-14 {
            continue;
        }

        let ga = solver.coupling_rhs(&va)?;
        let gb = solver.coupling_rhs(&vb)?;
        let dg = l2_norm(&ga.lin_comb(1.0, &gb, -1.0)?);

        let ka = reduced_rhs(&va, solver)?;
        let kb = reduced_rhs(&vb, solver)?;
        let dw = bending_seminorm(ops, &ka.alg, &kb.alg);
        let dk = diff_norm_e(&ka.rate, &kb.rate)?;

        reduced = reduced.max(dk / dv);
        lips_g = lips_g.max(dg / dv);
        if dg > 1e-14 {
            lips_inv = lips_inv.max(dw / dg);
        }

        // full-state distance between the induced chain points
        let du = (dv * dv + dw * dw).sqrt();
        if du > 1e-14 {
            lips_f = lips_f.max(dk / du);
        }
    }

    Ok(LipschitzReport {
        target: LipschitzTarget::ReducedRhs,
        radius,
        samples,
        max_ratio: reduced,
        components: Some(ComponentConstants {
            nonlinearity: lips_f,
            constraint_inverse: lips_inv,
            coupling: lips_g,
        }),
    })
}
