//! Discrete function spaces: uniform mesh on (0, 1), trapezoidal
//! quadrature, and the weighted inner products and norms built on them.
//!
//! The differential pair (u, v) lives on all nodes with zero-flux
//! boundaries; the algebraic field w is clamped (value and slope zero
//! at both ends), so its boundary nodes are pinned to exactly zero.

use std::sync::Arc;

use crate::error::{PdaeError, Result};
use crate::operators::OperatorSet;

/// Uniform node-centered mesh over the unit interval with trapezoidal
/// quadrature weights (h/2 at the endpoints, h elsewhere).
#[derive(Debug, Clone)]
pub struct Grid1D {
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        // The mesh is fully determined by its resolution.
        self.n_cells == other.n_cells
    }
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 1 {
            return Err(PdaeError::GridTooSmall {
                context: "grid",
                min: 1,
                got: n_cells,
            });
        }
        let h = 1.0 / n_cells as f64;
        let nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
        let mut weights = vec![h; n_cells + 1];
        weights[0] = 0.5 * h;
        weights[n_cells] = 0.5 * h;
        Ok(Self {
            n_cells,
            h,
            nodes,
            weights,
        })
    }

    /// Convenience constructor returning the shared handle used by
    /// fields and operators.
    pub fn shared(n_cells: usize) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(n_cells)?))
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of nodes, `n_cells + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn check_same_grid(a: &Grid1D, b: &Grid1D, context: &str) -> Result<()> {
    if a != b {
        return Err(PdaeError::GridMismatch {
            context: format!(
                "{context}: {} vs {} cells",
                a.n_cells(),
                b.n_cells()
            ),
        });
    }
    Ok(())
}

/// One scalar field sampled at the grid nodes. Values are checked
/// finite at construction; anything non-finite must be caught before
/// it becomes a field (the integrator treats that as blow-up evidence).
#[derive(Debug, Clone)]
pub struct GridFn {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: Arc<Grid1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(PdaeError::GridMismatch {
                context: format!(
                    "field length {} vs {} nodes",
                    values.len(),
                    grid.n_nodes()
                ),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(PdaeError::NonFinite {
                context: "grid function values".into(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.n_nodes();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<Grid1D>, c: f64) -> Result<Self> {
        let n = grid.n_nodes();
        Self::new(grid, vec![c; n])
    }

    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// a*self + b*other, on a shared grid.
    pub fn lin_comb(&self, a: f64, other: &GridFn, b: f64) -> Result<GridFn> {
        check_same_grid(&self.grid, &other.grid, "lin_comb")?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFn::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, a: f64) -> Result<GridFn> {
        let values: Vec<f64> = self.values.iter().map(|x| a * x).collect();
        GridFn::new(self.grid.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weighted inner product sum_i w_i f(x_i) g(x_i); the discrete stand-in
/// for the L^2 pairing on (0, 1).
pub fn l2_inner(f: &GridFn, g: &GridFn) -> Result<f64> {
    check_same_grid(f.grid(), g.grid(), "l2_inner")?;
    let w = f.grid().weights();
    Ok(f.values()
        .iter()
        .zip(g.values())
        .zip(w)
        .map(|((a, b), wi)| wi * a * b)
        .sum())
}

pub fn l2_norm(f: &GridFn) -> f64 {
    let w = f.grid().weights();
    f.values()
        .iter()
        .zip(w)
        .map(|(a, wi)| wi * a * a)
        .sum::<f64>()
        .sqrt()
}

/// The differential pair V = (u, v); both components share one grid.
#[derive(Debug, Clone)]
pub struct DiffState {
    u: GridFn,
    v: GridFn,
}

impl DiffState {
    pub fn new(u: GridFn, v: GridFn) -> Result<Self> {
        check_same_grid(u.grid(), v.grid(), "differential pair")?;
        Ok(Self { u, v })
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        Self {
            u: GridFn::zeros(grid.clone()),
            v: GridFn::zeros(grid),
        }
    }

    pub fn u(&self) -> &GridFn {
        &self.u
    }

    pub fn v(&self) -> &GridFn {
        &self.v
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.u.grid()
    }

    pub fn lin_comb(&self, a: f64, other: &DiffState, b: f64) -> Result<DiffState> {
        DiffState::new(
            self.u.lin_comb(a, &other.u, b)?,
            self.v.lin_comb(a, &other.v, b)?,
        )
    }

    pub fn scaled(&self, a: f64) -> Result<DiffState> {
        DiffState::new(self.u.scaled(a)?, self.v.scaled(a)?)
    }
}

/// norm of the differential pair: sqrt(<u,u> + <v,v>).
pub fn norm_e(state: &DiffState) -> f64 {
    let uu = l2_inner(state.u(), state.u()).expect("same grid by construction");
    let vv = l2_inner(state.v(), state.v()).expect("same grid by construction");
    (uu + vv).sqrt()
}

/// The algebraic field w. Clamped membership: both boundary values are
/// exactly zero; the constructor rejects anything else.
#[derive(Debug, Clone)]
pub struct AlgState {
    w: GridFn,
}

impl AlgState {
    pub fn new(w: GridFn) -> Result<Self> {
        let vals = w.values();
        let last = vals.len() - 1;
        if vals[0] != 0.0 || vals[last] != 0.0 {
            return Err(PdaeError::InvalidArgument(format!(
                "clamped field must vanish at the boundary, got {} and {}",
                vals[0], vals[last]
            )));
        }
        Ok(Self { w })
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        Self {
            w: GridFn::zeros(grid),
        }
    }

    /// Build from interior node values; boundary nodes are set to zero.
    pub fn from_interior(grid: Arc<Grid1D>, interior: &[f64]) -> Result<Self> {
        let n = grid.n_nodes();
        if interior.len() + 2 != n {
            return Err(PdaeError::GridMismatch {
                context: format!(
                    "interior length {} vs {} interior nodes",
                    interior.len(),
                    n - 2
                ),
            });
        }
        let mut values = vec![0.0; n];
        values[1..n - 1].copy_from_slice(interior);
        Ok(Self {
            w: GridFn::new(grid, values)?,
        })
    }

    pub fn field(&self) -> &GridFn {
        &self.w
    }

    pub fn interior(&self) -> &[f64] {
        let vals = self.w.values();
        &vals[1..vals.len() - 1]
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.w.grid()
    }
}

/// The full state U = (V, w) at a given time.
#[derive(Debug, Clone)]
pub struct FullState {
    diff: DiffState,
    alg: AlgState,
    t: f64,
}

impl FullState {
    pub fn new(diff: DiffState, alg: AlgState, t: f64) -> Result<Self> {
        check_same_grid(diff.grid(), alg.grid(), "full state")?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(PdaeError::InvalidArgument(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        Ok(Self { diff, alg, t })
    }

    pub fn diff(&self) -> &DiffState {
        &self.diff
    }

    pub fn alg(&self) -> &AlgState {
        &self.alg
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.diff.grid()
    }
}

/// Full-state norm sqrt(<u,u> + <v,v> + bending(w)), with the bending
/// energy evaluated through the assembled form so that this norm and
/// the coercivity certificate use the identical quadratic form.
pub fn norm_x(state: &FullState, ops: &OperatorSet) -> Result<f64> {
    check_same_grid(state.grid(), ops.grid(), "norm_x")?;
    let e = norm_e(state.diff());
    let bend = ops.bending_energy(state.alg());
    Ok((e * e + bend).sqrt())
}
