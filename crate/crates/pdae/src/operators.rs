//! Discrete operator assembly: the zero-flux Laplacian generator, the
//! clamped fourth-order constraint operator, the bending energy form,
//! and the spectral decomposition used for exact semigroup action.
//!
//! The Laplacian is assembled in summation-by-parts form, i.e. so that
//! the weighted pairing <A f, f> equals minus a sum of squared forward
//! differences. That makes dissipativity a machine-checkable identity
//! rather than a truncation-order statement. With trapezoid weights the
//! summation-by-parts rows coincide with the mirror-ghost stencil.
//!
//! The constraint operator acts on interior nodes with the boundary
//! values pinned to zero and the ghost reflection w(-h) = w(h) encoding
//! a vanishing boundary slope. Assembling the bending form from the
//! same ghost convention makes (weighted L) = (weighted B) + (mass)
//! hold exactly, which is the discrete coercivity certificate.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::banded::{BandedCholesky, BandedMatrix};
use crate::error::{PdaeError, Result};
use crate::grid::{AlgState, Grid1D, GridFn};

/// Boundary treatment for the generator acting on (u, v).
///
/// The evolution equations state zero-flux boundaries, while the stated
/// operator domain suggests zero values; both are exposed and the
/// zero-flux form is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// A banded operator together with the quadrature weights of the node
/// set it acts on. `weighted_form` evaluates sum_i w_i f_i (O g)_i,
/// the discrete pairing every certificate in this crate is phrased in.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    matrix: BandedMatrix,
    weights: Vec<f64>,
}

impl BandedOperator {
    fn new(matrix: BandedMatrix, weights: Vec<f64>) -> Self {
        assert_eq!(matrix.size(), weights.len());
        Self { matrix, weights }
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn bandwidth(&self) -> usize {
        self.matrix.bandwidth()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// Overwrite one entry. Exists for assembly and for fault-injection
    /// in the verification tests; production code never mutates an
    /// assembled operator.
    pub fn set_entry(&mut self, i: usize, j: usize, value: f64) {
        self.matrix.set(i, j, value);
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.apply(f)
    }

    /// sum_i w_i f_i (O g)_i.
    pub fn weighted_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let og = self.matrix.apply(g);
        self.weights
            .iter()
            .zip(f)
            .zip(&og)
            .map(|((w, fi), ogi)| w * fi * ogi)
            .sum()
    }

    /// The symmetric matrix W O with rows scaled by the weights.
    pub fn weighted_matrix(&self) -> BandedMatrix {
        let n = self.size();
        let b = self.bandwidth();
        let mut m = BandedMatrix::zeros(n, b);
        for i in 0..n {
            for j in i.saturating_sub(b)..(i + b + 1).min(n) {
                m.set(i, j, self.weights[i] * self.matrix.get(i, j));
            }
        }
        m
    }

    pub fn weighted_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.weights[i] * self.entry(i, j);
            }
        }
        m
    }
}

/// Second-order Laplacian on all nodes. Zero-flux boundaries use mirror
/// ghost points, which with trapezoid weights is exactly the
/// summation-by-parts assembly; constants lie in the kernel. The
/// Dirichlet variant pins boundary values and acts on the interior.
pub fn assemble_laplacian(grid: &Arc<Grid1D>, bc: BoundaryKind) -> Result<BandedOperator> {
    if grid.n_cells() < 2 {
        return Err(PdaeError::GridTooSmall {
            context: "laplacian",
            min: 2,
            got: grid.n_cells(),
        });
    }
    let n = grid.n_nodes();
    let h = grid.spacing();
    let k = 1.0 / (h * h);
    let mut m = BandedMatrix::zeros(n, 1);
    match bc {
        BoundaryKind::Neumann => {
            m.set(0, 0, -2.0 * k);
            m.set(0, 1, 2.0 * k);
            for i in 1..n - 1 {
                m.set(i, i - 1, k);
                m.set(i, i, -2.0 * k);
                m.set(i, i + 1, k);
            }
            m.set(n - 1, n - 2, 2.0 * k);
            m.set(n - 1, n - 1, -2.0 * k);
        }
        BoundaryKind::Dirichlet => {
            // Boundary rows and columns are zero: boundary values are
            // frozen and do not feed the interior stencil.
            for i in 1..n - 1 {
                if i > 1 {
                    m.set(i, i - 1, k);
                }
                m.set(i, i, -2.0 * k);
                if i < n - 2 {
                    m.set(i, i + 1, k);
                }
            }
        }
    }
    Ok(BandedOperator::new(m, grid.weights().to_vec()))
}

/// Pentadiagonal fourth-derivative stencil on interior nodes with
/// clamped boundaries (zero value, ghost reflection for zero slope).
/// This is the bending energy form; the constraint operator adds the
/// identity to its diagonal.
pub fn assemble_bending_form(grid: &Arc<Grid1D>) -> Result<BandedOperator> {
    if grid.n_cells() < 4 {
        return Err(PdaeError::GridTooSmall {
            context: "clamped fourth-order operator",
            min: 4,
            got: grid.n_cells(),
        });
    }
    let m = grid.n_cells() - 1; // interior nodes
    let h = grid.spacing();
    let k4 = 1.0 / (h * h * h * h);
    let mut b = BandedMatrix::zeros(m, 2);
    for i in 0..m {
        // (1, -4, 6, -4, 1) / h^4 with out-of-range columns dropped
        // (those hit the pinned boundary values).
        if i >= 2 {
            b.set(i, i - 2, k4);
        }
        if i >= 1 {
            b.set(i, i - 1, -4.0 * k4);
        }
        b.set(i, i, 6.0 * k4);
        if i + 1 < m {
            b.set(i, i + 1, -4.0 * k4);
        }
        if i + 2 < m {
            b.set(i, i + 2, k4);
        }
    }
    // Ghost reflection folds the out-of-domain neighbor back onto the
    // first interior node at each end.
    b.add_to(0, 0, k4);
    b.add_to(m - 1, m - 1, k4);

    let weights = grid.weights()[1..grid.n_nodes() - 1].to_vec();
    Ok(BandedOperator::new(b, weights))
}

/// Constraint operator: fourth derivative plus identity, clamped, on
/// interior nodes. By construction it equals the bending form plus the
/// identity entry for entry.
pub fn assemble_biharmonic_clamped(grid: &Arc<Grid1D>) -> Result<BandedOperator> {
    let mut op = assemble_bending_form(grid)?;
    for i in 0..op.size() {
        let d = op.entry(i, i);
        op.set_entry(i, i, d + 1.0);
    }
    Ok(op)
}

fn phi1_scalar(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else if z.abs() < 1e-5 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

fn phi2_scalar(z: f64) -> f64 {
    if z == 0.0 {
        0.5
    } else if z.abs() < 1e-5 {
        0.5 + z / 6.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Spectral decomposition of the weighted symmetrization of the
/// generator. Eigenvalues are sorted descending and clamped to be
/// nonpositive (positive rounding noise on the kernel mode is zeroed),
/// so semigroup application is a contraction by construction.
///
/// A structurally known kernel (constants for the zero-flux generator,
/// frozen boundary nodes for the Dirichlet one) can be supplied; it is
/// split off exactly before the dense spectral filter, which keeps
/// kernel modes invariant to rounding level instead of to the
/// eigensolver's accuracy.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    grid: Arc<Grid1D>,
    eigenvalues: Vec<f64>,
    basis: DMatrix<f64>,
    weights: Vec<f64>,
    sqrt_w: Vec<f64>,
    inv_sqrt_w: Vec<f64>,
    // weighted-orthonormal basis of the known kernel
    kernel: Vec<Vec<f64>>,
}

impl SpectralDecomp {
    /// Dense symmetric eigendecomposition without kernel deflation.
    pub fn compute(op: &BandedOperator, grid: &Arc<Grid1D>) -> Result<Self> {
        Self::compute_deflated(op, grid, &[])
    }

    /// Dense symmetric eigendecomposition with the given exact kernel
    /// vectors handled by projection.
    pub fn compute_deflated(
        op: &BandedOperator,
        grid: &Arc<Grid1D>,
        known_kernel: &[Vec<f64>],
    ) -> Result<Self> {
        let n = op.size();
        if n != grid.n_nodes() {
            return Err(PdaeError::GridMismatch {
                context: "spectral decomposition expects the full-grid generator".into(),
            });
        }
        let sqrt_w: Vec<f64> = op.weights().iter().map(|w| w.sqrt()).collect();
        let inv_sqrt_w: Vec<f64> = sqrt_w.iter().map(|s| 1.0 / s).collect();

        // S = W^{1/2} A W^{-1/2}; symmetric since W A is.
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = sqrt_w[i] * op.entry(i, j) * inv_sqrt_w[j];
            }
        }
        let s = (&s + s.transpose()) * 0.5;

        let eig = nalgebra::SymmetricEigen::try_new(s, f64::EPSILON, 0)
            .ok_or_else(|| PdaeError::Eigen("symmetric eigensolver did not converge".into()))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
        });
        let mut eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut basis = DMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            basis.set_column(col, &eig.eigenvectors.column(src));
        }

        let max_mag = eigenvalues
            .iter()
            .fold(0.0_f64, |m, &l| m.max(l.abs()))
            .max(1.0);
        if eigenvalues[0] > 1e-10 * max_mag {
            return Err(PdaeError::Eigen(format!(
                "generator has a positive eigenvalue {:.3e}; not dissipative",
                eigenvalues[0]
            )));
        }
        for l in &mut eigenvalues {
            if *l > 0.0 {
                *l = 0.0;
            }
        }

        // Weighted Gram-Schmidt on the declared kernel; each vector is
        // checked to actually be annihilated by the operator.
        let weights = op.weights();
        let mut kernel: Vec<Vec<f64>> = Vec::with_capacity(known_kernel.len());
        for cand in known_kernel {
            if cand.len() != n {
                return Err(PdaeError::GridMismatch {
                    context: "kernel vector length".into(),
                });
            }
            let image = op.apply(cand);
            let norm_cand: f64 = cand
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt();
            let norm_image: f64 = image
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt();
            if norm_image > 1e-10 * max_mag * norm_cand {
                return Err(PdaeError::Eigen(
                    "declared kernel vector is not annihilated by the operator".into(),
                ));
            }
            let mut v = cand.clone();
            for prev in &kernel {
                let proj: f64 = v
                    .iter()
                    .zip(prev.iter())
                    .zip(weights)
                    .map(|((x, p), w)| w * x * p)
                    .sum();
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= proj * pi;
                }
            }
            let norm: f64 = v
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt();
            if norm > 1e-12 * norm_cand.max(1.0) {
                for vi in &mut v {
                    *vi /= norm;
                }
                kernel.push(v);
            }
        }

        Ok(Self {
            grid: grid.clone(),
            eigenvalues,
            basis,
            weights: weights.to_vec(),
            sqrt_w,
            inv_sqrt_w,
            kernel,
        })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    /// Eigenvalues in descending order; all nonpositive.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest deviation of the generator eigenvectors from
    /// orthonormality in the weighted inner product.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.eigenvalues.len();
        let gram = self.basis.transpose() * &self.basis;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    fn apply_filtered(&self, values: &[f64], filter: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = values.len();

        // Exact kernel part, held invariant up to the filter's value at
        // zero; the dense filter sees only the complement.
        let mut work = values.to_vec();
        let mut kernel_part = vec![0.0; n];
        let f0 = filter(0.0);
        for b in &self.kernel {
            let coeff: f64 = work
                .iter()
                .zip(b)
                .zip(&self.weights)
                .map(|((x, bi), w)| w * x * bi)
                .sum();
            for ((wk, kp), bi) in work.iter_mut().zip(&mut kernel_part).zip(b) {
                *wk -= coeff * bi;
                *kp += f0 * coeff * bi;
            }
        }

        let scaled = nalgebra::DVector::from_iterator(
            n,
            work.iter().zip(&self.sqrt_w).map(|(v, s)| v * s),
        );
        let mut coeffs = self.basis.transpose() * scaled;
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= filter(l);
        }
        let back = &self.basis * coeffs;
        back.iter()
            .zip(&self.inv_sqrt_w)
            .zip(&kernel_part)
            .map(|((v, s), k)| v * s + k)
            .collect()
    }

    pub fn apply_exp_values(&self, t: f64, values: &[f64]) -> Vec<f64> {
        self.apply_filtered(values, |l| (t * l).exp())
    }

    pub fn apply_phi1_values(&self, t: f64, values: &[f64]) -> Vec<f64> {
        self.apply_filtered(values, |l| phi1_scalar(t * l))
    }

    pub fn apply_phi2_values(&self, t: f64, values: &[f64]) -> Vec<f64> {
        self.apply_filtered(values, |l| phi2_scalar(t * l))
    }

    /// e^{tA} f; a contraction in the weighted norm for every t >= 0.
    pub fn semigroup_apply(&self, t: f64, f: &GridFn) -> Result<GridFn> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(PdaeError::InvalidArgument(format!(
                "semigroup time must be nonnegative, got {t}"
            )));
        }
        if f.grid().as_ref() != self.grid.as_ref() {
            return Err(PdaeError::GridMismatch {
                context: "semigroup apply".into(),
            });
        }
        GridFn::new(self.grid.clone(), self.apply_exp_values(t, f.values()))
    }

    /// phi_1(tA) f, the exponential-Euler quadrature weight. The
    /// removable singularity at a zero eigenvalue evaluates to one.
    pub fn phi1_apply(&self, t: f64, f: &GridFn) -> Result<GridFn> {
        if !(t.is_finite() && t > 0.0) {
            return Err(PdaeError::InvalidArgument(format!(
                "phi1 time must be positive, got {t}"
            )));
        }
        if f.grid().as_ref() != self.grid.as_ref() {
            return Err(PdaeError::GridMismatch {
                context: "phi1 apply".into(),
            });
        }
        GridFn::new(self.grid.clone(), self.apply_phi1_values(t, f.values()))
    }
}

/// Solver for the shifted system (I - A) f = g, the range identity
/// behind maximality. Weighted symmetrization makes it an SPD banded
/// solve.
#[derive(Debug)]
pub struct ShiftedSolver {
    matrix: BandedMatrix,
    chol: BandedCholesky,
    weights: Vec<f64>,
    grid: Arc<Grid1D>,
}

impl ShiftedSolver {
    pub fn new(laplacian: &BandedOperator, grid: &Arc<Grid1D>) -> Result<Self> {
        let n = laplacian.size();
        let b = laplacian.bandwidth();
        let weights = laplacian.weights().to_vec();
        let mut m = BandedMatrix::zeros(n, b);
        for i in 0..n {
            for j in i.saturating_sub(b)..(i + b + 1).min(n) {
                let shift = if i == j { 1.0 } else { 0.0 };
                m.set(i, j, weights[i] * (shift - laplacian.entry(i, j)));
            }
        }
        let chol = BandedCholesky::factor(&m)?;
        Ok(Self {
            matrix: m,
            chol,
            weights,
            grid: grid.clone(),
        })
    }

    /// Solve (I - A) f = g.
    pub fn solve(&self, g: &GridFn) -> Result<GridFn> {
        if g.grid().as_ref() != self.grid.as_ref() {
            return Err(PdaeError::GridMismatch {
                context: "shifted solve".into(),
            });
        }
        let rhs: Vec<f64> = g
            .values()
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .collect();
        let x = self.chol.solve_refined(&self.matrix, &rhs);
        GridFn::new(self.grid.clone(), x)
    }
}

/// All discrete operators assembled on one grid, plus the spectral
/// decomposition of the generator.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    grid: Arc<Grid1D>,
    bc: BoundaryKind,
    laplacian: BandedOperator,
    constraint_op: BandedOperator,
    bending: BandedOperator,
    decomp: SpectralDecomp,
}

impl OperatorSet {
    pub fn assemble(grid: Arc<Grid1D>, bc: BoundaryKind) -> Result<Self> {
        let laplacian = assemble_laplacian(&grid, bc)?;
        let bending = assemble_bending_form(&grid)?;
        let constraint_op = assemble_biharmonic_clamped(&grid)?;
        let n = grid.n_nodes();
        let kernel: Vec<Vec<f64>> = match bc {
            BoundaryKind::Neumann => vec![vec![1.0; n]],
            BoundaryKind::Dirichlet => {
                let mut e0 = vec![0.0; n];
                e0[0] = 1.0;
                let mut en = vec![0.0; n];
                en[n - 1] = 1.0;
                vec![e0, en]
            }
        };
        let decomp = SpectralDecomp::compute_deflated(&laplacian, &grid, &kernel)?;
        Ok(Self {
            grid,
            bc,
            laplacian,
            constraint_op,
            bending,
            decomp,
        })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        self.bc
    }

    pub fn laplacian(&self) -> &BandedOperator {
        &self.laplacian
    }

    pub fn constraint_op(&self) -> &BandedOperator {
        &self.constraint_op
    }

    pub fn bending(&self) -> &BandedOperator {
        &self.bending
    }

    pub fn decomp(&self) -> &SpectralDecomp {
        &self.decomp
    }

    /// Discrete bending energy of the clamped field, the w-part of the
    /// full-state norm. Nonnegative by construction; rounding-level
    /// negatives are truncated at zero.
    pub fn bending_energy(&self, w: &AlgState) -> f64 {
        let interior = w.interior();
        self.bending.weighted_form(interior, interior).max(0.0)
    }

    pub fn shifted_solver(&self) -> Result<ShiftedSolver> {
        ShiftedSolver::new(&self.laplacian, &self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn neumann_decomp(a: &BandedOperator, g: &Arc<Grid1D>) -> SpectralDecomp {
        SpectralDecomp::compute_deflated(a, g, &[vec![1.0; g.n_nodes()]]).unwrap()
    }

    fn random_fn(grid: &Arc<Grid1D>, rng: &mut ChaCha8Rng) -> GridFn {
        GridFn::new(
            grid.clone(),
            (0..grid.n_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn laplacian_rejects_tiny_grid() {
        let g = Grid1D::shared(1).unwrap();
        assert!(assemble_laplacian(&g, BoundaryKind::Neumann).is_err());
    }

    #[test]
    fn constants_lie_in_the_kernel() {
        let g = Grid1D::shared(19).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let af = a.apply(&vec![3.5; g.n_nodes()]);
        assert!(af.iter().all(|&v| v == 0.0), "kernel must be exact");
    }

    #[test]
    fn weighted_matrix_is_exactly_symmetric() {
        for n in [8, 64, 200] {
            let g = Grid1D::shared(n).unwrap();
            let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
            assert_eq!(a.weighted_matrix().symmetry_defect(), 0.0, "n={n}");
            let d = assemble_laplacian(&g, BoundaryKind::Dirichlet).unwrap();
            assert_eq!(d.weighted_matrix().symmetry_defect(), 0.0, "n={n}");
        }
    }

    #[test]
    fn self_adjoint_in_weighted_inner_product() {
        let g = Grid1D::shared(32).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let f = random_fn(&g, &mut rng);
            let h = random_fn(&g, &mut rng);
            let lhs = crate::grid::l2_inner(
                &GridFn::new(g.clone(), a.apply(f.values())).unwrap(),
                &h,
            )
            .unwrap();
            let rhs = crate::grid::l2_inner(
                &f,
                &GridFn::new(g.clone(), a.apply(h.values())).unwrap(),
            )
            .unwrap();
            assert!((lhs - rhs).abs() <= 1e-12, "asymmetry {}", lhs - rhs);
        }
    }

    #[test]
    fn cosine_is_a_discrete_eigenfunction() {
        // continuum oracle: A cos(pi x) = -pi^2 cos(pi x)
        let g = Grid1D::shared(128).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let f = GridFn::from_fn(g.clone(), |x| (PI * x).cos()).unwrap();
        let af = a.apply(f.values());
        let worst = af
            .iter()
            .zip(f.values())
            .map(|(av, fv)| (av + PI * PI * fv).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 5e-3, "max node error {worst}");
    }

    #[test]
    fn dirichlet_energy_identity_for_cosine() {
        // <A f, f> = -integral of f_x^2 = -pi^2/2 for f = cos(pi x)
        let g = Grid1D::shared(128).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let f = GridFn::from_fn(g, |x| (PI * x).cos()).unwrap();
        let q = a.weighted_form(f.values(), f.values());
        assert_relative_eq!(q, -PI * PI / 2.0, epsilon = 1e-2);
    }

    #[test]
    fn dissipativity_is_exact_for_random_states() {
        for n in [8, 64, 128] {
            let g = Grid1D::shared(n).unwrap();
            for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
                let a = assemble_laplacian(&g, bc).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
                for _ in 0..100 {
                    let f = random_fn(&g, &mut rng);
                    let q = a.weighted_form(f.values(), f.values());
                    assert!(q <= 1e-12, "n={n} bc={bc:?}: <Af,f> = {q}");
                }
            }
        }
    }

    #[test]
    fn biharmonic_rejects_tiny_grid() {
        let g = Grid1D::shared(3).unwrap();
        assert!(assemble_biharmonic_clamped(&g).is_err());
    }

    #[test]
    fn constraint_op_is_bending_plus_identity_bitwise() {
        let g = Grid1D::shared(24).unwrap();
        let l = assemble_biharmonic_clamped(&g).unwrap();
        let b = assemble_bending_form(&g).unwrap();
        for i in 0..l.size() {
            for j in i.saturating_sub(2)..(i + 3).min(l.size()) {
                let shift = if i == j { 1.0 } else { 0.0 };
                assert_eq!(l.entry(i, j), b.entry(i, j) + shift);
            }
        }
    }

    #[test]
    fn quartic_forward_application() {
        // w*(x) = x^2 (1-x)^2 has constant fourth derivative 24; the
        // stencil is exact for quartics away from the clamped ends (the
        // ghost reflection carries its own local error there, which the
        // solve, not the forward map, controls).
        let g = Grid1D::shared(128).unwrap();
        let l = assemble_biharmonic_clamped(&g).unwrap();
        let w: Vec<f64> = g.nodes()[1..g.n_nodes() - 1]
            .iter()
            .map(|&x| x * x * (1.0 - x) * (1.0 - x))
            .collect();
        let lw = l.apply(&w);
        let m = w.len();
        let worst = (1..m - 1)
            .map(|i| (lw[i] - (24.0 + w[i])).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-5, "interior residual {worst}");
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid1D::shared(16).unwrap();
        let l = assemble_biharmonic_clamped(&g).unwrap();
        assert!(l.apply(&vec![0.0; l.size()]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coercivity_by_dense_eigensolve() {
        // weighted L - weighted B is the (positive) mass matrix, so the
        // smallest eigenvalue of the difference must be at least -1e-10.
        let g = Grid1D::shared(32).unwrap();
        let l = assemble_biharmonic_clamped(&g).unwrap();
        let b = assemble_bending_form(&g).unwrap();
        let diff = l.weighted_dense() - b.weighted_dense();
        let eig = nalgebra::SymmetricEigen::new(diff);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10, "lambda_min = {min}");
        assert!(min > 0.0, "mass matrix should be positive definite");
    }

    #[test]
    fn bending_energy_analytic_value() {
        let g = Grid1D::shared(128).unwrap();
        let b = assemble_bending_form(&g).unwrap();
        let w: Vec<f64> = g.nodes()[1..g.n_nodes() - 1]
            .iter()
            .map(|&x| x * x * (1.0 - x) * (1.0 - x))
            .collect();
        assert_relative_eq!(b.weighted_form(&w, &w), 0.8, epsilon = 1e-2);
        assert_eq!(b.weighted_form(&vec![0.0; b.size()], &vec![0.0; b.size()]), 0.0);
    }

    #[test]
    fn constraint_form_splits_into_bending_plus_mass() {
        let g = Grid1D::shared(16).unwrap();
        let l = assemble_biharmonic_clamped(&g).unwrap();
        let b = assemble_bending_form(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = g.spacing();
        for _ in 0..20 {
            let w: Vec<f64> = (0..l.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lw = l.weighted_form(&w, &w);
            let bw = b.weighted_form(&w, &w);
            let mass: f64 = w.iter().map(|x| h * x * x).sum();
            let scale = lw.abs().max(1.0);
            assert!((lw - bw - mass).abs() <= 1e-12 * scale);
            assert!(lw >= bw - 1e-10, "coercivity: {lw} < {bw}");
        }
    }

    #[test]
    fn eigenvalues_match_closed_form() {
        // The zero-flux Laplacian diagonalizes in sampled cosines with
        // eigenvalues -(4/h^2) sin^2(k pi h / 2).
        let g = Grid1D::shared(128).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let h = g.spacing();
        let n = g.n_nodes();
        let mut expected: Vec<f64> = (0..n)
            .map(|k| {
                let s = (k as f64 * PI * h / 2.0).sin();
                -4.0 / (h * h) * s * s
            })
            .collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let scale = expected.last().unwrap().abs();
        for (got, exp) in d.eigenvalues().iter().zip(&expected) {
            assert!(
                (got - exp).abs() <= 1e-8 * scale,
                "eigenvalue {got} vs closed form {exp}"
            );
        }
        // constant mode at zero, second mode near -pi^2, nothing positive
        assert!(d.eigenvalues()[0].abs() <= 1e-10);
        assert!(d.eigenvalues().iter().all(|&l| l <= 1e-12));
        assert_relative_eq!(d.eigenvalues()[1], -PI * PI, max_relative = 5e-3);
        assert!(d.orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn eigendecomposition_reconstructs_the_operator() {
        let g = Grid1D::shared(64).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let f = random_fn(&g, &mut rng);
            let direct = a.apply(f.values());
            let spectral = d.apply_filtered(f.values(), |l| l);
            let err: f64 = direct
                .iter()
                .zip(&spectral)
                .zip(g.weights())
                .map(|((x, y), w)| w * (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = direct
                .iter()
                .zip(g.weights())
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-10 * scale.max(1.0), "reconstruction error {err}");
        }
    }

    #[test]
    fn semigroup_identity_and_kernel_mode() {
        let g = Grid1D::shared(64).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_fn(&g, &mut rng);
        let at_zero = d.semigroup_apply(0.0, &f).unwrap();
        for (a, b) in at_zero.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let c = GridFn::constant(g, 2.25).unwrap();
        let moved = d.semigroup_apply(3.7, &c).unwrap();
        for v in moved.values() {
            assert!((v - 2.25).abs() <= 1e-12);
        }
    }

    #[test]
    fn semigroup_heat_mode_decay() {
        // eigenmode oracle: e^{tA} cos(pi x) = e^{-t pi^2} cos(pi x)
        let g = Grid1D::shared(128).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let f = GridFn::from_fn(g.clone(), |x| (PI * x).cos()).unwrap();
        let moved = d.semigroup_apply(0.1, &f).unwrap();
        let decay = (-0.1 * PI * PI).exp();
        let worst = moved
            .values()
            .iter()
            .zip(f.values())
            .map(|(m, f)| (m - decay * f).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-3, "max node error {worst}");
    }

    #[test]
    fn semigroup_contraction_and_law() {
        let g = Grid1D::shared(64).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let f = random_fn(&g, &mut rng);
            let t: f64 = rng.random_range(0.0..10.0);
            let s: f64 = rng.random_range(0.0..10.0);
            let norm = |g: &GridFn| crate::grid::l2_norm(g);
            let tf = d.semigroup_apply(t, &f).unwrap();
            assert!(norm(&tf) <= norm(&f) + 1e-12, "contraction violated");
            let stf = d.semigroup_apply(s, &tf).unwrap();
            let sum = d.semigroup_apply(s + t, &f).unwrap();
            let err = stf
                .values()
                .iter()
                .zip(sum.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-10, "semigroup law error {err}");
        }
    }

    #[test]
    fn semigroup_rejects_negative_time() {
        let g = Grid1D::shared(8).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let f = GridFn::zeros(g);
        assert!(d.semigroup_apply(-0.1, &f).is_err());
        assert!(d.phi1_apply(0.0, &f).is_err());
    }

    #[test]
    fn phi1_limits_and_eigenmode() {
        let g = Grid1D::shared(128).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);

        // kernel mode: phi1(0) = 1
        let c = GridFn::constant(g.clone(), 1.5).unwrap();
        let out = d.phi1_apply(0.2, &c).unwrap();
        for v in out.values() {
            assert!((v - 1.5).abs() <= 1e-12);
        }

        // t -> 0+ recovers the identity on smooth data (the deviation
        // is (t/2) A f to leading order)
        let f = GridFn::from_fn(g.clone(), |x| 0.3 + (PI * x).cos() - 0.5 * (2.0 * PI * x).cos())
            .unwrap();
        let near = d.phi1_apply(1e-8, &f).unwrap();
        let worst = near
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "phi1 small-time error {worst}");

        // eigenmode: phi1 acts by (e^{-0.1 pi^2} - 1) / (-0.1 pi^2)
        let mode = GridFn::from_fn(g, |x| (PI * x).cos()).unwrap();
        let out = d.phi1_apply(0.1, &mode).unwrap();
        let z = -0.1 * PI * PI;
        let factor = (z.exp() - 1.0) / z;
        let worst = out
            .values()
            .iter()
            .zip(mode.values())
            .map(|(a, b)| (a - factor * b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-3, "phi1 eigenmode error {worst}");
    }

    #[test]
    fn maximality_shifted_solve() {
        let g = Grid1D::shared(64).unwrap();
        for bc in [BoundaryKind::Neumann, BoundaryKind::Dirichlet] {
            let a = assemble_laplacian(&g, bc).unwrap();
            let solver = ShiftedSolver::new(&a, &g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for _ in 0..20 {
                let rhs = random_fn(&g, &mut rng);
                let f = solver.solve(&rhs).unwrap();
                let af = a.apply(f.values());
                let res: f64 = f
                    .values()
                    .iter()
                    .zip(&af)
                    .zip(rhs.values())
                    .zip(g.weights())
                    .map(|(((fi, afi), gi), w)| {
                        let r = fi - afi - gi;
                        w * r * r
                    })
                    .sum::<f64>()
                    .sqrt();
                let scale = crate::grid::l2_norm(&rhs).max(1e-300);
                assert!(res / scale <= 1e-10, "bc={bc:?} residual {res}");
            }
        }
    }

    #[test]
    fn phi2_eigenmode() {
        let g = Grid1D::shared(128).unwrap();
        let a = assemble_laplacian(&g, BoundaryKind::Neumann).unwrap();
        let d = neumann_decomp(&a, &g);
        let mode = GridFn::from_fn(g, |x| (PI * x).cos()).unwrap();
        let out = d.apply_phi2_values(0.1, mode.values());
        let z = -0.1 * PI * PI;
        let factor = (z.exp() - 1.0 - z) / (z * z);
        let worst = out
            .iter()
            .zip(mode.values())
            .map(|(a, b)| (a - factor * b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-3, "phi2 eigenmode error {worst}");
    }

    #[test]
    fn phi_scalars_small_argument() {
        assert_eq!(phi1_scalar(0.0), 1.0);
        assert_eq!(phi2_scalar(0.0), 0.5);
        assert_relative_eq!(phi1_scalar(-1e-9), 1.0, epsilon = 1e-8);
        assert_relative_eq!(phi1_scalar(-2.0), (-2.0f64).exp_m1() / -2.0, epsilon = 1e-15);
        assert_relative_eq!(
            phi2_scalar(-2.0),
            ((-2.0f64).exp_m1() + 2.0) / 4.0,
            epsilon = 1e-15
        );
    }
}
