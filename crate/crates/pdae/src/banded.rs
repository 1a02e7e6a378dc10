//! Banded matrix storage and a symmetric banded Cholesky factorization.
//!
//! Everything at desk scale here is tridiagonal or pentadiagonal, so a
//! dense band layout (2*bandwidth+1 entries per row) is both simple and
//! cache-friendly. The Cholesky solve is the workhorse behind the
//! constraint solver and the shifted resolvent solve.

use crate::error::{PdaeError, Result};

/// Row-major banded storage: entry (i, j) lives at
/// `data[i * (2b + 1) + (j - i + b)]` whenever `|i - j| <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    size: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        Self {
            size,
            bandwidth,
            data: vec![0.0; size * (2 * bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let b = self.bandwidth;
        if i.abs_diff(j) > b {
            return 0.0;
        }
        self.data[i * (2 * b + 1) + (j + b - i)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let b = self.bandwidth;
        assert!(
            i.abs_diff(j) <= b,
            "entry ({i}, {j}) outside bandwidth {b}"
        );
        self.data[i * (2 * b + 1) + (j + b - i)] = value;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        let old = self.get(i, j);
        self.set(i, j, old + value);
    }

    /// y = M x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.size, "banded apply: length mismatch");
        let b = self.bandwidth;
        let mut y = vec![0.0; self.size];
        for i in 0..self.size {
            let lo = i.saturating_sub(b);
            let hi = (i + b).min(self.size - 1);
            let row = &self.data[i * (2 * b + 1)..(i + 1) * (2 * b + 1)];
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += row[j + b - i] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Maximum absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> f64 {
        let b = self.bandwidth;
        (0..self.size)
            .map(|i| {
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(self.size - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// r = b - M x evaluated with error-free products (fma) and
    /// compensated summation. The entries of the fourth-order operators
    /// here scale like h^-4, so a plain f64 residual bottoms out at
    /// eps * |M| * |x|, far above the solve tolerances; the compensated
    /// evaluation is accurate to roughly eps * |r|.
    pub fn residual_compensated(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.size);
        assert_eq!(b.len(), self.size);
        let bw = self.bandwidth;
        let mut r = vec![0.0; self.size];
        for i in 0..self.size {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(self.size - 1);
            let row = &self.data[i * (2 * bw + 1)..(i + 1) * (2 * bw + 1)];
            let mut sum = b[i];
            let mut comp = 0.0;
            for j in lo..=hi {
                let m = -row[j + bw - i];
                let p = m * x[j];
                let err = m.mul_add(x[j], -p);
                let t = sum + p;
                comp += if sum.abs() >= p.abs() {
                    (sum - t) + p
                } else {
                    (p - t) + sum
                };
                sum = t;
                comp += err;
            }
            r[i] = sum + comp;
        }
        r
    }

    /// Largest off-diagonal asymmetry |M_ij - M_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let b = self.bandwidth;
        let mut worst = 0.0_f64;
        for i in 0..self.size {
            for j in (i + 1)..(i + b + 1).min(self.size) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// banded matrix, stored in the same band layout.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    size: usize,
    bandwidth: usize,
    // lower bands incl. diagonal: factor[i * (b + 1) + (j - i + b)], j in [i-b, i]
    factor: Vec<f64>,
}

impl BandedCholesky {
    /// Factor M = L L^T. Fails with `NotPositiveDefinite` on a
    /// non-positive pivot; the symmetry of M is the caller's contract
    /// (only the lower triangle is read).
    pub fn factor(m: &BandedMatrix) -> Result<Self> {
        let n = m.size;
        let b = m.bandwidth;
        let mut l = vec![0.0; n * (b + 1)];
        let idx = |i: usize, j: usize| i * (b + 1) + (j + b - i);

        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let mut s = m.get(i, j);
                let klo = lo.max(j.saturating_sub(b));
                for k in klo..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(PdaeError::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(Self {
            size: n,
            bandwidth: b,
            factor: l,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Solve M x = rhs by forward/backward substitution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.size, "cholesky solve: length mismatch");
        let n = self.size;
        let b = self.bandwidth;
        let idx = |i: usize, j: usize| i * (b + 1) + (j + b - i);

        // L y = rhs
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let mut s = y[i];
            for k in lo..i {
                s -= self.factor[idx(i, k)] * y[k];
            }
            y[i] = s / self.factor[idx(i, i)];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let hi = (i + b).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=hi {
                s -= self.factor[idx(k, i)] * y[k];
            }
            y[i] = s / self.factor[idx(i, i)];
        }
        y
    }

    /// Solve with iterative refinement against `m` (the matrix this
    /// factorization came from), using the compensated residual. Two
    /// corrections push the true residual to the rounding level of the
    /// data rather than of the operator.
    pub fn solve_refined(&self, m: &BandedMatrix, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.solve(rhs);
        for _ in 0..2 {
            let r = m.residual_compensated(&x, rhs);
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        x
    }
}
