//! Dense symmetric linear algebra.
//!
//! Every covariance, weight and Riccati solution in the crate is a
//! [`SymMatrix`]. General (non-symmetric) arithmetic goes through
//! `nalgebra::DMatrix`; the routines here cover what the solvers need on top
//! of it: Cholesky-based log-determinants, a cyclic Jacobi eigensolver and a
//! tolerance-aware PSD rank.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative tolerance for [`psd_rank`].
pub const RANK_TOL: f64 = 1e-9;

/// Sweep cap for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// A square matrix whose entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        Ok(Self::symmetrize(m))
    }

    /// Like [`SymMatrix::new`] for callers that already know `m` is square
    /// and nonempty.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square());
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self(out)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.0.component_mul(&other.0).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// Congruence `M X Mᵀ`, symmetrized.
    pub fn congruence(&self, m: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrize(m * &self.0 * m.transpose())
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    /// Inverse of an SPD matrix through its Cholesky factor.
    pub fn inverse_spd(&self) -> Result<SymMatrix> {
        let l = cholesky(self)?;
        let n = self.dim();
        let mut inv = DMatrix::identity(n, n);
        // Solve L Y = I, then Lᵀ X = Y.
        for c in 0..n {
            for i in 0..n {
                let mut s = inv[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * inv[(k, c)];
                }
                inv[(i, c)] = s / l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = inv[(i, c)];
                for k in (i + 1)..n {
                    s -= l[(k, i)] * inv[(k, c)];
                }
                inv[(i, c)] = s / l[(i, i)];
            }
        }
        Ok(SymMatrix::symmetrize(inv))
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky(self).is_ok()
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Lower Cholesky factor `L` with `M = L Lᵀ`.
pub fn cholesky(m: &SymMatrix) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let a = m.as_matrix();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Natural-log determinant of an SPD matrix.
pub fn ln_det_spd(m: &SymMatrix) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Base-2 log-determinant of an SPD matrix.
pub fn logdet_spd(m: &SymMatrix) -> Result<f64> {
    Ok(ln_det_spd(m)? / std::f64::consts::LN_2)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Sorted in descending order.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("dim >= 1")
    }
}

pub fn eig_sym(m: &SymMatrix) -> Result<SymEigen> {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();

    let off = |a: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = n == 1 || scale == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::ConvergenceFailure {
                sweeps: JACOBI_MAX_SWEEPS,
            });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= 1e-15 * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Number of eigenvalues above `tol · max(1, λ_max)`.
pub fn psd_rank(m: &SymMatrix, tol: f64) -> Result<usize> {
    let eig = eig_sym(m)?;
    rank_from_eigenvalues(&eig.values, tol)
}

pub(crate) fn rank_from_eigenvalues(values: &[f64], tol: f64) -> Result<usize> {
    let lmax = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = tol * lmax.max(1.0);
    if let Some(&neg) = values.iter().find(|&&v| v < -threshold) {
        return Err(Error::NotPsd { eigenvalue: neg });
    }
    Ok(values.iter().filter(|&&v| v > threshold).count())
}

/// Spectral radius of a general square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Solves `X = M X Mᵀ + N` by fixed-point iteration; requires `ρ(M) < 1`.
pub fn discrete_lyapunov(
    m: &DMatrix<f64>,
    n: &SymMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<SymMatrix> {
    let mut x = n.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = x.congruence(m).add(n);
        residual = next.sub(&x).frobenius();
        x = next;
        if residual <= tol * x.frobenius().max(1.0) {
            return Ok(x);
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "discrete Lyapunov iteration",
        iterations: max_iter,
        residual,
    })
}
