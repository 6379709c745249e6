//! Plant description and the certainty-equivalence LQR quantities.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::matrix::{spectral_radius, SymMatrix};

/// Residual tolerance (relative to `max(1, ‖S‖_F)`) for the Riccati iteration.
pub const DARE_TOL: f64 = 1e-12;
pub const DARE_MAX_ITER: usize = 100_000;
/// Rank tolerance for the PBH tests.
pub const PBH_TOL: f64 = 1e-8;

/// Linear plant `x⁺ = A x + B u + w`, `w ~ N(0, W)`, with quadratic weights
/// `Q`, `R` and initial-state covariance `P₁|₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: SymMatrix,
    pub q: SymMatrix,
    pub r: SymMatrix,
    pub p_prior: SymMatrix,
}

impl PlantModel {
    /// Validates dimensions, positive definiteness and the PBH conditions.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        w: SymMatrix,
        q: SymMatrix,
        r: SymMatrix,
        p_prior: SymMatrix,
    ) -> Result<Self> {
        let model = Self {
            a,
            b,
            w,
            q,
            r,
            p_prior,
        };
        model.validate()?;
        Ok(model)
    }

    /// Scalar plant with unit prior.
    pub fn scalar(a: f64, b: f64, w: f64, q: f64, r: f64) -> Result<Self> {
        let s = |v: f64| SymMatrix::from_diagonal(&[v]);
        Self::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            s(w),
            s(q),
            s(r),
            s(1.0),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if self.a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                n,
                self.a.ncols()
            )));
        }
        if self.b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B must have {} rows, got {}",
                n,
                self.b.nrows()
            )));
        }
        let m = self.b.ncols();
        for (name, mat, dim) in [
            ("W", &self.w, n),
            ("Q", &self.q, n),
            ("R", &self.r, m),
            ("P0", &self.p_prior, n),
        ] {
            if mat.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {dim}x{dim}, got {0}x{0}",
                    mat.dim()
                )));
            }
            crate::matrix::cholesky(mat)?;
        }
        self.check_stabilizable()?;
        self.check_detectable()
    }

    fn unstable_modes(&self) -> Vec<Complex<f64>> {
        self.a
            .complex_eigenvalues()
            .iter()
            .copied()
            .filter(|z| z.norm() >= 1.0 - PBH_TOL)
            .collect()
    }

    /// PBH: `rank [A − λI, B] = n` at every eigenvalue with `|λ| ≥ 1`.
    pub fn check_stabilizable(&self) -> Result<()> {
        let n = self.state_dim();
        let m = self.input_dim();
        for lambda in self.unstable_modes() {
            let pencil = DMatrix::from_fn(n, n + m, |i, j| {
                if j < n {
                    let d = if i == j { lambda } else { Complex::new(0.0, 0.0) };
                    Complex::new(self.a[(i, j)], 0.0) - d
                } else {
                    Complex::new(self.b[(i, j - n)], 0.0)
                }
            });
            if complex_rank(pencil) < n {
                return Err(Error::NotStabilizable {
                    mode_re: lambda.re,
                    mode_im: lambda.im,
                });
            }
        }
        Ok(())
    }

    /// PBH: `rank [A − λI; Q] = n` at every eigenvalue with `|λ| ≥ 1`.
    pub fn check_detectable(&self) -> Result<()> {
        let n = self.state_dim();
        for lambda in self.unstable_modes() {
            let pencil = DMatrix::from_fn(2 * n, n, |i, j| {
                if i < n {
                    let d = if i == j { lambda } else { Complex::new(0.0, 0.0) };
                    Complex::new(self.a[(i, j)], 0.0) - d
                } else {
                    Complex::new(self.q[(i - n, j)], 0.0)
                }
            });
            if complex_rank(pencil) < n {
                return Err(Error::NotDetectable {
                    mode_re: lambda.re,
                    mode_im: lambda.im,
                });
            }
        }
        Ok(())
    }
}

fn complex_rank(m: DMatrix<Complex<f64>>) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().fold(0.0_f64, |acc, &s| acc.max(s));
    let thr = PBH_TOL * smax.max(1.0);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Riccati solution `S`, gain `K = −(BᵀSB+R)⁻¹BᵀSA` and weight
/// `Θ = Kᵀ(BᵀSB+R)K`.
#[derive(Debug, Clone)]
pub struct LqrCertainty {
    pub s: SymMatrix,
    pub k: DMatrix<f64>,
    pub theta: SymMatrix,
    /// Frobenius norm of the DARE residual at `s`.
    pub residual: f64,
    pub iterations: usize,
}

/// One Riccati map `AᵀSA − AᵀSB(BᵀSB+R)⁻¹BᵀSA + Q` together with `K` and
/// `BᵀSB + R`.
fn riccati_step(model: &PlantModel, s: &SymMatrix) -> Result<(SymMatrix, DMatrix<f64>, SymMatrix)> {
    let a = &model.a;
    let b = &model.b;
    let sm = s.as_matrix();
    let gram = SymMatrix::symmetrize(b.transpose() * sm * b + model.r.as_matrix());
    let bsa = b.transpose() * sm * a;
    let chol = gram
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        })?;
    let k = -chol.solve(&bsa);
    // AᵀSA − AᵀSB(BᵀSB+R)⁻¹BᵀSA = AᵀSA + (BᵀSA)ᵀ K
    let next = a.transpose() * sm * a + bsa.transpose() * &k + model.q.as_matrix();
    Ok((SymMatrix::symmetrize(next), k, gram))
}

pub fn dare_residual(model: &PlantModel, s: &SymMatrix) -> Result<f64> {
    let (next, _, _) = riccati_step(model, s)?;
    Ok(next.sub(s).frobenius())
}

/// Solves the discrete algebraic Riccati equation by value iteration from
/// `S₀ = Q`.
pub fn solve_dare(model: &PlantModel) -> Result<LqrCertainty> {
    model.check_stabilizable()?;
    model.check_detectable()?;

    let mut s = model.q.clone();
    let mut iterations = 0;
    while iterations < DARE_MAX_ITER {
        let (next, _, _) = riccati_step(model, &s)?;
        let step = next.sub(&s).frobenius();
        s = next;
        iterations += 1;
        if !step.is_finite() {
            break;
        }
        if step <= DARE_TOL * s.frobenius().max(1.0) {
            break;
        }
    }
    let (_, k, gram) = riccati_step(model, &s)?;
    let residual = dare_residual(model, &s)?;
    if !(residual <= 1e-9 * s.frobenius().max(1.0)) {
        return Err(Error::NoConvergence {
            what: "Riccati value iteration",
            iterations,
            residual,
        });
    }
    let theta = SymMatrix::symmetrize(k.transpose() * gram.as_matrix() * &k);
    let closed = &model.a + &model.b * &k;
    let rho = spectral_radius(&closed);
    if rho >= 1.0 {
        return Err(Error::SolverFailure(format!(
            "closed-loop spectral radius {rho} is not below one"
        )));
    }
    Ok(LqrCertainty {
        s,
        k,
        theta,
        residual,
        iterations,
    })
}

/// `Tr(W S)`: the infimum of the achievable average LQG cost.
pub fn min_cost(model: &PlantModel, cert: &LqrCertainty) -> f64 {
    model.w.trace_product(&cert.s)
}
