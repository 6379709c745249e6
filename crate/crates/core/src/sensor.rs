//! Gaussian sensor realization `y = C x + v`, `v ~ N(0, V)`, of the optimal
//! directed-information policy, plus the stationary Kalman filter that runs
//! on it.

use nalgebra::DMatrix;

use crate::di::DiSolution;
use crate::error::{Error, Result};
use crate::lqr::PlantModel;
use crate::matrix::{eig_sym, SymMatrix};

pub const KALMAN_TOL: f64 = 1e-12;
pub const KALMAN_MAX_ITER: usize = 100_000;

/// Stationary Kalman filter quantities.
#[derive(Debug, Clone)]
pub struct SteadyKalman {
    /// `n×r` gain.
    pub l: DMatrix<f64>,
    pub p_pred: SymMatrix,
    pub p_filt: SymMatrix,
    /// Riccati fixed-point residual at `p_pred`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SensorRealization {
    /// `r×n`, orthonormal rows.
    pub c: DMatrix<f64>,
    /// Diagonal of `V`.
    pub v: Vec<f64>,
    /// Quantizer steps with `Δᵢ²/12 = Vᵢ`.
    pub delta: Vec<f64>,
    pub kalman: SteadyKalman,
}

impl SensorRealization {
    pub fn rank(&self) -> usize {
        self.v.len()
    }

    pub fn v_matrix(&self) -> SymMatrix {
        SymMatrix::from_diagonal(&self.v)
    }

    /// `Cᵀ V⁻¹ C`.
    pub fn recompose_snr(&self) -> SymMatrix {
        let vinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.v.len(),
            self.v.iter().map(|v| 1.0 / v),
        ));
        SymMatrix::symmetrize(self.c.transpose() * vinv * &self.c)
    }

    /// Stationary covariance `C P_pred Cᵀ` of the innovation `θ = C(x − x̂)`.
    pub fn innovation_cov(&self) -> SymMatrix {
        self.kalman.p_pred.congruence(&self.c)
    }

    /// `½ log₂ det(C P_pred Cᵀ + V) − ½ log₂ det V`: the per-step directed
    /// information of the Gaussian loop at stationarity.
    pub fn directed_info_bits(&self) -> Result<f64> {
        let vm = self.v_matrix();
        let total = self.innovation_cov().add(&vm);
        Ok(0.5 * (crate::matrix::logdet_spd(&total)? - crate::matrix::logdet_spd(&vm)?))
    }
}

/// Flips each row so that its first non-negligible entry is positive.
fn normalize_row_signs(c: &mut DMatrix<f64>) {
    for i in 0..c.nrows() {
        let lead = c.row(i).iter().copied().find(|v| v.abs() > 1e-12);
        if lead.is_some_and(|v| v < 0.0) {
            c.row_mut(i).neg_mut();
        }
    }
}

/// Factors `snr = Cᵀ V⁻¹ C` from the `rank_r` leading eigenpairs.
pub fn factor_snr(snr: &SymMatrix, rank_r: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if rank_r == 0 {
        return Err(Error::ZeroRank);
    }
    let eig = eig_sym(snr)?;
    let n = snr.dim();
    if rank_r > n || eig.values[rank_r - 1] <= 0.0 {
        return Err(Error::NotPsd {
            eigenvalue: eig.values[rank_r.min(n) - 1],
        });
    }
    let mut c = DMatrix::from_fn(rank_r, n, |i, j| eig.vectors[(j, i)]);
    normalize_row_signs(&mut c);
    let v = eig.values[..rank_r].iter().map(|l| 1.0 / l).collect();
    Ok((c, v))
}

pub fn step_for_variance(v: f64) -> f64 {
    (12.0 * v).sqrt()
}

/// Builds `C`, `V`, the quantizer steps and the stationary Kalman filter
/// from an optimum of the directed-information program.
pub fn realize_sensor(model: &PlantModel, sol: &DiSolution) -> Result<SensorRealization> {
    let (c, v) = factor_snr(&sol.snr, sol.rank_r)?;
    let delta = v.iter().map(|&vi| step_for_variance(vi)).collect();
    let kalman = steady_kalman(model, &c, &v)?;
    Ok(SensorRealization {
        c,
        v,
        delta,
        kalman,
    })
}

/// Realization with no measurement channel, for optima of rank zero where
/// nothing needs to be sent.
pub fn blind_sensor(model: &PlantModel) -> Result<SensorRealization> {
    let c = DMatrix::zeros(0, model.state_dim());
    let kalman = steady_kalman(model, &c, &[])?;
    Ok(SensorRealization {
        c,
        v: Vec::new(),
        delta: Vec::new(),
        kalman,
    })
}

fn measurement_update(
    p: &SymMatrix,
    c: &DMatrix<f64>,
    v: &[f64],
) -> Result<(DMatrix<f64>, SymMatrix)> {
    let n = p.dim();
    if c.nrows() == 0 {
        return Ok((DMatrix::zeros(n, 0), p.clone()));
    }
    let s = p
        .congruence(c)
        .add(&SymMatrix::from_diagonal(v))
        .inverse_spd()?;
    let l = p.as_matrix() * c.transpose() * s.as_matrix();
    let filt = SymMatrix::symmetrize(p.as_matrix() - &l * c * p.as_matrix());
    Ok((l, filt))
}

/// Stationary filter for `y = C x + v` by iterating the prediction Riccati
/// map from `P = W`.
pub fn steady_kalman(model: &PlantModel, c: &DMatrix<f64>, v: &[f64]) -> Result<SteadyKalman> {
    let n = model.state_dim();
    if c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "C must have {n} columns, got {}",
            c.ncols()
        )));
    }
    if c.nrows() != v.len() {
        return Err(Error::LengthMismatch {
            expected: c.nrows(),
            got: v.len(),
        });
    }
    let mut p = model.w.clone();
    let mut iterations = 0;
    while iterations < KALMAN_MAX_ITER {
        let (_, filt) = measurement_update(&p, c, v)?;
        let next = filt.congruence(&model.a).add(&model.w);
        let step = next.sub(&p).frobenius();
        p = next;
        iterations += 1;
        if !step.is_finite() || step <= KALMAN_TOL * p.frobenius().max(1.0) {
            break;
        }
    }
    let (l, p_filt) = measurement_update(&p, c, v)?;
    let residual = p_filt.congruence(&model.a).add(&model.w).sub(&p).frobenius();
    if !(residual <= 1e-9 * p.frobenius().max(1.0)) {
        return Err(Error::NoConvergence {
            what: "Kalman Riccati iteration",
            iterations,
            residual,
        });
    }
    Ok(SteadyKalman {
        l,
        p_pred: p,
        p_filt,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn factor_rank_one() {
        let (c, v) = factor_snr(&SymMatrix::from_diagonal(&[3.0, 0.0]), 1).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        assert_abs_diff_eq!(v[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(step_for_variance(v[0]), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn factor_identity() {
        let (c, v) = factor_snr(&SymMatrix::identity(2), 2).unwrap();
        assert!((&c * c.transpose() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
        assert_eq!(v, vec![1.0, 1.0]);
        assert_abs_diff_eq!(step_for_variance(1.0), 12f64.sqrt());
    }

    #[test]
    fn factor_zero_rank() {
        assert_eq!(
            factor_snr(&SymMatrix::zeros(2), 0).unwrap_err(),
            Error::ZeroRank
        );
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let snr = SymMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        let (c, _) = factor_snr(&snr, 1).unwrap();
        assert!(c[(0, 0)] > 0.0);
        assert_abs_diff_eq!(c[(0, 1)], -c[(0, 0)], epsilon = 1e-12);
    }

    fn scalar(a: f64) -> PlantModel {
        PlantModel::scalar(a, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn kalman_zero_dynamics() {
        let k = steady_kalman(&scalar(0.0), &DMatrix::from_element(1, 1, 1.0), &[1.0]).unwrap();
        assert_abs_diff_eq!(k.p_pred[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.l[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k.p_filt[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn kalman_random_walk() {
        let k = steady_kalman(&scalar(1.0), &DMatrix::from_element(1, 1, 1.0), &[1.0]).unwrap();
        assert_abs_diff_eq!(k.p_pred[(0, 0)], (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-10);
        assert!(k.residual < 1e-9);
    }

    #[test]
    fn kalman_without_measurements() {
        let k = steady_kalman(&scalar(0.5), &DMatrix::zeros(0, 1), &[]).unwrap();
        assert_abs_diff_eq!(k.p_pred[(0, 0)], 4.0 / 3.0, epsilon = 1e-10);
        assert_eq!(k.l.ncols(), 0);
    }
}
