//! Minimum directed-information rate `DI(γ)` under an LQG budget.
//!
//! The max-det program over `(P, Π)` is reduced to a program over `P` alone:
//! for fixed `P` the best `Π` is the Schur complement
//! `P − PAᵀ(APAᵀ+W)⁻¹AP = (P⁻¹ + AᵀW⁻¹A)⁻¹`, which turns the objective into
//!
//! ```text
//! f(P) = ½ ln det(APAᵀ + W) − ½ ln det P
//! ```
//!
//! (convex, being a partial minimization of a jointly convex problem). The
//! remaining constraints `Tr(ΘP) ≤ γ − Tr(WS)` and `P ⪯ APAᵀ + W` are handled
//! with a log-barrier path-following method and damped Newton steps on the
//! `n(n+1)/2` free entries of `P`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lqr::{min_cost, LqrCertainty, PlantModel};
use crate::matrix::{self, ln_det_spd, SymMatrix};
use crate::validation::capacity_gap_bound;

#[derive(Debug, Clone)]
pub struct SdpOptions {
    /// Initial barrier weight `μ = 1/t`.
    pub initial_mu: f64,
    /// Factor by which `μ` shrinks per outer iteration.
    pub mu_factor: f64,
    /// Stop once the duality-gap bound `m·μ` falls below this (nats).
    pub gap_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Half squared Newton decrement at which centering stops.
    pub newton_tol: f64,
}

/// Relative eigenvalue threshold for the rank of the SNR matrix. Active
/// directions of `P ⪯ APAᵀ + W` keep a slack of order `gap/multiplier` at
/// termination, which shows up in the SNR at roughly that scale.
pub const SNR_RANK_TOL: f64 = 1e-6;

/// Squared Newton decrement below which full steps are taken.
const QUADRATIC_REGION: f64 = 0.04;

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            initial_mu: 1.0,
            mu_factor: 5.0,
            gap_tol: 1e-9,
            max_outer: 200,
            max_newton: 500,
            newton_tol: 1e-12,
        }
    }
}

/// Optimum of the directed-information program at budget `gamma`.
#[derive(Debug, Clone)]
pub struct DiSolution {
    pub gamma: f64,
    pub p_opt: SymMatrix,
    pub pi_opt: SymMatrix,
    /// `DI(γ)` in bits per step.
    pub di_bits: f64,
    /// `P⁻¹ − (APAᵀ + W)⁻¹`.
    pub snr: SymMatrix,
    pub rank_r: usize,
    pub kkt_residual: f64,
    /// Total Newton steps.
    pub solver_iterations: usize,
    /// `γ − Tr(WS) − Tr(ΘP)` at the optimum.
    pub budget_slack: f64,
    /// Lagrange multiplier of the budget constraint (nats per unit cost).
    pub budget_dual: f64,
}

impl DiSolution {
    /// `DI(γ) + (r/2) log₂(4πe/12) + 1`.
    pub fn upper_bits(&self) -> f64 {
        rate_upper_bound(self.di_bits, self.rank_r)
    }

    /// The budget constraint carries a non-negligible multiplier.
    pub fn budget_active(&self) -> bool {
        self.budget_dual > 1e-6
    }
}

pub fn rate_upper_bound(di_bits: f64, rank_r: usize) -> f64 {
    di_bits + capacity_gap_bound(rank_r) + 1.0
}

/// Free entries `(i, j)`, `i ≤ j`, of an `n×n` symmetric matrix.
fn sym_basis(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push((i, j));
        }
    }
    out
}

fn basis_matrix(n: usize, (i, j): (usize, usize)) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

fn direction_matrix(n: usize, basis: &[(usize, usize)], d: &DVector<f64>) -> SymMatrix {
    let mut m = DMatrix::zeros(n, n);
    for (k, &(i, j)) in basis.iter().enumerate() {
        m[(i, j)] = d[k];
        m[(j, i)] = d[k];
    }
    SymMatrix::symmetrize(m)
}

/// `Tr(Y_k Y_l)` for square matrices.
fn trace_of_product(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.component_mul(&y.transpose()).sum()
}

struct Problem<'a> {
    a: &'a DMatrix<f64>,
    w: &'a SymMatrix,
    theta: &'a SymMatrix,
    /// `γ − Tr(WS)`.
    budget: f64,
    n: usize,
    basis: Vec<(usize, usize)>,
}

/// Quantities at a strictly feasible `P`.
struct Point {
    p: SymMatrix,
    ma: SymMatrix,
    g: SymMatrix,
    slack: f64,
    ln_det_p: f64,
    ln_det_ma: f64,
    ln_det_g: f64,
}

impl<'a> Problem<'a> {
    fn point(&self, p: SymMatrix) -> Option<Point> {
        let ma = p.congruence(self.a).add(self.w);
        let g = ma.sub(&p);
        let slack = self.budget - self.theta.trace_product(&p);
        if !(slack > 0.0) {
            return None;
        }
        let ln_det_p = ln_det_spd(&p).ok()?;
        let ln_det_g = ln_det_spd(&g).ok()?;
        let ln_det_ma = ln_det_spd(&ma).ok()?;
        Some(Point {
            p,
            ma,
            g,
            slack,
            ln_det_p,
            ln_det_ma,
            ln_det_g,
        })
    }

    /// Objective in nats.
    fn objective(pt: &Point) -> f64 {
        0.5 * (pt.ln_det_ma - pt.ln_det_p)
    }

    fn barrier(&self, pt: &Point, t: f64) -> f64 {
        t * Self::objective(pt) - pt.slack.ln() - pt.ln_det_g - pt.ln_det_p
    }

    /// Gradient (as a symmetric matrix `Gm` with `dφ = Tr(Gm dP)`) and
    /// Hessian over the free entries.
    fn derivatives(&self, pt: &Point, t: f64) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
        let n = self.n;
        let a = self.a;
        let p_inv = pt.p.inverse_spd()?.into_matrix();
        let ma_inv = pt.ma.inverse_spd()?.into_matrix();
        let g_inv = pt.g.inverse_spd()?.into_matrix();
        let theta = self.theta.as_matrix();
        let s = pt.slack;

        let at_ma_a = a.transpose() * &ma_inv * a;
        let at_g_a = a.transpose() * &g_inv * a;
        let grad_m = (&at_ma_a - &p_inv) * (0.5 * t) + theta / s - (&at_g_a - &g_inv) - &p_inv;

        let nb = self.basis.len();
        let grad = DVector::from_iterator(
            nb,
            self.basis.iter().map(|&(i, j)| {
                if i == j {
                    grad_m[(i, i)]
                } else {
                    2.0 * grad_m[(i, j)]
                }
            }),
        );

        let mut y_ma = Vec::with_capacity(nb);
        let mut y_p = Vec::with_capacity(nb);
        let mut y_g = Vec::with_capacity(nb);
        let mut lin = Vec::with_capacity(nb);
        for &ij in &self.basis {
            let e = basis_matrix(n, ij);
            let aea = a * &e * a.transpose();
            y_ma.push(&ma_inv * &aea);
            y_g.push(&g_inv * (&aea - &e));
            y_p.push(&p_inv * &e);
            lin.push(theta.component_mul(&e).sum());
        }
        let wp = 0.5 * t + 1.0;
        let mut hess = DMatrix::zeros(nb, nb);
        for k in 0..nb {
            for l in k..nb {
                let v = -0.5 * t * trace_of_product(&y_ma[k], &y_ma[l])
                    + wp * trace_of_product(&y_p[k], &y_p[l])
                    + trace_of_product(&y_g[k], &y_g[l])
                    + lin[k] * lin[l] / (s * s);
                hess[(k, l)] = v;
                hess[(l, k)] = v;
            }
        }
        Ok((grad_m, grad, hess))
    }

    /// KKT residual of the original program at `pt` with the barrier duals
    /// `Z_G = G⁻¹/t`, `Z_P = P⁻¹/t`. The budget multiplier is refit by least
    /// squares since `1/(t·s)` inherits the rounding in a nearly active
    /// slack. Returns `(residual, multiplier)`.
    fn kkt(&self, pt: &Point, t: f64) -> Result<(f64, f64)> {
        let a = self.a;
        let p_inv = pt.p.inverse_spd()?.into_matrix();
        let ma_inv = pt.ma.inverse_spd()?.into_matrix();
        let z_g = pt.g.inverse_spd()?.into_matrix() / t;
        let z_p = &p_inv / t;
        let grad_f = (a.transpose() * &ma_inv * a - &p_inv) * 0.5;
        let r0 = grad_f - (a.transpose() * &z_g * a - &z_g) - &z_p;
        let theta = self.theta.as_matrix();
        let tt = theta.norm_squared();
        let lambda = if tt > 0.0 {
            (-r0.dot(theta) / tt).max(0.0)
        } else {
            0.0
        };
        let stationarity = (r0 + theta * lambda).norm();
        let complementarity = lambda * pt.slack + 2.0 * self.n as f64 / t;
        Ok((stationarity + complementarity, lambda))
    }

    fn initial_point(&self) -> Result<Point> {
        let stable = matrix::spectral_radius(self.a) < 1.0;
        let x = if stable {
            matrix::discrete_lyapunov(self.a, self.w, 1e-14, 1_000_000)?
        } else {
            self.w.clone()
        };
        let tx = self.theta.trace_product(&x).max(1e-12);
        let eps = 0.5 * (self.budget / tx).min(1.0);
        self.point(x.scale(eps)).ok_or_else(|| {
            Error::SolverFailure("initial point is not strictly feasible".into())
        })
    }
}

fn newton_solve(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().iter().fold(0.0_f64, |a, d| a.max(d.abs())).max(1e-300);
    let mut damping = 0.0;
    for _ in 0..20 {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += damping;
        }
        if let Some(ch) = h.cholesky() {
            return Some(-ch.solve(grad));
        }
        damping = if damping == 0.0 { 1e-14 * scale } else { damping * 10.0 };
    }
    None
}

/// Solves the directed-information program at budget `gamma`.
pub fn solve_di(model: &PlantModel, cert: &LqrCertainty, gamma: f64) -> Result<DiSolution> {
    solve_di_with(model, cert, gamma, &SdpOptions::default())
}

pub fn solve_di_with(
    model: &PlantModel,
    cert: &LqrCertainty,
    gamma: f64,
    opts: &SdpOptions,
) -> Result<DiSolution> {
    let floor = min_cost(model, cert);
    if !(gamma > floor) {
        return Err(Error::InfeasibleBudget {
            gamma,
            min_cost: floor,
        });
    }
    let n = model.state_dim();
    let prob = Problem {
        a: &model.a,
        w: &model.w,
        theta: &cert.theta,
        budget: gamma - floor,
        n,
        basis: sym_basis(n),
    };
    // Barrier degree: budget scalar plus two n×n cones.
    let degree = (1 + 2 * n) as f64;

    let mut pt = prob.initial_point()?;
    let mut t = 1.0 / opts.initial_mu;
    let mut newton_steps = 0;
    let mut last_grad = DVector::zeros(prob.basis.len());

    for _outer in 0..opts.max_outer {
        let mut prev_decrement = f64::INFINITY;
        for _ in 0..opts.max_newton {
            let (_, grad, hess) = prob.derivatives(&pt, t)?;
            last_grad = grad.clone();
            let step = newton_solve(&hess, &grad)
                .ok_or_else(|| Error::SolverFailure("singular Newton system".into()))?;
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= opts.newton_tol {
                break;
            }
            let quadratic = decrement < QUADRATIC_REGION;
            // Inside the quadratic region the decrement can only stall
            // through rounding in the slacks.
            if quadratic && decrement > 0.5 * prev_decrement {
                break;
            }
            prev_decrement = decrement;
            newton_steps += 1;
            let phi0 = prob.barrier(&pt, t);
            let dir = direction_matrix(n, &prob.basis, &step);
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-14 {
                if let Some(cand) = prob.point(pt.p.add(&dir.scale(alpha))) {
                    // Full Newton steps are safe near the center; the
                    // barrier value there is too large to resolve the
                    // decrease in floating point.
                    if quadratic || prob.barrier(&cand, t) <= phi0 - 0.01 * alpha * decrement {
                        accepted = Some(cand);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(cand) => pt = cand,
                None => break,
            }
        }
        if degree / t < opts.gap_tol {
            break;
        }
        t *= opts.mu_factor;
    }

    let (kkt_residual, budget_dual) = prob.kkt(&pt, t)?;
    if !(kkt_residual < 1e-6) {
        return Err(Error::SolverFailure(format!(
            "KKT residual {kkt_residual:e} after {newton_steps} Newton steps (|grad| {:e})",
            last_grad.norm()
        )));
    }

    let p = pt.p.clone();
    let ma_inv = pt.ma.inverse_spd()?;
    let pa = p.as_matrix() * model.a.transpose();
    let pi = SymMatrix::symmetrize(p.as_matrix() - &pa * ma_inv.as_matrix() * pa.transpose());
    let di_nats = 0.5 * (ln_det_spd(&model.w)? - ln_det_spd(&pi)?);
    let di_bits = (di_nats / std::f64::consts::LN_2).max(0.0);
    let snr = p.inverse_spd()?.sub(&ma_inv);
    let rank_r = matrix::psd_rank(&snr, SNR_RANK_TOL)?;

    Ok(DiSolution {
        gamma,
        p_opt: p,
        pi_opt: pi,
        di_bits,
        snr,
        rank_r,
        kkt_residual,
        solver_iterations: newton_steps,
        budget_slack: pt.slack,
        budget_dual,
    })
}

/// One row of the rate/cost tradeoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub gamma: f64,
    pub di_bits: f64,
    pub upper_bits: f64,
    pub rank_r: usize,
}

/// Evaluates `DI(γ)` and the achievable upper bound over `gammas`; each entry
/// carries its own error.
pub fn tradeoff_curve(
    model: &PlantModel,
    cert: &LqrCertainty,
    gammas: &[f64],
) -> Vec<(f64, Result<TradeoffPoint>)> {
    gammas
        .par_iter()
        .map(|&gamma| {
            let res = solve_di(model, cert, gamma).map(|sol| TradeoffPoint {
                gamma,
                di_bits: sol.di_bits,
                upper_bits: sol.upper_bits(),
                rank_r: sol.rank_r,
            });
            (gamma, res)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqr::solve_dare;

    /// `½ log₂(a² + W/P*)` with `P*` the largest feasible scalar `P`.
    fn scalar_closed_form(a: f64, w: f64, theta: f64, budget: f64) -> f64 {
        let mut p = if theta > 0.0 { budget / theta } else { f64::INFINITY };
        if a.abs() < 1.0 {
            p = p.min(w / (1.0 - a * a));
        }
        (0.5 * (a * a + w / p).log2()).max(0.0)
    }

    #[test]
    fn rejects_budget_at_or_below_min_cost() {
        let m = PlantModel::scalar(2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let c = solve_dare(&m).unwrap();
        let floor = min_cost(&m, &c);
        assert!(matches!(
            solve_di(&m, &c, floor),
            Err(Error::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn stable_scalar_loose_budget_is_free() {
        let m = PlantModel::scalar(0.5, 1.0, 1.0, 1.0, 1.0).unwrap();
        let c = solve_dare(&m).unwrap();
        let sol = solve_di(&m, &c, min_cost(&m, &c) + 100.0).unwrap();
        assert!(sol.di_bits < 1e-6, "{}", sol.di_bits);
        assert_eq!(sol.rank_r, 0);
    }

    #[test]
    fn unstable_scalar_finite_budget() {
        let m = PlantModel::scalar(2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let c = solve_dare(&m).unwrap();
        let floor = min_cost(&m, &c);
        for extra in [0.1, 1.0, 10.0] {
            let sol = solve_di(&m, &c, floor + extra).unwrap();
            let expect = scalar_closed_form(2.0, 1.0, c.theta[(0, 0)], extra);
            assert!((sol.di_bits - expect).abs() < 1e-6, "{} vs {expect}", sol.di_bits);
            assert_eq!(sol.rank_r, 1);
            assert!(sol.budget_active());
        }
    }

    #[test]
    fn zero_dynamics_needs_no_information() {
        let m = PlantModel::scalar(0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let c = solve_dare(&m).unwrap();
        let sol = solve_di(&m, &c, 1.5).unwrap();
        assert!(sol.di_bits < 1e-9);
        assert_eq!(sol.rank_r, 0);
    }
}
