//! Reference quantities for the rate analysis: the Gaussian rate-distortion
//! function, the uniform-noise capacity cap and the mutual information of a
//! Gaussian input through a uniform additive-noise channel.

use std::f64::consts::{E, LN_2, PI};

use crate::error::{Error, Result};
use crate::matrix::{eig_sym, SymMatrix};

/// `(r/2) log₂(4πe/12)`, the per-dimension capacity cap of the uniform-noise
/// channel under the matching power constraint.
pub fn capacity_gap_bound(r: usize) -> f64 {
    0.5 * r as f64 * (4.0 * PI * E / 12.0).log2()
}

/// Gaussian rate-distortion function (bits) by reverse water-filling over
/// the eigenvalues of `cov`.
pub fn gaussian_rdf(cov: &SymMatrix, d: f64) -> Result<f64> {
    let eig = eig_sym(cov)?;
    Ok(reverse_water_fill(&eig.values, d).1)
}

/// Returns `(water level, rate in bits)` for eigenvalues `lambdas` and
/// distortion `d`.
pub fn reverse_water_fill(lambdas: &[f64], d: f64) -> (f64, f64) {
    let mut l: Vec<f64> = lambdas.iter().map(|&v| v.max(0.0)).collect();
    l.sort_by(f64::total_cmp);
    let total: f64 = l.iter().sum();
    if d >= total {
        return (l.last().copied().unwrap_or(0.0), 0.0);
    }
    let n = l.len();
    let mut below = 0.0;
    let mut level = 0.0;
    for k in 0..n {
        let w = (d - below) / (n - k) as f64;
        if w <= l[k] {
            level = w;
            break;
        }
        below += l[k];
    }
    let rate = l
        .iter()
        .filter(|&&v| v > level)
        .map(|&v| 0.5 * (v / level).log2())
        .sum();
    (level, rate)
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(a ≤ Z < b)` for `Z ~ N(0, 1)` without cancellation in the tails.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_cdf(-b)
    }
}

/// Density of `y = x + η`, `x ~ N(0, σ²)`, `η ~ U[−Δ/2, Δ/2]`.
pub fn gaussian_uniform_density(y: f64, sigma: f64, delta: f64) -> f64 {
    normal_interval((y - delta / 2.0) / sigma, (y + delta / 2.0) / sigma) / delta
}

const QUAD_TOL: f64 = 1e-11;
const QUAD_MAX_DEPTH: usize = 40;

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if diff.abs() <= 15.0 * tol {
            return Some(left + right + diff / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
        )
    }
    let fa = f(lo);
    let fb = f(hi);
    let fm = f(0.5 * (lo + hi));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, lo, hi, fa, fm, fb, whole, QUAD_TOL, QUAD_MAX_DEPTH)
        .ok_or(Error::QuadratureFailure { lo, hi })
}

/// Integrates `f` over `[lo, hi]` after splitting it into `panels` pieces.
fn integrate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, panels: usize) -> Result<f64> {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| adaptive_simpson(f, lo + k as f64 * h, lo + (k + 1) as f64 * h))
        .sum()
}

/// Differential entropy `h(y)` in bits for `y = x + η`.
pub fn gaussian_uniform_entropy(sigma2: f64, delta: f64) -> Result<f64> {
    let sigma = sigma2.sqrt();
    let integrand = |y: f64| {
        let fy = gaussian_uniform_density(y, sigma, delta);
        if fy > 0.0 {
            -fy * fy.log2()
        } else {
            0.0
        }
    };
    let half = delta / 2.0;
    let reach = 12.0 * sigma;
    // Panels concentrate on the two edges where the density changes on the
    // scale of σ.
    if reach >= half {
        integrate(&integrand, -half - reach, half + reach, 256)
    } else {
        Ok(integrate(&integrand, -half - reach, -half + reach, 128)?
            + integrate(&integrand, -half + reach, half - reach, 16)?
            + integrate(&integrand, half - reach, half + reach, 128)?)
    }
}

/// `I(x; x + η) = h(x + η) − log₂ Δ` for `x ~ N(0, σ²)`, `η ~ U[−Δ/2, Δ/2]`.
pub fn uniform_gaussian_channel_mi(sigma2: f64, delta: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !(delta > 0.0) {
        return Err(Error::NonFinite(if sigma2 > 0.0 { delta } else { sigma2 }));
    }
    Ok(gaussian_uniform_entropy(sigma2, delta)? - delta.log2())
}

/// Entropy of the Gaussian with the same variance as `x + η`, minus
/// `log₂ Δ`; an upper bound on [`uniform_gaussian_channel_mi`].
pub fn gaussian_majorant_mi(sigma2: f64, delta: f64) -> f64 {
    0.5 * (2.0 * PI * E * (delta * delta / 12.0 + sigma2)).log2() - delta.log2()
}

/// Differential entropy (bits) of `N(0, σ²)`.
pub fn gaussian_entropy_bits(sigma2: f64) -> f64 {
    0.5 * (2.0 * PI * E * sigma2).ln() / LN_2
}

/// Slack of the entropy-coded quantizer rate against `RDF(D) + C_Δ(D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// `Σ Δᵢ²/12`.
    pub d: f64,
    pub rdf_bits: f64,
    /// Estimate of `H(q̃ | ξ)`.
    pub entropy_bits: f64,
    pub cap_bound_bits: f64,
    /// `rdf + cap − entropy`; nonnegative when the bound holds.
    pub slack: f64,
}

impl GapReport {
    pub fn new(theta_cov: &SymMatrix, steps: &[f64], entropy_bits: f64) -> Result<Self> {
        let d = steps.iter().map(|s| s * s / 12.0).sum();
        let rdf_bits = gaussian_rdf(theta_cov, d)?;
        let cap_bound_bits = capacity_gap_bound(steps.len());
        Ok(Self {
            d,
            rdf_bits,
            entropy_bits,
            cap_bound_bits,
            slack: rdf_bits + cap_bound_bits - entropy_bits,
        })
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rdf_examples() {
        let one = SymMatrix::identity(1);
        assert_eq!(gaussian_rdf(&one, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(gaussian_rdf(&one, 0.25).unwrap(), 1.0, epsilon = 1e-14);
        let two = SymMatrix::from_diagonal(&[2.0, 1.0]);
        assert_abs_diff_eq!(gaussian_rdf(&two, 1.0).unwrap(), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn rdf_water_level_saturates_small_modes() {
        // λ = (4, 0.1), D = 1: level 0.9 > 0.1, so only the big mode is coded.
        let (level, rate) = reverse_water_fill(&[4.0, 0.1], 1.0);
        assert_abs_diff_eq!(level, 0.9, epsilon = 1e-14);
        assert_abs_diff_eq!(rate, 0.5 * (4.0f64 / 0.9).log2(), epsilon = 1e-14);
    }

    #[test]
    fn capacity_constants() {
        assert_abs_diff_eq!(capacity_gap_bound(1), 0.754, epsilon = 1e-3);
        assert_abs_diff_eq!(capacity_gap_bound(2), 1.5093, epsilon = 1e-4);
        assert_abs_diff_eq!(capacity_gap_bound(1) + 1.0, 1.7546, epsilon = 1e-4);
        let intro = 0.5 * (2.0 * PI * E / 12.0).log2() + 1.0;
        assert_abs_diff_eq!(intro, 1.254, epsilon = 1e-3);
    }

    #[test]
    fn mi_vanishes_for_tiny_input() {
        let mi = uniform_gaussian_channel_mi(1e-10, 1.0).unwrap();
        assert!(mi.abs() < 1e-4, "{mi}");
    }

    #[test]
    fn mi_at_unit_snr_is_bracketed() {
        let delta = 12f64.sqrt();
        let sigma2 = delta * delta / 12.0;
        let mi = uniform_gaussian_channel_mi(sigma2, delta).unwrap();
        let rdf = gaussian_rdf(&SymMatrix::from_diagonal(&[sigma2]), sigma2).unwrap();
        assert!(mi > rdf && mi < capacity_gap_bound(1), "{mi}");
    }

    #[test]
    fn mi_below_gaussian_majorant() {
        for &(s2, d) in &[(0.1, 1.0), (1.0, 1.0), (0.01, 3.0)] {
            let mi = uniform_gaussian_channel_mi(s2, d).unwrap();
            assert!(mi < gaussian_majorant_mi(s2, d), "{s2} {d}");
        }
        // Nearly Gaussian output: the gap is below quadrature accuracy.
        let mi = uniform_gaussian_channel_mi(10.0, 0.5).unwrap();
        assert!(mi <= gaussian_majorant_mi(10.0, 0.5) + 1e-9);
    }

    #[test]
    fn large_snr_mi_tends_to_gaussian_entropy() {
        // σ ≫ Δ: h(y) ≈ h(x).
        let mi = uniform_gaussian_channel_mi(100.0, 0.1).unwrap();
        let approx = gaussian_entropy_bits(100.0) - 0.1f64.log2();
        assert!((mi - approx).abs() < 1e-3);
    }

    #[test]
    fn density_integrates_to_one() {
        let total = integrate(&|y| gaussian_uniform_density(y, 0.3, 2.0), -6.0, 6.0, 64).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }
}
