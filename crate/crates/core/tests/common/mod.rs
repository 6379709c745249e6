#![allow(dead_code)]

use lqg_rate::lqr::{min_cost, solve_dare, PlantModel};
use lqg_rate::matrix::SymMatrix;
use nalgebra::DMatrix;

pub fn scalar_model(a: f64) -> PlantModel {
    PlantModel::scalar(a, 1.0, 1.0, 1.0, 1.0).unwrap()
}

pub fn two_state_model() -> PlantModel {
    PlantModel::new(
        DMatrix::from_row_slice(2, 2, &[1.1, 0.2, 0.0, 0.8]),
        DMatrix::identity(2, 2),
        SymMatrix::identity(2),
        SymMatrix::identity(2),
        SymMatrix::identity(2),
        SymMatrix::identity(2),
    )
    .unwrap()
}

pub const TWO_STATE_FILE: &str = "\
A
1.1 0.2
0 0.8
B
1 0
0 1
W
1 0
0 1
Q
1 0
0 1
R
1 0
0 1
P0
1 0
0 1
";

pub fn scalar_file(a: f64) -> String {
    format!("A\n{a}\nB\n1\nW\n1\nQ\n1\nR\n1\nP0\n1\n")
}

pub fn min_cost_of(model: &PlantModel) -> f64 {
    min_cost(model, &solve_dare(model).unwrap())
}

/// Scalar DARE with `b = q = r = 1`: `s = a²s/(s + 1) + 1`, whose positive
/// root solves `s² − a²s − 1 = 0`.
pub fn scalar_dare(a: f64) -> f64 {
    (a * a + (a.powi(4) + 4.0).sqrt()) / 2.0
}

/// Scalar `Θ = k²(s + 1)` with `k = −a s/(s + 1)`.
pub fn scalar_theta(a: f64) -> f64 {
    let s = scalar_dare(a);
    a * a * s * s / (s + 1.0)
}

/// Schur-complement bound `Π = P − a²P²/(a²P + w)` of the scalar LMI.
fn pi_of(a: f64, w: f64, p: f64) -> f64 {
    p - a * a * p * p / (a * a * p + w)
}

fn feasible(a: f64, w: f64, theta: f64, budget: f64, p: f64) -> bool {
    p > 0.0 && theta * p <= budget && p <= a * a * p + w
}

/// Scalar optimum: the objective `½log₂(w/Π)` falls with `P`, so `P*` is the
/// largest feasible value.
pub fn scalar_di_closed_form(a: f64, w: f64, theta: f64, budget: f64) -> f64 {
    let mut p = if theta > 0.0 { budget / theta } else { f64::INFINITY };
    if a.abs() < 1.0 {
        p = p.min(w / (1.0 - a * a));
    }
    (0.5 * (w / pi_of(a, w, p)).log2()).max(0.0)
}

/// Zooming grid search over `P` of `½log₂(w/Π(P))` subject to the scalar
/// constraints. Each round evaluates `points` values and narrows the bracket
/// around the best one.
pub fn scalar_di_grid_search(a: f64, w: f64, theta: f64, budget: f64, points: usize) -> f64 {
    let cap = if a.abs() < 1.0 { w / (1.0 - a * a) } else { f64::INFINITY };
    let mut hi = (budget / theta).min(cap) * 4.0 + 1.0;
    let mut lo = 0.0;
    let mut best = f64::INFINITY;
    let mut best_p = 0.0;
    for _ in 0..8 {
        let h = (hi - lo) / (points - 1) as f64;
        for i in 0..points {
            let p = lo + i as f64 * h;
            if !feasible(a, w, theta, budget, p) {
                continue;
            }
            let v = 0.5 * (w / pi_of(a, w, p)).log2();
            if v < best {
                best = v;
                best_p = p;
            }
        }
        lo = (best_p - 2.0 * h).max(0.0);
        hi = best_p + 2.0 * h;
    }
    best.max(0.0)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Asymptotic Kolmogorov tail `P(K > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// One-sample KS statistic against `U[lo, hi)` and its p-value.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut s: Vec<f64> = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    (d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d))
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}
