mod common;

use common::*;
use lqg_rate::di::solve_di;
use lqg_rate::lqr::{min_cost, solve_dare, PlantModel};
use lqg_rate::sensor::realize_sensor;
use lqg_rate::validation::gaussian_rdf;
use nalgebra::DMatrix;

fn cases() -> Vec<(PlantModel, f64)> {
    let mut out = Vec::new();
    for a in [1.2, 2.0] {
        out.push((scalar_model(a), 0.5));
        out.push((scalar_model(a), 5.0));
    }
    out.push((two_state_model(), 1.0));
    out.push((two_state_model(), 0.3));
    out
}

#[test]
fn realization_invariants() {
    for (model, extra) in cases() {
        let cert = solve_dare(&model).unwrap();
        let floor = min_cost(&model, &cert);
        let sol = solve_di(&model, &cert, floor * (1.0 + extra)).unwrap();
        let sensor = realize_sensor(&model, &sol).unwrap();
        let r = sensor.rank();
        assert_eq!(r, sol.rank_r);

        let gram = &sensor.c * sensor.c.transpose();
        assert!((gram - DMatrix::<f64>::identity(r, r)).norm() < 1e-10);
        let snr_err = sensor.recompose_snr().sub(&sol.snr).frobenius();
        assert!(snr_err < 1e-6 * (1.0 + sol.snr.frobenius()), "{snr_err}");
        for (d, v) in sensor.delta.iter().zip(&sensor.v) {
            assert!((d * d / 12.0 - v).abs() < 1e-12 * v.max(1.0));
        }

        let p_err = sensor.kalman.p_filt.sub(&sol.p_opt).frobenius();
        assert!(p_err < 1e-5, "P_filt vs P*: {p_err}");
        let di = sensor.directed_info_bits().unwrap();
        assert!((di - sol.di_bits).abs() < 1e-4, "{di} vs {}", sol.di_bits);

        // Per-step information is at least the rate-distortion function of
        // the innovation at distortion Σ Vᵢ.
        let d: f64 = sensor.v.iter().sum();
        let rdf = gaussian_rdf(&sensor.innovation_cov(), d).unwrap();
        assert!(di >= rdf - 1e-3);
    }
}

#[test]
fn kalman_fixed_point() {
    let model = two_state_model();
    let cert = solve_dare(&model).unwrap();
    let sol = solve_di(&model, &cert, 2.0 * min_cost(&model, &cert)).unwrap();
    let k = realize_sensor(&model, &sol).unwrap().kalman;
    let pred = k.p_filt.congruence(&model.a).add(&model.w);
    assert!(pred.sub(&k.p_pred).frobenius() < 1e-9);
    assert!(k.residual < 1e-9);
}
