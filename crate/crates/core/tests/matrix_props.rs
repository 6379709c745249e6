use lqg_rate::matrix::{eig_sym, ln_det_spd, psd_rank, SymMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spd(n: usize) -> impl Strategy<Value = SymMatrix> {
    proptest::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
        let m = DMatrix::from_row_slice(n, n, &v);
        SymMatrix::symmetrize(&m * m.transpose() + DMatrix::identity(n, n) * 0.1)
    })
}

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    proptest::collection::vec(-3.0..3.0f64, n * n)
        .prop_map(move |v| SymMatrix::symmetrize(DMatrix::from_row_slice(n, n, &v)))
}

proptest! {
    #[test]
    fn logdet_is_sum_of_log_eigenvalues(m in (1usize..=8).prop_flat_map(spd)) {
        let eig = eig_sym(&m).unwrap();
        let expect: f64 = eig.values.iter().map(|v| v.ln()).sum();
        let got = ln_det_spd(&m).unwrap();
        prop_assert!((got - expect).abs() < 1e-9 * (1.0 + expect.abs()));
    }

    #[test]
    fn eigen_reconstructs(m in (1usize..=8).prop_flat_map(sym)) {
        let eig = eig_sym(&m).unwrap();
        let err = (eig.reconstruct() - m.as_matrix()).norm();
        prop_assert!(err < 1e-10 * (1.0 + m.frobenius()));
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let n = m.dim();
        let orth = eig.vectors.transpose() * &eig.vectors - DMatrix::<f64>::identity(n, n);
        prop_assert!(orth.norm() < 1e-10);
    }

    #[test]
    fn symmetrize_is_idempotent(m in (1usize..=6).prop_flat_map(sym)) {
        let again = SymMatrix::symmetrize(m.as_matrix().clone());
        prop_assert_eq!(&again, &m);
    }

    #[test]
    fn spd_inverse(m in (1usize..=6).prop_flat_map(spd)) {
        let inv = m.inverse_spd().unwrap();
        let n = m.dim();
        let err = (m.as_matrix() * inv.as_matrix() - DMatrix::<f64>::identity(n, n)).norm();
        prop_assert!(err < 1e-8);
    }

    #[test]
    fn rank_of_low_rank_products(n in 2usize..=6, k in 0usize..=2, seed in proptest::collection::vec(-1.0..1.0f64, 12)) {
        let k = k.min(n - 1);
        let u = DMatrix::from_fn(n, k, |i, j| seed[(i * 2 + j) % 12] + if i == j { 2.0 } else { 0.0 });
        let m = SymMatrix::symmetrize(&u * u.transpose());
        prop_assert_eq!(psd_rank(&m, 1e-9).unwrap(), k);
    }
}
