use coreg_core::linalg::{self, kron, unvec, vec, Matrix};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0f64..5.0, rows * cols)
        .prop_map(move |data| Matrix::from_row_major(rows, cols, data).unwrap())
}

fn any_matrix(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| matrix(r, c))
}

fn relative_gap(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).frobenius_norm() / a.frobenius_norm().max(b.frobenius_norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(
        (a, c) in (1..4usize, 1..4usize, 1..4usize)
            .prop_flat_map(|(r, k, s)| (matrix(r, k), matrix(k, s))),
        (b, d) in (1..4usize, 1..4usize, 1..4usize)
            .prop_flat_map(|(r, k, s)| (matrix(r, k), matrix(k, s))),
    ) {
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(relative_gap(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn vec_of_triple_product(
        (a, x, b) in (1..4usize, 1..4usize, 1..4usize, 1..4usize)
            .prop_flat_map(|(r, k, l, s)| (matrix(r, k), matrix(k, l), matrix(l, s))),
    ) {
        let lhs = vec(&(&(&a * &x) * &b));
        let rhs = &kron(&b.transpose(), &a) * &vec(&x);
        prop_assert!(relative_gap(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn unvec_inverts_vec(a in any_matrix(5)) {
        prop_assert_eq!(unvec(&vec(&a), a.rows(), a.cols()).unwrap(), a);
    }

    #[test]
    fn spectrum_is_closed_under_conjugation(a in (1..7usize).prop_flat_map(|n| matrix(n, n))) {
        let sp = linalg::spectrum(&a).unwrap();
        let conj: Vec<_> = sp.eigenvalues().iter().map(|z| z.conj()).collect();
        prop_assert!(linalg::multiset_distance(sp.eigenvalues(), &conj) < 1e-9);
    }

    #[test]
    fn spectrum_matches_trace(a in (1..7usize).prop_flat_map(|n| matrix(n, n))) {
        let sp = linalg::spectrum(&a).unwrap();
        let sum: f64 = sp.eigenvalues().iter().map(|z| z.re).sum();
        let trace: f64 = (0..a.rows()).map(|i| a[(i, i)]).sum();
        prop_assert!((sum - trace).abs() < 1e-8 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn rho_dominates_modulus_in_unit_strip(
        values in prop::collection::vec(0.05f64..1.0, 1..5),
        basis in (1..5usize).prop_flat_map(|n| matrix(n, n)),
    ) {
        // T diag(values) T⁻¹ has real eigenvalues in (0, 1]
        let n = values.len().min(basis.rows());
        let t = &basis.block(0, 0, n, n) + &Matrix::identity(n).scale(12.0);
        let d = Matrix::diag(&values[..n]);
        let a = &(&t * &d) * &linalg::Lu::factor(&t).unwrap().inverse().unwrap();
        let rho = linalg::rho(&a).unwrap();
        prop_assert!(rho >= linalg::spectral_radius(&a).unwrap() - 1e-9);
    }

    #[test]
    fn rho_of_spd_is_top_eigenvalue(m in (1..6usize).prop_flat_map(|n| matrix(n, n))) {
        let n = m.rows();
        let spd = &(&m.transpose() * &m) + &Matrix::identity(n);
        let top = linalg::symmetric_eigenvalues(&spd).unwrap().into_iter().fold(0.0, f64::max);
        prop_assert!((linalg::rho(&spd).unwrap() - top).abs() < 1e-9 * top);
    }

    #[test]
    fn solve_linear_recovers_solution(
        a in (1..6usize).prop_flat_map(|n| matrix(n, n)),
        seed in 0u64..1000,
    ) {
        let n = a.rows();
        let a = &a + &Matrix::identity(n).scale(20.0);
        let x: Vec<f64> = (0..n).map(|i| ((seed as f64) + i as f64).sin()).collect();
        let x = Matrix::col(&x);
        let b = &a * &x;
        let solved = linalg::solve_linear(&a, &b).unwrap();
        prop_assert!((&solved - &x).max_abs() < 1e-10);
    }
}

#[test]
fn singular_system_is_reported() {
    let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
    assert!(matches!(
        linalg::solve_linear(&a, &Matrix::col(&[1.0, 1.0])),
        Err(coreg_core::Error::Singular { .. })
    ));
}
