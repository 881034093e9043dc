use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use proptest::prelude::*;
use spinbath::propagator::{
    anticommutator, contraction, jc_anticommutator, jc_contraction_matrix, jc_propagator, tls_propagator, TlsParams,
};

type C = Complex64;

fn fd_error(p: &TlsParams, u: f64, h: f64) -> f64 {
    let d = (tls_propagator(p, u + h) - tls_propagator(p, u - h)) / (2.0 * h);
    (d - p.generator() * tls_propagator(p, u)).amax()
}

#[test]
fn finite_difference_order() {
    let p = TlsParams::new(10.0, 10.0).unwrap();
    for u in [-0.7, 0.13, 1.9] {
        let slope = (fd_error(&p, u, 1e-2) / fd_error(&p, u, 5e-3)).log2();
        assert!((slope - 2.0).abs() <= 0.1, "u={u}: slope {slope}");
    }
}

#[test]
fn small_omega_limits() {
    let p = TlsParams::new(1e-8, 0.0).unwrap();
    let b = tls_propagator(&p, 2.0);
    assert!((b - Matrix3::identity()).amax() <= 1e-6);
    let q = TlsParams::new(0.0, 1e-8).unwrap();
    assert!((tls_propagator(&q, 2.0) - Matrix3::identity()).amax() <= 1e-6);
}

/// `σ^i(u) = e^{iHu} σ^i e^{−iHu}` by RK4 on the operator equation.
fn heisenberg(omega0: f64, op: Matrix2<C>, u: f64) -> Matrix2<C> {
    let h = Matrix2::new(C::new(omega0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
    let f = |x: &Matrix2<C>| (h * x - x * h) * C::new(0.0, 1.0);
    let steps = 4000;
    let dt = u / steps as f64;
    let mut x = op;
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(x + k1 * C::new(0.5 * dt, 0.0)));
        let k3 = f(&(x + k2 * C::new(0.5 * dt, 0.0)));
        let k4 = f(&(x + k3 * C::new(dt, 0.0)));
        x += (k1 + k2 * C::new(2.0, 0.0) + k3 * C::new(2.0, 0.0) + k4) * C::new(dt / 6.0, 0.0);
    }
    x
}

#[test]
fn jc_rotation_matches_heisenberg_integration() {
    let sx = Matrix2::new(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0));
    let sy = Matrix2::new(C::new(0.0, 0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), C::new(0.0, 0.0));
    for (w0, u) in [(2.0, 0.9), (7.5, -0.4), (0.3, 3.0)] {
        let r = jc_propagator(w0, u);
        for (i, op) in [sx, sy].into_iter().enumerate() {
            let evolved = heisenberg(w0, op, u);
            let expect = sx * C::new(r[(i, 0)], 0.0) + sy * C::new(r[(i, 1)], 0.0);
            assert!((evolved - expect).camax() <= 1e-10, "ω0={w0} u={u} row {i}");
        }
    }
}

#[test]
fn jc_contraction_examples() {
    let c = jc_contraction_matrix(4.0, 0.2, 0.2);
    assert!((c - Matrix2::new(-1.0, 0.0, 0.0, -1.0)).amax() < 1e-15);
    assert_eq!(jc_contraction_matrix(4.0, 0.5, 0.2), Matrix2::zeros());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rows_have_unit_norm(d in -20.0f64..20.0, e in -20.0f64..20.0, u in -5.0f64..5.0) {
        let b = tls_propagator(&TlsParams::new(d, e).unwrap(), u);
        for i in 0..3 {
            prop_assert!((b.row(i).norm() - 1.0).abs() <= 1e-12);
        }
        prop_assert!((b.transpose() * b - Matrix3::identity()).amax() <= 1e-12);
    }

    #[test]
    fn contraction_is_reference_free(
        d in -20.0f64..20.0, e in -20.0f64..20.0,
        s1 in 0.0f64..2.0, s2 in 0.0f64..2.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0,
    ) {
        let p = TlsParams::new(d, e).unwrap();
        prop_assert!((contraction(&p, s1, s2, t1) - contraction(&p, s1, s2, t2)).abs() <= 1e-12);
        prop_assert!((anticommutator(&p, s1, s2, t1) - anticommutator(&p, s2, s1, t1)).abs() <= 1e-12);
        let w0 = e.abs();
        prop_assert!((jc_anticommutator(w0, s1, s2, t1) - jc_anticommutator(w0, s1, s2, t2)).amax() <= 1e-12);
    }

    #[test]
    fn contraction_limit_below_diagonal(d in -20.0f64..20.0, e in -20.0f64..20.0, s in 0.0f64..2.0) {
        let p = TlsParams::new(d, e).unwrap();
        prop_assert!((contraction(&p, s - 1e-9, s, 0.0) + 2.0).abs() <= 1e-6);
        prop_assert_eq!(contraction(&p, s + 1e-3, s, 0.0), 0.0);
    }
}
