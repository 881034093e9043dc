use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinbath::bath::{build_correlation, build_jc_correlation_matrix, SpectralFamily, SpectralModel};
use spinbath::TimeGrid;

fn fig1() -> SpectralModel {
    SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 1.0).unwrap()
}

/// Composite Gauss-Legendre (5 points) on a fixed uniform partition.
fn gauss_legendre<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let x = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for j in 0..5 {
            acc += f(mid + 0.5 * h * x[j]) * w[j];
        }
    }
    acc * (0.5 * h)
}

#[test]
fn fig1_kernel_matches_independent_quadrature() {
    let model = fig1();
    let (a, lam, temp) = (2.0 * PI, 20.0, 1.0);
    let integrand = |tau: f64| {
        move |w: f64| {
            let j = a * w * (-(w * w) / (lam * lam)).exp();
            let jcoth = if w == 0.0 { 2.0 * a * temp } else { j / (w / (2.0 * temp)).tanh() };
            Complex64::new(jcoth * (w * tau).cos(), -j * (w * tau).sin())
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let tau: f64 = rng.random_range(0.0..0.2);
        let reference = gauss_legendre(integrand(tau), 0.0, 160.0, 20_000);
        let value = model.correlation(tau).unwrap();
        let rel = (value - reference).norm() / reference.norm();
        assert!(rel <= 1e-8, "τ={tau}: {value} vs {reference} ({rel:e})");
    }
}

#[test]
fn zero_temperature_moment() {
    let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 0.0).unwrap();
    let d0 = m.correlation(0.0).unwrap();
    assert!((d0.re - PI * 400.0).abs() <= 1e-8 * PI * 400.0);
    assert_eq!(d0.im, 0.0);
}

#[test]
fn tolerance_refinement_is_monotone() {
    let m = fig1();
    for tau in [0.0, 0.013, 0.07, 0.31] {
        for tol in [1e-6, 1e-8, 1e-10] {
            let coarse = m.correlation_with_tol(tau, tol).unwrap();
            let fine = m.correlation_with_tol(tau, 0.5 * tol).unwrap();
            let scale = m.correlation(0.0).unwrap().norm();
            assert!((coarse - fine).norm() < tol * scale, "τ={tau} tol={tol}");
        }
    }
}

#[test]
fn single_mode_vacuum_matrix() {
    let (w, g2) = (3.0, 0.7);
    let m = SpectralModel::single_mode(w, g2, 0.0).unwrap();
    for tau in [0.0, 0.4, 2.5] {
        let d = m.jc_correlation(tau).unwrap();
        let expect = Complex64::new(0.0, -w * tau).exp() * g2;
        assert!((d[0] - expect).norm() < 1e-14);
        assert!((d[3] - expect).norm() < 1e-14);
        // D_xy = −i D_xx in the vacuum
        assert!((d[1] + Complex64::i() * expect).norm() < 1e-14);
    }
    assert!((m.spectral_density(w).unwrap() - g2 / (w * 1e-3 * (2.0 * PI).sqrt())).abs() < 1e-9);
}

#[test]
fn hot_bath_equal_time_real() {
    let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, 1e4).unwrap();
    let d = m.jc_correlation(0.0).unwrap();
    assert_eq!(d[0].im, 0.0);
    assert!(d[0].re > 0.0);
}

#[test]
fn matrix_kernel_hermiticity_and_stationarity() {
    let grid = TimeGrid::new(0.1, 41).unwrap();
    for t in [0.0, 1.0] {
        let bath = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, t).unwrap();
        for k in [build_correlation(&bath, &grid).unwrap(), build_jc_correlation_matrix(&bath, &grid).unwrap()] {
            assert!(k.hermiticity_defect() <= 1e-10 * k.max_abs());
            assert!(k.stationarity_defect() <= 1e-10 * k.max_abs());
            assert!(k.is_stationary());
        }
    }
}

#[test]
fn tabulated_family_tracks_ohmic() {
    let (a, lam) = (2.0 * PI, 20.0);
    let samples: Vec<(f64, f64)> = (0..=4000)
        .map(|i| {
            let w = 160.0 * i as f64 / 4000.0;
            (w, a * w * (-(w * w) / (lam * lam)).exp())
        })
        .collect();
    let tab = SpectralModel::new(SpectralFamily::Tabulated { samples }, 1.0).unwrap();
    let exact = fig1();
    for tau in [0.0, 0.05] {
        let a = tab.correlation(tau).unwrap();
        let b = exact.correlation(tau).unwrap();
        assert!((a - b).norm() <= 1e-3 * b.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lag_reversal_conjugates(tau in 0.0f64..0.5, temp in 0.0f64..5.0) {
        let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, temp).unwrap();
        let fwd = m.correlation(tau).unwrap();
        let back = m.correlation(-tau).unwrap();
        prop_assert!((fwd - back.conj()).norm() <= 1e-12 * m.correlation(0.0).unwrap().norm());
    }

    #[test]
    fn spectral_density_nonnegative(w in 0.0f64..200.0, a in 0.1f64..10.0, lam in 0.5f64..50.0) {
        let m = SpectralModel::ohmic_gaussian(a, lam, 0.0).unwrap();
        prop_assert!(m.spectral_density(w).unwrap() >= 0.0);
    }

    #[test]
    fn jc_entries_hermitian_in_lag(tau in 0.0f64..0.5, temp in 0.0f64..3.0) {
        let m = SpectralModel::ohmic_gaussian(2.0 * PI, 20.0, temp).unwrap();
        let fwd = m.jc_correlation(tau).unwrap();
        let back = m.jc_correlation(-tau).unwrap();
        let scale = fwd[0].norm().max(1.0);
        // D_ij(τ) = D_ji(−τ)*
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            prop_assert!((fwd[2 * i + j] - back[2 * j + i].conj()).norm() <= 1e-10 * scale);
        }
    }
}
