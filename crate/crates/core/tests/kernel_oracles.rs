mod common;

use approx::assert_abs_diff_eq;
use candor_core::kernel::{self, eta, g, h, h_prime, std_normal_cdf};
use candor_core::ModelParams;
use common::{h_oracle, phi_series, simpson};
use proptest::prelude::*;

#[test]
fn normal_cdf_matches_series() {
    assert_abs_diff_eq!(std_normal_cdf(2.0), 0.977249868, epsilon = 1e-9);
    for i in -40..=40 {
        let x = i as f64 * 0.1;
        assert_abs_diff_eq!(std_normal_cdf(x), phi_series(x), epsilon = 1e-14);
    }
}

#[test]
fn h_at_origin() {
    assert_abs_diff_eq!(h(0.0, 4.0).unwrap(), 0.954500, epsilon = 1e-6);
    assert_abs_diff_eq!(h(1.0, 4.0).unwrap(), 0.0, epsilon = 1e-15);
}

#[test]
fn h_matches_series_oracle() {
    for sigma in [0.5, 1.0, 2.0, 4.0] {
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            assert_abs_diff_eq!(h(t, sigma).unwrap(), h_oracle(t, sigma), epsilon = 1e-13);
        }
    }
}

#[test]
fn h_prime_matches_finite_difference() {
    let step = 1e-5;
    for sigma in [1.0, 4.0, 8.0] {
        for i in 1..20 {
            let t = i as f64 / 20.0;
            let fd = (h_oracle(t + step, sigma) - h_oracle(t - step, sigma)) / (2.0 * step);
            assert_abs_diff_eq!(h_prime(t, sigma).unwrap(), fd, epsilon = 1e-8);
        }
    }
}

#[test]
fn g_matches_quadrature_on_fine_grid() {
    for sigma in [0.5, 2.0, 4.0, 8.0] {
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let q = simpson(|s| h_oracle(s, sigma), 0.0, t, 200);
            assert_abs_diff_eq!(g(t, sigma).unwrap(), q, epsilon = 1e-8);
        }
    }
}

#[test]
fn g_reference_values() {
    assert_abs_diff_eq!(g(1.0, 4.0).unwrap(), 0.60955, epsilon = 1e-5);
    // the reference value is rounded; quadrature gives 0.1628537
    assert_abs_diff_eq!(g(0.175, 4.0).unwrap(), 0.16284, epsilon = 2e-5);
}

#[test]
fn eta_from_independent_derivative() {
    for sigma in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let step = 1e-5;
        let hp = (h_oracle(step, sigma) - h_oracle(-step, sigma)) / (2.0 * step);
        let h0 = h_oracle(0.0, sigma);
        assert_abs_diff_eq!(eta(sigma).unwrap(), -hp / (h0 * h0), epsilon = 1e-7);
    }
    assert_abs_diff_eq!(eta(4.0).unwrap(), 0.23704, epsilon = 1e-5);
    assert_abs_diff_eq!(eta(2.0).unwrap(), 1.0383562562, epsilon = 1e-9);
}

#[test]
fn domain_is_enforced() {
    assert!(h(-0.1, 1.0).is_err());
    assert!(g(1.1, 1.0).is_err());
    assert!(ModelParams::new(1.0, 0.0, 0.5).is_err());
    assert!(ModelParams::new(1.0, 1.0, 1.0).is_err());
    assert!(ModelParams::new(-1.0, 1.0, 0.5).is_err());
}

#[test]
fn equilibrating_factor_is_monotone_below_eta() {
    let sigma = 4.0;
    let e = eta(sigma).unwrap();
    let p = ModelParams::new(0.9 * e, sigma, 0.5).unwrap();
    let mut prev = f64::INFINITY;
    for i in 0..=200 {
        let t = i as f64 / 200.0;
        let f = kernel::equilibrating_factor(t, &p).unwrap();
        assert!(f <= prev + 1e-14, "factor increased at t = {t}");
        prev = f;
    }
}

proptest! {
    #[test]
    fn h_decreasing_g_increasing_concave(sigma in 0.1f64..10.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(h(lo, sigma).unwrap() >= h(hi, sigma).unwrap());
        prop_assert!(g(lo, sigma).unwrap() <= g(hi, sigma).unwrap());
        let mid = 0.5 * (lo + hi);
        let chord = 0.5 * (g(lo, sigma).unwrap() + g(hi, sigma).unwrap());
        prop_assert!(g(mid, sigma).unwrap() >= chord - 1e-14);
        prop_assert!(h(lo, sigma).unwrap() >= 0.0 && h(lo, sigma).unwrap() < 1.0);
    }
}
