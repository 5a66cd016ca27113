mod common;

use approx::assert_abs_diff_eq;
use candor_core::costate::{verify_optimality_rule, Costate};
use candor_core::single_switch::solve_candid_first;
use candor_core::valuation::{gamma_at, gamma_path, ode_integrate};
use candor_core::{ModelParams, PolicySchedule, Regime};
use common::{coexist_params, ParamSampler};
use proptest::prelude::*;
use rand::Rng;

/// Classical RK4 for y' = f(t, y) from `t0` to `t1` in `n` steps.
fn rk4<F: Fn(f64, f64) -> f64>(f: F, t0: f64, y0: f64, t1: f64, n: usize) -> f64 {
    let step = (t1 - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = t0 + step * i as f64;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * step, y + 0.5 * step * k1);
        let k3 = f(t + 0.5 * step, y + 0.5 * step * k2);
        let k4 = f(t + step, y + step * k3);
        y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

fn random_policy(sampler: &mut ParamSampler) -> PolicySchedule {
    let rng = sampler.rng();
    let n = rng.random_range(0..5);
    let mut switches: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
    switches.sort_by(f64::total_cmp);
    switches.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let initial = if rng.random_bool(0.5) { Regime::Candid } else { Regime::Sparing };
    PolicySchedule::bang_bang(initial, switches).unwrap()
}

/// Splits [a, b] at the policy switches so RK4 never steps across a jump;
/// `f` receives the level held on the current piece.
fn piecewise_rk4<F: Fn(f64, f64, f64) -> f64>(f: F, policy: &PolicySchedule, a: f64, y0: f64, b: f64) -> f64 {
    let mut knots = vec![a];
    knots.extend(policy.switch_times().iter().copied().filter(|&s| s > a.min(b) && s < a.max(b)));
    knots.push(b);
    if b < a {
        let last = knots.len() - 1;
        knots[1..last].reverse();
    }
    let mut y = y0;
    for w in knots.windows(2) {
        let level = policy.level_at(0.5 * (w[0] + w[1]));
        y = rk4(|s, v| f(s, v, level), w[0], y, w[1], 400);
    }
    y
}

#[test]
fn valuation_matches_rk4() {
    let mut sampler = ParamSampler::new(11);
    for _ in 0..30 {
        let p = sampler.draw();
        let policy = random_policy(&mut sampler);
        for &t in &[0.1, 0.37, 0.5, 0.81, 1.0] {
            let oracle = piecewise_rk4(|s, y, pi| -p.lambda * pi * p.h(s) * y, &policy, 0.0, 1.0, t);
            assert_abs_diff_eq!(gamma_at(&policy, &p, t), oracle, epsilon = 1e-10);
        }
    }
}

#[test]
fn ode_integrator_agrees_with_closed_form() {
    let p = coexist_params();
    let policy = PolicySchedule::sparing_first(0.4).unwrap();
    let closed = gamma_path(&policy, &p, 401).unwrap();
    let ode = ode_integrate(&policy, &p, 401).unwrap();
    for (a, b) in closed.gamma.iter().zip(&ode.gamma) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
    }
}

#[test]
fn always_sparing_is_gamma1() {
    let p = coexist_params();
    let policy = PolicySchedule::always(Regime::Sparing);
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        assert_abs_diff_eq!(gamma_at(&policy, &p, t), p.gamma1(t), epsilon = 1e-14);
    }
    let candid = PolicySchedule::always(Regime::Candid);
    assert_eq!(gamma_at(&candid, &p, 0.7), 1.0);
}

#[test]
fn costate_matches_backward_rk4() {
    let mut sampler = ParamSampler::new(12);
    for _ in 0..30 {
        let p = sampler.draw();
        let policy = random_policy(&mut sampler);
        let c = Costate::new(&policy, &p).unwrap();
        for &t in &[0.0, 0.2, 0.55, 0.9] {
            let f = |s: f64, mu: f64, pi: f64| {
                p.beta * p.kappa_at(s) * (1.0 - pi) + p.lambda * p.h(s) * pi * mu
            };
            let oracle = piecewise_rk4(f, &policy, 1.0, 0.0, t);
            assert_abs_diff_eq!(c.at(t), oracle, epsilon = 1e-9);
        }
    }
}

#[test]
fn perturbed_switch_breaks_optimality() {
    let p = coexist_params();
    let sol = solve_candid_first(&p).unwrap();
    let theta = sol.theta.unwrap();
    let exact = verify_optimality_rule(&sol.policy().unwrap(), &p, 2001).unwrap();
    assert!(exact.passed, "first violation at {:?}", exact.first_violation);

    let late = PolicySchedule::candid_first(theta + 0.05).unwrap();
    let report = verify_optimality_rule(&late, &p, 2001).unwrap();
    assert!(!report.passed);
    assert!(report.violations.iter().any(|&t| t > theta && t < theta + 0.1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn costate_sign_and_bound(seed in any::<u64>()) {
        let mut sampler = ParamSampler::new(seed);
        let p = sampler.draw();
        let p = ModelParams::from_rewards(p.lambda, p.sigma, 0.3 * (1.0 - p.kappa()), 0.3).unwrap();
        let policy = random_policy(&mut sampler);
        let c = Costate::new(&policy, &p).unwrap();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let mu = c.at(t);
            prop_assert!(mu <= 0.0);
            prop_assert!(mu.abs() <= (p.beta - p.alpha()) * (1.0 - t) + 1e-12);
        }
    }
}
