mod common;

use candor_core::pdmp_sim::{martingale_diagnostic, regime_change_series, simulate, EventKind, SimConfig};
use candor_core::single_switch::solve_candid_first;
use candor_core::{ModelParams, PolicySchedule, Regime};
use common::{coexist_params, simpson};

fn coexist_params_config(n: usize, seed: u64) -> SimConfig {
    let p = coexist_params();
    let theta = solve_candid_first(&p).unwrap().theta.unwrap();
    SimConfig::new(p, PolicySchedule::candid_first(theta).unwrap(), n, seed).unwrap()
}

#[test]
fn disclosure_frequency_matches_model_probability() {
    let p = ModelParams::new(1.0, 0.5, 0.8).unwrap();
    let config = SimConfig::new(p, PolicySchedule::always(Regime::Sparing), 100_000, 42).unwrap();
    let out = simulate(&config);
    let arrivals: Vec<_> = out.records.iter().flat_map(|r| r.arrivals.iter()).collect();
    let n = arrivals.len() as f64;
    let observed = arrivals.iter().filter(|a| a.disclosed).count() as f64;
    let probs: Vec<f64> = arrivals.iter().map(|a| a.disclosure_probability.unwrap()).collect();
    let expected: f64 = probs.iter().sum();
    let var: f64 = probs.iter().map(|q| q * (1.0 - q)).sum();
    assert!((observed - expected).abs() < 3.0 * var.sqrt(), "observed {observed} expected {expected} of {n}");
}

#[test]
fn biased_forecast_fails_martingale_check() {
    let p = ModelParams::new(5.0, 1.0, 0.8).unwrap();
    let mut config = SimConfig::new(p, PolicySchedule::always(Regime::Candid), 20_000, 1).unwrap();
    assert!(martingale_diagnostic(&simulate(&config).records).unwrap().passed);
    config.drift_correction = false;
    assert!(!martingale_diagnostic(&simulate(&config).records).unwrap().passed);
}

#[test]
fn reruns_are_bit_identical() {
    let config = coexist_params_config(5_000, 42);
    let a = simulate(&config);
    let b = simulate(&config);
    assert_eq!(a, b);
    let c = simulate(&coexist_params_config(5_000, 43));
    assert_ne!(a.summary, c.summary);
}

#[test]
fn withheld_only_when_sparing_and_below_threshold() {
    let out = simulate(&coexist_params_config(20_000, 7));
    for r in &out.records {
        for a in &r.arrivals {
            let withhold = a.regime == Regime::Sparing && a.forecast < a.gamma_before;
            assert_eq!(a.disclosed, !withhold);
        }
        assert_eq!(r.arrivals.len(), r.disclosed() + r.withheld());
    }
}

#[test]
fn valuation_between_events_follows_the_ode() {
    let config = coexist_params_config(300, 11);
    let p = &config.params;
    let theta = config.policy.switch_times()[0];
    // γ after u units of silence under candid-first: exp(−λ∫_θ^u h) beyond θ
    let silent = |u: f64| if u <= theta { 1.0 } else { (-p.lambda * simpson(|s| p.h(s), theta, u, 2000)).exp() };
    for r in &simulate(&config).records {
        let mut origin = 0.0;
        let mut level = 1.0;
        for a in &r.arrivals {
            let expected = level * silent(a.time - origin);
            assert!((a.gamma_before - expected).abs() < 1e-8 * level.max(1.0));
            let mid = 0.5 * (origin + a.time);
            assert!((r.valuation_at(&config, mid) - level * silent(mid - origin)).abs() < 1e-8 * level.max(1.0));
            if a.disclosed {
                origin = a.time;
                level = a.forecast;
            }
        }
    }
}

#[test]
fn no_news_means_flat_valuation() {
    let p = ModelParams::new(0.0, 4.0, 0.8).unwrap();
    let config = SimConfig::new(p, PolicySchedule::candid_first(0.3).unwrap(), 100, 1).unwrap();
    let out = simulate(&config);
    assert_eq!(out.summary.arrivals, 0);
    for r in &out.records {
        assert_eq!(r.public_values, [1.0; 4]);
    }
    let rep = martingale_diagnostic(&out.records).unwrap();
    assert!(rep.checkpoints.iter().all(|c| c.mean == 1.0 && c.se == 0.0));
}

#[test]
fn event_series_reconciles() {
    let config = coexist_params_config(500, 3);
    let out = simulate(&config);
    let events = regime_change_series(&out.records);
    for r in &out.records {
        let mine: Vec<_> = events.iter().filter(|e| e.path == r.path).collect();
        let disclosed = mine.iter().filter(|e| e.kind == EventKind::ArrivalDisclosed).count();
        let withheld = mine.iter().filter(|e| e.kind == EventKind::ArrivalWithheld).count();
        assert_eq!(disclosed + withheld, r.arrivals.len());
        assert_eq!(mine.last().unwrap().kind, EventKind::Mandatory);
        assert!(mine.windows(2).all(|w| w[0].time <= w[1].time));
        // one switch per silence period that outlasts θ
        let theta = config.policy.switch_times()[0];
        let mut starts = vec![0.0];
        starts.extend(r.arrivals.iter().filter(|a| a.disclosed).map(|a| a.time));
        let expected = starts.iter().filter(|&&s| s + theta < 1.0).filter(|&&s| {
            r.arrivals.iter().filter(|a| a.disclosed).all(|a| a.time <= s || a.time >= s + theta)
        }).count();
        let switches = mine.iter().filter(|e| e.kind == EventKind::PolicySwitch).count();
        assert_eq!(switches, expected);
    }
}
