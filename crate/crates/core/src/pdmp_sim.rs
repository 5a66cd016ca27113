//! Monte Carlo simulation of the piecewise-deterministic valuation process.
//!
//! News reaches management at Poisson(λ) times. Management's forecast of the
//! mandatory-date value is the unit-mean lognormal martingale
//! `M_t = exp(σW(τ(t)) − σ²τ(t)/2)` with `τ(t) = 1 − (1 − t)²`, so the
//! remaining log-variance at `t` is `σ²(1 − t)²`. Under silence the public
//! valuation follows the equilibrium ODE of the policy, restarted at every
//! disclosure and scaled by the disclosed value.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{std_normal_cdf, ModelParams};
use crate::numeric::compensated_sum;
use crate::valuation::{gamma_at, PolicySchedule, Regime};

pub const CHECKPOINTS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    /// Policy on a silence period, restarted at each disclosure.
    pub policy: PolicySchedule,
    pub n_paths: usize,
    pub seed: u64,
    /// Subtract `σ²τ/2` in the forecast exponent. Turning it off yields a
    /// biased forecast, used as a negative control.
    pub drift_correction: bool,
}

impl SimConfig {
    pub fn new(params: ModelParams, policy: PolicySchedule, n_paths: usize, seed: u64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be at least 1".into()));
        }
        if !policy.is_bang_bang() {
            return Err(Error::Unsupported("simulation requires a bang-bang policy".into()));
        }
        Ok(Self { params, policy, n_paths, seed, drift_correction: true })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    /// Forecast `M_s` observed by management.
    pub forecast: f64,
    /// Public valuation just before the arrival.
    pub gamma_before: f64,
    pub regime: Regime,
    pub disclosed: bool,
    /// Model probability of disclosure given the path so far (sparing only).
    pub disclosure_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub path: usize,
    pub arrivals: Vec<Arrival>,
    /// Times at which the policy switched regime during silence.
    pub policy_switches: Vec<f64>,
    /// Management's latest forecast at each checkpoint.
    pub fair_values: [f64; 4],
    /// Public valuation at each checkpoint (just before the mandatory date for `t = 1`).
    pub public_values: [f64; 4],
    pub mandatory_value: f64,
    /// Set when a non-finite value appeared on the path.
    pub flagged: bool,
}

impl SimRecord {
    /// Public valuation at `t`, rebuilt from the disclosures on the path.
    pub fn valuation_at(&self, config: &SimConfig, t: f64) -> f64 {
        let (origin, level) = self
            .arrivals
            .iter()
            .rfind(|a| a.disclosed && a.time <= t)
            .map_or((0.0, 1.0), |a| (a.time, a.forecast));
        level * gamma_at(&config.policy, &config.params, t - origin)
    }

    pub fn disclosed(&self) -> usize {
        self.arrivals.iter().filter(|a| a.disclosed).count()
    }

    pub fn withheld(&self) -> usize {
        self.arrivals.len() - self.disclosed()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub n_paths: usize,
    pub arrivals: usize,
    pub disclosed: usize,
    pub withheld: usize,
    pub flagged: usize,
    pub mean_mandatory: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<SimRecord>,
    pub summary: SimSummary,
}

fn time_change(t: f64) -> f64 {
    1.0 - (1.0 - t) * (1.0 - t)
}

fn simulate_path(config: &SimConfig, path: usize) -> SimRecord {
    let params = &config.params;
    let sigma = params.sigma;
    let mut arrival_rng = ChaCha20Rng::seed_from_u64(config.seed);
    arrival_rng.set_stream(2 * path as u64);
    let mut brownian_rng = ChaCha20Rng::seed_from_u64(config.seed);
    brownian_rng.set_stream(2 * path as u64 + 1);

    let mut arrival_times = Vec::new();
    if params.lambda > 0.0 {
        let exp = Exp::new(params.lambda).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += exp.sample(&mut arrival_rng);
            if t >= 1.0 {
                break;
            }
            arrival_times.push(t);
        }
    }

    // sample W on arrivals ∪ checkpoints in time order
    let mut events: Vec<(f64, bool)> = arrival_times.iter().map(|&t| (t, true)).collect();
    events.extend(CHECKPOINTS.iter().map(|&c| (c, false)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)));

    let forecast = |w: f64, tau: f64| {
        let drift = if config.drift_correction { 0.5 * sigma * sigma * tau } else { 0.0 };
        (sigma * w - drift).exp()
    };

    let mut w = 0.0;
    let mut tau_prev = 0.0;
    let mut origin = 0.0;
    let mut level = 1.0;
    let mut latest_forecast = 1.0;
    let mut arrivals = Vec::with_capacity(arrival_times.len());
    let mut fair_values = [1.0; 4];
    let mut public_values = [1.0; 4];
    let mut checkpoint = 0;
    let mut mandatory_value = 1.0;
    let mut policy_switches = Vec::new();
    let mut flagged = false;

    let record_switches = |from: f64, to: f64, origin: f64, out: &mut Vec<f64>| {
        for &s in config.policy.switch_times() {
            let t = origin + s;
            if t > from && t < to {
                out.push(t);
            }
        }
    };
    let mut last_time = 0.0;

    for (t, is_arrival) in events {
        let tau = time_change(t);
        let dtau = tau - tau_prev;
        let z: f64 = StandardNormal.sample(&mut brownian_rng);
        let prev_w = w;
        let prev_tau = tau_prev;
        w += dtau.max(0.0).sqrt() * z;
        tau_prev = tau;
        let m = forecast(w, tau);
        if !m.is_finite() {
            flagged = true;
        }
        record_switches(last_time, t, origin, &mut policy_switches);
        last_time = t;
        if is_arrival {
            let u = t - origin;
            let gamma_before = level * gamma_at(&config.policy, params, u);
            let regime = config.policy.regime_at(u).unwrap_or(Regime::Sparing);
            let (disclosed, probability) = match regime {
                Regime::Candid => (true, None),
                Regime::Sparing => {
                    let p = disclosure_probability(sigma, prev_w, prev_tau, tau, gamma_before, config);
                    (m >= gamma_before, Some(p))
                }
            };
            arrivals.push(Arrival {
                time: t,
                forecast: m,
                gamma_before,
                regime,
                disclosed,
                disclosure_probability: probability,
            });
            latest_forecast = m;
            if disclosed {
                origin = t;
                level = m;
            }
        } else {
            fair_values[checkpoint] = latest_forecast;
            public_values[checkpoint] = level * gamma_at(&config.policy, params, t - origin);
            checkpoint += 1;
            if t == 1.0 {
                mandatory_value = m;
            }
        }
    }
    SimRecord { path, arrivals, policy_switches, fair_values, public_values, mandatory_value, flagged }
}

/// `P(M_s ≥ γ | W(τ_prev) = w)` for the lognormal forecast.
fn disclosure_probability(sigma: f64, w: f64, tau_prev: f64, tau: f64, gamma: f64, config: &SimConfig) -> f64 {
    let dtau = tau - tau_prev;
    let drift = if config.drift_correction { 0.5 * sigma * sigma * tau } else { 0.0 };
    let threshold = (gamma.ln() + drift) / sigma - w;
    if dtau <= 0.0 || sigma == 0.0 {
        return if threshold <= 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - std_normal_cdf(threshold / dtau.sqrt())
}

/// Simulates `n_paths` independent paths in parallel. Each path uses its own
/// pair of ChaCha streams keyed by the path index, so output is independent
/// of thread scheduling.
pub fn simulate(config: &SimConfig) -> SimOutput {
    let records: Vec<SimRecord> = (0..config.n_paths).into_par_iter().map(|i| simulate_path(config, i)).collect();
    let arrivals = records.iter().map(|r| r.arrivals.len()).sum();
    let disclosed = records.iter().map(SimRecord::disclosed).sum();
    let flagged = records.iter().filter(|r| r.flagged).count();
    let mean_mandatory = compensated_sum(records.iter().map(|r| r.mandatory_value)) / records.len() as f64;
    SimOutput {
        summary: SimSummary {
            n_paths: records.len(),
            arrivals,
            disclosed,
            withheld: arrivals - disclosed,
            flagged,
            mean_mandatory,
        },
        records,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointStat {
    pub time: f64,
    pub mean: f64,
    pub se: f64,
    pub public_mean: f64,
    pub public_se: f64,
    /// `|mean − 1| ≤ 3 SE`.
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub checkpoints: Vec<CheckpointStat>,
    pub mandatory: CheckpointStat,
    pub passed: bool,
}

fn mean_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = compensated_sum(values.clone()) / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.map(|v| (v - mean) * (v - mean))) / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

fn stat(time: f64, fair: (f64, f64), public: (f64, f64)) -> CheckpointStat {
    CheckpointStat {
        time,
        mean: fair.0,
        se: fair.1,
        public_mean: public.0,
        public_se: public.1,
        within: (fair.0 - 1.0).abs() <= 3.0 * fair.1,
    }
}

/// Sample mean and standard error of the fair value at each checkpoint.
pub fn martingale_diagnostic(records: &[SimRecord]) -> Result<MartingaleReport> {
    let n = records.len();
    if n == 0 {
        return Err(Error::InvalidParams("no simulated paths".into()));
    }
    let checkpoints: Vec<CheckpointStat> = CHECKPOINTS
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            stat(
                c,
                mean_se(records.iter().map(move |r| r.fair_values[k]), n),
                mean_se(records.iter().map(move |r| r.public_values[k]), n),
            )
        })
        .collect();
    let m = mean_se(records.iter().map(|r| r.mandatory_value), n);
    let mandatory = stat(1.0, m, m);
    let passed = checkpoints.iter().all(|c| c.within) && mandatory.within;
    Ok(MartingaleReport { checkpoints, mandatory, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    ArrivalWithheld,
    ArrivalDisclosed,
    PolicySwitch,
    Mandatory,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::ArrivalWithheld => "arrival-withheld",
            EventKind::ArrivalDisclosed => "arrival-disclosed",
            EventKind::PolicySwitch => "policy-switch",
            EventKind::Mandatory => "mandatory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub path: usize,
    pub time: f64,
    pub kind: EventKind,
    /// Forecast for arrivals and the mandatory date; NaN for policy switches.
    pub value: f64,
}

/// Per-path event streams in time order.
pub fn regime_change_series(records: &[SimRecord]) -> Vec<Event> {
    let mut out = Vec::new();
    for r in records {
        let mut events: Vec<Event> = r
            .arrivals
            .iter()
            .map(|a| Event {
                path: r.path,
                time: a.time,
                kind: if a.disclosed { EventKind::ArrivalDisclosed } else { EventKind::ArrivalWithheld },
                value: a.forecast,
            })
            .chain(r.policy_switches.iter().map(|&t| Event {
                path: r.path,
                time: t,
                kind: EventKind::PolicySwitch,
                value: f64::NAN,
            }))
            .collect();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        events.push(Event { path: r.path, time: 1.0, kind: EventKind::Mandatory, value: r.mandatory_value });
        out.extend(events);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lambda: f64, policy: PolicySchedule, n: usize) -> SimConfig {
        SimConfig::new(ModelParams::new(lambda, 1.0, 0.8).unwrap(), policy, n, 3).unwrap()
    }

    #[test]
    fn no_arrivals_without_news() {
        let c = config(0.0, PolicySchedule::candid_first(0.3).unwrap(), 50);
        let out = simulate(&c);
        assert_eq!(out.summary.arrivals, 0);
        let rep = martingale_diagnostic(&out.records).unwrap();
        for cp in &rep.checkpoints {
            assert_eq!(cp.mean, 1.0);
            assert_eq!(cp.se, 0.0);
        }
    }

    #[test]
    fn candid_discloses_everything() {
        let c = config(3.0, PolicySchedule::always(Regime::Candid), 200);
        let out = simulate(&c);
        assert!(out.summary.arrivals > 0);
        assert_eq!(out.summary.withheld, 0);
    }

    #[test]
    fn rejects_bad_config() {
        let p = ModelParams::new(1.0, 1.0, 0.8).unwrap();
        assert!(SimConfig::new(p.clone(), PolicySchedule::always(Regime::Candid), 0, 1).is_err());
        assert!(SimConfig::new(p, PolicySchedule::constant(0.5).unwrap(), 10, 1).is_err());
    }

    #[test]
    fn sparing_throughout_has_no_switch_events() {
        let c = config(2.0, PolicySchedule::always(Regime::Sparing), 100);
        let ev = regime_change_series(&simulate(&c).records);
        assert!(ev.iter().all(|e| e.kind != EventKind::PolicySwitch));
    }
}
