//! Multi-switch schedules: the forward switching recurrence, the second-switch
//! function `T(θ)` and the feasibility checks that bound how many switches an
//! equilibrium can carry.

use std::fmt;

use crate::costate::verify_optimality_rule;
use crate::error::{Error, Result};
use crate::kernel::{eta, g_ext, h_ext, h_prime_ext, KappaSchedule, ModelParams};
use crate::numeric::{bisect, golden_max, linspace, scan_and_bisect};
use crate::valuation::{gamma_at_switches, PolicySchedule, Regime};

/// Threshold below which a computed next switch is treated as coinciding.
pub const DEGENERATE_GAP: f64 = 1e-9;
pub const DEFAULT_MAX_SWITCHES: usize = 8;
const SCAN_CELLS: usize = 1024;
const XTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// The recurrence returned `θᵢ₊₁ = θᵢ`: no further switch is possible.
    Degenerate { gap: f64 },
    /// The next switch would lie at or beyond the horizon.
    Horizon,
    MaxSwitches,
    /// Not even the first switching equation has a root.
    NoFirstSwitch,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Degenerate { .. } => "degenerate",
            Termination::Horizon => "horizon",
            Termination::MaxSwitches => "max-switches",
            Termination::NoFirstSwitch => "no-first-switch",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeOptions {
    pub initial: Regime,
    pub max_switches: usize,
    /// Overrides the solved first switch time.
    pub first_switch: Option<f64>,
}

impl CascadeOptions {
    pub fn new(initial: Regime) -> Self {
        Self { initial, max_switches: DEFAULT_MAX_SWITCHES, first_switch: None }
    }
}

/// Result of a cascade run.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeState {
    pub initial: Regime,
    pub switches: Vec<f64>,
    /// `γ` at each switch time.
    pub gammas: Vec<f64>,
    /// `κ̄ᵢ = γᵢ κ₋` after a candid interval, `γᵢ κ₊` after a sparing one.
    pub kappa_bar: Vec<f64>,
    /// κ on each inter-switching interval (one more entry than `switches`).
    pub interval_kappa: Vec<f64>,
    pub termination: Termination,
    /// `|c − c'|` between the successor predicted by the sparing-interval
    /// equation and the one solved by the following candid-interval equation.
    pub consistency_residuals: Vec<f64>,
    /// Interior sparing-interval ends that were tried and not kept.
    pub rejected_interior: Vec<f64>,
    /// Grid points (of 2001 plus switch instants) where the returned schedule
    /// violates the switching rule.
    pub rule_violations: usize,
    pub params: ModelParams,
}

impl CascadeState {
    pub fn policy(&self) -> Result<PolicySchedule> {
        PolicySchedule::bang_bang(self.initial, self.switches.clone())
    }

    /// κ schedule with the solved switch times as interval starts.
    pub fn kappa_schedule(&self) -> Result<KappaSchedule> {
        KappaSchedule::from_intervals(&self.switches, &self.interval_kappa)
    }

    pub fn solved_params(&self) -> Result<ModelParams> {
        Ok(self.params.with_kappa(self.kappa_schedule()?))
    }

    /// Weakly decreasing, with alternate members strictly decreasing.
    pub fn kappa_bar_monotone(&self) -> bool {
        let k = &self.kappa_bar;
        k.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
            && k.windows(3).all(|w| w[2] < w[0])
    }

    /// Largest deviation between `κ̄ᵢ` and `γᵢ κ` with γ recomputed from the
    /// switch times.
    pub fn gamma_consistency(&self) -> Result<f64> {
        let gammas = gamma_at_switches(&self.policy()?, &self.params)?;
        let mut regime = self.initial;
        let mut worst: f64 = 0.0;
        for (i, (&gamma, &kb)) in gammas.iter().zip(&self.kappa_bar).enumerate() {
            let kappa = match regime {
                Regime::Candid => self.interval_kappa[i],
                Regime::Sparing => self.interval_kappa[i + 1],
            };
            worst = worst.max((gamma * kappa - kb).abs());
            regime = regime.flip();
        }
        Ok(worst)
    }
}

/// Runs the forward switching recurrence.
///
/// A candid interval `[a, θ)` ends where the sparing continuation reaches the
/// valuation: `e^{−λg(θ)} = κ γ_a`. A sparing interval starting at `a` ends at
/// `b` such that the next candid interval `[b, c)` satisfies both
/// `c = b + (K⁻¹ − 1)/(λh(b))` and `g(c) = g(b) − log K / λ`, with
/// `K = κ₊ γ_a e^{λg(a)}`; failing an interior solution, the last switch solves
/// `(1 − b)h(b) = (K⁻¹ − 1)/λ`.
///
/// Interior solutions are tried first. When the resulting schedule violates
/// the pointwise switching rule, the earliest interior choice is replaced by
/// the final-switch equation and the run repeated. Among the candidates the
/// one with the fewest rule violations on the verification grid is returned,
/// earlier candidates winning ties.
pub fn cascade_run(params: &ModelParams, options: CascadeOptions) -> Result<CascadeState> {
    let mut forbidden = Vec::new();
    let mut best: Option<CascadeState> = None;
    let mut discarded = Vec::new();
    loop {
        let (mut state, interior_steps) = run_recurrence(params, options, &forbidden)?;
        state.rule_violations = rule_violations(&state)?;
        let next = interior_steps.iter().copied().find(|i| !forbidden.contains(i));
        if let Some(i) = next {
            discarded.push(state.switches[i]);
        }
        let better = best.as_ref().is_none_or(|b| state.rule_violations < b.rule_violations);
        if better {
            best = Some(state);
        }
        let done = best.as_ref().is_some_and(|b| b.rule_violations == 0);
        match next {
            Some(i) if !done => forbidden.push(i),
            _ => break,
        }
    }
    let mut best = best.expect("at least one run");
    best.rejected_interior = discarded
        .into_iter()
        .filter(|t| !best.switches.iter().any(|s| s == t))
        .collect();
    Ok(best)
}

const VERIFY_GRID: usize = 2001;

fn rule_violations(state: &CascadeState) -> Result<usize> {
    if state.switches.is_empty() {
        return Ok(0);
    }
    let policy = state.policy()?;
    let params = state.solved_params()?;
    Ok(verify_optimality_rule(&policy, &params, VERIFY_GRID)?.violations.len())
}

fn run_recurrence(
    params: &ModelParams,
    options: CascadeOptions,
    forbidden: &[usize],
) -> Result<(CascadeState, Vec<usize>)> {
    let lambda = params.lambda;
    if lambda <= 0.0 {
        return Err(Error::InvalidParams("cascade requires lambda > 0".into()));
    }
    if let Some(t) = options.first_switch {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::domain("first_switch", t, "(0, 1)"));
        }
    }
    let schedule = params.kappa_schedule();
    let mut state = CascadeState {
        initial: options.initial,
        switches: Vec::new(),
        gammas: Vec::new(),
        kappa_bar: Vec::new(),
        interval_kappa: vec![schedule.for_interval(0)],
        termination: Termination::MaxSwitches,
        consistency_residuals: Vec::new(),
        rejected_interior: Vec::new(),
        rule_violations: 0,
        params: params.clone(),
    };
    let mut interior_steps = Vec::new();
    let mut regime = options.initial;
    let mut start = 0.0;
    let mut gamma = 1.0;
    let mut predicted: Option<f64> = None;

    let termination = loop {
        if state.switches.len() >= options.max_switches {
            break Termination::MaxSwitches;
        }
        let i = state.switches.len();
        let first = options.first_switch.filter(|_| i == 0);
        match regime {
            Regime::Candid => {
                let kappa = schedule.for_interval(i);
                let kb = kappa * gamma;
                let end = match first {
                    Some(t) => Some(t),
                    None => candid_end(params, start, kb),
                };
                let Some(end) = end else {
                    break if i == 0 { Termination::NoFirstSwitch } else { Termination::Horizon };
                };
                if let Some(c) = predicted.take() {
                    state.consistency_residuals.push((c - end).abs());
                }
                state.push(end, gamma, kb, schedule.for_interval(i + 1));
                start = end;
            }
            Regime::Sparing => {
                let kappa_after = schedule.for_interval(i + 1);
                let k = kappa_after * gamma * (lambda * params.g(start)).exp();
                let gap = (1.0 / k - 1.0) / (lambda * params.h(start));
                if k >= 1.0 || gap < DEGENERATE_GAP {
                    break Termination::Degenerate { gap };
                }
                let (end, next) = match first {
                    Some(t) => (t, Some(t + gap_at(params, k, t)).filter(|&c| c < 1.0)),
                    None => match sparing_interior_end(params, start, k).filter(|_| !forbidden.contains(&i)) {
                        Some((b, c)) => {
                            interior_steps.push(i);
                            (b, Some(c))
                        }
                        None => match sparing_final_end(params, start, k) {
                            Some(b) => (b, None),
                            None => {
                                break if i == 0 { Termination::NoFirstSwitch } else { Termination::Horizon }
                            }
                        },
                    },
                };
                gamma *= (lambda * (params.g(start) - params.g(end))).exp();
                state.push(end, gamma, kappa_after * gamma, schedule.for_interval(i + 1));
                start = end;
                match next {
                    Some(c) => predicted = Some(c),
                    None => break Termination::Horizon,
                }
            }
        }
        regime = regime.flip();
    };
    state.termination = termination;
    Ok((state, interior_steps))
}

impl CascadeState {
    fn push(&mut self, theta: f64, gamma: f64, kappa_bar: f64, next_kappa: f64) {
        self.switches.push(theta);
        self.gammas.push(gamma);
        self.kappa_bar.push(kappa_bar);
        self.interval_kappa.push(next_kappa);
    }
}

fn gap_at(params: &ModelParams, k: f64, t: f64) -> f64 {
    (1.0 / k - 1.0) / (params.lambda * params.h(t))
}

fn candid_end(params: &ModelParams, start: f64, kappa_bar: f64) -> Option<f64> {
    if kappa_bar >= 1.0 {
        return None;
    }
    let target = -kappa_bar.ln() / params.lambda;
    if target <= params.g(start) || target >= params.g(1.0) {
        return None;
    }
    bisect(|t| params.g(t) - target, start, 1.0, XTOL)
}

fn sparing_interior_end(params: &ModelParams, start: f64, k: f64) -> Option<(f64, f64)> {
    let lambda = params.lambda;
    let successor = |b: f64| b + gap_at(params, k, b);
    let residual = |b: f64| params.g(successor(b)) - params.g(b) + k.ln() / lambda;
    // successor(b) is increasing in b, so the feasible set is an interval [start, b_max)
    if successor(start) >= 1.0 {
        return None;
    }
    let b_max = bisect(|b| successor(b) - 1.0, start, 1.0 - 1e-15, XTOL)?;
    let hi = start + (b_max - start) * (1.0 - 1e-12);
    let root = scan_and_bisect(residual, start, hi, SCAN_CELLS, XTOL)?.root;
    if root <= start {
        return None;
    }
    Some((root, successor(root)))
}

fn sparing_final_end(params: &ModelParams, start: f64, k: f64) -> Option<f64> {
    let target = (1.0 / k - 1.0) / params.lambda;
    let f = |b: f64| (1.0 - b) * params.h(b) - target;
    if f(start) <= 0.0 {
        return None;
    }
    bisect(f, start, 1.0, XTOL)
}

/// `T(θ) = g(θ + (1−κ)/(λκh(θ))) − g(θ) + log κ / λ`.
pub fn t_function(theta: f64, params: &ModelParams) -> Result<f64> {
    let kappa = params.constant_kappa()?;
    let arg = t_argument(theta, params.lambda, kappa, params.sigma);
    if !(arg <= 1.0) {
        return Err(Error::domain("T argument", arg, "[0, 1] (second switch infeasible)"));
    }
    Ok(params.g(arg) - params.g(theta) + kappa.ln() / params.lambda)
}

/// `θ + (κ⁻¹ − 1)/(λh(θ))`.
pub fn t_argument(theta: f64, lambda: f64, kappa: f64, sigma: f64) -> f64 {
    theta + (1.0 / kappa - 1.0) / (lambda * h_ext(theta, sigma))
}

/// `T'(θ) = h(θ + c/h)(1 − c h'/h²) − h(θ)`, `c = (κ⁻¹ − 1)/λ`, from the
/// closed forms (no horizon check).
pub fn t_prime(theta: f64, lambda: f64, kappa: f64, sigma: f64) -> f64 {
    let c = (1.0 / kappa - 1.0) / lambda;
    let h = h_ext(theta, sigma);
    h_ext(theta + c / h, sigma) * (1.0 - c * h_prime_ext(theta, sigma) / (h * h)) - h
}

/// `T(0)` and `T'(0)` at `λ = η(σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TEvidence {
    pub sigma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub t0: f64,
    pub t0_prime: f64,
    /// The argument `(κ⁻¹−1)/(λh(0))` exceeds 1; values use the analytic
    /// continuation of `g` and `h`.
    pub beyond_horizon: bool,
}

pub fn t_evidence(sigma: f64, kappa: f64) -> Result<TEvidence> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain("kappa", kappa, "(0, 1)"));
    }
    let lambda = eta(sigma)?;
    let arg = t_argument(0.0, lambda, kappa, sigma);
    Ok(TEvidence {
        sigma,
        lambda,
        kappa,
        t0: g_ext(arg, sigma) + kappa.ln() / lambda,
        t0_prime: t_prime(0.0, lambda, kappa, sigma),
        beyond_horizon: arg > 1.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TScan {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub sign_changes: usize,
    pub max_value: f64,
}

/// Evaluates `T` on `n` points of `[0, θ̄]`, where `θ̄` is the last θ with
/// the argument inside the horizon.
pub fn t_scan(params: &ModelParams, n: usize) -> Result<TScan> {
    let kappa = params.constant_kappa()?;
    let theta_bar = domain_edge(params.lambda, kappa, params.sigma)
        .ok_or_else(|| Error::NoSwitch("T argument exceeds the horizon for every θ".into()))?;
    let thetas = linspace(0.0, theta_bar, n.max(2));
    let values: Vec<f64> = thetas
        .iter()
        .map(|&t| {
            let arg = t_argument(t, params.lambda, kappa, params.sigma).min(1.0);
            params.g(arg) - params.g(t) + kappa.ln() / params.lambda
        })
        .collect();
    let sign_changes = values.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TScan { thetas, values, sign_changes, max_value })
}

/// `θ̄` solving `(1 − θ̄)h(θ̄) = (κ⁻¹ − 1)/λ`, i.e. `T_{κ,λ}(θ̄) = 1`.
fn domain_edge(lambda: f64, kappa: f64, sigma: f64) -> Option<f64> {
    let c = (1.0 / kappa - 1.0) / lambda;
    let f = |t: f64| (1.0 - t) * h_ext(t, sigma) - c;
    if f(0.0) < 0.0 {
        return None;
    }
    bisect(f, 0.0, 1.0, XTOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSwitchReport {
    pub eta: f64,
    /// `λ < η(σ)`: necessary for a sparing-first double switch.
    pub lambda_below_eta: bool,
    /// `h' + λh² < 0` on a grid over `[0, θ₁]`.
    pub factor_decreasing: bool,
}

pub fn double_switch_bound_check(params: &ModelParams, theta1: f64, theta2: f64) -> Result<DoubleSwitchReport> {
    if !(0.0 < theta1 && theta1 < theta2 && theta2 < 1.0) {
        return Err(Error::InvalidPolicy(format!(
            "need 0 < theta1 < theta2 < 1, got {theta1}, {theta2}"
        )));
    }
    let eta = eta(params.sigma)?;
    let factor_decreasing = linspace(0.0, theta1, 1001).iter().all(|&t| {
        let h = params.h(t);
        params.h_prime(t) + params.lambda * h * h < 0.0
    });
    Ok(DoubleSwitchReport { eta, lambda_below_eta: params.lambda < eta, factor_decreasing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondSwitchReport {
    pub hypothesis_met: bool,
    /// `log κ⁻¹/(κ⁻¹ − 1)`, required `≤ 1/2`.
    pub kappa_ratio: f64,
    /// `(κ⁻¹ − 1)·max{|h'(1)|/h(θ̄)², 1/h(0)}`, required `< λ`.
    pub lambda_bound: f64,
    pub theta_bar: Option<f64>,
    /// `min_θ [g(θ + (κ⁻¹−1)/(λh(θ))) − g(θ) − log κ⁻¹/λ]` over the grid.
    pub min_margin: Option<f64>,
    /// The inequality held at every grid point.
    pub inequality_holds: Option<bool>,
    pub grid_n: usize,
    pub diagnostic: String,
}

/// Checks `g(θ) + log κ⁻¹/λ < g(θ + (κ⁻¹−1)/(λh(θ)))` on `[0, θ̄]` and
/// whether the sufficient conditions on κ and λ hold. The inequality is
/// evaluated whenever `θ̄` exists, independently of the hypothesis.
pub fn second_switch_check(params: &ModelParams, grid_n: usize) -> Result<SecondSwitchReport> {
    let kappa = params.constant_kappa()?;
    let lambda = params.lambda;
    let c = 1.0 / kappa - 1.0;
    let kappa_ratio = -kappa.ln() / c;
    let theta_bar = if lambda > 0.0 { domain_edge(lambda, kappa, params.sigma) } else { None };
    let lambda_bound = match theta_bar {
        Some(tb) => c * (params.h_prime(1.0).abs() / params.h(tb).powi(2)).max(1.0 / params.h(0.0)),
        None => f64::INFINITY,
    };
    let hypothesis_met = kappa_ratio <= 0.5 && lambda > lambda_bound;
    let grid_n = grid_n.max(2);
    let min_margin = theta_bar.map(|tb| {
        linspace(0.0, tb, grid_n)
            .into_iter()
            .map(|t| {
                let arg = t_argument(t, lambda, kappa, params.sigma).min(1.0);
                params.g(arg) - params.g(t) + kappa.ln() / lambda
            })
            .fold(f64::INFINITY, f64::min)
    });
    let diagnostic = if theta_bar.is_none() {
        "no theta_bar: (1/kappa - 1)/lambda exceeds h(0)".to_string()
    } else if kappa_ratio > 0.5 {
        format!("hypothesis unmet: log(1/kappa)/(1/kappa - 1) = {kappa_ratio} > 1/2")
    } else if !(lambda > lambda_bound) {
        format!("hypothesis unmet: lambda = {lambda} <= bound {lambda_bound}")
    } else {
        "hypothesis met".to_string()
    };
    Ok(SecondSwitchReport {
        hypothesis_met,
        kappa_ratio,
        lambda_bound,
        theta_bar,
        inequality_holds: min_margin.map(|m| m > 0.0),
        min_margin,
        grid_n,
        diagnostic,
    })
}

/// `h(θₚ)e^{λg(θₚ)} − h(θₙ)e^{λg(θₙ)}`.
pub fn equilibrating_residual(theta_prev: f64, theta_next: f64, params: &ModelParams) -> f64 {
    let f = |t: f64| params.h(t) * (params.lambda * params.g(t)).exp();
    f(theta_prev) - f(theta_next)
}

/// The equilibrating factor `h e^{λg}` is decreasing on `[0, 1]` iff `λ ≤ η(σ)`.
pub fn factor_is_monotone(params: &ModelParams) -> Result<bool> {
    Ok(params.lambda <= eta(params.sigma)?)
}

/// Interior maximiser of the equilibrating factor, when one exists.
pub fn factor_maximiser(params: &ModelParams) -> Result<Option<f64>> {
    if factor_is_monotone(params)? {
        return Ok(None);
    }
    // λ = −h'(t)/h(t)² at the maximiser; the right side increases in t
    let f = |t: f64| -params.h_prime(t) / params.h(t).powi(2) - params.lambda;
    Ok(bisect(f, 0.0, 1.0 - 1e-12, 1e-15))
}

/// For `θₚ` left of the factor's maximiser, the `θₙ` right of it with equal
/// factor. `None` when the factor is monotone or no such point exists.
pub fn equilibrating_partner(theta_prev: f64, params: &ModelParams) -> Result<Option<f64>> {
    let Some(peak) = factor_maximiser(params)? else {
        return Ok(None);
    };
    if theta_prev >= peak {
        return Ok(None);
    }
    Ok(bisect(|t| equilibrating_residual(theta_prev, t, params), peak, 1.0, 1e-15))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingReport {
    pub kappa_c: f64,
    pub theta_bar1: f64,
    /// `η − (1 − θ̄₁)h(θ̄₁)`.
    pub theta_bar1_residual: f64,
    /// `min_θ [g(θ + η/h(θ)) − g(θ)]` over the grid.
    pub min_gain: f64,
    pub grid_n: usize,
}

pub const KILLING_GRID: usize = 2048;

/// Whether `g(θ) + log κ⁻¹/λ_κ < g(θ + η/h(θ))` holds at every grid point of
/// `[0, θ̄₁]`, with `λ_κ = (κ⁻¹ − 1)/η`.
pub fn killing_inequality_holds(kappa: f64, eta: f64, sigma: f64, grid_n: usize) -> Result<bool> {
    let theta_bar1 = killing_edge(eta, sigma)?;
    let lambda = (1.0 / kappa - 1.0) / eta;
    Ok(linspace(0.0, theta_bar1, grid_n).into_iter().all(|t| {
        let arg = (t + eta / h_ext(t, sigma)).min(1.0);
        g_ext(t, sigma) + (1.0 / kappa).ln() / lambda < g_ext(arg, sigma)
    }))
}

fn killing_edge(eta: f64, sigma: f64) -> Result<f64> {
    let h0 = h_ext(0.0, sigma);
    if !(eta > 0.0 && eta < h0) {
        return Err(Error::domain("eta", eta, "(0, h(0))"));
    }
    bisect(|t| (1.0 - t) * h_ext(t, sigma) - eta, 0.0, 1.0, 1e-15)
        .ok_or_else(|| Error::NoSwitch("theta_bar1 bracket lost".into()))
}

/// Largest κ for which the killing inequality holds on the grid. Since the
/// inequality reduces to `η log κ⁻¹/(κ⁻¹ − 1) < min_θ D(θ)` and the left side
/// increases in κ, κ_c is found by bisection; the returned value lies on the
/// side where the inequality holds.
pub fn killing_threshold(eta: f64, sigma: f64) -> Result<KillingReport> {
    let theta_bar1 = killing_edge(eta, sigma)?;
    let min_gain = linspace(0.0, theta_bar1, KILLING_GRID)
        .into_iter()
        .map(|t| g_ext((t + eta / h_ext(t, sigma)).min(1.0), sigma) - g_ext(t, sigma))
        .fold(f64::INFINITY, f64::min);
    let lhs = |k: f64| eta * (1.0 / k).ln() / (1.0 / k - 1.0);
    let kappa_c = if lhs(1.0 - 1e-15) < min_gain {
        1.0
    } else {
        let (mut lo, mut hi) = (1e-300_f64, 1.0 - 1e-15);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if lhs(mid) < min_gain {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(KillingReport {
        kappa_c,
        theta_bar1,
        theta_bar1_residual: eta - (1.0 - theta_bar1) * h_ext(theta_bar1, sigma),
        min_gain,
        grid_n: KILLING_GRID,
    })
}

/// Maximiser of the equilibrating factor by golden section (test helper for
/// the closed-form condition `λ = −h'/h²`).
pub fn factor_argmax_numeric(params: &ModelParams) -> f64 {
    let f = |t: f64| params.h(t) * (params.lambda * params.g(t)).exp();
    let grid = linspace(0.0, 1.0, 2001);
    let idx = grid
        .iter()
        .enumerate()
        .max_by(|a, b| f(*a.1).total_cmp(&f(*b.1)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = grid[idx.saturating_sub(1)];
    let hi = grid[(idx + 1).min(grid.len() - 1)];
    golden_max(f, lo, hi, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coexist_params() -> ModelParams {
        ModelParams::new(0.940489, 4.0, 0.799432).unwrap()
    }

    #[test]
    fn candid_first_degenerates_after_one_switch() {
        let s = cascade_run(&coexist_params(), CascadeOptions::new(Regime::Candid)).unwrap();
        assert_eq!(s.switches.len(), 1);
        match s.termination {
            Termination::Degenerate { gap } => assert!(gap.abs() < 1e-9),
            other => panic!("unexpected {other}"),
        }
        assert_abs_diff_eq!(s.switches[0], 0.260229, epsilon = 1e-4);
    }

    #[test]
    fn sparing_first_single_switch_then_horizon() {
        let s = cascade_run(&coexist_params(), CascadeOptions::new(Regime::Sparing)).unwrap();
        assert_eq!(s.switches.len(), 1);
        assert_eq!(s.termination, Termination::Horizon);
        assert_abs_diff_eq!(s.switches[0], 0.565997, epsilon = 1e-4);
    }

    #[test]
    fn no_first_switch() {
        let p = ModelParams::new(1.0, 4.0, 0.3).unwrap();
        let s = cascade_run(&p, CascadeOptions::new(Regime::Candid)).unwrap();
        assert_eq!(s.termination, Termination::NoFirstSwitch);
        assert!(s.switches.is_empty());
    }

    #[test]
    fn max_switches_zero() {
        let mut o = CascadeOptions::new(Regime::Candid);
        o.max_switches = 0;
        let s = cascade_run(&coexist_params(), o).unwrap();
        assert_eq!(s.termination, Termination::MaxSwitches);
    }

    #[test]
    fn t_domain_diagnostic() {
        let p = ModelParams::new(0.1, 4.0, 0.5).unwrap();
        assert!(t_function(0.0, &p).is_err());
    }

    #[test]
    fn t_vanishes_as_kappa_to_one() {
        let p = ModelParams::new(1.0, 4.0, 1.0 - 1e-9).unwrap();
        assert!(t_function(0.0, &p).unwrap().abs() < 1e-8);
    }

    #[test]
    fn killing_rejects_eta_out_of_range() {
        assert!(killing_threshold(0.0, 4.0).is_err());
        assert!(killing_threshold(0.99, 4.0).is_err());
    }
}
