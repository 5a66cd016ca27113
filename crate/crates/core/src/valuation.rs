//! Equilibrium valuation under a disclosure policy: closed-form piecewise
//! evaluation and a Runge-Kutta cross-check of `γ' = −λ π h(t) γ`.

use crate::error::{Error, Result};
use crate::kernel::ModelParams;
use crate::numeric::linspace;

/// Disclosure regime on an interval of silence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// π = 0: every privately observed value is disclosed.
    Candid,
    /// π = 1: only values at or above the valuation are disclosed.
    Sparing,
}

impl Regime {
    pub fn level(self) -> f64 {
        match self {
            Regime::Candid => 0.0,
            Regime::Sparing => 1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Regime::Candid => Regime::Sparing,
            Regime::Sparing => Regime::Candid,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Candid => "candid",
            Regime::Sparing => "sparing",
        }
    }
}

/// Piecewise-constant sparing probability π on `[0, 1]`, right-continuous.
///
/// `breaks` are the interior switch times; `levels[i]` applies on
/// `[breaks[i-1], breaks[i])` with the conventions `breaks[-1] = 0`,
/// `breaks[n] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySchedule {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl PolicySchedule {
    /// General piecewise-constant policy with levels in `[0, 1]`.
    pub fn piecewise(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breaks.len() + 1 {
            return Err(Error::InvalidPolicy(format!(
                "{} breaks need {} levels, got {}",
                breaks.len(),
                breaks.len() + 1,
                levels.len()
            )));
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if !(b > prev && b < 1.0) {
                return Err(Error::InvalidPolicy(format!(
                    "switch times must increase strictly inside (0, 1): {prev} then {b}"
                )));
            }
            prev = b;
        }
        if let Some(&l) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidPolicy(format!("level {l} outside [0, 1]")));
        }
        Ok(Self { breaks, levels })
    }

    /// Bang-bang policy alternating from `initial` at each switch time.
    pub fn bang_bang(initial: Regime, switches: Vec<f64>) -> Result<Self> {
        let mut regime = initial;
        let mut levels = Vec::with_capacity(switches.len() + 1);
        levels.push(regime.level());
        for _ in &switches {
            regime = regime.flip();
            levels.push(regime.level());
        }
        Self::piecewise(switches, levels)
    }

    pub fn constant(level: f64) -> Result<Self> {
        Self::piecewise(Vec::new(), vec![level])
    }

    pub fn always(regime: Regime) -> Self {
        Self { breaks: Vec::new(), levels: vec![regime.level()] }
    }

    pub fn candid_first(theta: f64) -> Result<Self> {
        Self::bang_bang(Regime::Candid, vec![theta])
    }

    pub fn sparing_first(theta: f64) -> Result<Self> {
        Self::bang_bang(Regime::Sparing, vec![theta])
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_bang_bang(&self) -> bool {
        self.levels.iter().all(|&l| l == 0.0 || l == 1.0)
    }

    pub fn initial_regime(&self) -> Option<Regime> {
        regime_of(self.levels[0])
    }

    fn interval_index(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t)
    }

    /// π at `t` (càdlàg: a switch time belongs to the interval it starts).
    pub fn level_at(&self, t: f64) -> f64 {
        self.levels[self.interval_index(t)]
    }

    pub fn regime_at(&self, t: f64) -> Option<Regime> {
        regime_of(self.level_at(t))
    }

    /// `(start, end, level)` for every interval of constancy.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.levels.len();
        (0..n).map(move |i| {
            let a = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            let b = if i == n - 1 { 1.0 } else { self.breaks[i] };
            (a, b, self.levels[i])
        })
    }

    /// `∫₀ᵗ π(u) λ h(u) du`.
    pub fn discount_exponent(&self, params: &ModelParams, t: f64) -> f64 {
        let mut total = 0.0;
        for (a, b, level) in self.intervals() {
            if a >= t {
                break;
            }
            if level > 0.0 {
                total += level * (params.g(b.min(t)) - params.g(a));
            }
        }
        params.lambda * total
    }
}

fn regime_of(level: f64) -> Option<Regime> {
    if level == 0.0 {
        Some(Regime::Candid)
    } else if level == 1.0 {
        Some(Regime::Sparing)
    } else {
        None
    }
}

/// Sampled valuation trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationPath {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub policy: PolicySchedule,
    pub params: ModelParams,
}

/// Sparing-throughout valuation `γ¹_t = exp(−λ g(t))`.
pub fn gamma_sparing(t: f64, params: &ModelParams) -> Result<f64> {
    let g = crate::kernel::g(t, params.sigma)?;
    Ok((-params.lambda * g).exp())
}

/// Closed-form valuation at `t`, normalised to `γ₀ = 1`.
///
/// Constant on candid stretches; on a stretch with level π it decays as
/// `γ_a·exp(−λπ[g(t) − g(a)])`.
pub fn gamma_at(policy: &PolicySchedule, params: &ModelParams, t: f64) -> f64 {
    (-policy.discount_exponent(params, t)).exp()
}

/// Closed-form valuation on `grid_n` uniform points.
pub fn gamma_path(policy: &PolicySchedule, params: &ModelParams, grid_n: usize) -> Result<ValuationPath> {
    if grid_n < 2 {
        return Err(Error::InvalidPolicy(format!("grid_n must be at least 2, got {grid_n}")));
    }
    let times = linspace(0.0, 1.0, grid_n);
    let gamma = times.iter().map(|&t| gamma_at(policy, params, t)).collect();
    let gamma1 = times.iter().map(|&t| params.gamma1(t)).collect();
    Ok(ValuationPath { times, gamma, gamma1, policy: policy.clone(), params: params.clone() })
}

/// Valuation at each switch time, `γ_{θ₁}, …, γ_{θₙ}`.
pub fn gamma_at_switches(policy: &PolicySchedule, params: &ModelParams) -> Result<Vec<f64>> {
    if !policy.is_bang_bang() {
        return Err(Error::Unsupported(
            "switch valuations are defined for bang-bang policies only".into(),
        ));
    }
    let mut out = Vec::with_capacity(policy.switch_times().len());
    let mut gamma = 1.0;
    let mut prev = 0.0;
    for (i, &theta) in policy.switch_times().iter().enumerate() {
        if policy.levels()[i] == 1.0 {
            gamma *= (params.lambda * (params.g(prev) - params.g(theta))).exp();
        }
        out.push(gamma);
        prev = theta;
    }
    Ok(out)
}

/// Classical RK4 integration of `γ' = −λ π_t h(t) γ` with steps aligned to
/// the switch times. Works for mixed levels.
pub fn ode_integrate(policy: &PolicySchedule, params: &ModelParams, grid_n: usize) -> Result<ValuationPath> {
    if grid_n < 2 {
        return Err(Error::InvalidPolicy(format!("grid_n must be at least 2, got {grid_n}")));
    }
    let times = linspace(0.0, 1.0, grid_n);
    let mut knots: Vec<f64> = times.iter().copied().chain(policy.switch_times().iter().copied()).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut gamma = Vec::with_capacity(grid_n);
    gamma.push(1.0);
    let mut y = 1.0;
    let mut next_grid = 1;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        // the level is constant on [a, b) by construction of the knots
        let level = policy.level_at(a);
        let rhs = |t: f64, y: f64| -params.lambda * level * params.h(t) * y;
        let dt = b - a;
        let k1 = rhs(a, y);
        let k2 = rhs(a + 0.5 * dt, y + 0.5 * dt * k1);
        let k3 = rhs(a + 0.5 * dt, y + 0.5 * dt * k2);
        let k4 = rhs(b, y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        while next_grid < grid_n && (times[next_grid] - b).abs() < 1e-15 {
            gamma.push(y);
            next_grid += 1;
        }
    }
    while gamma.len() < grid_n {
        gamma.push(y);
    }
    let gamma1 = times.iter().map(|&t| params.gamma1(t)).collect();
    Ok(ValuationPath { times, gamma, gamma1, policy: policy.clone(), params: params.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coexist_params() -> ModelParams {
        ModelParams::new(0.940489, 4.0, 0.799432).unwrap()
    }

    #[test]
    fn policy_validation() {
        assert!(PolicySchedule::bang_bang(Regime::Candid, vec![0.5, 0.4]).is_err());
        assert!(PolicySchedule::bang_bang(Regime::Candid, vec![0.0]).is_err());
        assert!(PolicySchedule::bang_bang(Regime::Candid, vec![1.0]).is_err());
        assert!(PolicySchedule::piecewise(vec![0.5], vec![0.2]).is_err());
        assert!(PolicySchedule::piecewise(vec![0.5], vec![0.2, 1.3]).is_err());
        let p = PolicySchedule::candid_first(0.3).unwrap();
        assert_eq!(p.level_at(0.2999), 0.0);
        assert_eq!(p.level_at(0.3), 1.0);
        assert_eq!(p.regime_at(1.0), Some(Regime::Sparing));
        assert!(PolicySchedule::constant(0.5).unwrap().regime_at(0.1).is_none());
    }

    #[test]
    fn candid_throughout_is_flat() {
        let path = gamma_path(&PolicySchedule::always(Regime::Candid), &coexist_params(), 101).unwrap();
        assert!(path.gamma.iter().all(|&g| g == 1.0));
    }

    #[test]
    fn sparing_throughout_matches_gamma1() {
        let p = coexist_params();
        let path = gamma_path(&PolicySchedule::always(Regime::Sparing), &p, 101).unwrap();
        for (g, g1) in path.gamma.iter().zip(&path.gamma1) {
            assert_abs_diff_eq!(g, g1, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_lambda_means_no_discount() {
        let p = ModelParams::new(0.0, 4.0, 0.5).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(gamma_sparing(t, &p).unwrap(), 1.0);
        }
    }

    #[test]
    fn switch_valuations() {
        let p = coexist_params();
        let cf = PolicySchedule::candid_first(0.4).unwrap();
        assert_eq!(gamma_at_switches(&cf, &p).unwrap(), vec![1.0]);
        let sf = PolicySchedule::sparing_first(0.4).unwrap();
        assert_abs_diff_eq!(
            gamma_at_switches(&sf, &p).unwrap()[0],
            (-p.lambda * p.g(0.4)).exp(),
            epsilon = 1e-15
        );
        let mixed = PolicySchedule::constant(0.5).unwrap();
        assert!(gamma_at_switches(&mixed, &p).is_err());
    }

    #[test]
    fn grid_too_small() {
        let pol = PolicySchedule::always(Regime::Candid);
        assert!(gamma_path(&pol, &coexist_params(), 1).is_err());
        assert!(ode_integrate(&pol, &coexist_params(), 1).is_err());
    }
}
