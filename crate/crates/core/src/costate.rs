//! Pontryagin co-state, switching curve and the pointwise optimality rule.
//!
//! The co-state solves `μ' − μπλh(t) = βκ_t(1 − π)` backwards from `μ₁ = 0`.
//! For bang-bang policies it is affine on candid stretches and a scaled
//! `exp(λg)` on sparing stretches, so it is evaluated exactly.

use crate::error::{Error, Result};
use crate::kernel::ModelParams;
use crate::numeric::linspace;
use crate::valuation::{gamma_at, PolicySchedule};

/// Relative slack for `γ = γ*` at switch instants.
const EQUALITY_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CostatePath {
    pub times: Vec<f64>,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub policy: PolicySchedule,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingCurve {
    pub times: Vec<f64>,
    pub gamma_star: Vec<f64>,
    pub policy: PolicySchedule,
}

/// Integrating factor `φ(t) = exp(−∫₀ᵗ π_u λ h(u) du)`.
pub fn integrating_factor(policy: &PolicySchedule, params: &ModelParams, t: f64) -> f64 {
    (-policy.discount_exponent(params, t)).exp()
}

/// Exact co-state of a bang-bang policy, with values cached at interval ends.
#[derive(Debug, Clone)]
pub struct Costate<'a> {
    policy: &'a PolicySchedule,
    params: &'a ModelParams,
    // (start, end, level, μ at end)
    pieces: Vec<(f64, f64, f64, f64)>,
}

impl<'a> Costate<'a> {
    pub fn new(policy: &'a PolicySchedule, params: &'a ModelParams) -> Result<Self> {
        if !policy.is_bang_bang() {
            return Err(Error::Unsupported(
                "exact co-state requires a bang-bang policy".into(),
            ));
        }
        let intervals: Vec<_> = policy.intervals().collect();
        let mut pieces = vec![(0.0, 0.0, 0.0, 0.0); intervals.len()];
        let mut mu_end = 0.0;
        for (i, &(a, b, level)) in intervals.iter().enumerate().rev() {
            pieces[i] = (a, b, level, mu_end);
            mu_end = Self::propagate(params, b, level, mu_end, a);
        }
        Ok(Self { policy, params, pieces })
    }

    fn propagate(params: &ModelParams, b: f64, level: f64, mu_b: f64, t: f64) -> f64 {
        if level == 0.0 {
            mu_b - params.beta * params.kappa_schedule().integral(t, b)
        } else {
            mu_b * (-params.lambda * (params.g(b) - params.g(t))).exp()
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let idx = self.policy.switch_times().partition_point(|&s| s <= t);
        let (a, b, level, mu_b) = self.pieces[idx.min(self.pieces.len() - 1)];
        Self::propagate(self.params, b, level, mu_b, t.clamp(a, b))
    }

    /// `γ*_t = γ¹_t / (κ_t − λ h(t) μ_t / β)`.
    pub fn switching_value(&self, t: f64) -> f64 {
        let p = self.params;
        p.gamma1(t) / (p.kappa_at(t) - p.lambda * p.h(t) * self.at(t) / p.beta)
    }
}

pub fn costate(policy: &PolicySchedule, params: &ModelParams, grid_n: usize) -> Result<CostatePath> {
    let c = Costate::new(policy, params)?;
    let times = grid(grid_n)?;
    let mu = times.iter().map(|&t| c.at(t)).collect();
    let phi = times.iter().map(|&t| integrating_factor(policy, params, t)).collect();
    Ok(CostatePath { times, mu, phi, policy: policy.clone(), params: params.clone() })
}

pub fn switching_curve(policy: &PolicySchedule, params: &ModelParams, grid_n: usize) -> Result<SwitchingCurve> {
    let c = Costate::new(policy, params)?;
    let times = grid(grid_n)?;
    let gamma_star = times.iter().map(|&t| c.switching_value(t)).collect();
    Ok(SwitchingCurve { times, gamma_star, policy: policy.clone() })
}

fn grid(grid_n: usize) -> Result<Vec<f64>> {
    if grid_n < 2 {
        return Err(Error::InvalidPolicy(format!("grid_n must be at least 2, got {grid_n}")));
    }
    Ok(linspace(0.0, 1.0, grid_n))
}

/// Outcome of checking "sparing iff γ_t ≥ γ*_t" along a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub passed: bool,
    pub first_violation: Option<f64>,
    /// Every grid time at which the rule failed.
    pub violations: Vec<f64>,
    pub points_checked: usize,
}

/// Checks the pointwise maximum-principle rule on a uniform grid plus the
/// switch instants: `π=1 ⇒ γ ≥ γ*`, `π=0 ⇒ γ < γ*`, with either regime
/// accepted where `γ = γ*` at a switch instant.
pub fn verify_optimality_rule(policy: &PolicySchedule, params: &ModelParams, grid_n: usize) -> Result<OptimalityReport> {
    let c = Costate::new(policy, params)?;
    let mut times = grid(grid_n)?;
    times.extend_from_slice(policy.switch_times());
    times.sort_by(f64::total_cmp);

    let switches = policy.switch_times();
    let mut violations = Vec::new();
    for &t in &times {
        let gamma = gamma_at(policy, params, t);
        let star = c.switching_value(t);
        let near_equal = (gamma - star).abs() <= EQUALITY_RTOL * star.abs();
        let at_switch = switches.iter().any(|&s| (s - t).abs() < 1e-12);
        let ok = if at_switch && near_equal {
            true
        } else if policy.level_at(t) == 1.0 {
            gamma >= star || near_equal
        } else {
            gamma < star && !near_equal
        };
        if !ok {
            violations.push(t);
        }
    }
    Ok(OptimalityReport {
        passed: violations.is_empty(),
        first_violation: violations.first().copied(),
        points_checked: times.len(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Regime;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams::from_rewards(0.940489, 4.0, 0.2, 1.0).unwrap()
    }

    #[test]
    fn candid_throughout_is_linear() {
        let p = params();
        let pol = PolicySchedule::always(Regime::Candid);
        let path = costate(&pol, &p, 11).unwrap();
        for (t, mu) in path.times.iter().zip(&path.mu) {
            assert_abs_diff_eq!(*mu, -(p.beta - p.alpha()) * (1.0 - t), epsilon = 1e-14);
        }
        assert!(path.phi.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn candid_first_form() {
        let p = params();
        let theta = 0.3;
        let pol = PolicySchedule::candid_first(theta).unwrap();
        let c = Costate::new(&pol, &p).unwrap();
        assert_abs_diff_eq!(c.at(0.1), (p.beta - p.alpha()) * (0.1 - theta), epsilon = 1e-14);
        assert_eq!(c.at(0.5), 0.0);
        assert_eq!(c.at(1.0), 0.0);
        assert_abs_diff_eq!(c.switching_value(0.7), p.gamma1(0.7) / p.kappa(), epsilon = 1e-14);
        assert_abs_diff_eq!(integrating_factor(&pol, &p, 0.2), 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(
            integrating_factor(&pol, &p, 0.8),
            (-p.lambda * (p.g(0.8) - p.g(theta))).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn sparing_first_form() {
        let p = params();
        let theta = 0.6;
        let pol = PolicySchedule::sparing_first(theta).unwrap();
        let c = Costate::new(&pol, &p).unwrap();
        let k = p.beta - p.alpha();
        assert_abs_diff_eq!(c.at(theta), k * (theta - 1.0), epsilon = 1e-14);
        assert_abs_diff_eq!(
            c.at(0.2),
            k * (theta - 1.0) * (-p.lambda * (p.g(theta) - p.g(0.2))).exp(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(integrating_factor(&pol, &p, 0.3), p.gamma1(0.3), epsilon = 1e-15);
    }

    #[test]
    fn mixed_policy_unsupported() {
        let p = params();
        let pol = PolicySchedule::constant(0.4).unwrap();
        assert!(costate(&pol, &p, 10).is_err());
        assert!(verify_optimality_rule(&pol, &p, 10).is_err());
    }

    #[test]
    fn low_lambda_candid_passes() {
        let p = ModelParams::new(0.01, 4.0, 0.5).unwrap();
        let r = verify_optimality_rule(&PolicySchedule::always(Regime::Candid), &p, 501).unwrap();
        assert!(r.passed, "{:?}", r.first_violation);
    }
}
