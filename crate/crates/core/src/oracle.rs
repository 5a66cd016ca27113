//! Independent optimality checks: the managerial objective by adaptive
//! quadrature, brute-force search over single-switch schedules and a seeded
//! sampler of mixed (non-bang-bang) controls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::ModelParams;
use crate::numeric::{golden_max, integrate, integrate_split};
use crate::valuation::{gamma_at, ode_integrate, PolicySchedule, Regime};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport {
    /// `∫₀¹ (1 − π_t)[γ¹_t − κ_t γ_t] dt`, per unit of β.
    pub value: f64,
    pub error: f64,
    pub policy: PolicySchedule,
}

/// Managerial objective with β factored out.
pub fn objective(policy: &PolicySchedule, params: &ModelParams, tol: f64) -> Result<ObjectiveReport> {
    let mut breaks: Vec<f64> = policy.switch_times().to_vec();
    breaks.extend_from_slice(params.kappa_schedule().starts());
    breaks.sort_by(f64::total_cmp);
    let integrand = |t: f64| {
        let weight = 1.0 - policy.level_at(t);
        if weight == 0.0 {
            0.0
        } else {
            weight * (params.gamma1(t) - params.kappa_at(t) * gamma_at(policy, params, t))
        }
    };
    let q = integrate_split(integrand, 0.0, 1.0, &breaks, tol)?;
    Ok(ObjectiveReport { value: q.value, error: q.error, policy: policy.clone() })
}

/// `∫₀^θ e^{−λg(t)} dt − κθ`, the objective of a candid-first schedule.
pub fn candid_first_reduced(theta: f64, params: &ModelParams) -> Result<f64> {
    let kappa = params.constant_kappa()?;
    let q = integrate(|t| params.gamma1(t), 0.0, theta, DEFAULT_TOL)?;
    Ok(q.value - kappa * theta)
}

/// `∫_θ¹ e^{−λg(t)} dt − κ e^{−λg(θ)}(1 − θ)`, the objective of a
/// sparing-first schedule.
pub fn sparing_first_reduced(theta: f64, params: &ModelParams) -> Result<f64> {
    let kappa = params.constant_kappa()?;
    let q = integrate(|t| params.gamma1(t), theta, 1.0, DEFAULT_TOL)?;
    Ok(q.value - kappa * params.gamma1(theta) * (1.0 - theta))
}

fn single_switch_policy(initial: Regime, theta: f64) -> Result<PolicySchedule> {
    PolicySchedule::bang_bang(initial, vec![theta])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceReport {
    pub initial: Regime,
    /// Interior grid points `j / grid_n`, `j = 1 … grid_n − 1`.
    pub thetas: Vec<f64>,
    pub objectives: Vec<f64>,
    pub best_theta: f64,
    pub best_objective: f64,
    /// Largest quadrature error estimate over the table.
    pub max_error: f64,
}

/// Objective of every single-switch schedule on a uniform θ grid.
pub fn brute_force_single_switch(params: &ModelParams, initial: Regime, grid_n: usize) -> Result<BruteForceReport> {
    if grid_n < 100 {
        return Err(Error::InvalidParams(format!("grid_n must be at least 100, got {grid_n}")));
    }
    let thetas: Vec<f64> = (1..grid_n).map(|j| j as f64 / grid_n as f64).collect();
    let reports: Vec<ObjectiveReport> = thetas
        .par_iter()
        .map(|&t| objective(&single_switch_policy(initial, t)?, params, DEFAULT_TOL))
        .collect::<Result<_>>()?;
    let objectives: Vec<f64> = reports.iter().map(|r| r.value).collect();
    let max_error = reports.iter().map(|r| r.error).fold(0.0, f64::max);
    let (idx, best_objective) = objectives
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(BruteForceReport { initial, best_theta: thetas[idx], thetas, objectives, best_objective, max_error })
}

/// Best schedule found among the bang-bang families searched.
#[derive(Debug, Clone, PartialEq)]
pub struct BangBangOptimum {
    pub policy: PolicySchedule,
    pub objective: f64,
    pub family: &'static str,
}

fn refine_single(params: &ModelParams, initial: Regime, coarse: usize) -> Result<BangBangOptimum> {
    let eval = |t: f64| {
        single_switch_policy(initial, t)
            .and_then(|p| objective(&p, params, DEFAULT_TOL))
            .map_or(f64::NEG_INFINITY, |r| r.value)
    };
    let grid: Vec<f64> = (1..coarse).map(|j| j as f64 / coarse as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&t| eval(t)).collect();
    let idx = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let lo = if idx == 0 { 1e-9 } else { grid[idx - 1] };
    let hi = if idx + 1 == grid.len() { 1.0 - 1e-9 } else { grid[idx + 1] };
    let theta = golden_max(eval, lo, hi, 1e-10);
    let (theta, value) = [(theta, eval(theta)), (grid[idx], values[idx])]
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    Ok(BangBangOptimum {
        policy: single_switch_policy(initial, theta)?,
        objective: value,
        family: match initial {
            Regime::Candid => "candid-first",
            Regime::Sparing => "sparing-first",
        },
    })
}

fn refine_double(params: &ModelParams, initial: Regime, coarse: usize) -> Result<BangBangOptimum> {
    let eval = |a: f64, b: f64| {
        if !(0.0 < a && a < b && b < 1.0) {
            return f64::NEG_INFINITY;
        }
        PolicySchedule::bang_bang(initial, vec![a, b])
            .and_then(|p| objective(&p, params, DEFAULT_TOL))
            .map_or(f64::NEG_INFINITY, |r| r.value)
    };
    let step = 1.0 / coarse as f64;
    let pairs: Vec<(f64, f64)> = (1..coarse)
        .flat_map(|i| (i + 1..coarse).map(move |j| (i as f64 * step, j as f64 * step)))
        .collect();
    let (mut a, mut b, mut best) = pairs
        .par_iter()
        .map(|&(a, b)| (a, b, eval(a, b)))
        .reduce(|| (0.0, 0.0, f64::NEG_INFINITY), |x, y| if y.2 > x.2 { y } else { x });
    if best.is_finite() {
        // coordinate-wise golden refinement inside the neighbouring cells
        let mut width = step;
        for _ in 0..6 {
            let na = golden_max(|x| eval(x, b), (a - width).max(1e-9), (a + width).min(b - 1e-9), 1e-10);
            if eval(na, b) > best {
                a = na;
                best = eval(a, b);
            }
            let nb = golden_max(|x| eval(a, x), (b - width).max(a + 1e-9), (b + width).min(1.0 - 1e-9), 1e-10);
            if eval(a, nb) > best {
                b = nb;
                best = eval(a, b);
            }
            width *= 0.5;
        }
    }
    let policy = if best.is_finite() {
        PolicySchedule::bang_bang(initial, vec![a, b])?
    } else {
        PolicySchedule::always(initial)
    };
    Ok(BangBangOptimum {
        policy,
        objective: best,
        family: match initial {
            Regime::Candid => "candid-sparing-candid",
            Regime::Sparing => "sparing-candid-sparing",
        },
    })
}

/// Best bang-bang schedule with at most two switches, by grid search and
/// golden-section refinement.
pub fn best_bang_bang(params: &ModelParams) -> Result<BangBangOptimum> {
    let mut candidates = vec![
        BangBangOptimum {
            objective: objective(&PolicySchedule::always(Regime::Candid), params, DEFAULT_TOL)?.value,
            policy: PolicySchedule::always(Regime::Candid),
            family: "always-candid",
        },
        BangBangOptimum {
            objective: 0.0,
            policy: PolicySchedule::always(Regime::Sparing),
            family: "always-sparing",
        },
    ];
    for initial in [Regime::Candid, Regime::Sparing] {
        candidates.push(refine_single(params, initial, 400)?);
        candidates.push(refine_double(params, initial, 40)?);
    }
    Ok(candidates
        .into_iter()
        .max_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Policies have between 1 and `max_pieces` intervals of constancy.
    pub max_pieces: usize,
    /// Draw levels from {0, 1} instead of (0, 1).
    pub binary_levels: bool,
}

impl SamplerConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self { n_samples, seed, max_pieces: 5, binary_levels: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedSample {
    pub index: usize,
    pub policy: PolicySchedule,
    pub objective: f64,
    /// `|γ₁|` closed form versus RK4 at 2001 points.
    pub ode_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerReport {
    pub samples: Vec<MixedSample>,
    pub optimum: BangBangOptimum,
    /// Samples whose objective exceeds the optimum by more than `tolerance`.
    pub violations: usize,
    /// `max(objective − optimum)` over the samples.
    pub max_excess: f64,
    pub tolerance: f64,
}

/// The `index`-th random policy of a seeded sampler; reproducible from
/// `(seed, index)` alone.
pub fn sample_policy(config: &SamplerConfig, index: usize) -> Result<PolicySchedule> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let pieces = rng.random_range(1..=config.max_pieces.max(1));
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.01..0.99)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| *a - *b < 1e-6);
    let levels = (0..=breaks.len())
        .map(|_| {
            if config.binary_levels {
                if rng.random_bool(0.5) { 1.0 } else { 0.0 }
            } else {
                // open interval (0, 1)
                loop {
                    let x: f64 = rng.random();
                    if x > 0.0 {
                        break x;
                    }
                }
            }
        })
        .collect();
    PolicySchedule::piecewise(breaks, levels)
}

/// Draws random piecewise-constant controls and compares each objective with
/// the best bang-bang schedule.
pub fn mixed_control_sampler(params: &ModelParams, config: &SamplerConfig) -> Result<SamplerReport> {
    if config.n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be at least 1".into()));
    }
    let optimum = best_bang_bang(params)?;
    let samples: Vec<MixedSample> = (0..config.n_samples)
        .into_par_iter()
        .map(|index| {
            let policy = sample_policy(config, index)?;
            let value = objective(&policy, params, DEFAULT_TOL)?.value;
            let ode = ode_integrate(&policy, params, 2001)?;
            let ode_gap = (ode.gamma[ode.gamma.len() - 1] - gamma_at(&policy, params, 1.0)).abs();
            Ok(MixedSample { index, policy, objective: value, ode_gap })
        })
        .collect::<Result<_>>()?;
    let tolerance = 1e-9;
    let max_excess = samples
        .iter()
        .map(|s| s.objective - optimum.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    let violations = samples.iter().filter(|s| s.objective > optimum.objective + tolerance).count();
    Ok(SamplerReport { samples, optimum, violations, max_excess, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coexist_params() -> ModelParams {
        ModelParams::new(0.940489, 4.0, 0.799432).unwrap()
    }

    #[test]
    fn always_sparing_is_zero() {
        let r = objective(&PolicySchedule::always(Regime::Sparing), &coexist_params(), 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn reductions_match_objective() {
        let p = coexist_params();
        for theta in [0.1, 0.26, 0.7] {
            let cf = objective(&PolicySchedule::candid_first(theta).unwrap(), &p, 1e-13).unwrap();
            assert_abs_diff_eq!(cf.value, candid_first_reduced(theta, &p).unwrap(), epsilon = 1e-10);
            let sf = objective(&PolicySchedule::sparing_first(theta).unwrap(), &p, 1e-13).unwrap();
            assert_abs_diff_eq!(sf.value, sparing_first_reduced(theta, &p).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn sampler_is_reproducible() {
        let c = SamplerConfig::new(4, 7);
        assert_eq!(sample_policy(&c, 3).unwrap(), sample_policy(&c, 3).unwrap());
        assert_ne!(sample_policy(&c, 2).unwrap(), sample_policy(&c, 3).unwrap());
    }

    #[test]
    fn grid_too_small() {
        assert!(brute_force_single_switch(&coexist_params(), Regime::Candid, 50).is_err());
    }
}
