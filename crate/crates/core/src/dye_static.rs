//! The static threshold problem at a single interim date: a manager who
//! receives news with probability `q` and withholds it with probability `π`
//! when it falls below the market's threshold `γ_s`.
//!
//! With a lognormal prior the withheld-news term is an undiscounted Black put,
//! so the fixed point reduces to `p(γ_t − γ_s) = πq·Put(γ_s)`.

use crate::error::{Error, Result};
use crate::kernel::std_normal_cdf;
use crate::numeric::{bisect, linspace};

const XTOL: f64 = 1e-14;

/// Lognormal law with mean `forward` and log-standard-deviation `vol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lognormal {
    pub forward: f64,
    pub vol: f64,
}

impl Lognormal {
    fn d1(&self, strike: f64) -> f64 {
        ((self.forward / strike).ln() + 0.5 * self.vol * self.vol) / self.vol
    }

    /// `Q(K) = P(X < K)`.
    pub fn cdf(&self, strike: f64) -> f64 {
        if strike <= 0.0 {
            return 0.0;
        }
        if self.vol == 0.0 {
            return if strike > self.forward { 1.0 } else { 0.0 };
        }
        std_normal_cdf(-(self.d1(strike) - self.vol))
    }

    /// `∫₀ᴷ x dQ(x)`.
    pub fn partial_mean(&self, strike: f64) -> f64 {
        if strike <= 0.0 {
            return 0.0;
        }
        if self.vol == 0.0 {
            return if strike > self.forward { self.forward } else { 0.0 };
        }
        self.forward * std_normal_cdf(-self.d1(strike))
    }

    /// Undiscounted Black put `E[(K − X)⁺] = KΦ(−d₂) − FΦ(−d₁)`.
    pub fn put(&self, strike: f64) -> f64 {
        if strike <= 0.0 {
            return 0.0;
        }
        if self.vol == 0.0 {
            return (strike - self.forward).max(0.0);
        }
        let d1 = self.d1(strike);
        strike * std_normal_cdf(-(d1 - self.vol)) - self.forward * std_normal_cdf(-d1)
    }
}

/// Undiscounted Black put on forward `f`, strike `k`, total log-volatility `s`.
pub fn black_put(f: f64, k: f64, s: f64) -> f64 {
    Lognormal { forward: f, vol: s }.put(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticDyeProblem {
    /// Probability that news reaches management.
    pub q: f64,
    /// Probability of the sparing (withholding) policy.
    pub pi: f64,
    /// No-information anchor, the prior mean.
    pub gamma_t: f64,
    /// Log-standard-deviation of the prior.
    pub s_total: f64,
}

impl StaticDyeProblem {
    pub fn new(q: f64, pi: f64, s_total: f64) -> Result<Self> {
        Self::with_anchor(q, pi, 1.0, s_total)
    }

    pub fn with_anchor(q: f64, pi: f64, gamma_t: f64, s_total: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain("q", q, "[0, 1]"));
        }
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::domain("pi", pi, "[0, 1]"));
        }
        if !(gamma_t > 0.0) || !gamma_t.is_finite() {
            return Err(Error::domain("gamma_t", gamma_t, "(0, ∞)"));
        }
        if !(s_total >= 0.0) || !s_total.is_finite() {
            return Err(Error::domain("s_total", s_total, "[0, ∞)"));
        }
        Ok(Self { q, pi, gamma_t, s_total })
    }

    pub fn prior(&self) -> Lognormal {
        Lognormal { forward: self.gamma_t, vol: self.s_total }
    }

    /// `p(γ_t − γ) − πq·Put(γ)`; decreasing in γ.
    pub fn put_residual(&self, gamma: f64) -> f64 {
        (1.0 - self.q) * (self.gamma_t - gamma) - self.pi * self.q * self.prior().put(gamma)
    }

    /// `W(γ) = E[X | no disclosure at threshold γ]`.
    pub fn conditional_mean(&self, gamma: f64) -> f64 {
        let p = 1.0 - self.q;
        let prior = self.prior();
        let w = self.q * self.pi;
        (p * self.gamma_t + w * prior.partial_mean(gamma)) / (p + w * prior.cdf(gamma))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolution {
    pub gamma_s: f64,
    pub residual: f64,
    /// `q = 1` with withholding: no threshold survives and `γ_s → 0`.
    pub unravelled: bool,
}

/// Solves the threshold fixed point by bisection on the put form.
pub fn solve_threshold(problem: &StaticDyeProblem) -> Result<ThresholdSolution> {
    let gt = problem.gamma_t;
    if problem.q == 0.0 || problem.pi == 0.0 {
        return Ok(ThresholdSolution { gamma_s: gt, residual: 0.0, unravelled: false });
    }
    if problem.q == 1.0 {
        return Ok(ThresholdSolution { gamma_s: 0.0, residual: problem.put_residual(0.0), unravelled: true });
    }
    let gamma_s = bisect(|g| problem.put_residual(g), 0.0, gt, XTOL)
        .ok_or_else(|| Error::NoSwitch("threshold residual does not change sign".into()))?;
    Ok(ThresholdSolution { gamma_s, residual: problem.put_residual(gamma_s), unravelled: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// Probability of a disclosure.
    pub tau_d: f64,
    /// `E[X | disclosure]`.
    pub disclosed_mean: f64,
    /// `τ_D E[X|D] + (1 − τ_D)γ_s`, which should equal `γ_t`.
    pub reconstruction: f64,
    pub identity_residual: f64,
}

pub fn risk_neutral_decomposition(problem: &StaticDyeProblem, gamma_s: f64) -> Decomposition {
    let (q, pi, gt) = (problem.q, problem.pi, problem.gamma_t);
    let prior = problem.prior();
    let tau_d = q * pi * (1.0 - prior.cdf(gamma_s)) + q * (1.0 - pi);
    let disclosed_mean = if tau_d > 0.0 {
        (q * pi * (gt - prior.partial_mean(gamma_s)) + q * (1.0 - pi) * gt) / tau_d
    } else {
        gt
    };
    let reconstruction = tau_d * disclosed_mean + (1.0 - tau_d) * gamma_s;
    Decomposition { tau_d, disclosed_mean, reconstruction, identity_residual: reconstruction - gt }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimumReport {
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    pub argmin: f64,
    pub gamma_s: f64,
    pub w_at_gamma_s: f64,
    /// Grid spacing.
    pub cell: f64,
    /// `W(γ_s) ≤ W` on the grid and the grid minimiser lies within one cell of `γ_s`.
    pub passed: bool,
}

/// Scans `W(γ)` over `(0, 2γ_t]` and locates its minimum.
pub fn minimum_principle_check(problem: &StaticDyeProblem, grid_n: usize) -> Result<MinimumReport> {
    if problem.q >= 1.0 {
        return Err(Error::InvalidParams("minimum principle needs q < 1".into()));
    }
    let sol = solve_threshold(problem)?;
    let hi = 2.0 * problem.gamma_t;
    let grid: Vec<f64> = linspace(0.0, hi, grid_n.max(3) + 1).into_iter().skip(1).collect();
    let cell = hi / grid_n.max(3) as f64;
    let w: Vec<f64> = grid.iter().map(|&g| problem.conditional_mean(g)).collect();
    let (idx, wmin) = w
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let w_at = problem.conditional_mean(sol.gamma_s);
    let argmin = grid[idx];
    let passed = w_at <= wmin + 1e-12 && (argmin - sol.gamma_s).abs() <= cell;
    Ok(MinimumReport { grid, w, argmin, gamma_s: sol.gamma_s, w_at_gamma_s: w_at, cell, passed })
}

/// `(1 − γ_s)/Δ` for a short interval `[t, t + Δ]` with `q = λΔ`, sparing,
/// and prior log-volatility `σ(1 − t)`. Tends to `λh(t)` as `Δ → 0`.
pub fn small_interval_rate(lambda: f64, sigma: f64, t: f64, delta: f64) -> Result<f64> {
    let q = lambda * delta;
    let problem = StaticDyeProblem::new(q, 1.0, sigma * (1.0 - t))?;
    let sol = solve_threshold(&problem)?;
    Ok((1.0 - sol.gamma_s) / delta)
}
