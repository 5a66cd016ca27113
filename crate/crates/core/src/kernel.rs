//! Model primitives: the discount kernel `h`, its integral `g` and the
//! scalar functions derived from them.
//!
//! All times live on the normalised interval `[0, 1]` between the last public
//! disclosure and the next mandatory one.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Slack allowed when a root finder lands a hair outside `[0, 1]`.
const TIME_SLACK: f64 = 1e-12;

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

fn check_time(t: f64) -> Result<f64> {
    if !(-TIME_SLACK..=1.0 + TIME_SLACK).contains(&t) || t.is_nan() {
        return Err(Error::domain("t", t, "[0, 1]"));
    }
    Ok(t.clamp(0.0, 1.0))
}

/// Closed form of `h` valid for any real `t`; no domain check.
pub fn h_ext(t: f64, sigma: f64) -> f64 {
    2.0 * std_normal_cdf(0.5 * sigma * (1.0 - t)) - 1.0
}

/// Closed form of `h'` valid for any real `t`; no domain check.
pub fn h_prime_ext(t: f64, sigma: f64) -> f64 {
    let r = 1.0 - t;
    -sigma * (-sigma * sigma * r * r / 8.0).exp() / SQRT_2PI
}

/// Closed form of `g(s) = ∫₀ˢ h(u) du`, valid as an analytic expression for
/// any real `s`; no domain check.
pub fn g_ext(s: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let a = 0.5 * sigma;
    // e^{-a²/2} - e^{-a²(1-s)²/2} written to avoid cancellation for small a
    let diff = -(-0.5 * a * a).exp() * (0.5 * a * a * s * (2.0 - s)).exp_m1();
    2.0 * (std_normal_cdf(a) + (s - 1.0) * std_normal_cdf(a * (1.0 - s)) + diff / (a * SQRT_2PI))
        - s
}

/// Instantaneous protective put per unit value, `h(t) = 2Φ(σ(1−t)/2) − 1`.
pub fn h(t: f64, sigma: f64) -> Result<f64> {
    Ok(h_ext(check_time(t)?, sigma))
}

/// Derivative of `h` in `t`.
pub fn h_prime(t: f64, sigma: f64) -> Result<f64> {
    Ok(h_prime_ext(check_time(t)?, sigma))
}

/// `g(t) = ∫₀ᵗ h(u) du` in closed form.
pub fn g(t: f64, sigma: f64) -> Result<f64> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(Error::domain("sigma", sigma, "[0, ∞)"));
    }
    Ok(g_ext(check_time(t)?, sigma))
}

/// `h(t)·exp(λ g(t))`, whose level sets link consecutive switching points.
pub fn equilibrating_factor(t: f64, params: &ModelParams) -> Result<f64> {
    let t = check_time(t)?;
    Ok(h_ext(t, params.sigma) * (params.lambda * g_ext(t, params.sigma)).exp())
}

/// `η(σ) = −h'(0)/h(0)²`, the upper bound on λ for a sparing-first double switch.
pub fn eta(sigma: f64) -> Result<f64> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::domain("sigma", sigma, "(0, ∞)"));
    }
    let h0 = h_ext(0.0, sigma);
    Ok(sigma * (-sigma * sigma / 8.0).exp() / (SQRT_2PI * h0 * h0))
}

/// Piecewise-constant pay-for-performance ratio κ, right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaSchedule {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl KappaSchedule {
    pub fn constant(kappa: f64) -> Result<Self> {
        Self::piecewise(vec![(0.0, kappa)])
    }

    /// Builds a schedule from `(interval start, κ)` pairs; the first start must be 0.
    pub fn piecewise(pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParams("empty kappa schedule".into()));
        }
        if pieces[0].0 != 0.0 {
            return Err(Error::InvalidParams(format!(
                "kappa schedule must start at 0, got {}",
                pieces[0].0
            )));
        }
        for w in pieces.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].0 > 1.0 {
                return Err(Error::InvalidParams(format!(
                    "kappa schedule starts must increase strictly within [0, 1]: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(_, k) in &pieces {
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::domain("kappa", k, "(0, 1)"));
            }
        }
        let (starts, values) = pieces.into_iter().unzip();
        Ok(Self { starts, values })
    }

    /// Builds a schedule from κ values for consecutive intervals delimited by `switches`.
    pub fn from_intervals(switches: &[f64], values: &[f64]) -> Result<Self> {
        let mut pieces = Vec::with_capacity(switches.len() + 1);
        for (i, start) in std::iter::once(0.0).chain(switches.iter().copied()).enumerate() {
            let k = values[i.min(values.len() - 1)];
            pieces.push((start, k));
        }
        Self::piecewise(pieces)
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&k| k == self.values[0])
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.starts.partition_point(|&s| s <= t);
        self.values[idx.saturating_sub(1)]
    }

    /// κ applied to the `i`-th inter-switching interval; the last value extends.
    pub fn for_interval(&self, i: usize) -> f64 {
        self.values[i.min(self.values.len() - 1)]
    }

    /// `∫ₐᵇ κ(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for (i, &start) in self.starts.iter().enumerate() {
            let end = self.starts.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let lo = start.max(a);
            let hi = end.min(b);
            if hi > lo {
                total += self.values[i] * (hi - lo);
            }
        }
        total
    }
}

/// The economic primitives of the disclosure model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Poisson intensity of private news arrival.
    pub lambda: f64,
    /// Aggregate volatility.
    pub sigma: f64,
    /// Penalty coefficient β; α is implied by κ = 1 − α/β.
    pub beta: f64,
    kappa: KappaSchedule,
}

impl ModelParams {
    /// Constant κ with β normalised to 1.
    pub fn new(lambda: f64, sigma: f64, kappa: f64) -> Result<Self> {
        Self::with_schedule(lambda, sigma, KappaSchedule::constant(kappa)?)
    }

    pub fn with_schedule(lambda: f64, sigma: f64, kappa: KappaSchedule) -> Result<Self> {
        Self::validate_lambda_sigma(lambda, sigma)?;
        Ok(Self { lambda, sigma, beta: 1.0, kappa })
    }

    /// Parameters from reward/penalty coefficients, κ = 1 − α/β.
    pub fn from_rewards(lambda: f64, sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(beta > alpha && alpha > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "need beta > alpha > 0, got alpha = {alpha}, beta = {beta}"
            )));
        }
        let mut p = Self::new(lambda, sigma, 1.0 - alpha / beta)?;
        p.beta = beta;
        Ok(p)
    }

    /// Accepts any consistent combination of κ, α, β.
    pub fn from_parts(
        lambda: f64,
        sigma: f64,
        kappa: Option<f64>,
        alpha: Option<f64>,
        beta: Option<f64>,
    ) -> Result<Self> {
        match (kappa, alpha, beta) {
            (Some(k), None, None) => Self::new(lambda, sigma, k),
            (Some(k), None, Some(b)) => Self::from_rewards(lambda, sigma, b * (1.0 - k), b),
            (Some(k), Some(a), None) => Self::from_rewards(lambda, sigma, a, a / (1.0 - k)),
            (None, Some(a), Some(b)) => Self::from_rewards(lambda, sigma, a, b),
            (Some(k), Some(a), Some(b)) => {
                let p = Self::from_rewards(lambda, sigma, a, b)?;
                if (p.kappa() - k).abs() > 1e-12 {
                    return Err(Error::InvalidParams(format!(
                        "kappa = {k} inconsistent with 1 - alpha/beta = {}",
                        p.kappa()
                    )));
                }
                Ok(p)
            }
            _ => Err(Error::InvalidParams(
                "supply kappa, or alpha and beta".into(),
            )),
        }
    }

    fn validate_lambda_sigma(lambda: f64, sigma: f64) -> Result<()> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain("lambda", lambda, "[0, ∞)"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain("sigma", sigma, "(0, ∞)"));
        }
        Ok(())
    }

    /// κ on the first interval (the constant value when the schedule is flat).
    pub fn kappa(&self) -> f64 {
        self.kappa.values[0]
    }

    /// κ, requiring the schedule to be constant.
    pub fn constant_kappa(&self) -> Result<f64> {
        if self.kappa.is_constant() {
            Ok(self.kappa())
        } else {
            Err(Error::Unsupported(
                "operation requires a constant kappa".into(),
            ))
        }
    }

    pub fn kappa_at(&self, t: f64) -> f64 {
        self.kappa.value_at(t)
    }

    pub fn kappa_schedule(&self) -> &KappaSchedule {
        &self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.beta * (1.0 - self.kappa())
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::validate_lambda_sigma(lambda, self.sigma)?;
        Ok(Self { lambda, ..self.clone() })
    }

    pub fn with_kappa(&self, kappa: KappaSchedule) -> Self {
        Self { kappa, ..self.clone() }
    }

    pub fn h(&self, t: f64) -> f64 {
        h_ext(t, self.sigma)
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        h_prime_ext(t, self.sigma)
    }

    pub fn g(&self, t: f64) -> f64 {
        g_ext(t, self.sigma)
    }

    /// Sparing-throughout valuation `exp(−λ g(t))`.
    pub fn gamma1(&self, t: f64) -> f64 {
        (-self.lambda * self.g(t)).exp()
    }
}
