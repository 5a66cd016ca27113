//! Location and existence of single-switch equilibria, the always-candid
//! regime, the coexistence threshold λ_crit and comparative statics in λ.
//!
//! Infeasibility is reported as data: every solver returns an
//! [`EquilibriumSolution`] whose `checks` name each inequality that was tested.

use std::fmt;

use crate::costate::verify_optimality_rule;
use crate::error::{Error, Result};
use crate::kernel::ModelParams;
use crate::numeric::{bisect, golden_max, linspace, scan_and_bisect};
use crate::valuation::{PolicySchedule, Regime};

const SCAN_CELLS: usize = 1024;
const THETA_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    AlwaysCandid,
    CandidFirst,
    SparingFirst,
    MultiSwitch,
    None,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::AlwaysCandid => "always-candid",
            EquilibriumKind::CandidFirst => "candid-first",
            EquilibriumKind::SparingFirst => "sparing-first",
            EquilibriumKind::MultiSwitch => "multi-switch",
            EquilibriumKind::None => "none",
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One tested inequality `lhs > rhs` (or `≥`, per `name`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub kind: EquilibriumKind,
    /// Which single-switch family was solved.
    pub family: Regime,
    pub theta: Option<f64>,
    /// Residual of the location equation at `theta`.
    pub residual: Option<f64>,
    /// Sign changes of the location function seen by the bracket scan.
    pub sign_changes: usize,
    pub checks: Vec<ConditionCheck>,
    pub params: ModelParams,
}

impl EquilibriumSolution {
    pub fn exists(&self) -> bool {
        self.kind != EquilibriumKind::None
    }

    /// Name of the first failed condition, if any.
    pub fn failed_condition(&self) -> Option<&'static str> {
        self.checks.iter().find(|c| !c.holds).map(|c| c.name)
    }

    pub fn diagnostic(&self) -> String {
        match self.failed_condition() {
            Some(name) => format!("{name} violated"),
            None => "ok".to_string(),
        }
    }

    /// The bang-bang policy this solution describes.
    pub fn policy(&self) -> Option<PolicySchedule> {
        let theta = self.theta?;
        PolicySchedule::bang_bang(self.family, vec![theta]).ok()
    }
}

fn no_solution(family: Regime, params: &ModelParams, checks: Vec<ConditionCheck>) -> EquilibriumSolution {
    EquilibriumSolution {
        kind: EquilibriumKind::None,
        family,
        theta: None,
        residual: None,
        sign_changes: 0,
        checks,
        params: params.clone(),
    }
}

/// Candid on `[0, θ)`, sparing after: `g(θ) = −log κ / λ`.
pub fn solve_candid_first(params: &ModelParams) -> Result<EquilibriumSolution> {
    let kappa = params.constant_kappa()?;
    let lambda = params.lambda;
    let floor = (-lambda * params.g(1.0)).exp();
    let cand = ConditionCheck { name: "(cand)", holds: kappa >= floor && kappa < 1.0, lhs: kappa, rhs: floor };
    if !cand.holds || lambda == 0.0 {
        return Ok(no_solution(Regime::Candid, params, vec![cand]));
    }
    let target = -kappa.ln() / lambda;
    let location = |t: f64| params.g(t) - target;
    let Some(found) = scan_and_bisect(location, 0.0, 1.0, SCAN_CELLS, THETA_TOL) else {
        return Ok(no_solution(Regime::Candid, params, vec![cand]));
    };
    let theta = found.root;
    let ratio = -kappa.ln() / (1.0 / kappa - 1.0);
    let lhs = params.g(theta) / (theta * params.h(0.0));
    let existence = ConditionCheck { name: "candid-first existence", holds: lhs > ratio, lhs, rhs: ratio };
    let kind = if existence.holds { EquilibriumKind::CandidFirst } else { EquilibriumKind::None };
    Ok(EquilibriumSolution {
        kind,
        family: Regime::Candid,
        theta: Some(theta),
        residual: Some(location(theta)),
        sign_changes: found.sign_changes,
        checks: vec![cand, existence],
        params: params.clone(),
    })
}

/// Sparing on `[0, θ)`, candid after: `(1 − θ) h(θ) = (κ⁻¹ − 1)/λ`.
pub fn solve_sparing_first(params: &ModelParams) -> Result<EquilibriumSolution> {
    let kappa = params.constant_kappa()?;
    let lambda = params.lambda;
    let h0 = params.h(0.0);
    let floor = 1.0 / (1.0 + lambda * h0);
    let spar = ConditionCheck { name: "(spar)", holds: kappa >= floor && kappa < 1.0, lhs: kappa, rhs: floor };
    if !spar.holds || lambda == 0.0 {
        return Ok(no_solution(Regime::Sparing, params, vec![spar]));
    }
    let target = (1.0 / kappa - 1.0) / lambda;
    let location = |t: f64| (1.0 - t) * params.h(t) - target;
    let Some(found) = scan_and_bisect(location, 0.0, 1.0, SCAN_CELLS, THETA_TOL) else {
        return Ok(no_solution(Regime::Sparing, params, vec![spar]));
    };
    let theta = found.root;
    let decay = -(params.h(theta) / h0).ln() / params.g(theta);
    let lower = ConditionCheck {
        name: "sparing-first existence (lower bound on theta)",
        holds: (1.0 - theta) * params.h(theta) * decay > 1.0 / kappa - 1.0,
        lhs: (1.0 - theta) * params.h(theta) * decay,
        rhs: 1.0 / kappa - 1.0,
    };
    let lambda_bound = ConditionCheck {
        name: "sparing-first existence (bound on lambda)",
        holds: decay > lambda,
        lhs: decay,
        rhs: lambda,
    };
    let kind = if lower.holds && lambda_bound.holds { EquilibriumKind::SparingFirst } else { EquilibriumKind::None };
    Ok(EquilibriumSolution {
        kind,
        family: Regime::Sparing,
        theta: Some(theta),
        residual: Some(location(theta)),
        sign_changes: found.sign_changes,
        checks: vec![spar, lower, lambda_bound],
        params: params.clone(),
    })
}

/// Whether candid disclosure throughout satisfies the switching rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlwaysCandidReport {
    pub holds: bool,
    /// `min_t e^{−λg(t)} − κ(1 + λh(t)(1−t))`.
    pub margin: f64,
    pub argmin: f64,
}

fn candid_margin(params: &ModelParams, kappa: f64, t: f64) -> f64 {
    params.gamma1(t) - kappa * (1.0 + params.lambda * params.h(t) * (1.0 - t))
}

pub fn always_candid_threshold(params: &ModelParams) -> Result<AlwaysCandidReport> {
    let kappa = params.constant_kappa()?;
    let grid = linspace(0.0, 1.0, 4001);
    let (idx, _) = grid
        .iter()
        .map(|&t| candid_margin(params, kappa, t))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let lo = grid[idx.saturating_sub(1)];
    let hi = grid[(idx + 1).min(grid.len() - 1)];
    let t = golden_max(|t| -candid_margin(params, kappa, t), lo, hi, 1e-12);
    let (argmin, margin) = [grid[idx], t]
        .into_iter()
        .map(|t| (t, candid_margin(params, kappa, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    Ok(AlwaysCandidReport { holds: margin > 0.0, margin, argmin })
}

/// Positive root of `e^{λg(1)} = 1 + λh(0)`, separating the regimes where
/// (cand) or (spar) is the binding lower bound on κ.
pub fn lambda_crit(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain { name: "sigma", value: sigma, range: "(0, ∞)" });
    }
    let g1 = crate::kernel::g_ext(1.0, sigma);
    let h0 = crate::kernel::h_ext(0.0, sigma);
    let f = |l: f64| (l * g1).exp_m1() - l * h0;
    let lo = 1e-6;
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoSwitch(format!("no lambda_crit below 1e6 for sigma = {sigma}")));
        }
    }
    bisect(f, lo, hi, 1e-15).ok_or_else(|| Error::NoSwitch("lambda_crit bracket lost".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoexistenceReport {
    pub candid_first: EquilibriumSolution,
    pub sparing_first: EquilibriumSolution,
    pub always_candid: AlwaysCandidReport,
    pub lambda_crit: f64,
}

impl CoexistenceReport {
    pub fn existing(&self) -> Vec<EquilibriumKind> {
        let mut out = Vec::new();
        if self.always_candid.holds {
            out.push(EquilibriumKind::AlwaysCandid);
        }
        if self.candid_first.exists() {
            out.push(EquilibriumKind::CandidFirst);
        }
        if self.sparing_first.exists() {
            out.push(EquilibriumKind::SparingFirst);
        }
        out
    }

    pub fn both_switching_exist(&self) -> bool {
        self.candid_first.exists() && self.sparing_first.exists()
    }
}

/// Runs both single-switch solvers and the always-candid check. No selection is made.
pub fn coexistence_region(params: &ModelParams) -> Result<CoexistenceReport> {
    Ok(CoexistenceReport {
        candid_first: solve_candid_first(params)?,
        sparing_first: solve_sparing_first(params)?,
        always_candid: always_candid_threshold(params)?,
        lambda_crit: lambda_crit(params.sigma)?,
    })
}

/// `dθ/dλ` from the implicit location equation.
pub fn dtheta_dlambda(solution: &EquilibriumSolution) -> Result<f64> {
    let theta = match (solution.kind, solution.theta) {
        (EquilibriumKind::CandidFirst | EquilibriumKind::SparingFirst, Some(theta)) => theta,
        _ => {
            return Err(Error::NoSwitch(format!(
                "no switching equilibrium ({})",
                solution.diagnostic()
            )))
        }
    };
    let p = &solution.params;
    let lambda = p.lambda;
    Ok(match solution.family {
        Regime::Candid => p.kappa().ln() / (lambda * lambda * p.h(theta)),
        Regime::Sparing => {
            let h = p.h(theta);
            (1.0 - theta) * h / (lambda * (h - (1.0 - theta) * p.h_prime(theta)))
        }
    })
}

/// Convenience: whether a solved equilibrium also satisfies the pointwise
/// switching rule on a grid.
pub fn passes_optimality_rule(solution: &EquilibriumSolution, grid_n: usize) -> Result<bool> {
    match solution.policy() {
        Some(policy) => Ok(verify_optimality_rule(&policy, &solution.params, grid_n)?.passed),
        None => Ok(false),
    }
}
