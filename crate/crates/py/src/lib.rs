//! Python bindings. Functions take plain floats and return dicts or lists so
//! results drop straight into numpy/pandas.

use candor_core::cascade::{cascade_run, CascadeOptions};
use candor_core::costate::Costate;
use candor_core::dye_static::{risk_neutral_decomposition, solve_threshold, StaticDyeProblem};
use candor_core::oracle::{objective as core_objective, DEFAULT_TOL};
use candor_core::pdmp_sim::{martingale_diagnostic, simulate as core_simulate, SimConfig};
use candor_core::single_switch::{coexistence_region, dtheta_dlambda, solve_candid_first, solve_sparing_first};
use candor_core::valuation::gamma_at;
use candor_core::{kernel, EquilibriumSolution, KappaSchedule, ModelParams, PolicySchedule, Regime};
use pyo3::exceptions::{PyLookupError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: candor_core::Error) -> PyErr {
    use candor_core::Error as E;
    match e {
        E::NoSwitch(_) => PyLookupError::new_err(e.to_string()),
        E::Quadrature { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn params(lambda: f64, sigma: f64, kappa: f64) -> PyResult<ModelParams> {
    ModelParams::new(lambda, sigma, kappa).map_err(to_py)
}

fn regime(name: &str) -> PyResult<Regime> {
    match name {
        "candid" | "candid-first" => Ok(Regime::Candid),
        "sparing" | "sparing-first" => Ok(Regime::Sparing),
        _ => Err(PyValueError::new_err(format!("unknown regime {name:?}"))),
    }
}

fn solution_dict<'py>(py: Python<'py>, s: &EquilibriumSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kind", s.kind.name())?;
    d.set_item("exists", s.exists())?;
    d.set_item("theta", s.theta)?;
    d.set_item("residual", s.residual)?;
    d.set_item("diagnostic", s.diagnostic())?;
    d.set_item("dtheta_dlambda", dtheta_dlambda(s).ok())?;
    let checks: Vec<(String, bool, f64, f64)> =
        s.checks.iter().map(|c| (c.name.to_string(), c.holds, c.lhs, c.rhs)).collect();
    d.set_item("checks", checks)?;
    Ok(d)
}

#[pyfunction]
fn h(t: f64, sigma: f64) -> PyResult<f64> {
    kernel::h(t, sigma).map_err(to_py)
}

#[pyfunction]
fn g(t: f64, sigma: f64) -> PyResult<f64> {
    kernel::g(t, sigma).map_err(to_py)
}

#[pyfunction]
fn eta(sigma: f64) -> PyResult<f64> {
    kernel::eta(sigma).map_err(to_py)
}

#[pyfunction]
fn lambda_crit(sigma: f64) -> PyResult<f64> {
    candor_core::single_switch::lambda_crit(sigma).map_err(to_py)
}

/// Both single-switch equilibria plus the always-candid check.
#[pyfunction]
#[pyo3(signature = (lambda_, sigma, kappa))]
fn solve<'py>(py: Python<'py>, lambda_: f64, sigma: f64, kappa: f64) -> PyResult<Bound<'py, PyDict>> {
    let report = coexistence_region(&params(lambda_, sigma, kappa)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("candid_first", solution_dict(py, &report.candid_first)?)?;
    d.set_item("sparing_first", solution_dict(py, &report.sparing_first)?)?;
    d.set_item("always_candid", report.always_candid.holds)?;
    d.set_item("always_candid_margin", report.always_candid.margin)?;
    d.set_item("lambda_crit", report.lambda_crit)?;
    Ok(d)
}

/// Valuation, switching curve and co-state of a single-switch equilibrium.
#[pyfunction]
#[pyo3(signature = (lambda_, sigma, kappa, kind = "candid-first", grid_n = 2001))]
fn curves<'py>(
    py: Python<'py>,
    lambda_: f64,
    sigma: f64,
    kappa: f64,
    kind: &str,
    grid_n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params(lambda_, sigma, kappa)?;
    let sol = match regime(kind)? {
        Regime::Candid => solve_candid_first(&p),
        Regime::Sparing => solve_sparing_first(&p),
    }
    .map_err(to_py)?;
    let policy = sol
        .policy()
        .filter(|_| sol.exists())
        .ok_or_else(|| PyLookupError::new_err(format!("no {kind} equilibrium: {}", sol.diagnostic())))?;
    let c = Costate::new(&policy, &p).map_err(to_py)?;
    let n = grid_n.max(2);
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let d = PyDict::new(py);
    d.set_item("theta", sol.theta)?;
    d.set_item("gamma", t.iter().map(|&s| gamma_at(&policy, &p, s)).collect::<Vec<_>>())?;
    d.set_item("gamma1", t.iter().map(|&s| p.gamma1(s)).collect::<Vec<_>>())?;
    d.set_item("gamma_star", t.iter().map(|&s| c.switching_value(s)).collect::<Vec<_>>())?;
    d.set_item("mu", t.iter().map(|&s| c.at(s)).collect::<Vec<_>>())?;
    d.set_item("pi", t.iter().map(|&s| policy.level_at(s)).collect::<Vec<_>>())?;
    d.set_item("t", t)?;
    Ok(d)
}

/// Multi-switch recurrence. `kappa` is either a float or a list of
/// `(start, value)` pairs.
#[pyfunction]
#[pyo3(signature = (lambda_, sigma, kappa, initial = "candid", max_switches = 8))]
fn cascade<'py>(
    py: Python<'py>,
    lambda_: f64,
    sigma: f64,
    kappa: &Bound<'py, PyAny>,
    initial: &str,
    max_switches: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let schedule = match kappa.extract::<f64>() {
        Ok(k) => KappaSchedule::constant(k),
        Err(_) => KappaSchedule::piecewise(kappa.extract::<Vec<(f64, f64)>>()?),
    }
    .map_err(to_py)?;
    let p = ModelParams::with_schedule(lambda_, sigma, schedule).map_err(to_py)?;
    let mut opts = CascadeOptions::new(regime(initial)?);
    opts.max_switches = max_switches;
    let state = cascade_run(&p, opts).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("switches", &state.switches)?;
    d.set_item("gammas", &state.gammas)?;
    d.set_item("kappa_bar", &state.kappa_bar)?;
    d.set_item("termination", state.termination.name())?;
    d.set_item("rule_violations", state.rule_violations)?;
    Ok(d)
}

/// Managerial objective of a bang-bang schedule.
#[pyfunction]
#[pyo3(signature = (switches, lambda_, sigma, kappa, initial = "candid"))]
fn objective(switches: Vec<f64>, lambda_: f64, sigma: f64, kappa: f64, initial: &str) -> PyResult<f64> {
    let p = params(lambda_, sigma, kappa)?;
    let policy = PolicySchedule::bang_bang(regime(initial)?, switches).map_err(to_py)?;
    Ok(core_objective(&policy, &p, DEFAULT_TOL).map_err(to_py)?.value)
}

/// Monte Carlo under a single-switch equilibrium; returns summary statistics.
#[pyfunction]
#[pyo3(signature = (lambda_, sigma, kappa, kind = "candid-first", n_paths = 10_000, seed = 42))]
fn simulate<'py>(
    py: Python<'py>,
    lambda_: f64,
    sigma: f64,
    kappa: f64,
    kind: &str,
    n_paths: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params(lambda_, sigma, kappa)?;
    let sol = match regime(kind)? {
        Regime::Candid => solve_candid_first(&p),
        Regime::Sparing => solve_sparing_first(&p),
    }
    .map_err(to_py)?;
    let policy = sol
        .policy()
        .filter(|_| sol.exists())
        .ok_or_else(|| PyLookupError::new_err(format!("no {kind} equilibrium: {}", sol.diagnostic())))?;
    let config = SimConfig::new(p, policy, n_paths, seed).map_err(to_py)?;
    let out = py.detach(|| core_simulate(&config));
    let report = martingale_diagnostic(&out.records).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n_paths", out.summary.n_paths)?;
    d.set_item("arrivals", out.summary.arrivals)?;
    d.set_item("disclosed", out.summary.disclosed)?;
    d.set_item("withheld", out.summary.withheld)?;
    d.set_item("mean_mandatory", out.summary.mean_mandatory)?;
    let rows: Vec<(f64, f64, f64, bool)> =
        report.checkpoints.iter().map(|c| (c.time, c.mean, c.se, c.within)).collect();
    d.set_item("checkpoints", rows)?;
    d.set_item("martingale_passed", report.passed)?;
    Ok(d)
}

/// Static threshold with a lognormal prior of log-sd `s_total`.
#[pyfunction]
fn dye_threshold<'py>(py: Python<'py>, q: f64, pi: f64, s_total: f64) -> PyResult<Bound<'py, PyDict>> {
    let problem = StaticDyeProblem::new(q, pi, s_total).map_err(to_py)?;
    let sol = solve_threshold(&problem).map_err(to_py)?;
    let dec = risk_neutral_decomposition(&problem, sol.gamma_s);
    let d = PyDict::new(py);
    d.set_item("gamma_s", sol.gamma_s)?;
    d.set_item("residual", sol.residual)?;
    d.set_item("unravelled", sol.unravelled)?;
    d.set_item("tau_d", dec.tau_d)?;
    d.set_item("identity_residual", dec.identity_residual)?;
    Ok(d)
}

#[pymodule]
fn candor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(h, m)?)?;
    m.add_function(wrap_pyfunction!(g, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_crit, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(curves, m)?)?;
    m.add_function(wrap_pyfunction!(cascade, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(dye_threshold, m)?)?;
    Ok(())
}
