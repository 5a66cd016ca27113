use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use candor_core::cascade::{cascade_run, CascadeOptions, CascadeState};
use candor_core::costate::Costate;
use candor_core::dye_static::{risk_neutral_decomposition, solve_threshold, StaticDyeProblem};
use candor_core::oracle::{brute_force_single_switch, mixed_control_sampler, SamplerConfig};
use candor_core::pdmp_sim::{martingale_diagnostic, regime_change_series, simulate, SimConfig};
use candor_core::single_switch::{coexistence_region, dtheta_dlambda, solve_candid_first, solve_sparing_first};
use candor_core::valuation::gamma_at;
use candor_core::{EquilibriumSolution, ModelParams, PolicySchedule, Regime};

use crate::config::{Kind, RunConfig};
use crate::csv::CsvWriter;
use crate::error::{CliError, CliResult};
use crate::row;

/// Files written by a command.
pub type Written = Vec<PathBuf>;

fn out_path(config: &RunConfig, name: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(&config.out_dir)?;
    Ok(config.out_dir.join(name))
}

fn solution_row(w: &mut CsvWriter, s: &EquilibriumSolution) -> CliResult<()> {
    let slope = dtheta_dlambda(s).ok();
    w.write(row![s.family.name(), s.kind.name(), s.exists(), s.theta, s.residual, s.sign_changes, slope, s.diagnostic()])?;
    Ok(())
}

pub fn cmd_solve(config: &RunConfig) -> CliResult<(Written, String)> {
    let report = coexistence_region(&config.params)?;
    let path = out_path(config, "solve.csv")?;
    let mut w = CsvWriter::create(
        &path,
        &["family", "kind", "exists", "theta", "residual", "sign_changes", "dtheta_dlambda", "diagnostic"],
    )?;
    solution_row(&mut w, &report.candid_first)?;
    solution_row(&mut w, &report.sparing_first)?;
    w.finish()?;

    let checks_path = out_path(config, "solve_checks.csv")?;
    let mut w = CsvWriter::create(&checks_path, &["family", "check", "holds", "lhs", "rhs"])?;
    for s in [&report.candid_first, &report.sparing_first] {
        for c in &s.checks {
            w.write(row![s.family.name(), c.name, c.holds, c.lhs, c.rhs])?;
        }
    }
    w.finish()?;

    let p = &config.params;
    let mut text = String::new();
    let _ = writeln!(text, "lambda = {}  sigma = {}  kappa = {}", p.lambda, p.sigma, p.kappa());
    for s in [&report.candid_first, &report.sparing_first] {
        match s.theta.filter(|_| s.exists()) {
            Some(theta) => {
                let _ = writeln!(text, "{:<14} theta = {theta:.6}", s.kind.name());
            }
            None => {
                let _ = writeln!(text, "{:<14} none: {}", format!("{}-first", s.family.name()), s.diagnostic());
            }
        }
    }
    let _ = writeln!(
        text,
        "always-candid  {} (margin {:.3e} at t = {:.4})",
        if report.always_candid.holds { "holds" } else { "fails" },
        report.always_candid.margin,
        report.always_candid.argmin
    );
    let existing: Vec<&str> = report.existing().iter().map(|k| k.name()).collect();
    let _ = writeln!(text, "coexisting: [{}]", existing.join(", "));
    let _ = writeln!(text, "lambda_crit(sigma) = {:.6}", report.lambda_crit);
    let text_path = out_path(config, "solve.txt")?;
    fs::write(&text_path, &text)?;
    Ok((vec![path, checks_path, text_path], text))
}

/// Bang-bang policy for the requested kind; piecewise κ goes through the cascade.
fn resolve_policy(config: &RunConfig) -> CliResult<(PolicySchedule, ModelParams, String)> {
    let p = &config.params;
    if !p.kappa_schedule().is_constant() {
        let initial = if config.kind == Kind::SparingFirst { Regime::Sparing } else { Regime::Candid };
        let state = run_cascade(config, initial)?;
        if state.switches.is_empty() {
            return Err(CliError::Missing(format!("cascade produced no switch ({})", state.termination)));
        }
        return Ok((state.policy()?, state.solved_params()?, format!("cascade ({})", state.termination)));
    }
    let candid = || solve_candid_first(p);
    let sparing = || solve_sparing_first(p);
    let sol = match config.kind {
        Kind::CandidFirst => candid()?,
        Kind::SparingFirst => sparing()?,
        Kind::Auto => {
            let c = candid()?;
            if c.exists() { c } else { sparing()? }
        }
    };
    match sol.policy() {
        Some(policy) if sol.exists() => Ok((policy, p.clone(), sol.kind.name().to_string())),
        _ => Err(CliError::Missing(format!("no {} equilibrium: {}", config.kind, sol.diagnostic()))),
    }
}

fn run_cascade(config: &RunConfig, initial: Regime) -> CliResult<CascadeState> {
    let mut opts = CascadeOptions::new(initial);
    opts.max_switches = config.max_switches;
    Ok(cascade_run(&config.params, opts)?)
}

pub fn cmd_curves(config: &RunConfig) -> CliResult<(Written, String)> {
    let (policy, params, label) = resolve_policy(config)?;
    let costate = Costate::new(&policy, &params)?;
    let n = config.grid_or(2001);
    let path = out_path(config, "curves.csv")?;
    let mut w = CsvWriter::create(&path, &["t", "gamma", "gamma1", "gamma_star", "mu", "pi"])?;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        w.write(row![
            t,
            gamma_at(&policy, &params, t),
            params.gamma1(t),
            costate.switching_value(t),
            costate.at(t),
            policy.level_at(t)
        ])?;
    }
    w.finish()?;
    let switches: Vec<String> = policy.switch_times().iter().map(|t| format!("{t:.6}")).collect();
    Ok((vec![path], format!("{label}: switches [{}]\n", switches.join(", "))))
}

pub fn cmd_bounds(config: &RunConfig) -> CliResult<(Written, String)> {
    let p = &config.params;
    let kappa = p.constant_kappa()?;
    let n = config.grid_or(2001);
    let c = 1.0 / kappa - 1.0;
    let h0 = p.h(0.0);
    let ratio = -kappa.ln() / c;
    // open grid: several curves are singular at θ = 0 or θ = 1
    let thetas: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();

    let candid = out_path(config, "bounds_candid_ratio.csv")?;
    let mut w = CsvWriter::create(&candid, &["theta", "g_over_theta_h0", "log_kinv_over_kinv_minus_1"])?;
    for &t in &thetas {
        w.write(row![t, p.g(t) / (t * h0), ratio])?;
    }
    w.finish()?;

    let lambda = out_path(config, "bounds_candid_lambda.csv")?;
    let mut w = CsvWriter::create(&lambda, &["theta", "lambda_upper", "lambda_lower"])?;
    for &t in &thetas {
        w.write(row![t, c / (t * h0), -kappa.ln() / p.g(t)])?;
    }
    w.finish()?;

    let sparing = out_path(config, "bounds_sparing.csv")?;
    let mut w = CsvWriter::create(&sparing, &["theta", "lambda_bound", "kinv_minus_1_bound", "h"])?;
    for &t in &thetas {
        let decay = -(p.h(t) / h0).ln() / p.g(t);
        w.write(row![t, decay, (1.0 - t) * p.h(t) * decay, p.h(t)])?;
    }
    w.finish()?;
    Ok((vec![candid, lambda, sparing], format!("{} theta points\n", thetas.len())))
}

pub fn cmd_cascade(config: &RunConfig) -> CliResult<(Written, String)> {
    let initial = if config.kind == Kind::SparingFirst { Regime::Sparing } else { Regime::Candid };
    let state = run_cascade(config, initial)?;
    let path = out_path(config, "cascade.csv")?;
    let mut w = CsvWriter::create(&path, &["i", "theta", "kappa_bar", "gamma", "termination"])?;
    for (i, &theta) in state.switches.iter().enumerate() {
        w.write(row![i + 1, theta, state.kappa_bar[i], state.gammas[i], state.termination.name()])?;
    }
    w.finish()?;
    let text = format!(
        "{} switch(es), termination {}, rule violations {}\n",
        state.switches.len(),
        state.termination,
        state.rule_violations
    );
    Ok((vec![path], text))
}

pub fn cmd_oracle(config: &RunConfig) -> CliResult<(Written, String)> {
    let p = &config.params;
    let n = config.grid_or(2000);
    if n < 100 {
        return Err(CliError::Config(format!("oracle grid must have at least 100 cells, got {n}")));
    }
    let table = out_path(config, "oracle.csv")?;
    let summary = out_path(config, "oracle_summary.csv")?;
    let mut w = CsvWriter::create(&table, &["regime", "theta", "objective"])?;
    let mut s = CsvWriter::create(&summary, &["regime", "analytic_theta", "best_theta", "best_objective", "max_error"])?;
    let mut text = String::new();
    for (regime, sol) in [(Regime::Candid, solve_candid_first(p)?), (Regime::Sparing, solve_sparing_first(p)?)] {
        let bf = brute_force_single_switch(p, regime, n)?;
        for (t, v) in bf.thetas.iter().zip(&bf.objectives) {
            w.write(row![regime.name(), *t, *v])?;
        }
        let analytic = sol.theta.filter(|_| sol.exists());
        s.write(row![regime.name(), analytic, bf.best_theta, bf.best_objective, bf.max_error])?;
        let _ = writeln!(text, "{}-first: grid argmax {:.6}", regime.name(), bf.best_theta);
    }
    w.finish()?;
    s.finish()?;

    let mixed = out_path(config, "oracle_mixed.csv")?;
    let report = mixed_control_sampler(p, &SamplerConfig::new(config.samples.max(1), config.seed))?;
    let mut w = CsvWriter::create(&mixed, &["index", "pieces", "objective", "optimum", "excess"])?;
    for m in &report.samples {
        w.write(row![m.index, m.policy.levels().len(), m.objective, report.optimum.objective, m.objective - report.optimum.objective])?;
    }
    w.finish()?;
    let _ = writeln!(
        text,
        "mixed controls: {} samples, {} violations, best bang-bang {} = {:.6}",
        report.samples.len(),
        report.violations,
        report.optimum.family,
        report.optimum.objective
    );
    Ok((vec![table, summary, mixed], text))
}

pub fn cmd_simulate(config: &RunConfig) -> CliResult<(Written, String)> {
    let (policy, params, label) = resolve_policy(config)?;
    let sim = SimConfig::new(params, policy, config.paths, config.seed)?;
    let out = simulate(&sim);
    let report = martingale_diagnostic(&out.records)?;

    let summary = out_path(config, "sim_summary.csv")?;
    let mut w = CsvWriter::create(
        &summary,
        &["n_paths", "seed", "arrivals", "disclosed", "withheld", "flagged", "mean_mandatory", "martingale_passed"],
    )?;
    let s = &out.summary;
    w.write(row![s.n_paths, config.seed, s.arrivals, s.disclosed, s.withheld, s.flagged, s.mean_mandatory, report.passed])?;
    w.finish()?;

    let checkpoints = out_path(config, "sim_checkpoints.csv")?;
    let mut w = CsvWriter::create(&checkpoints, &["t", "mean", "se", "public_mean", "public_se", "within_3se"])?;
    for c in report.checkpoints.iter().chain(std::iter::once(&report.mandatory)) {
        w.write(row![c.time, c.mean, c.se, c.public_mean, c.public_se, c.within])?;
    }
    w.finish()?;

    let events = out_path(config, "sim_events.csv")?;
    let mut w = CsvWriter::create(&events, &["path", "time", "event", "value"])?;
    for e in regime_change_series(&out.records) {
        w.write(row![e.path, e.time, e.kind.name(), e.value])?;
    }
    w.finish()?;
    let text = format!(
        "{label}: {} paths, {} arrivals ({} withheld), martingale check {}\n",
        s.n_paths,
        s.arrivals,
        s.withheld,
        if report.passed { "passed" } else { "failed" }
    );
    Ok((vec![summary, checkpoints, events], text))
}

pub fn cmd_dye(config: &RunConfig) -> CliResult<(Written, String)> {
    let path = out_path(config, "dye.csv")?;
    let mut w = CsvWriter::create(
        &path,
        &["q", "pi", "s_total", "gamma_s", "put_residual", "tau_d", "disclosed_mean", "identity_residual", "unravelled"],
    )?;
    let mut rows = 0;
    for &q in &config.q_grid {
        for &pi in &config.pi_grid {
            for &s in &config.s_grid {
                let problem = StaticDyeProblem::new(q, pi, s)?;
                let sol = solve_threshold(&problem)?;
                let d = risk_neutral_decomposition(&problem, sol.gamma_s);
                w.write(row![q, pi, s, sol.gamma_s, sol.residual, d.tau_d, d.disclosed_mean, d.identity_residual, sol.unravelled])?;
                rows += 1;
            }
        }
    }
    w.finish()?;
    Ok((vec![path], format!("{rows} threshold rows\n")))
}

