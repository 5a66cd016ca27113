//! Continuous-time voluntary-disclosure equilibria.
//!
//! Managers who privately observe news at Poisson times choose between
//! disclosing everything (candid, π = 0) and disclosing only good news
//! (sparing, π = 1). This crate computes the resulting equilibrium valuation,
//! the Pontryagin co-state and switching curve, single- and multi-switch
//! equilibria, brute-force optimality oracles, the static threshold problem
//! and a Monte Carlo simulation of the piecewise-deterministic valuation.

pub mod cascade;
pub mod costate;
pub mod dye_static;
pub mod error;
pub mod kernel;
pub mod numeric;
pub mod oracle;
pub mod pdmp_sim;
pub mod single_switch;
pub mod valuation;

pub use error::{Error, Result};
pub use kernel::{KappaSchedule, ModelParams};
pub use single_switch::{EquilibriumKind, EquilibriumSolution};
pub use valuation::{PolicySchedule, Regime, ValuationPath};
