//! Command-line front end for the `candor` solvers: config parsing, CSV
//! emitters and one function per subcommand.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;

pub use config::{Kind, Overrides, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Curves,
    Bounds,
    Cascade,
    Oracle,
    Simulate,
    Dye,
}

/// Runs one subcommand, returning the files written and a short report.
pub fn run(command: Command, config: &RunConfig) -> CliResult<(commands::Written, String)> {
    match command {
        Command::Solve => commands::cmd_solve(config),
        Command::Curves => commands::cmd_curves(config),
        Command::Bounds => commands::cmd_bounds(config),
        Command::Cascade => commands::cmd_cascade(config),
        Command::Oracle => commands::cmd_oracle(config),
        Command::Simulate => commands::cmd_simulate(config),
        Command::Dye => commands::cmd_dye(config),
    }
}
