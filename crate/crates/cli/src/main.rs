use std::path::PathBuf;
use std::process::ExitCode;

use candor_cli::{run, Command, Kind, Overrides, RunConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "candor", version, about = "Candid/sparing disclosure equilibrium solver")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Parameter file of `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV output
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Grid resolution
    #[arg(long, global = true)]
    grid_n: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of simulated paths
    #[arg(long, global = true)]
    paths: Option<usize>,

    #[arg(long, global = true, value_enum)]
    kind: Option<KindArg>,

    #[arg(long, global = true)]
    max_switches: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Single-switch equilibria, coexistence and lambda_crit
    Solve,
    /// Valuation, switching curve and co-state on a grid
    Curves,
    /// Existence-bound curves against the switch time
    Bounds,
    /// Multi-switch recurrence trace
    Cascade,
    /// Brute-force objective tables and mixed-control sampler
    Oracle,
    /// Monte Carlo of news arrivals and disclosures
    Simulate,
    /// Static threshold tables
    Dye,
}

#[derive(ValueEnum, Clone, Copy)]
enum KindArg {
    CandidFirst,
    SparingFirst,
    Auto,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::CandidFirst => Kind::CandidFirst,
            KindArg::SparingFirst => Kind::SparingFirst,
            KindArg::Auto => Kind::Auto,
        }
    }
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Curves => Command::Curves,
            Cmd::Bounds => Command::Bounds,
            Cmd::Cascade => Command::Cascade,
            Cmd::Oracle => Command::Oracle,
            Cmd::Simulate => Command::Simulate,
            Cmd::Dye => Command::Dye,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        out_dir: cli.out_dir,
        grid_n: cli.grid_n,
        seed: cli.seed,
        paths: cli.paths,
        kind: cli.kind.map(Kind::from),
        max_switches: cli.max_switches,
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let result = RunConfig::load(&path, &overrides).and_then(|config| run(cli.command.into(), &config));
    match result {
        Ok((files, text)) => {
            print!("{text}");
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
