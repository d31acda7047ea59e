//! `compute-market`: simulate scenarios and print the game analysis.

mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "compute-market",
    version,
    about = "Compute-market simulator and game analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Directory for output files; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv and metrics.txt.
    Simulate {
        /// Scenario file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Print the outcome payoffs, expected utilities and dominance results.
    Analyze {
        /// Game parameter file.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Print the mixed-strategy equilibrium and the creator's optimal p_a.
    Equilibrium {
        /// Game parameter file.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run a scenario over a parameter grid and write sweep.csv.
    Sweep {
        /// Scenario template.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the template's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// One axis, `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "grid", value_name = "KEY=V1,V2,...")]
        grid: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Print the two-strategy model's utility table and equilibrium check.
    LegacyNe {
        /// Parameter file; the published values when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Write dU/dp_a over p_a for each n as CSV.
    DumpDerivativeCurve {
        /// Game parameter file.
        #[arg(long)]
        config: PathBuf,
        /// Replication counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        n: Vec<u32>,
        /// Interior grid points per n.
        #[arg(long, default_value_t = 999)]
        points: usize,
        #[command(flatten)]
        out: Output,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, out } => commands::simulate(&config, seed, out.out),
        Command::Analyze { config, out } => commands::analyze(&config, out.out),
        Command::Equilibrium { config, out } => commands::equilibrium(&config, out.out),
        Command::Sweep {
            config,
            seed,
            grid,
            out,
        } => commands::sweep(&config, seed, &grid, out.out),
        Command::LegacyNe { config, out } => commands::legacy_ne(config.as_deref(), out.out),
        Command::DumpDerivativeCurve {
            config,
            n,
            points,
            out,
        } => commands::dump_derivative_curve(&config, &n, points, out.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(1)
        }
    }
}
