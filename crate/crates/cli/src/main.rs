//! floodopt: coastal flood-adaptation valuation from the command line.
//!
//! Pipeline stages map onto subcommands: `fit` estimates hazard and
//! sea-level parameters from a tide-gauge record, `damage` prices annual
//! losses and premiums, `value` runs the investment-timing analysis,
//! `sweep` repeats it over a parameter grid, and `plotdata` emits the CSV
//! behind the standard figures.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{PlotKind, SweepParam};
use floodopt_core::{Error, LatticeSpec};

#[derive(Parser)]
#[command(
    name = "floodopt",
    version,
    about = "Value the timing and sequencing of coastal flood-adaptation investments"
)]
struct Cli {
    /// Scenario TOML; omitted means the built-in baseline
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Directory for CSV output
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Seed for Monte Carlo cross-checks
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,

    /// Lattice time step override, years
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Lattice horizon override, years
    #[arg(long, global = true)]
    horizon: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate hazard and sea-level parameters from an hourly gauge record
    Fit {
        /// Hourly gauge CSV (`timestamp,level_mm`)
        gauge: PathBuf,

        /// Station label carried through reports
        #[arg(long, default_value = "gauge")]
        station: String,

        /// Mean tidal amplitude subtracted when extracting surges, mm
        #[arg(long, default_value_t = 0.0)]
        mean_tide: f64,

        /// Minimum hourly coverage for a year to count
        #[arg(long, default_value_t = 0.8)]
        min_coverage: f64,

        /// Missing-value sentinel in the level column
        #[arg(long, default_value_t = floodopt_core::ingest::MISSING_SENTINEL)]
        sentinel: f64,
    },
    /// Expected-loss and premium table per protection configuration
    Damage,
    /// Value build orders: NPV, option totals, exercise boundaries
    Value {
        /// Cross-check lattice values with this many simulated paths
        #[arg(long)]
        mc_paths: Option<usize>,
    },
    /// Re-run the valuation across a parameter grid
    Sweep {
        /// Which scalar to vary
        #[arg(long, value_enum)]
        param: SweepParam,

        /// Comma-separated grid values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Emit plot-ready CSV data
    Plotdata {
        /// Which dataset to emit
        #[arg(long, value_enum)]
        kind: PlotKind,

        /// Sweep parameter (sweep kind only)
        #[arg(long, value_enum)]
        param: Option<SweepParam>,

        /// Sweep values (sweep kind only)
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,

        /// Build order for boundary data, e.g. --order proofing,dike
        #[arg(long, value_delimiter = ',')]
        order: Vec<String>,
    },
}

fn run(cli: Cli) -> floodopt_core::Result<()> {
    match cli.command {
        Command::Fit { gauge, station, mean_tide, min_coverage, sentinel } => {
            commands::cmd_fit(&gauge, &station, mean_tide, min_coverage, sentinel, &cli.out)
        }
        other => {
            let sc = scenario::load_scenario(cli.scenario.as_deref())?;
            let spec = LatticeSpec::new(
                cli.dt.unwrap_or(sc.lattice.dt),
                cli.horizon.unwrap_or(sc.lattice.horizon),
            )?;
            match other {
                Command::Damage => commands::cmd_damage(&sc, &cli.out),
                Command::Value { mc_paths } => {
                    commands::cmd_value(&sc, &spec, &cli.out, mc_paths, cli.seed)
                }
                Command::Sweep { param, values } => {
                    commands::cmd_sweep(&sc, &spec, param, &values, &cli.out)
                }
                Command::Plotdata { kind, param, values, order } => {
                    commands::cmd_plotdata(&sc, &spec, kind, param, &values, &order, &cli.out)
                }
                Command::Fit { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
