//! Command line: `build-table`, `run` and `metrics`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use spre_core::cone::{build_table, ConeSurface, GridSpec};

use crate::error::{Result, SpreError};
use crate::metrics::{compute_metrics, write_metrics};
use crate::run::{plant_params, run_scenario, RunOptions};
use crate::scenario::resolve;
use crate::table_io::save_table;
use crate::timeseries::load_timeseries;

#[derive(Debug, Parser)]
#[command(name = "spre", version, about = "Blade effective wind speed estimation on a surrogate turbine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the nominal cone coefficient surface.
    BuildTable {
        #[arg(long)]
        out: PathBuf,
        /// Azimuth nodes per revolution.
        #[arg(long, default_value_t = 24)]
        azimuth_nodes: usize,
    },
    /// Run a scenario in closed loop.
    Run {
        /// Built-in name or path to a scenario TOML file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Cone table file for the estimator (default: built in memory).
        #[arg(long)]
        table: Option<PathBuf>,
        /// Also write the final Markov parameter estimate to xi.csv.
        #[arg(long)]
        dump_xi: bool,
        /// Also write the inflow on a rotor-plane grid to field.csv.
        #[arg(long)]
        dump_field: bool,
    },
    /// Recompute metrics from a time series.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::BuildTable { out, azimuth_nodes } => {
            if azimuth_nodes == 0 {
                return Err(SpreError::Config("--azimuth-nodes must be positive".into()));
            }
            let params = plant_params(&crate::scenario::builtin("step-shear")?);
            let grid = GridSpec {
                azimuth_nodes,
                ..GridSpec::default()
            };
            let table = build_table(&ConeSurface::default(), &params.geometry, &params.air, &grid)?;
            save_table(&table, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Run {
            scenario,
            out,
            seed,
            table,
            dump_xi,
            dump_field,
        } => {
            let mut s = resolve(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let opts = RunOptions {
                table,
                dump_xi,
                dump_field,
            };
            let summary = run_scenario(&s, &out, &opts)?;
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.output.frozen_revolutions > 0 {
                eprintln!("note: {} revolutions kept θ frozen", summary.output.frozen_revolutions);
            }
        }
        Command::Metrics { input, out } => {
            let rows = load_timeseries(&input)?;
            let m = compute_metrics(&rows)?;
            let mut buf = Vec::new();
            write_metrics(&m, &mut buf).map_err(SpreError::io("stdout"))?;
            match out {
                Some(path) => std::fs::write(&path, buf).map_err(SpreError::io(&path))?,
                None => print!("{}", String::from_utf8_lossy(&buf)),
            }
        }
    }
    Ok(())
}
