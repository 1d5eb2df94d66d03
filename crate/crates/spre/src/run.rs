//! Runs a scenario end to end and writes its artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use spre_core::closed_loop::{ClosedLoop, ConeModel, RevolutionRecord, SpreEstimator};
use spre_core::cone::{build_table, ConeSurface, ConeTable, GridSpec};
use spre_core::prbs::derive_seed;
use spre_core::turbine::{equilibrium_state, TurbineParams, TurbineSim};
use spre_core::windfield::{CompositeField, InflowField};

use crate::error::{Result, SpreError};
use crate::format::push_fields;
use crate::metrics::{compute_metrics, write_metrics, write_azimuth_maps, Metrics};
use crate::scenario::Scenario;
use crate::timeseries::{read_timeseries, write_revolutions, write_timeseries, Row};

/// Everything a closed-loop run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub revolutions: Vec<RevolutionRecord>,
    /// Final identified Markov matrix.
    pub markov: DMatrix<f64>,
    pub frozen_revolutions: usize,
}

pub fn plant_params(s: &Scenario) -> TurbineParams {
    let mut params = TurbineParams {
        speed_time_constant: s.plant.speed_time_constant,
        ..TurbineParams::default()
    };
    params.noise_std = s.plant.noise_fraction * params.rated_moop(&ConeSurface::default());
    params
}

/// The estimator's table built from the nominal surface on the default grid.
pub fn default_table(params: &TurbineParams) -> Result<ConeTable> {
    Ok(build_table(&ConeSurface::default(), &params.geometry, &params.air, &GridSpec::default())?)
}

/// Simulates `s`; the estimator uses `table` or the default one.
pub fn simulate(s: &Scenario, table: Option<ConeTable>) -> Result<RunOutput> {
    s.validate()?;
    let cfg = s.config();
    let params = plant_params(s);
    let field = s.field(&params.geometry)?;
    let schedule = s.schedule()?;
    let cone = ConeModel {
        table: match table {
            Some(t) => t,
            None => default_table(&params)?,
        },
        geometry: params.geometry,
        air: params.air,
        resolution: params.sensor_resolution,
    };
    let estimator = SpreEstimator::new(cfg.clone(), cone)?;
    let state = equilibrium_state(&field, &params, 0.0)?;
    let surface = ConeSurface::default().with_gain_factor(s.plant.gain_factor);
    let sim = TurbineSim::new(params, surface, state, derive_seed(cfg.rng_seed, 0));
    let mut cl = ClosedLoop::new(field, sim, estimator);

    let mut rows = Vec::new();
    let mut revolutions = Vec::new();
    cl.run(cfg.duration, |r, rev| {
        rows.push(Row::from_record(r, schedule.segment_at(r.time)));
        revolutions.extend(rev.copied());
    })?;
    Ok(RunOutput {
        rows,
        revolutions,
        markov: cl.estimator().markov(),
        frozen_revolutions: cl.estimator().frozen_revolutions(),
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub table: Option<PathBuf>,
    pub dump_xi: bool,
    pub dump_field: bool,
}

/// Files written by [`run_scenario`] and the metrics, when the run was
/// long enough to compute them.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub metrics: Option<Metrics>,
    pub output: RunOutput,
}

pub fn run_scenario(s: &Scenario, out_dir: &Path, opts: &RunOptions) -> Result<RunSummary> {
    s.validate()?;
    let table = opts.table.as_deref().map(crate::table_io::load_table).transpose()?;
    std::fs::create_dir_all(out_dir).map_err(SpreError::io(out_dir))?;
    let output = simulate(s, table)?;
    let mut files = Vec::new();

    let mut emit = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(SpreError::io(&path))?;
        std::fs::write(&path, buf).map_err(SpreError::io(&path))?;
        files.push(path);
        Ok(())
    };
    let mut series = Vec::new();
    write_timeseries(&output.rows, &mut series).map_err(SpreError::io(out_dir.join("timeseries.csv")))?;
    emit("timeseries.csv", &|w| w.write_all(&series))?;
    emit("revolutions.csv", &|w| write_revolutions(&output.revolutions, w))?;
    // metrics see the rows as written, so `spre metrics` reproduces them
    let written = read_timeseries(series.as_slice(), &out_dir.join("timeseries.csv"))?;
    let metrics = match compute_metrics(&written) {
        Ok(m) => {
            emit("metrics.csv", &|w| write_metrics(&m, w))?;
            emit("azimuth_map.csv", &|w| write_azimuth_maps(&m, w))?;
            Some(m)
        }
        Err(SpreError::InsufficientData(msg)) => {
            eprintln!("warning: metrics skipped ({msg})");
            None
        }
        Err(e) => return Err(e),
    };
    if opts.dump_xi {
        emit("xi.csv", &|w| write_matrix(&output.markov, w))?;
    }
    if opts.dump_field {
        let params = plant_params(s);
        let field = s.field(&params.geometry)?;
        let mut buf = Vec::new();
        write_field(&field, &params, s.config().duration, &mut buf)?;
        emit("field.csv", &|w| w.write_all(&buf))?;
    }
    Ok(RunSummary { files, metrics, output })
}

pub fn write_matrix(m: &DMatrix<f64>, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# spre markov v1 ({}x{}, oldest lag first)", m.nrows(), m.ncols())?;
    for row in m.row_iter() {
        let mut line = String::new();
        push_fields(&mut line, &row.iter().copied().collect::<Vec<_>>());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Inflow on a 21×21 rotor-plane grid every 100 s.
pub fn write_field(field: &CompositeField, params: &TurbineParams, duration: f64, out: &mut impl Write) -> Result<()> {
    let g = &params.geometry;
    let io = |e| SpreError::Io {
        path: "field.csv".into(),
        source: e,
    };
    writeln!(out, "# spre field v1\nt,y,z,u").map_err(io)?;
    let n = (duration / 100.0).floor() as usize;
    for k in 0..=n {
        let t = 100.0 * k as f64;
        for i in 0..21 {
            for j in 0..21 {
                let y = g.rotor_radius * (i as f64 / 10.0 - 1.0);
                let z = g.hub_height + g.rotor_radius * (j as f64 / 10.0 - 1.0);
                let mut line = String::new();
                push_fields(&mut line, &[t, y, z, field.sample_velocity(y, z, t)?]);
                writeln!(out, "{line}").map_err(io)?;
            }
        }
    }
    Ok(())
}
