//! The estimator loop: azimuth-synchronous sampling of the plant, the
//! cone-model prediction `m̃`, recursive identification on the load error and
//! the once-per-revolution receding-horizon update of the spline weights.
//!
//! The identified model has no direct feedthrough, so the input emitted at
//! station `k` is the wind speed applied at station `k + 1`; inputs are
//! synthesized with a basis shifted by one station.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use crate::bspline::{build_basis, build_basis_shifted, SplineBasis};
use crate::cone::{invert_mean_moop, predict_moop, ConeTable, LoadCondition};
use crate::config::{quantize, validate_config, AirProperties, SimConfig, TurbineGeometry, TWO_PI};
use crate::error::{domain, Error, Result};
use crate::lifting::LiftedModel;
use crate::prbs::{derive_seed, Prbs};
use crate::rhe::{advance, estimate_bews, EstimatorState, RheSettings, RheWeights, SolveStatus, BEWS_FLOOR};
use crate::sysid::{init_markov, MarkovEstimate, PeriodicBuffer};
use crate::turbine::{BewsReference, Measurement, TurbineSim};
use crate::windfield::InflowField;
use crate::N_BLADES;

/// Picks, for every blade-1 station angle `s·2π/P`, the simulation sample
/// nearest in azimuth.
#[derive(Debug, Clone)]
pub struct StationSampler {
    period: usize,
    unwrapped: f64,
    next_station: Option<u64>,
    prev: Option<(f64, Measurement, BewsReference)>,
}

impl StationSampler {
    pub fn new(period: usize) -> Self {
        Self {
            period,
            unwrapped: 0.0,
            next_station: None,
            prev: None,
        }
    }

    fn spacing(&self) -> f64 {
        TWO_PI / self.period as f64
    }

    /// Feeds one simulation sample; returns every station reached since
    /// the previous call.
    pub fn feed(&mut self, meas: Measurement, reference: BewsReference) -> Vec<(usize, Measurement, BewsReference)> {
        let psi = meas.azimuth[0];
        let angle = match &self.prev {
            None => {
                self.unwrapped = psi;
                self.next_station = Some((psi / self.spacing()).ceil() as u64);
                psi
            }
            Some((last, _, _)) => {
                let mut d = psi - (last - TWO_PI * (last / TWO_PI).floor());
                if d < -core::f64::consts::PI {
                    d += TWO_PI;
                }
                last + d
            }
        };
        let mut hits = Vec::new();
        let mut next = self.next_station.unwrap_or(0);
        loop {
            let target = next as f64 * self.spacing();
            if target > angle {
                break;
            }
            let station = (next % self.period as u64) as usize;
            match &self.prev {
                Some((a0, m0, r0)) if target - a0 < angle - target => hits.push((station, *m0, *r0)),
                _ => hits.push((station, meas, reference)),
            }
            next += 1;
        }
        self.next_station = Some(next);
        self.unwrapped = angle;
        self.prev = Some((angle, meas, reference));
        hits
    }
}

/// What the estimator sees at one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationSample {
    pub station: usize,
    pub time: f64,
    pub moop: [f64; N_BLADES],
    pub azimuth: [f64; N_BLADES],
    pub rotor_speed: f64,
    pub pitch: [f64; N_BLADES],
}

impl StationSample {
    pub fn from_measurement(station: usize, m: &Measurement) -> Self {
        Self {
            station,
            time: m.time,
            moop: m.moop,
            azimuth: m.azimuth,
            rotor_speed: m.rotor_speed,
            pitch: m.pitch,
        }
    }
}

/// Estimator output at one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationOutput {
    /// Reported BEWS per blade (prior plus spline, no excitation).
    pub estimate: [f64; N_BLADES],
    /// Moment predicted from the reported BEWS.
    pub predicted: [f64; N_BLADES],
    /// `m − m̃` from the reported BEWS.
    pub error: [f64; N_BLADES],
    /// Wind speed actually fed to the cone model (excitation included).
    pub applied: [f64; N_BLADES],
    pub revolution: Option<RevolutionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevolutionStatus {
    /// Weights held while identification warms up.
    Warmup,
    Solved,
    /// The horizon problem could not be factorized; weights held.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevolutionRecord {
    pub index: usize,
    pub time: f64,
    pub ybar_norm: f64,
    pub dtheta_norm: f64,
    pub status: RevolutionStatus,
    pub prior: f64,
    pub rews: f64,
}

/// Everything the cone-model side of the estimator needs.
#[derive(Debug, Clone)]
pub struct ConeModel {
    pub table: ConeTable,
    pub geometry: TurbineGeometry,
    pub air: AirProperties,
    /// Grid that `m̃` is rounded to; matches the load sensor.
    pub resolution: f64,
}

impl ConeModel {
    fn predict(&self, speed: f64, s: &StationSample, blade: usize) -> Result<f64> {
        let m = predict_moop(
            &self.table,
            &self.geometry,
            &self.air,
            speed,
            s.rotor_speed,
            s.pitch[blade],
            s.azimuth[blade],
            blade,
        )?;
        Ok(quantize(m, self.resolution))
    }
}

/// SPRE state for one turbine.
#[derive(Debug, Clone)]
pub struct SpreEstimator {
    cfg: SimConfig,
    cone: ConeModel,
    output_basis: SplineBasis,
    input_basis: SplineBasis,
    buffer: PeriodicBuffer,
    rls: MarkovEstimate,
    rhe: EstimatorState,
    settings: RheSettings,
    prbs: Vec<Prbs>,
    prior: Option<f64>,
    snap_prior: bool,
    expected_station: Option<usize>,
    /// Input emitted at the previous station, with and without excitation.
    pending: Option<([f64; N_BLADES], [f64; N_BLADES])>,
    last_time: Option<f64>,
    rev_start: f64,
    y_rev: DVector<f64>,
    rev_moment: f64,
    rev_conditions: Vec<LoadCondition>,
    rev_estimate: f64,
    frozen: usize,
}

impl SpreEstimator {
    pub fn new(cfg: SimConfig, cone: ConeModel) -> Result<Self> {
        let cfg = validate_config(cfg)?;
        let (p, r) = (cfg.samples_per_rev, N_BLADES);
        let output_basis = build_basis(cfg.n_splines, cfg.spline_degree, p, r)?;
        let input_basis = build_basis_shifted(cfg.n_splines, cfg.spline_degree, p, r, 1.0)?;
        let buffer = PeriodicBuffer::new(p, cfg.past_window, r, r)?;
        let rls = init_markov(cfg.past_window, r, r, cfg.rls_init, cfg.forgetting)?;
        let nb = cfg.n_splines * r;
        let prbs = (0..r)
            .map(|i| Prbs::new(derive_seed(cfg.rng_seed, 1 + i as u64), cfg.prbs_amplitude, cfg.prbs_cutoff))
            .collect();
        Ok(Self {
            settings: RheSettings {
                weights: RheWeights {
                    state: cfg.weight_state,
                    input: cfg.weight_input,
                },
                horizon_pred: cfg.horizon_pred,
                horizon_est: cfg.horizon_est,
            },
            rhe: EstimatorState::new(nb, nb),
            prior: cfg.prior_initial,
            snap_prior: cfg.prior_initial.is_none(),
            cfg,
            cone,
            output_basis,
            input_basis,
            buffer,
            rls,
            prbs,
            expected_station: None,
            pending: None,
            last_time: None,
            rev_start: 0.0,
            y_rev: DVector::zeros(p * r),
            rev_moment: 0.0,
            rev_conditions: Vec::with_capacity(p * r),
            rev_estimate: 0.0,
            frozen: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn markov(&self) -> DMatrix<f64> {
        self.rls.markov()
    }

    pub fn rls(&self) -> &MarkovEstimate {
        &self.rls
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.rhe.theta
    }

    pub fn prior(&self) -> Option<f64> {
        self.prior
    }

    pub fn revolutions(&self) -> usize {
        self.rhe.j
    }

    pub fn frozen_revolutions(&self) -> usize {
        self.frozen
    }

    pub fn output_basis(&self) -> &SplineBasis {
        &self.output_basis
    }

    /// Reported BEWS at blade-1 azimuth `psi1`.
    pub fn bews_at(&self, psi1: f64) -> Result<[f64; N_BLADES]> {
        let prior = self.prior.unwrap_or(BEWS_FLOOR);
        let pos = psi1 * self.cfg.samples_per_rev as f64 / TWO_PI;
        let v = estimate_bews(&self.rhe.theta, &self.output_basis, pos, prior)?;
        Ok([v[0], v[1], v[2]])
    }

    fn collective_inversion(&self, moment: f64, conditions: &[LoadCondition]) -> Option<f64> {
        invert_mean_moop(&self.cone.table, &self.cone.geometry, &self.cone.air, moment, conditions).ok()
    }

    /// Processes one station sample. Samples before the first station 0
    /// are ignored (`Ok(None)`).
    pub fn observe(&mut self, s: &StationSample) -> Result<Option<StationOutput>> {
        let p = self.cfg.samples_per_rev;
        if s.station >= p {
            return Err(domain("station index out of range"));
        }
        match self.expected_station {
            None if s.station != 0 => return Ok(None),
            None => self.rev_start = s.time,
            Some(e) if e != s.station => {
                return Err(domain(alloc::format!("expected station {e}, got {}", s.station)))
            }
            _ => {}
        }
        if s.moop.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("measured moment"));
        }
        let conditions: Vec<LoadCondition> = (0..N_BLADES)
            .map(|b| LoadCondition {
                rotor_speed: s.rotor_speed,
                pitch: s.pitch[b],
                azimuth: s.azimuth[b],
                blade: b,
            })
            .collect();
        if self.prior.is_none() {
            let mean = s.moop.iter().sum::<f64>() / N_BLADES as f64;
            self.prior = Some(self.collective_inversion(mean, &conditions).unwrap_or(BEWS_FLOOR));
        }
        let dt = self.last_time.map_or(0.0, |t| s.time - t);
        self.last_time = Some(s.time);
        let prior = self.prior.unwrap_or(BEWS_FLOOR);
        let scale = self.cfg.load_scale;

        // the input emitted at the previous station is the one applied here
        let (applied, clean) = self.pending.unwrap_or(([prior; N_BLADES], [prior; N_BLADES]));
        let mut y = [0.0; N_BLADES];
        let mut y_clean = [0.0; N_BLADES];
        for b in 0..N_BLADES {
            y[b] = (s.moop[b] - self.cone.predict(applied[b], s, b)?) / scale;
            y_clean[b] = (s.moop[b] - self.cone.predict(clean[b], s, b)?) / scale;
        }
        let estimate = self.bews_at(s.azimuth[0])?;
        let mut predicted = [0.0; N_BLADES];
        for b in 0..N_BLADES {
            predicted[b] = self.cone.predict(estimate[b], s, b)?;
        }
        let error: [f64; N_BLADES] = core::array::from_fn(|b| s.moop[b] - predicted[b]);

        let regressor = (self.buffer.len() == self.buffer.capacity())
            .then(|| self.buffer.regressor())
            .transpose()?;
        let spline = self.input_basis.synthesize(self.rhe.theta.as_slice(), s.station)?;
        let mut u = [0.0; N_BLADES];
        let mut u_clean = [0.0; N_BLADES];
        for b in 0..N_BLADES {
            u_clean[b] = (prior + spline[b]).max(BEWS_FLOOR);
            u[b] = (prior + spline[b] + self.prbs[b].next_sample(dt)).max(BEWS_FLOOR);
        }
        if let (Some((_, dy)), Some(phi)) = (self.buffer.push(&u, &y)?, regressor) {
            self.rls.rls_update(&phi, &dy)?;
        }
        self.pending = Some((u, u_clean));

        for b in 0..N_BLADES {
            self.y_rev[s.station * N_BLADES + b] = y_clean[b];
        }
        self.rev_moment += s.moop.iter().sum::<f64>();
        self.rev_conditions.extend(conditions);
        self.rev_estimate += estimate.iter().sum::<f64>();
        self.expected_station = Some((s.station + 1) % p);

        let revolution = if s.station == p - 1 {
            Some(self.end_revolution(s.time)?)
        } else {
            None
        };
        Ok(Some(StationOutput {
            estimate,
            predicted,
            error,
            applied,
            revolution,
        }))
    }

    fn end_revolution(&mut self, time: f64) -> Result<RevolutionRecord> {
        let n = self.rev_conditions.len() as f64;
        let conditions = core::mem::take(&mut self.rev_conditions);
        if let Some(target) = self.collective_inversion(self.rev_moment / n, &conditions) {
            let prior = self.prior.unwrap_or(target);
            let period = time - self.rev_start;
            self.prior = Some(if self.snap_prior {
                self.snap_prior = false;
                target
            } else {
                let alpha = 1.0 - (-period / self.cfg.prior_time_constant).exp();
                prior + alpha * (target - prior)
            });
        }
        self.rev_conditions = conditions;
        self.rev_conditions.clear();

        let update = self.rhe.j >= self.cfg.warmup_revolutions;
        let lifted = if update {
            Some(LiftedModel::from_markov(
                &self.rls.markov(),
                self.cfg.past_window,
                N_BLADES,
                N_BLADES,
                self.cfg.samples_per_rev,
            )?)
        } else {
            None
        };
        let report = advance(
            &mut self.rhe,
            lifted.as_ref(),
            &self.output_basis,
            &self.input_basis,
            &self.settings,
            &self.y_rev,
            update,
        )?;
        let status = match (update, report.status) {
            (false, _) => RevolutionStatus::Warmup,
            (true, SolveStatus::Solved) => RevolutionStatus::Solved,
            (true, SolveStatus::Frozen) => {
                self.frozen += 1;
                RevolutionStatus::Frozen
            }
        };
        let record = RevolutionRecord {
            index: self.rhe.j - 1,
            time,
            ybar_norm: report.ybar_norm,
            dtheta_norm: report.dtheta_norm,
            status,
            prior: self.prior.unwrap_or(BEWS_FLOOR),
            rews: self.rev_estimate / (N_BLADES * self.cfg.samples_per_rev) as f64,
        };
        self.rev_moment = 0.0;
        self.rev_estimate = 0.0;
        self.rev_start = time;
        Ok(record)
    }
}

/// One CSV-ready row per estimator station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationRecord {
    pub time: f64,
    pub revolution: usize,
    pub station: usize,
    pub azimuth: f64,
    pub estimate: [f64; N_BLADES],
    pub reference: [f64; N_BLADES],
    pub rews_estimate: f64,
    pub rews_reference: f64,
    pub moop: [f64; N_BLADES],
    pub predicted: [f64; N_BLADES],
    pub error: [f64; N_BLADES],
}

/// Plant, inflow and estimator wired together.
#[derive(Debug, Clone)]
pub struct ClosedLoop<F> {
    field: F,
    sim: TurbineSim,
    sampler: StationSampler,
    estimator: SpreEstimator,
    disturbance: Option<Vec<[f64; N_BLADES]>>,
    dt: f64,
    steps: u64,
}

impl<F: InflowField> ClosedLoop<F> {
    pub fn new(field: F, sim: TurbineSim, estimator: SpreEstimator) -> Self {
        let period = estimator.config().samples_per_rev;
        let dt = estimator.config().dt_sim;
        Self {
            field,
            sim,
            sampler: StationSampler::new(period),
            estimator,
            disturbance: None,
            dt,
            steps: 0,
        }
    }

    /// Adds a load indexed by blade-1 station to every sampled moment. The
    /// load is rounded to the sensor resolution.
    pub fn with_disturbance(mut self, load: Vec<[f64; N_BLADES]>) -> Result<Self> {
        crate::error::check_dim("disturbance stations", self.estimator.config().samples_per_rev, load.len())?;
        if load.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("load disturbance"));
        }
        let res = self.sim.params.sensor_resolution;
        self.disturbance = Some(load.iter().map(|row| row.map(|v| quantize(v, res))).collect());
        Ok(self)
    }

    pub fn estimator(&self) -> &SpreEstimator {
        &self.estimator
    }

    pub fn sim(&self) -> &TurbineSim {
        &self.sim
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.sim.state().time
    }

    /// One simulation step; returns the station rows it completed.
    pub fn step(&mut self) -> Result<Vec<(StationRecord, Option<RevolutionRecord>)>> {
        let (meas, reference) = self.sim.step(&self.field, self.dt)?;
        self.steps += 1;
        let mut out = Vec::new();
        for (station, m, r) in self.sampler.feed(meas, reference) {
            let mut sample = StationSample::from_measurement(station, &m);
            if let Some(d) = &self.disturbance {
                for b in 0..N_BLADES {
                    sample.moop[b] += d[station][b];
                }
            }
            let Some(o) = self.estimator.observe(&sample)? else {
                continue;
            };
            let rews_estimate = o.estimate.iter().sum::<f64>() / N_BLADES as f64;
            let record = StationRecord {
                time: sample.time,
                revolution: self.estimator.revolutions() - usize::from(o.revolution.is_some()),
                station,
                azimuth: sample.azimuth[0],
                estimate: o.estimate,
                reference: r.blade,
                rews_estimate,
                rews_reference: r.rews,
                moop: sample.moop,
                predicted: o.predicted,
                error: o.error,
            };
            out.push((record, o.revolution));
        }
        Ok(out)
    }

    /// Steps until `duration` seconds have been simulated in total.
    pub fn run(
        &mut self,
        duration: f64,
        mut sink: impl FnMut(&StationRecord, Option<&RevolutionRecord>),
    ) -> Result<()> {
        let total = (duration / self.dt).round() as u64;
        while self.steps < total {
            for (rec, rev) in self.step()? {
                sink(&rec, rev.as_ref());
            }
        }
        Ok(())
    }
}
