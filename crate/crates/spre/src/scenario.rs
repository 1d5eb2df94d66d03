//! Named scenarios and the TOML scenario file.
//!
//! A scenario file is a flat TOML document layered over a built-in scenario
//! (`base`, default `step-shear`); every key is optional:
//!
//! ```toml
//! name = "gusty"
//! base = "step-shear"
//!
//! [simulation]
//! duration = 600.0
//! forgetting = 0.9995
//!
//! [wind]
//! speed_start = 10.0
//! shear_exponent = 0.14
//!
//! [plant]
//! noise_fraction = 0.02
//! ```

use serde::{Deserialize, Serialize};
use spre_core::config::{validate_config, SimConfig, StateWeights, TurbineGeometry};
use spre_core::windfield::{CompositeField, OffsetDrift, ShearedField, StepSchedule, WakeField};

use crate::error::{Result, SpreError};

pub const BUILTIN_NAMES: [&str; 3] = ["step-shear", "wake-overlap", "ideal"];

/// Every key of [`SimConfig`] as it appears in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub dt_sim: f64,
    pub duration: f64,
    pub samples_per_rev: usize,
    pub past_window: usize,
    pub forgetting: f64,
    pub n_splines: usize,
    pub spline_degree: usize,
    pub horizon_pred: usize,
    pub horizon_est: usize,
    pub weight_output: f64,
    pub weight_input_rate: f64,
    pub weight_output_rate: f64,
    pub weight_input: f64,
    pub prbs_amplitude: f64,
    pub prbs_cutoff: f64,
    pub rng_seed: u64,
    pub rls_init: f64,
    pub warmup_revolutions: usize,
    pub prior_time_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_initial: Option<f64>,
    pub load_scale: f64,
}

impl From<&SimConfig> for SimulationSpec {
    fn from(c: &SimConfig) -> Self {
        Self {
            dt_sim: c.dt_sim,
            duration: c.duration,
            samples_per_rev: c.samples_per_rev,
            past_window: c.past_window,
            forgetting: c.forgetting,
            n_splines: c.n_splines,
            spline_degree: c.spline_degree,
            horizon_pred: c.horizon_pred,
            horizon_est: c.horizon_est,
            weight_output: c.weight_state.output,
            weight_input_rate: c.weight_state.input_rate,
            weight_output_rate: c.weight_state.output_rate,
            weight_input: c.weight_input,
            prbs_amplitude: c.prbs_amplitude,
            prbs_cutoff: c.prbs_cutoff,
            rng_seed: c.rng_seed,
            rls_init: c.rls_init,
            warmup_revolutions: c.warmup_revolutions,
            prior_time_constant: c.prior_time_constant,
            prior_initial: c.prior_initial,
            load_scale: c.load_scale,
        }
    }
}

impl From<&SimulationSpec> for SimConfig {
    fn from(s: &SimulationSpec) -> Self {
        Self {
            dt_sim: s.dt_sim,
            duration: s.duration,
            samples_per_rev: s.samples_per_rev,
            past_window: s.past_window,
            forgetting: s.forgetting,
            n_splines: s.n_splines,
            spline_degree: s.spline_degree,
            horizon_pred: s.horizon_pred,
            horizon_est: s.horizon_est,
            weight_state: StateWeights {
                output: s.weight_output,
                input_rate: s.weight_input_rate,
                output_rate: s.weight_output_rate,
            },
            weight_input: s.weight_input,
            prbs_amplitude: s.prbs_amplitude,
            prbs_cutoff: s.prbs_cutoff,
            rng_seed: s.rng_seed,
            rls_init: s.rls_init,
            warmup_revolutions: s.warmup_revolutions,
            prior_time_constant: s.prior_time_constant,
            prior_initial: s.prior_initial,
            load_scale: s.load_scale,
        }
    }
}

/// Hub-height speed staircase with power-law shear and an optional wake.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    pub speed_start: f64,
    pub speed_end: f64,
    pub speed_increment: f64,
    /// Seconds between speed steps.
    pub step_interval: f64,
    pub shear_exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wake: Option<WakeSpec>,
}

/// Upstream-turbine wake; lengths in rotor diameters, ambient speed is the
/// hub speed at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WakeSpec {
    pub turbulence_intensity: f64,
    pub spacing: f64,
    pub thrust_coefficient: f64,
    pub offset_start: f64,
    pub offset_end: f64,
    pub drift_start: f64,
    pub drift_end: f64,
}

impl Default for WakeSpec {
    fn default() -> Self {
        Self {
            turbulence_intensity: 0.06,
            spacing: 3.0,
            thrust_coefficient: WakeField::DEFAULT_THRUST,
            offset_start: 1.5,
            offset_end: 0.0,
            drift_start: 100.0,
            drift_end: 900.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    /// Truth surface gain relative to the estimator's table.
    pub gain_factor: f64,
    /// Load noise standard deviation as a fraction of the rated moment.
    pub noise_fraction: f64,
    /// Rotor-speed tracking time constant [s].
    pub speed_time_constant: f64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            gain_factor: 1.0,
            noise_fraction: 0.01,
            speed_time_constant: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub wind: WindSpec,
    pub plant: PlantSpec,
    pub simulation: SimulationSpec,
}

impl Scenario {
    pub fn config(&self) -> SimConfig {
        SimConfig::from(&self.simulation)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.simulation.rng_seed = seed;
        self
    }

    pub fn schedule(&self) -> Result<StepSchedule> {
        let w = &self.wind;
        let s = if w.speed_end == w.speed_start {
            StepSchedule::constant(w.speed_start)
        } else {
            StepSchedule::staircase(w.speed_start, w.speed_end, w.speed_increment, w.step_interval)
        };
        s.map_err(|e| SpreError::Config(format!("wind: {e}")))
    }

    pub fn field(&self, geometry: &TurbineGeometry) -> Result<CompositeField> {
        let cfg_err = |e: spre_core::Error| SpreError::Config(format!("wind: {e}"));
        let shear = ShearedField::new(self.schedule()?, self.wind.shear_exponent, geometry.hub_height)
            .map_err(cfg_err)?;
        let Some(w) = self.wind.wake else {
            return Ok(CompositeField::shear_only(shear));
        };
        let d = geometry.diameter();
        let wake = WakeField::new(
            self.wind.speed_start,
            w.turbulence_intensity,
            w.spacing,
            w.offset_start * d,
            d,
            geometry.hub_height,
            w.thrust_coefficient,
        )
        .map_err(cfg_err)?;
        let drift = OffsetDrift {
            offset_start: w.offset_start * d,
            offset_end: w.offset_end * d,
            t_start: w.drift_start,
            t_end: w.drift_end,
        };
        Ok(CompositeField::with_wake(shear, wake, drift))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        validate_config(self.config())?;
        self.field(&TurbineGeometry::default())?;
        let p = &self.plant;
        if !(p.gain_factor > 0.0 && p.noise_fraction >= 0.0 && p.speed_time_constant > 0.0) {
            return Err(SpreError::Config(
                "plant: gain_factor and speed_time_constant must be positive, noise_fraction nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Parses a scenario file, layering it over its `base` built-in.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e| SpreError::Config(format!("scenario file: {e}")))?;
        let base = match doc.remove("base") {
            None => "step-shear".to_string(),
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err(SpreError::Config("scenario file: `base` must be a string".into())),
        };
        let base = builtin(&base)?;
        let mut merged = toml::Table::try_from(&base).expect("scenarios serialize to a table");
        merge(&mut merged, doc);
        let s: Scenario = merged
            .try_into()
            .map_err(|e| SpreError::Config(format!("scenario file: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize to TOML")
    }
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => merge(dst, src),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// The built-in scenario called `name`.
pub fn builtin(name: &str) -> Result<Scenario> {
    let step_shear = Scenario {
        name: "step-shear".into(),
        wind: WindSpec {
            speed_start: 8.0,
            speed_end: 15.0,
            speed_increment: 1.0,
            step_interval: 100.0,
            shear_exponent: 0.2,
            wake: None,
        },
        plant: PlantSpec {
            gain_factor: 1.03,
            ..PlantSpec::default()
        },
        simulation: SimulationSpec::from(&SimConfig::default()),
    };
    match name {
        "step-shear" => Ok(step_shear),
        "wake-overlap" => Ok(Scenario {
            name: name.into(),
            wind: WindSpec {
                speed_start: 12.0,
                speed_end: 12.0,
                shear_exponent: 0.0,
                wake: Some(WakeSpec::default()),
                ..step_shear.wind
            },
            plant: PlantSpec::default(),
            ..step_shear
        }),
        "ideal" => Ok(Scenario {
            name: name.into(),
            wind: WindSpec {
                speed_start: 8.0,
                speed_end: 8.0,
                shear_exponent: 0.0,
                ..step_shear.wind
            },
            plant: PlantSpec {
                noise_fraction: 0.0,
                ..PlantSpec::default()
            },
            simulation: SimulationSpec {
                duration: 400.0,
                prior_initial: Some(7.0),
                prior_time_constant: f64::INFINITY,
                ..step_shear.simulation
            },
        }),
        _ => Err(SpreError::Config(format!(
            "unknown scenario `{name}`; available: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

/// A built-in name or the path of a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    if BUILTIN_NAMES.contains(&name_or_path) {
        return builtin(name_or_path);
    }
    let path = std::path::Path::new(name_or_path);
    if !path.is_file() {
        return builtin(name_or_path);
    }
    let text = std::fs::read_to_string(path).map_err(|source| SpreError::MissingInput {
        path: path.into(),
        source,
    })?;
    Scenario::from_toml(&text)
}
