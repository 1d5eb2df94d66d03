//! Shared domain types and the simulation/estimator configuration.
//!
//! Angles are radians everywhere in this crate. Azimuth zero is blade 1
//! pointing vertically up, increasing in the direction of rotation; blades
//! 2 and 3 trail blade 1 by 120° and 240°.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

// std's inherent float methods shadow these when testing
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::N_BLADES;

pub const TWO_PI: f64 = 2.0 * PI;

/// Rounds `value` to the nearest multiple of `resolution`; zero disables.
pub fn quantize(value: f64, resolution: f64) -> f64 {
    if resolution > 0.0 {
        (value / resolution).round() * resolution
    } else {
        value
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle - TWO_PI * (angle / TWO_PI).floor();
    // rounds up to exactly 2π for tiny negative inputs
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Azimuths of all blades given blade 1's azimuth.
pub fn blade_azimuths(azimuth_blade1: f64) -> [f64; N_BLADES] {
    core::array::from_fn(|i| wrap_angle(azimuth_blade1 + TWO_PI * i as f64 / N_BLADES as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbineGeometry {
    pub rotor_radius: f64,
    pub hub_height: f64,
    pub rotor_area: f64,
    pub n_blades: usize,
}

impl TurbineGeometry {
    pub fn new(rotor_radius: f64, hub_height: f64) -> Result<Self> {
        if !(rotor_radius > 0.0) {
            return Err(domain("rotor_radius must be positive"));
        }
        if !(hub_height > rotor_radius) {
            return Err(domain("hub_height must exceed rotor_radius"));
        }
        Ok(Self {
            rotor_radius,
            hub_height,
            rotor_area: PI * rotor_radius * rotor_radius,
            n_blades: N_BLADES,
        })
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.rotor_radius
    }

    /// Radius at which blade effective wind speed is referenced.
    pub fn reference_radius(&self) -> f64 {
        2.0 * self.rotor_radius / 3.0
    }
}

impl Default for TurbineGeometry {
    /// 5 MW reference class: R = 63 m, hub height 90 m.
    fn default() -> Self {
        Self::new(63.0, 90.0).expect("default geometry is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirProperties {
    pub density: f64,
}

impl AirProperties {
    pub fn new(density: f64) -> Result<Self> {
        if !(density > 0.0) {
            return Err(domain("air density must be positive"));
        }
        Ok(Self { density })
    }

    /// `½ρAR`, the prefactor turning `U²·C_m` into a root moment.
    pub fn moment_prefactor(&self, geom: &TurbineGeometry) -> f64 {
        0.5 * self.density * geom.rotor_area * geom.rotor_radius
    }
}

impl Default for AirProperties {
    fn default() -> Self {
        Self { density: 1.225 }
    }
}

/// Rotor operating point as seen by each blade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub rotor_speed: f64,
    pub azimuth: [f64; N_BLADES],
    pub pitch: [f64; N_BLADES],
    pub tsr: [f64; N_BLADES],
}

impl OperatingPoint {
    /// Builds the operating point from blade 1's azimuth and the wind speed
    /// each blade sees. Blade azimuths are derived, never stored independently.
    pub fn new(
        rotor_speed: f64,
        azimuth_blade1: f64,
        pitch: [f64; N_BLADES],
        speeds: [f64; N_BLADES],
        rotor_radius: f64,
    ) -> Result<Self> {
        if speeds.iter().any(|u| !(*u > 0.0)) {
            return Err(domain("blade wind speeds must be positive"));
        }
        Ok(Self {
            rotor_speed,
            azimuth: blade_azimuths(azimuth_blade1),
            pitch,
            tsr: core::array::from_fn(|i| rotor_speed * rotor_radius / speeds[i]),
        })
    }
}

/// Diagonal blocks of the state weight `Q = blkdiag(q_y·I, q_θ·I, q_δy·I)`
/// acting on `[Ȳ; δθ; δȲ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateWeights {
    pub output: f64,
    pub input_rate: f64,
    pub output_rate: f64,
}

impl Default for StateWeights {
    fn default() -> Self {
        Self {
            output: 1.0,
            input_rate: 1e-2,
            output_rate: 1.0,
        }
    }
}

impl StateWeights {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            output: self.output * factor,
            input_rate: self.input_rate * factor,
            output_rate: self.output_rate * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Plant integration step [s].
    pub dt_sim: f64,
    /// Scenario length [s].
    pub duration: f64,
    /// Azimuth stations per revolution, `P`.
    pub samples_per_rev: usize,
    /// Past window of the predictor, `p`.
    pub past_window: usize,
    /// RLS forgetting factor `γ`.
    pub forgetting: f64,
    pub n_splines: usize,
    pub spline_degree: usize,
    pub horizon_pred: usize,
    pub horizon_est: usize,
    pub weight_state: StateWeights,
    /// `R = weight_input · I`.
    pub weight_input: f64,
    /// Dither amplitude on the estimator input [m/s].
    pub prbs_amplitude: f64,
    /// Dither low-pass cutoff [Hz]; `f64::INFINITY` disables filtering.
    pub prbs_cutoff: f64,
    pub rng_seed: u64,
    /// Ridge prior `δ₀` of the square-root RLS.
    pub rls_init: f64,
    /// Revolutions with θ frozen while the identification warms up.
    pub warmup_revolutions: usize,
    /// Time constant of the operating-point prior filter [s].
    pub prior_time_constant: f64,
    /// Initial operating-point prior [m/s]; `None` takes the first revolution's
    /// static inversion.
    pub prior_initial: Option<f64>,
    /// Normalization applied to moment errors before identification [N·m].
    pub load_scale: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_sim: 0.01,
            duration: 1000.0,
            samples_per_rev: 60,
            past_window: 12,
            forgetting: 0.9999,
            n_splines: 8,
            spline_degree: 3,
            horizon_pred: 3,
            horizon_est: 2,
            weight_state: StateWeights::default(),
            weight_input: 0.1,
            prbs_amplitude: 0.1,
            prbs_cutoff: 5.0,
            rng_seed: 1,
            rls_init: 1e-4,
            warmup_revolutions: 10,
            prior_time_constant: 30.0,
            prior_initial: None,
            load_scale: 1_048_576.0,
        }
    }
}

/// Returns the configuration unchanged when every invariant holds, otherwise
/// an [`Error::InvalidConfig`] listing each violation.
pub fn validate_config(cfg: SimConfig) -> Result<SimConfig> {
    let mut v: Vec<String> = Vec::new();
    let mut need = |ok: bool, msg: String| {
        if !ok {
            v.push(msg);
        }
    };

    need(cfg.dt_sim > 0.0 && cfg.dt_sim.is_finite(), format!("dt_sim must be positive (got {})", cfg.dt_sim));
    need(cfg.duration > 0.0 && cfg.duration.is_finite(), format!("duration must be positive (got {})", cfg.duration));
    need(
        cfg.forgetting > 0.0 && cfg.forgetting <= 1.0,
        format!("forgetting must satisfy 0<γ≤1 (got {})", cfg.forgetting),
    );
    need(cfg.past_window >= 1, String::from("past_window must be at least 1"));
    need(
        cfg.samples_per_rev >= cfg.past_window,
        format!(
            "samples_per_rev must be at least past_window (P={}, p={})",
            cfg.samples_per_rev, cfg.past_window
        ),
    );
    need(cfg.horizon_est >= 1, String::from("horizon_est must be at least 1"));
    need(
        cfg.horizon_est <= cfg.horizon_pred,
        format!(
            "horizon_est must not exceed horizon_pred (N_u={}, N_p={})",
            cfg.horizon_est, cfg.horizon_pred
        ),
    );
    need(
        cfg.n_splines <= cfg.samples_per_rev,
        format!(
            "n_splines must not exceed samples_per_rev (N_b={}, P={})",
            cfg.n_splines, cfg.samples_per_rev
        ),
    );
    need(
        cfg.n_splines > cfg.spline_degree,
        format!(
            "n_splines must be at least spline_degree+1 (N_b={}, N_k={})",
            cfg.n_splines, cfg.spline_degree
        ),
    );
    let (nb, k) = (cfg.n_splines, cfg.spline_degree);
    need(
        !(nb == cfg.samples_per_rev && k >= 2 && k % 2 == 0 && nb % 2 == 0),
        format!("an even spline_degree sampled only at the knots needs an odd n_splines (N_b=P={nb}, N_k={k})"),
    );
    let w = cfg.weight_state;
    need(
        w.output > 0.0 && w.input_rate > 0.0 && w.output_rate > 0.0,
        String::from("weight_state must be positive definite (all block weights > 0)"),
    );
    need(cfg.weight_input > 0.0, String::from("weight_input must be positive definite (> 0)"));
    need(
        cfg.prbs_amplitude >= 0.0 && cfg.prbs_amplitude.is_finite(),
        String::from("prbs_amplitude must be nonnegative"),
    );
    need(cfg.prbs_cutoff > 0.0, String::from("prbs_cutoff must be positive"));
    need(cfg.rls_init > 0.0, String::from("rls_init must be positive"));
    need(cfg.prior_time_constant > 0.0, String::from("prior_time_constant must be positive"));
    need(
        cfg.prior_initial.is_none_or(|u| u > 0.0),
        String::from("prior_initial must be positive"),
    );
    need(cfg.load_scale > 0.0, String::from("load_scale must be positive"));

    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(v))
    }
}
