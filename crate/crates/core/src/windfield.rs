//! Ground-truth inflow: power-law shear over a stepwise hub-speed schedule and
//! a steady Gaussian wake deficit, sampled at points `(y, z)` of the rotor
//! plane. `y` is the horizontal crosswind coordinate (positive on the side
//! the blades sweep through at 90° azimuth) and `z` the height above ground.

use alloc::format;
use alloc::vec::Vec;


// std's inherent float methods shadow these when testing
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{domain, Result};

/// Anything that can report the streamwise wind speed at a rotor-plane point.
pub trait InflowField {
    /// Wind speed at `(y, z)` and time `t`; never negative.
    fn sample_velocity(&self, y: f64, z: f64, t: f64) -> Result<f64>;
}

/// Piecewise-constant, right-continuous hub-height speed schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    steps: Vec<(f64, f64)>,
}

impl StepSchedule {
    pub fn new(steps: Vec<(f64, f64)>) -> Result<Self> {
        let first = steps.first().ok_or_else(|| domain("schedule needs at least one step"))?;
        if first.0 != 0.0 {
            return Err(domain("schedule must start at t=0"));
        }
        for w in steps.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(domain(format!(
                    "schedule start times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if steps.iter().any(|(_, u)| !(*u > 0.0)) {
            return Err(domain("hub speeds must be positive"));
        }
        Ok(Self { steps })
    }

    pub fn constant(speed: f64) -> Result<Self> {
        Self::new(alloc::vec![(0.0, speed)])
    }

    /// Steps of `increment` every `interval` seconds from `from` to `to`.
    pub fn staircase(from: f64, to: f64, increment: f64, interval: f64) -> Result<Self> {
        if !(increment > 0.0 && interval > 0.0) {
            return Err(domain("staircase increment and interval must be positive"));
        }
        let n = ((to - from) / increment).round() as usize;
        Self::new(
            (0..=n)
                .map(|i| (i as f64 * interval, from + i as f64 * increment))
                .collect(),
        )
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    /// Index of the step active at `t`.
    pub fn segment_at(&self, t: f64) -> usize {
        self.steps.partition_point(|(start, _)| *start <= t).saturating_sub(1)
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        self.steps[self.segment_at(t)].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearedField {
    pub schedule: StepSchedule,
    pub shear_exponent: f64,
    pub hub_height: f64,
}

impl ShearedField {
    pub fn new(schedule: StepSchedule, shear_exponent: f64, hub_height: f64) -> Result<Self> {
        if !(shear_exponent >= 0.0) {
            return Err(domain("shear_exponent must be nonnegative"));
        }
        if !(hub_height > 0.0) {
            return Err(domain("hub_height must be positive"));
        }
        Ok(Self {
            schedule,
            shear_exponent,
            hub_height,
        })
    }

    pub fn uniform(speed: f64, hub_height: f64) -> Result<Self> {
        Self::new(StepSchedule::constant(speed)?, 0.0, hub_height)
    }

    /// `U_hub(t)·(height/hub_height)^α`.
    pub fn power_law_speed(&self, height: f64, t: f64) -> Result<f64> {
        if !(height > 0.0) {
            return Err(domain(format!("height must be positive (got {height})")));
        }
        let hub = self.schedule.speed_at(t);
        if self.shear_exponent == 0.0 {
            return Ok(hub);
        }
        Ok(hub * (height / self.hub_height).powf(self.shear_exponent))
    }
}

impl InflowField for ShearedField {
    fn sample_velocity(&self, _y: f64, z: f64, t: f64) -> Result<f64> {
        self.power_law_speed(z, t)
    }
}

/// Steady single-Gaussian wake of an upstream turbine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeField {
    pub ambient_speed: f64,
    pub turbulence_intensity: f64,
    /// Upstream distance in rotor diameters.
    pub downstream_spacing: f64,
    /// Horizontal position of the wake centre [m].
    pub crosswind_offset: f64,
    pub hub_height: f64,
    /// Wake width `σ` at the downstream rotor [m].
    pub sigma: f64,
    /// Centreline deficit as a fraction of the ambient speed, `C`.
    pub peak_fraction: f64,
}

impl WakeField {
    pub const DEFAULT_THRUST: f64 = 0.8;

    /// Gaussian wake with `k* = 0.38·TI + 0.004`, `σ = k*·x + ε·D` and the
    /// momentum-deficit closure `C = 1 − √(1 − C_T / (8 (σ/D)²))`, where
    /// `ε = 0.2·√β`, `β = ½(1+√(1−C_T))/√(1−C_T)` is the near-wake width.
    pub fn new(
        ambient_speed: f64,
        turbulence_intensity: f64,
        downstream_spacing: f64,
        crosswind_offset: f64,
        rotor_diameter: f64,
        hub_height: f64,
        thrust_coefficient: f64,
    ) -> Result<Self> {
        if !(ambient_speed > 0.0) {
            return Err(domain("wake ambient speed must be positive"));
        }
        if !(turbulence_intensity > 0.0 && turbulence_intensity < 1.0) {
            return Err(domain("turbulence intensity must lie in (0, 1)"));
        }
        if !(downstream_spacing > 0.0 && rotor_diameter > 0.0) {
            return Err(domain("wake spacing and rotor diameter must be positive"));
        }
        if !(thrust_coefficient > 0.0 && thrust_coefficient < 1.0) {
            return Err(domain("thrust coefficient must lie in (0, 1)"));
        }
        let root = (1.0 - thrust_coefficient).sqrt();
        let beta = 0.5 * (1.0 + root) / root;
        let near_width = 0.2 * beta.sqrt();
        let expansion = 0.38 * turbulence_intensity + 0.004;
        let sigma_d = expansion * downstream_spacing + near_width;
        let arg = 1.0 - thrust_coefficient / (8.0 * sigma_d * sigma_d);
        let peak_fraction = 1.0 - arg.max(0.0).sqrt();
        Ok(Self {
            ambient_speed,
            turbulence_intensity,
            downstream_spacing,
            crosswind_offset,
            hub_height,
            sigma: sigma_d * rotor_diameter,
            peak_fraction,
        })
    }

    pub fn with_offset(mut self, crosswind_offset: f64) -> Self {
        self.crosswind_offset = crosswind_offset;
        self
    }

    /// `ΔU = U_amb·C·exp(−r²/(2σ²))` around the wake centre at hub height.
    pub fn wake_deficit(&self, y: f64, z: f64) -> f64 {
        let dy = y - self.crosswind_offset;
        let dz = z - self.hub_height;
        let r2 = dy * dy + dz * dz;
        self.ambient_speed * self.peak_fraction * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

impl InflowField for WakeField {
    fn sample_velocity(&self, y: f64, z: f64, _t: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(domain(format!("height must be positive (got {z})")));
        }
        Ok((self.ambient_speed - self.wake_deficit(y, z)).max(0.0))
    }
}

/// Linear drift of the wake centre between two offsets over `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetDrift {
    pub offset_start: f64,
    pub offset_end: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl OffsetDrift {
    pub fn fixed(offset: f64) -> Self {
        Self {
            offset_start: offset,
            offset_end: offset,
            t_start: 0.0,
            t_end: 0.0,
        }
    }

    pub fn offset_at(&self, t: f64) -> f64 {
        if self.t_end <= self.t_start || t >= self.t_end {
            return self.offset_end;
        }
        if t <= self.t_start {
            return self.offset_start;
        }
        let f = (t - self.t_start) / (self.t_end - self.t_start);
        self.offset_start + f * (self.offset_end - self.offset_start)
    }
}

/// Sheared inflow with an optional drifting wake subtracted.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeField {
    pub shear: ShearedField,
    pub wake: Option<(WakeField, OffsetDrift)>,
}

impl CompositeField {
    pub fn shear_only(shear: ShearedField) -> Self {
        Self { shear, wake: None }
    }

    pub fn with_wake(shear: ShearedField, wake: WakeField, drift: OffsetDrift) -> Self {
        Self {
            shear,
            wake: Some((wake, drift)),
        }
    }

    /// Wake geometry in effect at `t`, if any.
    pub fn wake_at(&self, t: f64) -> Option<WakeField> {
        self.wake.map(|(w, d)| w.with_offset(d.offset_at(t)))
    }
}

impl InflowField for CompositeField {
    fn sample_velocity(&self, y: f64, z: f64, t: f64) -> Result<f64> {
        let base = self.shear.power_law_speed(z, t)?;
        let deficit = self.wake_at(t).map_or(0.0, |w| w.wake_deficit(y, z));
        Ok((base - deficit).max(0.0))
    }
}
