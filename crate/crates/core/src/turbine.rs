//! Desk-scale truth plant: rigid rotor kinematics, first-order rotor-speed
//! tracking, a static collective pitch schedule, per-blade effective wind
//! sampled at two-thirds span, and root moments from the analytic surface.

use alloc::vec::Vec;
use core::f64::consts::PI;

// std's inherent float methods shadow these when testing
#[allow(unused_imports)]
use num_traits::Float;

use crate::config::{blade_azimuths, quantize, wrap_angle, AirProperties, TurbineGeometry};
use crate::cone::ConeSurface;
use crate::error::{domain, Result};
use crate::prbs::GaussianNoise;
use crate::windfield::InflowField;
use crate::N_BLADES;

pub const RPM: f64 = 2.0 * PI / 60.0;

/// Piecewise-linear collective pitch over rotor effective wind speed,
/// clamped outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchSchedule {
    /// `(speed [m/s], pitch [rad])`, strictly increasing in speed.
    points: Vec<(f64, f64)>,
}

impl PitchSchedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(domain("pitch schedule speeds must be strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn pitch_at(&self, speed: f64) -> f64 {
        let pts = &self.points;
        if speed <= pts[0].0 {
            return pts[0].1;
        }
        if speed >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let hi = pts.partition_point(|(u, _)| *u <= speed);
        let (u0, b0) = pts[hi - 1];
        let (u1, b1) = pts[hi];
        b0 + (speed - u0) / (u1 - u0) * (b1 - b0)
    }
}

impl Default for PitchSchedule {
    /// Zero below rated (11.4 m/s), rising to 23.5° at 25 m/s.
    fn default() -> Self {
        let deg = [
            (3.0, 0.0),
            (11.4, 0.0),
            (12.0, 3.8),
            (13.0, 6.6),
            (14.0, 8.7),
            (15.0, 10.45),
            (16.0, 12.06),
            (18.0, 14.92),
            (20.0, 17.47),
            (22.0, 19.94),
            (25.0, 23.47),
        ];
        Self::new(deg.iter().map(|(u, b)| (*u, f64::to_radians(*b))).collect())
            .expect("default pitch schedule is increasing")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurbineParams {
    pub geometry: TurbineGeometry,
    pub air: AirProperties,
    /// Tip speed ratio tracked below rated.
    pub optimal_tsr: f64,
    pub omega_min: f64,
    pub omega_rated: f64,
    /// Rotor-speed tracking time constant [s]; infinite holds ω fixed.
    pub speed_time_constant: f64,
    pub pitch_schedule: PitchSchedule,
    /// Standard deviation of additive moment noise [N·m].
    pub noise_std: f64,
    /// Load sensor resolution [N·m]; zero disables quantization.
    pub sensor_resolution: f64,
}

/// Default load sensor resolution, a power of two so that differences of
/// quantized loads are exact.
pub const SENSOR_RESOLUTION: f64 = 1.0 / 1024.0;

impl Default for TurbineParams {
    /// 12.1 rpm rated, 6.9 rpm minimum, λ* = 7.5, τ = 5 s, noise 1% of rated moment.
    fn default() -> Self {
        let mut p = Self {
            geometry: TurbineGeometry::default(),
            air: AirProperties::default(),
            optimal_tsr: 7.5,
            omega_min: 6.9 * RPM,
            omega_rated: 12.1 * RPM,
            speed_time_constant: 5.0,
            pitch_schedule: PitchSchedule::default(),
            noise_std: 0.0,
            sensor_resolution: SENSOR_RESOLUTION,
        };
        p.noise_std = 0.01 * p.rated_moop(&ConeSurface::default());
        p
    }
}

impl TurbineParams {
    pub fn rated_wind_speed(&self) -> f64 {
        self.omega_rated * self.geometry.rotor_radius / self.optimal_tsr
    }

    /// Azimuth-averaged moment at rated wind and optimal tip speed ratio.
    pub fn rated_moop(&self, surface: &ConeSurface) -> f64 {
        let u = self.rated_wind_speed();
        self.air.moment_prefactor(&self.geometry) * u * u * surface.base_coefficient(self.optimal_tsr, 0.0)
    }

    pub fn target_rotor_speed(&self, rews: f64) -> f64 {
        (self.optimal_tsr * rews / self.geometry.rotor_radius).clamp(self.omega_min, self.omega_rated)
    }

    pub fn pitch_schedule(&self, rews: f64) -> [f64; N_BLADES] {
        [self.pitch_schedule.pitch_at(rews); N_BLADES]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbineState {
    pub azimuth_blade1: f64,
    pub rotor_speed: f64,
    pub pitch: [f64; N_BLADES],
    pub time: f64,
}

impl TurbineState {
    pub fn azimuths(&self) -> [f64; N_BLADES] {
        blade_azimuths(self.azimuth_blade1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub moop: [f64; N_BLADES],
    pub azimuth: [f64; N_BLADES],
    pub rotor_speed: f64,
    pub pitch: [f64; N_BLADES],
    pub time: f64,
}

/// Two-thirds-span wind per blade and their average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BewsReference {
    pub blade: [f64; N_BLADES],
    pub rews: f64,
}

/// Rotor-plane point of a blade's reference radius at `azimuth`.
pub fn blade_point(geom: &TurbineGeometry, azimuth: f64) -> (f64, f64) {
    let r = geom.reference_radius();
    (r * azimuth.sin(), geom.hub_height + r * azimuth.cos())
}

pub fn blade_effective_speed(
    field: &dyn InflowField,
    geom: &TurbineGeometry,
    state: &TurbineState,
    blade: usize,
) -> Result<f64> {
    let (y, z) = blade_point(geom, state.azimuths()[blade]);
    field.sample_velocity(y, z, state.time)
}

pub fn bews_reference(
    field: &dyn InflowField,
    geom: &TurbineGeometry,
    state: &TurbineState,
) -> Result<BewsReference> {
    let mut blade = [0.0; N_BLADES];
    for (i, u) in blade.iter_mut().enumerate() {
        *u = blade_effective_speed(field, geom, state, i)?;
    }
    Ok(BewsReference {
        blade,
        rews: blade.iter().sum::<f64>() / N_BLADES as f64,
    })
}

/// State in equilibrium with the inflow at `t = 0` and blade 1 at `azimuth`.
pub fn equilibrium_state(
    field: &dyn InflowField,
    params: &TurbineParams,
    azimuth: f64,
) -> Result<TurbineState> {
    let mut state = TurbineState {
        azimuth_blade1: wrap_angle(azimuth),
        rotor_speed: params.omega_rated,
        pitch: [0.0; N_BLADES],
        time: 0.0,
    };
    let reference = bews_reference(field, &params.geometry, &state)?;
    state.rotor_speed = params.target_rotor_speed(reference.rews);
    state.pitch = params.pitch_schedule(reference.rews);
    Ok(state)
}

/// Advances the plant by `dt` and measures at the new state.
pub fn step(
    state: &TurbineState,
    field: &dyn InflowField,
    params: &TurbineParams,
    surface: &ConeSurface,
    noise: &mut GaussianNoise,
    dt: f64,
) -> Result<(TurbineState, Measurement, BewsReference)> {
    if !(dt > 0.0) {
        return Err(domain("time step must be positive"));
    }
    let mut next = TurbineState {
        azimuth_blade1: wrap_angle(state.azimuth_blade1 + state.rotor_speed * dt),
        time: state.time + dt,
        ..*state
    };
    let reference = bews_reference(field, &params.geometry, &next)?;
    let target = params.target_rotor_speed(reference.rews);
    next.rotor_speed += dt / params.speed_time_constant * (target - state.rotor_speed);
    next.pitch = params.pitch_schedule(reference.rews);

    let azimuth = next.azimuths();
    let mut moop = [0.0; N_BLADES];
    for i in 0..N_BLADES {
        let u = reference.blade[i].max(1e-3);
        let m = surface.steady_moop(&params.geometry, &params.air, u, next.rotor_speed, next.pitch[i], azimuth[i])?;
        moop[i] = quantize(m + noise.sample(), params.sensor_resolution);
    }
    let meas = Measurement {
        moop,
        azimuth,
        rotor_speed: next.rotor_speed,
        pitch: next.pitch,
        time: next.time,
    };
    Ok((next, meas, reference))
}

/// Stateful wrapper around [`step`].
#[derive(Debug, Clone)]
pub struct TurbineSim {
    pub params: TurbineParams,
    pub surface: ConeSurface,
    state: TurbineState,
    noise: GaussianNoise,
}

impl TurbineSim {
    pub fn new(params: TurbineParams, surface: ConeSurface, state: TurbineState, noise_seed: u64) -> Self {
        let noise = GaussianNoise::new(noise_seed, params.noise_std);
        Self {
            params,
            surface,
            state,
            noise,
        }
    }

    pub fn state(&self) -> &TurbineState {
        &self.state
    }

    pub fn step(&mut self, field: &dyn InflowField, dt: f64) -> Result<(Measurement, BewsReference)> {
        let (next, meas, reference) = step(&self.state, field, &self.params, &self.surface, &mut self.noise, dt)?;
        self.state = next;
        Ok((meas, reference))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TWO_PI;
    use crate::windfield::{ShearedField, StepSchedule};

    fn sheared(speed: f64) -> ShearedField {
        ShearedField::new(StepSchedule::constant(speed).unwrap(), 0.2, 90.0).unwrap()
    }

    fn state_at(azimuth: f64) -> TurbineState {
        TurbineState {
            azimuth_blade1: azimuth,
            rotor_speed: 1.0,
            pitch: [0.0; 3],
            time: 0.0,
        }
    }

    #[test]
    fn uniform_inflow_is_seen_by_every_blade() {
        let f = ShearedField::uniform(9.5, 90.0).unwrap();
        let g = TurbineGeometry::default();
        for psi in [0.0, 1.0, 4.0] {
            for b in 0..3 {
                assert_eq!(blade_effective_speed(&f, &g, &state_at(psi), b).unwrap(), 9.5);
            }
        }
    }

    #[test]
    fn shear_favours_the_upper_blade() {
        let f = sheared(10.0);
        let g = TurbineGeometry::default();
        let up = blade_effective_speed(&f, &g, &state_at(0.0), 0).unwrap();
        let down = blade_effective_speed(&f, &g, &state_at(PI), 0).unwrap();
        assert!(up > down);
        assert!((up - 10.0 * (132.0f64 / 90.0).powf(0.2)).abs() < 1e-9);
        assert!((up - 10.797).abs() < 1e-3);
    }

    #[test]
    fn kinematics_one_revolution() {
        let params = TurbineParams {
            speed_time_constant: f64::INFINITY,
            noise_std: 0.0,
            ..TurbineParams::default()
        };
        let mut s = TurbineState {
            rotor_speed: TWO_PI / 5.0,
            ..state_at(0.0)
        };
        let f = ShearedField::uniform(8.0, 90.0).unwrap();
        let mut noise = GaussianNoise::new(0, 0.0);
        let surface = ConeSurface::default();
        let (next, _, _) = step(&s, &f, &params, &surface, &mut noise, 0.01).unwrap();
        assert!((next.azimuth_blade1 - 0.0126).abs() < 1e-4);
        for _ in 0..500 {
            s = step(&s, &f, &params, &surface, &mut noise, 0.01).unwrap().0;
        }
        let d = s.azimuth_blade1.min(TWO_PI - s.azimuth_blade1);
        assert!(d < 1e-9, "{}", s.azimuth_blade1);
        assert_eq!(s.rotor_speed, TWO_PI / 5.0);
    }

    #[test]
    fn noiseless_loads_are_periodic() {
        let params = TurbineParams {
            speed_time_constant: f64::INFINITY,
            noise_std: 0.0,
            ..TurbineParams::default()
        };
        let f = ShearedField::uniform(8.0, 90.0).unwrap();
        let surface = ConeSurface::default();
        let mut noise = GaussianNoise::new(0, 0.0);
        let mut s = TurbineState {
            rotor_speed: TWO_PI / 5.0,
            ..state_at(0.3)
        };
        let mut first = Vec::new();
        for _ in 0..500 {
            let (n, m, _) = step(&s, &f, &params, &surface, &mut noise, 0.01).unwrap();
            first.push(m.moop);
            s = n;
        }
        for k in 0..500 {
            let (n, m, _) = step(&s, &f, &params, &surface, &mut noise, 0.01).unwrap();
            for b in 0..3 {
                assert!((m.moop[b] - first[k][b]).abs() <= 1e-6 * first[k][b]);
            }
            s = n;
        }
    }

    #[test]
    fn rotor_speed_tracks_optimal_tsr() {
        let params = TurbineParams::default();
        let f = ShearedField::uniform(8.0, 90.0).unwrap();
        let mut sim = TurbineSim::new(params.clone(), ConeSurface::default(), state_at(0.0), 3);
        for _ in 0..6000 {
            sim.step(&f, 0.01).unwrap();
        }
        let target = 7.5 * 8.0 / 63.0;
        assert!((sim.state().rotor_speed - target).abs() < 1e-3 * target);
        let high = ShearedField::uniform(15.0, 90.0).unwrap();
        let eq = equilibrium_state(&high, &params, 0.0).unwrap();
        assert_eq!(eq.rotor_speed, params.omega_rated);
        assert!(eq.pitch[0] > 0.0);
    }

    #[test]
    fn pitch_schedule_shape() {
        let p = TurbineParams::default();
        assert_eq!(p.pitch_schedule(8.0)[0], 0.0);
        assert!(p.pitch_schedule(15.0)[0] > 0.0);
        assert!(p.pitch_schedule(15.0)[0] >= p.pitch_schedule(13.0)[0]);
        assert_eq!(p.pitch_schedule(1.0), p.pitch_schedule(3.0));
        assert_eq!(p.pitch_schedule(40.0), p.pitch_schedule(25.0));
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let params = TurbineParams::default();
        let f = ShearedField::uniform(8.0, 90.0).unwrap();
        let mut noise = GaussianNoise::new(0, 0.0);
        assert!(step(&state_at(0.0), &f, &params, &ConeSurface::default(), &mut noise, 0.0).is_err());
    }

    #[test]
    fn measurement_azimuths_are_evenly_spaced() {
        let f = sheared(11.0);
        let mut sim = TurbineSim::new(TurbineParams::default(), ConeSurface::default(), state_at(6.2), 9);
        for _ in 0..300 {
            let (m, _) = sim.step(&f, 0.01).unwrap();
            for i in 0..3 {
                let gap = wrap_angle(m.azimuth[(i + 1) % 3] - m.azimuth[i]);
                assert!((gap - TWO_PI / 3.0).abs() < 1e-12);
            }
        }
    }
}
