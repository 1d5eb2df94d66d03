//! Azimuth-dependent cone coefficient.
//!
//! `C_m,i(λ, β, U_R, ψ) = m_i / (½ρAR·U_R²)` relates the out-of-plane root
//! moment of blade `i` to the wind speed it sees. The tabulated coefficient
//! is generated offline from steady uniform-inflow runs of an analytic
//! surrogate ([`ConeSurface`]) and queried by multilinear interpolation;
//! [`predict_moop`] turns a blade wind speed estimate into a moment.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};


// std's inherent float methods shadow these when testing
#[allow(unused_imports)]
use num_traits::Float;
use crate::config::{wrap_angle, AirProperties, TurbineGeometry, TWO_PI};
use crate::error::{domain, Error, Result};
use crate::N_BLADES;

/// Analytic stand-in for steady aero-elastic runs:
/// `c₀(λ,β)·(1 + ε_g cos ψ)·(1 − ε_t exp(−(Δψ/w_t)²))` with
/// `c₀ = c_a·λ·exp(−λ/λ_c)·cos³β` and `Δψ` the angular distance to the tower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSurface {
    pub gain: f64,
    pub lambda_peak: f64,
    pub gravity_amplitude: f64,
    pub shadow_depth: f64,
    /// Angular half-width of the tower shadow [rad].
    pub shadow_width: f64,
}

impl Default for ConeSurface {
    /// Peaks at λ = 7.5 with `c₀ = 0.08`.
    fn default() -> Self {
        Self {
            gain: 0.08 * E / 7.5,
            lambda_peak: 7.5,
            gravity_amplitude: 0.05,
            shadow_depth: 0.05,
            shadow_width: 0.35,
        }
    }
}

impl ConeSurface {
    /// Surface without periodic terms.
    pub fn axisymmetric(self) -> Self {
        Self {
            gravity_amplitude: 0.0,
            shadow_depth: 0.0,
            ..self
        }
    }

    /// Same surface with `c_a` scaled by `factor` (truth/model mismatch).
    pub fn with_gain_factor(self, factor: f64) -> Self {
        Self {
            gain: self.gain * factor,
            ..self
        }
    }

    pub fn base_coefficient(&self, lambda: f64, pitch: f64) -> f64 {
        let c = pitch.cos();
        self.gain * lambda * (-lambda / self.lambda_peak).exp() * c * c * c
    }

    pub fn surface_eval(&self, lambda: f64, pitch: f64, azimuth: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(domain(format!("tip speed ratio must be positive (got {lambda})")));
        }
        let gravity = 1.0 + self.gravity_amplitude * azimuth.cos();
        let to_tower = wrap_angle(azimuth - PI);
        let to_tower = to_tower.min(TWO_PI - to_tower);
        let shadow = 1.0 - self.shadow_depth * (-(to_tower / self.shadow_width).powi(2)).exp();
        Ok(self.base_coefficient(lambda, pitch) * gravity * shadow)
    }

    /// Steady moment of the surrogate at uniform inflow `speed`.
    pub fn steady_moop(
        &self,
        geom: &TurbineGeometry,
        air: &AirProperties,
        speed: f64,
        rotor_speed: f64,
        pitch: f64,
        azimuth: f64,
    ) -> Result<f64> {
        let lambda = rotor_speed * geom.rotor_radius / speed;
        Ok(air.moment_prefactor(geom) * speed * speed * self.surface_eval(lambda, pitch, azimuth)?)
    }
}

/// Grid axes of a cone table. Pitch in radians; azimuth nodes are uniform
/// over `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lambda: Vec<f64>,
    pub pitch: Vec<f64>,
    pub speed: Vec<f64>,
    pub azimuth_nodes: usize,
}

impl Default for GridSpec {
    /// λ ∈ [3, 12] step 0.5, β ∈ [0°, 25°] step 1°, U_R ∈ {6, 8, …, 16}, 24 ψ nodes.
    fn default() -> Self {
        Self {
            lambda: (0..=18).map(|i| 3.0 + 0.5 * i as f64).collect(),
            pitch: (0..=25).map(|i| (i as f64).to_radians()).collect(),
            speed: (0..=5).map(|i| 6.0 + 2.0 * i as f64).collect(),
            azimuth_nodes: 24,
        }
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(domain(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

/// Gridded `C_m` per blade with clamped multilinear interpolation over
/// `(λ, β, U_R)` and periodic linear interpolation over `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeTable {
    lambda: Vec<f64>,
    pitch: Vec<f64>,
    speed: Vec<f64>,
    azimuth_nodes: usize,
    /// Row-major `[blade][λ][β][U_R][ψ]`.
    values: Vec<f64>,
}

impl ConeTable {
    pub fn from_parts(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_axis("lambda", &grid.lambda)?;
        check_axis("pitch", &grid.pitch)?;
        check_axis("speed", &grid.speed)?;
        if grid.azimuth_nodes == 0 {
            return Err(domain("azimuth axis is empty"));
        }
        let expected = N_BLADES
            * grid.lambda.len()
            * grid.pitch.len()
            * grid.speed.len()
            * grid.azimuth_nodes;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "cone table values",
                expected,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(domain("cone table values must be finite and positive"));
        }
        Ok(Self {
            lambda: grid.lambda,
            pitch: grid.pitch,
            speed: grid.speed,
            azimuth_nodes: grid.azimuth_nodes,
            values,
        })
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            lambda: self.lambda.clone(),
            pitch: self.pitch.clone(),
            speed: self.speed.clone(),
            azimuth_nodes: self.azimuth_nodes,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn azimuth_node(&self, k: usize) -> f64 {
        TWO_PI * k as f64 / self.azimuth_nodes as f64
    }

    fn index(&self, blade: usize, li: usize, bi: usize, ui: usize, pi: usize) -> usize {
        (((blade * self.lambda.len() + li) * self.pitch.len() + bi) * self.speed.len() + ui)
            * self.azimuth_nodes
            + pi
    }

    /// Stored value at a grid node.
    pub fn node(&self, blade: usize, li: usize, bi: usize, ui: usize, pi: usize) -> f64 {
        self.values[self.index(blade, li, bi, ui, pi)]
    }

    pub fn lookup_cm(&self, lambda: f64, pitch: f64, speed: f64, azimuth: f64, blade: usize) -> f64 {
        let l = bracket(&self.lambda, lambda);
        let b = bracket(&self.pitch, pitch);
        let u = bracket(&self.speed, speed);
        let p = periodic_bracket(self.azimuth_nodes, azimuth);
        let mut acc = 0.0;
        for (li, lw) in l.corners() {
            for (bi, bw) in b.corners() {
                for (ui, uw) in u.corners() {
                    for (pi, pw) in p.corners() {
                        let w = lw * bw * uw * pw;
                        if w != 0.0 {
                            acc += w * self.node(blade, li, bi, ui, pi);
                        }
                    }
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: usize,
    hi: usize,
    frac: f64,
}

impl Bracket {
    fn corners(self) -> [(usize, f64); 2] {
        [(self.lo, 1.0 - self.frac), (self.hi, self.frac)]
    }
}

/// Interval and weight for `x`, clamped to the axis hull.
fn bracket(axis: &[f64], x: f64) -> Bracket {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return Bracket { lo: 0, hi: 0, frac: 0.0 };
    }
    if x >= axis[n - 1] {
        return Bracket {
            lo: n - 1,
            hi: n - 1,
            frac: 0.0,
        };
    }
    let hi = axis.partition_point(|a| *a <= x);
    let lo = hi - 1;
    Bracket {
        lo,
        hi,
        frac: (x - axis[lo]) / (axis[hi] - axis[lo]),
    }
}

fn periodic_bracket(nodes: usize, azimuth: f64) -> Bracket {
    let pos = wrap_angle(azimuth) / TWO_PI * nodes as f64;
    let lo = (pos.floor() as usize).min(nodes - 1);
    Bracket {
        lo,
        hi: (lo + 1) % nodes,
        frac: pos - lo as f64,
    }
}

/// Tabulates the surrogate: at each node the steady moment is computed at
/// uniform wind `U_R` with `ω = λU_R/R` and normalized by `½ρAR·U_R²`.
pub fn build_table(
    surface: &ConeSurface,
    geom: &TurbineGeometry,
    air: &AirProperties,
    grid: &GridSpec,
) -> Result<ConeTable> {
    check_axis("lambda", &grid.lambda)?;
    check_axis("pitch", &grid.pitch)?;
    check_axis("speed", &grid.speed)?;
    if grid.azimuth_nodes == 0 {
        return Err(domain("azimuth axis is empty"));
    }
    if grid.lambda[0] <= 0.0 || grid.speed[0] <= 0.0 {
        return Err(domain("tip speed ratio and speed axes must be positive"));
    }
    let norm = air.moment_prefactor(geom);
    let mut values = Vec::with_capacity(
        N_BLADES * grid.lambda.len() * grid.pitch.len() * grid.speed.len() * grid.azimuth_nodes,
    );
    for _blade in 0..N_BLADES {
        for &lambda in &grid.lambda {
            for &pitch in &grid.pitch {
                for &speed in &grid.speed {
                    let rotor_speed = lambda * speed / geom.rotor_radius;
                    for k in 0..grid.azimuth_nodes {
                        let azimuth = TWO_PI * k as f64 / grid.azimuth_nodes as f64;
                        let m = surface.steady_moop(geom, air, speed, rotor_speed, pitch, azimuth)?;
                        values.push(m / (norm * speed * speed));
                    }
                }
            }
        }
    }
    ConeTable::from_parts(grid.clone(), values)
}

/// `m̃ = ½ρAR·U²·C_m(ωR/U, β, U, ψ)`.
#[allow(clippy::too_many_arguments)]
pub fn predict_moop(
    table: &ConeTable,
    geom: &TurbineGeometry,
    air: &AirProperties,
    speed: f64,
    rotor_speed: f64,
    pitch: f64,
    azimuth: f64,
    blade: usize,
) -> Result<f64> {
    if !(speed > 0.0) {
        return Err(domain(format!("blade wind speed must be positive (got {speed})")));
    }
    let lambda = rotor_speed * geom.rotor_radius / speed;
    let cm = table.lookup_cm(lambda, pitch, speed, azimuth, blade);
    Ok(air.moment_prefactor(geom) * speed * speed * cm)
}

/// Default bracket of the static inversion [m/s].
pub const INVERSION_BRACKET: (f64, f64) = (1.0, 40.0);
const INVERSION_TOL: f64 = 1e-7;

/// Bisection root of an increasing-or-decreasing `f` on `[lo, hi]`.
pub(crate) fn bisect(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Wind speed whose predicted moment equals `moment`, by bisection.
#[allow(clippy::too_many_arguments)]
pub fn static_invert_moop(
    table: &ConeTable,
    geom: &TurbineGeometry,
    air: &AirProperties,
    moment: f64,
    rotor_speed: f64,
    pitch: f64,
    azimuth: f64,
    blade: usize,
) -> Result<f64> {
    let (lo, hi) = INVERSION_BRACKET;
    bisect(
        |u| Ok(predict_moop(table, geom, air, u, rotor_speed, pitch, azimuth, blade)? - moment),
        lo,
        hi,
        INVERSION_TOL,
    )?
    .ok_or(Error::NotInvertible { target: moment, lo, hi })
}

/// Operating conditions of one load sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCondition {
    pub rotor_speed: f64,
    pub pitch: f64,
    pub azimuth: f64,
    pub blade: usize,
}

/// Single speed whose mean predicted moment over `conditions` equals
/// `mean_moment`.
pub fn invert_mean_moop(
    table: &ConeTable,
    geom: &TurbineGeometry,
    air: &AirProperties,
    mean_moment: f64,
    conditions: &[LoadCondition],
) -> Result<f64> {
    if conditions.is_empty() {
        return Err(Error::InsufficientData("no load samples to invert".into()));
    }
    let n = conditions.len() as f64;
    let (lo, hi) = INVERSION_BRACKET;
    bisect(
        |u| {
            let mut sum = 0.0;
            for c in conditions {
                sum += predict_moop(table, geom, air, u, c.rotor_speed, c.pitch, c.azimuth, c.blade)?;
            }
            Ok(sum / n - mean_moment)
        },
        lo,
        hi,
        INVERSION_TOL,
    )?
    .ok_or(Error::NotInvertible {
        target: mean_moment,
        lo,
        hi,
    })
}
