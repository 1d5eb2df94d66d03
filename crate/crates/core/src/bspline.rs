//! Periodic uniform B-spline basis over one revolution.
//!
//! `N_b` basis functions of degree `N_k` live on a circle of `N_b` knot
//! intervals; station `s` sits at knot coordinate `(s + offset)·N_b/P`.
//! Lifted vectors are ordered station-major (`index = s·ch + c`) while
//! coefficient vectors are channel-major (`index = c·N_b + b`), so the
//! multi-channel matrix is a row permutation of `blkdiag(Φ, …, Φ)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, domain, Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

/// Cardinal B-spline of degree `k` supported on `[0, k+1)`.
pub fn cardinal_bspline(k: usize, t: f64) -> f64 {
    if !(0.0..(k + 1) as f64).contains(&t) {
        return 0.0;
    }
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    (t * cardinal_bspline(k - 1, t) + (kf + 1.0 - t) * cardinal_bspline(k - 1, t - 1.0)) / kf
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    n_b: usize,
    degree: usize,
    period: usize,
    channels: usize,
    offset: f64,
    /// Scalar `Φ ∈ ℝ^{P×N_b}`.
    scalar: DMatrix<f64>,
    /// Scalar `Φ⁺ = (ΦᵀΦ)⁻¹Φᵀ`.
    scalar_pinv: DMatrix<f64>,
    phi: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

/// Basis evaluated at the `P` stations.
pub fn build_basis(n_b: usize, degree: usize, period: usize, channels: usize) -> Result<SplineBasis> {
    build_basis_shifted(n_b, degree, period, channels, 0.0)
}

/// Basis evaluated at stations `s + offset`, `offset` in stations.
pub fn build_basis_shifted(
    n_b: usize,
    degree: usize,
    period: usize,
    channels: usize,
    offset: f64,
) -> Result<SplineBasis> {
    if n_b < degree + 1 {
        return Err(domain(alloc::format!("need N_b ≥ N_k + 1 (N_b={n_b}, N_k={degree})")));
    }
    if period < n_b {
        return Err(domain(alloc::format!("need P ≥ N_b (P={period}, N_b={n_b})")));
    }
    if channels == 0 {
        return Err(domain("basis needs at least one channel"));
    }
    if !offset.is_finite() {
        return Err(Error::NonFinite("basis offset"));
    }
    const RANK_TOL: f64 = 1e-12;
    let mut scalar = DMatrix::zeros(period, n_b);
    for s in 0..period {
        let row = basis_row(n_b, degree, period, s as f64 + offset);
        scalar.row_mut(s).copy_from_slice(&row);
    }
    let gram = scalar.transpose() * &scalar;
    let eig = gram.clone().symmetric_eigenvalues();
    let rank_deficient = || domain("B-spline basis is rank deficient at these stations");
    if !(eig.min() > RANK_TOL * eig.max()) {
        return Err(rank_deficient());
    }
    let chol = gram.cholesky().ok_or_else(rank_deficient)?;
    let scalar_pinv = chol.solve(&scalar.transpose());

    let mut phi = DMatrix::zeros(period * channels, n_b * channels);
    let mut pinv = DMatrix::zeros(n_b * channels, period * channels);
    for c in 0..channels {
        for s in 0..period {
            for b in 0..n_b {
                phi[(s * channels + c, c * n_b + b)] = scalar[(s, b)];
                pinv[(c * n_b + b, s * channels + c)] = scalar_pinv[(b, s)];
            }
        }
    }
    Ok(SplineBasis { n_b, degree, period, channels, offset, scalar, scalar_pinv, phi, pinv })
}

/// Values of every basis function at a (fractional, wrapping) station.
fn basis_row(n_b: usize, degree: usize, period: usize, position: f64) -> Vec<f64> {
    let nbf = n_b as f64;
    let mut x = position * nbf / period as f64;
    x -= nbf * (x / nbf).floor();
    if x >= nbf {
        x = 0.0;
    }
    let mut row = vec![0.0; n_b];
    for (b, v) in row.iter_mut().enumerate() {
        let mut t = x - b as f64;
        if t < 0.0 {
            t += nbf;
        }
        *v = cardinal_bspline(degree, t);
    }
    row
}

impl SplineBasis {
    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn scalar(&self) -> &DMatrix<f64> {
        &self.scalar
    }

    pub fn scalar_pinv(&self) -> &DMatrix<f64> {
        &self.scalar_pinv
    }

    /// `φ ∈ ℝ^{chP × chN_b}`.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// `φ⁺ ∈ ℝ^{chN_b × chP}`.
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// Same knots, a different channel count.
    pub fn with_channels(&self, channels: usize) -> Result<Self> {
        build_basis_shifted(self.n_b, self.degree, self.period, channels, self.offset)
    }

    /// Basis row at a fractional station; wraps modulo `P`.
    pub fn eval_row(&self, position: f64) -> Vec<f64> {
        basis_row(self.n_b, self.degree, self.period, position + self.offset)
    }

    fn combine(&self, theta: &[f64], row: &[f64]) -> Vec<f64> {
        (0..self.channels)
            .map(|c| {
                theta[c * self.n_b..(c + 1) * self.n_b]
                    .iter()
                    .zip(row)
                    .map(|(t, p)| t * p)
                    .sum()
            })
            .collect()
    }

    /// Per-channel value of `φθ` at `station`.
    pub fn synthesize(&self, theta: &[f64], station: usize) -> Result<Vec<f64>> {
        check_dim("spline coefficients", self.channels * self.n_b, theta.len())?;
        if station >= self.period {
            return Err(domain(alloc::format!("station {station} outside [0, {})", self.period)));
        }
        let row: Vec<f64> = self.scalar.row(station).iter().copied().collect();
        Ok(self.combine(theta, &row))
    }

    /// Per-channel spline value at a fractional station.
    pub fn evaluate(&self, theta: &[f64], position: f64) -> Result<Vec<f64>> {
        check_dim("spline coefficients", self.channels * self.n_b, theta.len())?;
        if !position.is_finite() {
            return Err(Error::NonFinite("spline position"));
        }
        Ok(self.combine(theta, &self.eval_row(position)))
    }

    /// The whole lifted vector `φθ`.
    pub fn synthesize_all(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("spline coefficients", self.channels * self.n_b, theta.len())?;
        Ok(&self.phi * theta)
    }

    /// Least-squares coefficients `φ⁺Y`.
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("lifted vector", self.channels * self.period, y.len())?;
        Ok(&self.pinv * y)
    }
}
