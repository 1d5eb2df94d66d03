//! Period-`P` differencing and recursive identification of the Markov matrix
//! `Ξ = [CK_u | CK_y]` of the predictor-form model
//!
//! ```text
//! δx_{k+1} = Ã δx_k + B δu_k + L δy_k
//! δy_k     = C δx_k + δe_k
//! ```
//!
//! Differencing over one rotor period removes every rotor-periodic load
//! component, so `Ξ` is estimated from `δu`, `δy` only. The estimate is
//! updated sample by sample with a square-root (QR) recursive least-squares
//! step with exponential forgetting.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

// std's inherent float methods shadow these when testing
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, domain, Error, Result};

/// Last `P + p` input/output samples in arrival order.
#[derive(Debug, Clone)]
pub struct PeriodicBuffer {
    period: usize,
    window: usize,
    r: usize,
    l: usize,
    u: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
}

/// Differenced sample `(δu_k, δy_k)`.
pub type Delta = (Vec<f64>, Vec<f64>);

impl PeriodicBuffer {
    pub fn new(period: usize, window: usize, r: usize, l: usize) -> Result<Self> {
        if window == 0 || period < window {
            return Err(domain("periodic buffer needs P ≥ p ≥ 1"));
        }
        Ok(Self {
            period,
            window,
            r,
            l,
            u: VecDeque::with_capacity(period + window),
            y: VecDeque::with_capacity(period + window),
        })
    }

    pub fn capacity(&self) -> usize {
        self.period + self.window
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Stores `(u_k, y_k)`; returns `(u_k − u_{k−P}, y_k − y_{k−P})` once a
    /// full period is buffered and `None` while warming up.
    pub fn push(&mut self, u: &[f64], y: &[f64]) -> Result<Option<Delta>> {
        check_dim("input sample", self.r, u.len())?;
        check_dim("output sample", self.l, y.len())?;
        if u.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("periodic buffer sample"));
        }
        let delta = (self.u.len() >= self.period).then(|| {
            let back = self.u.len() - self.period;
            (diff(u, &self.u[back]), diff(y, &self.y[back]))
        });
        self.u.push_back(u.to_vec());
        self.y.push_back(y.to_vec());
        if self.u.len() > self.capacity() {
            self.u.pop_front();
            self.y.pop_front();
        }
        Ok(delta)
    }

    /// `[δU^{(p)}_{k−p}; δY^{(p)}_{k−p}]` for the next sample `k`: the `p`
    /// most recent `δu` blocks oldest first, followed by the `δy` blocks in
    /// the same order.
    pub fn regressor(&self) -> Result<DVector<f64>> {
        if self.u.len() < self.capacity() {
            return Err(Error::InsufficientData(alloc::format!(
                "regressor needs {} samples, have {}",
                self.capacity(),
                self.u.len()
            )));
        }
        let (p, r, l) = (self.window, self.r, self.l);
        let n = self.u.len();
        let mut phi = DVector::zeros((r + l) * p);
        for j in 0..p {
            // sample k − p + j
            let at = n - p + j;
            let back = at - self.period;
            for c in 0..r {
                phi[j * r + c] = self.u[at][c] - self.u[back][c];
            }
            for c in 0..l {
                phi[r * p + j * l + c] = self.y[at][c] - self.y[back][c];
            }
        }
        Ok(phi)
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Recursive estimate of `Ξ̂ ∈ ℝ^{l×(r+l)p}`.
///
/// Holds the upper-triangular square root `R` of the exponentially weighted
/// regressor information matrix and `Z = R·Ξ̂ᵀ`, stored side by side as
/// `[R | Z]`.
#[derive(Debug, Clone)]
pub struct MarkovEstimate {
    window: usize,
    r: usize,
    l: usize,
    forgetting: f64,
    factor: DMatrix<f64>,
    samples: usize,
}

/// Fresh estimate with `Ξ̂ = 0` and ridge prior `R = √δ₀·I`.
pub fn init_markov(window: usize, r: usize, l: usize, ridge: f64, forgetting: f64) -> Result<MarkovEstimate> {
    if !(ridge > 0.0) {
        return Err(domain("RLS ridge prior must be positive"));
    }
    if !(forgetting > 0.0 && forgetting <= 1.0) {
        return Err(domain("forgetting must satisfy 0<γ≤1"));
    }
    if window == 0 {
        return Err(domain("past window must be at least 1"));
    }
    let n = (r + l) * window;
    let mut factor = DMatrix::zeros(n, n + l);
    let root = ridge.sqrt();
    for i in 0..n {
        factor[(i, i)] = root;
    }
    Ok(MarkovEstimate {
        window,
        r,
        l,
        forgetting,
        factor,
        samples: 0,
    })
}

impl MarkovEstimate {
    pub fn regressor_len(&self) -> usize {
        (self.r + self.l) * self.window
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.r, self.l)
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Upper-triangular square-root factor `R`.
    pub fn factor(&self) -> DMatrix<f64> {
        let n = self.regressor_len();
        self.factor.columns(0, n).into_owned()
    }

    /// One square-root RLS step: the weighted array `[√γR | √γZ]` is extended
    /// by the row `[φᵀ | δyᵀ]`, which Givens rotations annihilate back into
    /// triangular form.
    pub fn rls_update(&mut self, regressor: &DVector<f64>, dy: &[f64]) -> Result<()> {
        let n = self.regressor_len();
        check_dim("regressor", n, regressor.len())?;
        check_dim("output difference", self.l, dy.len())?;
        if regressor.iter().chain(dy).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("RLS update"));
        }
        let width = n + self.l;
        if self.forgetting != 1.0 {
            self.factor *= self.forgetting.sqrt();
        }
        let mut row: Vec<f64> = regressor.iter().chain(dy).copied().collect();
        for i in 0..n {
            let b = row[i];
            if b == 0.0 {
                continue;
            }
            let a = self.factor[(i, i)];
            let rho = a.hypot(b);
            let (c, s) = (a / rho, b / rho);
            self.factor[(i, i)] = rho;
            row[i] = 0.0;
            for j in i + 1..width {
                let fij = self.factor[(i, j)];
                let rj = row[j];
                self.factor[(i, j)] = c * fij + s * rj;
                row[j] = c * rj - s * fij;
            }
        }
        self.samples += 1;
        Ok(())
    }

    /// `Ξ̂`, by back substitution of `R·Ξ̂ᵀ = Z`.
    pub fn markov(&self) -> DMatrix<f64> {
        let n = self.regressor_len();
        let r = self.factor.columns(0, n);
        let mut x = self.factor.columns(n, self.l).into_owned();
        for col in 0..self.l {
            for i in (0..n).rev() {
                let mut acc = x[(i, col)];
                for j in i + 1..n {
                    acc -= r[(i, j)] * x[(j, col)];
                }
                x[(i, col)] = acc / r[(i, i)];
            }
        }
        x.transpose()
    }

    /// One-step prediction `Ξ̂·φ`.
    pub fn predict(&self, regressor: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("regressor", self.regressor_len(), regressor.len())?;
        Ok(self.markov() * regressor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn periodic_stream_has_zero_delta() {
        let period = 5;
        let mut b = PeriodicBuffer::new(period, 2, 1, 1).unwrap();
        for k in 0..40usize {
            let v = [(k % period) as f64 * 1.7 - 2.0];
            let d = b.push(&v, &v).unwrap();
            if k < period {
                assert!(d.is_none());
            } else {
                let (du, dy) = d.unwrap();
                assert_eq!(du, vec![0.0]);
                assert_eq!(dy, vec![0.0]);
            }
        }
        assert_eq!(b.len(), b.capacity());
    }

    #[test]
    fn ramp_delta_is_slope_times_period() {
        let mut b = PeriodicBuffer::new(6, 2, 2, 1).unwrap();
        for k in 0..30 {
            let u = [0.5 * k as f64, -0.25 * k as f64];
            if let Some((du, _)) = b.push(&u, &[0.0]).unwrap() {
                assert_eq!(du, vec![3.0, -1.5]);
            }
        }
    }

    #[test]
    fn regressor_layout_and_window_one() {
        let mut b = PeriodicBuffer::new(3, 1, 2, 1).unwrap();
        assert!(b.regressor().is_err());
        for k in 0..4 {
            let k = k as f64;
            b.push(&[k, 10.0 * k], &[k * k]).unwrap();
        }
        // next sample k=4: δu_3 = u_3 − u_0, δy_3 = y_3 − y_0
        let phi = b.regressor().unwrap();
        assert_eq!(phi.as_slice(), &[3.0, 30.0, 9.0]);
    }

    #[test]
    fn perturbing_oldest_sample_touches_leading_entries() {
        let (period, p) = (7, 3);
        let fill = |bump: f64| {
            let mut b = PeriodicBuffer::new(period, p, 2, 2).unwrap();
            for k in 0..(period + p) {
                let bumped = if k == period { bump } else { 0.0 };
                let x = (k as f64 * 0.37).sin();
                b.push(&[x + bumped, 2.0 * x], &[x * x + bumped, -x]).unwrap();
            }
            b.regressor().unwrap()
        };
        let base = fill(0.0);
        let moved = fill(1.0);
        let changed: Vec<usize> = (0..base.len()).filter(|&i| base[i] != moved[i]).collect();
        // sample k − p is the first u block entry and the first y block entry
        assert_eq!(changed, vec![0, 2 * p]);
    }

    #[test]
    fn zero_history_gives_zero_regressor() {
        let mut b = PeriodicBuffer::new(4, 2, 1, 1).unwrap();
        for _ in 0..6 {
            b.push(&[3.0], &[-1.0]).unwrap();
        }
        assert!(b.regressor().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_non_finite_and_bad_dims() {
        let mut b = PeriodicBuffer::new(4, 2, 1, 1).unwrap();
        assert!(matches!(b.push(&[f64::NAN], &[0.0]), Err(Error::NonFinite(_))));
        assert!(b.push(&[0.0, 1.0], &[0.0]).is_err());
        assert!(PeriodicBuffer::new(2, 3, 1, 1).is_err());
    }

    #[test]
    fn fresh_estimate_predicts_zero() {
        let est = init_markov(3, 2, 1, 1e-4, 0.9999).unwrap();
        let phi = DVector::from_fn(9, |i, _| i as f64 - 4.0);
        assert!(est.predict(&phi).unwrap().iter().all(|v| *v == 0.0));
        assert!(init_markov(3, 2, 1, 0.0, 0.9999).is_err());
        assert!(init_markov(3, 2, 1, 1e-4, 1.5).is_err());
    }

    #[test]
    fn larger_ridge_adapts_slower() {
        let phi = DVector::from_vec(vec![0.3, -1.0, 0.5, 2.0]);
        let first_norm = |ridge: f64| {
            let mut est = init_markov(2, 1, 1, ridge, 0.9999).unwrap();
            est.rls_update(&phi, &[1.0]).unwrap();
            est.markov().norm()
        };
        assert!(first_norm(10.0) < first_norm(1e-2));
        assert!(first_norm(1e-2) < first_norm(1e-4));
    }

    #[test]
    fn zero_regressor_leaves_estimate() {
        let mut est = init_markov(2, 1, 1, 1e-3, 0.99).unwrap();
        for k in 0..50 {
            let x = k as f64;
            let phi = DVector::from_vec(vec![x.sin(), x.cos(), (2.0 * x).sin(), 1.0]);
            est.rls_update(&phi, &[0.7 * x.sin() - 0.1]).unwrap();
        }
        let before = est.markov();
        for _ in 0..20 {
            est.rls_update(&DVector::zeros(4), &[0.0]).unwrap();
        }
        let after = est.markov();
        assert!((after - &before).norm() <= 1e-10 * before.norm());
    }

    #[test]
    fn factor_stays_upper_triangular() {
        let mut est = init_markov(2, 2, 1, 1e-4, 0.999).unwrap();
        for k in 0..100 {
            let x = k as f64 * 0.61;
            let phi = DVector::from_fn(6, |i, _| (x + i as f64).sin());
            est.rls_update(&phi, &[x.cos()]).unwrap();
            let r = est.factor();
            for i in 0..6 {
                assert!(r[(i, i)] >= 0.0);
                for j in 0..i {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }
}
