//! Random predictor-form systems with known Markov parameters, for checking
//! identification and lifting against ground truth.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, domain, Result};

/// `x_{k+1} = Ãx_k + Bu_k + Ly_k`, `y_k = Cx_k + e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSystem {
    pub a_tilde: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re.hypot(z.im)).fold(0.0, f64::max)
}

fn scale_to_norm(m: DMatrix<f64>, target: f64) -> DMatrix<f64> {
    let norm = m.clone().svd(false, false).singular_values.max();
    if norm > 0.0 {
        m * (target / norm)
    } else {
        m
    }
}

impl PredictorSystem {
    /// Random system with `‖Ã‖₂ = rho` whose output feedback `L` is scaled so
    /// that the closed-loop matrix `Ã + LC` has spectral radius `radius`.
    pub fn random(n: usize, r: usize, l: usize, rho: f64, radius: f64, seed: u64) -> Result<Self> {
        if n == 0 || r == 0 || l == 0 {
            return Err(domain("system dimensions must be positive"));
        }
        if !((0.0..1.0).contains(&rho) && (rho..1.0).contains(&radius)) {
            return Err(domain("need 0 ≤ rho ≤ radius < 1 for a stable generator"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a_tilde = scale_to_norm(gaussian(&mut rng, n, n), rho);
        let b = gaussian(&mut rng, n, r);
        let c = gaussian(&mut rng, l, n) / (n as f64).sqrt();
        let l_raw = gaussian(&mut rng, n, l);
        let radius_at = |k: f64| spectral_radius(&(&a_tilde + &l_raw * &c * k));
        // grow the feedback until it overshoots, then bisect back onto the target
        let (mut lo, mut hi) = (0.0, 1.0);
        while radius_at(hi) < radius {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(domain("feedback cannot reach the requested spectral radius"));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if radius_at(mid) < radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self { a_tilde, b, l: l_raw * lo, c })
    }

    /// `Ã + LC`.
    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a_tilde + &self.l * &self.c
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a_tilde.nrows(), self.b.ncols(), self.c.nrows())
    }

    /// `(CÃʲB, CÃʲL)` for `j = 0..p`.
    pub fn markov_blocks(&self, p: usize) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut power = DMatrix::identity(self.a_tilde.nrows(), self.a_tilde.ncols());
        let (mut mu, mut my) = (Vec::with_capacity(p), Vec::with_capacity(p));
        for _ in 0..p {
            let cp = &self.c * &power;
            mu.push(&cp * &self.b);
            my.push(&cp * &self.l);
            power = &self.a_tilde * power;
        }
        (mu, my)
    }

    /// `Ξ` in regressor order (oldest sample first).
    pub fn markov_matrix(&self, p: usize) -> DMatrix<f64> {
        let (_, r, l) = self.dims();
        let (mu, my) = self.markov_blocks(p);
        let mut xi = DMatrix::zeros(l, (r + l) * p);
        for j in 0..p {
            let col = p - 1 - j;
            xi.view_mut((0, col * r), (l, r)).copy_from(&mu[j]);
            xi.view_mut((0, r * p + col * l), (l, l)).copy_from(&my[j]);
        }
        xi
    }

    /// Runs the system from `x0` over the given inputs and innovations.
    pub fn simulate(&self, x0: &DVector<f64>, inputs: &[DVector<f64>], innovations: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let (n, r, l) = self.dims();
        check_dim("initial state", n, x0.len())?;
        check_dim("innovation samples", inputs.len(), innovations.len())?;
        let mut x = x0.clone();
        let mut ys = Vec::with_capacity(inputs.len());
        for (u, e) in inputs.iter().zip(innovations) {
            check_dim("input sample", r, u.len())?;
            check_dim("innovation sample", l, e.len())?;
            let y = &self.c * &x + e;
            x = &self.a_tilde * &x + &self.b * u + &self.l * &y;
            ys.push(y);
        }
        Ok(ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_norms() {
        let s = PredictorSystem::random(4, 3, 3, 0.2, 0.9, 7).unwrap();
        let a = s.a_tilde.clone().svd(false, false).singular_values.max();
        assert!((a - 0.2).abs() < 1e-12);
        assert!((spectral_radius(&s.closed_loop()) - 0.9).abs() < 1e-9);
        assert!(PredictorSystem::random(4, 3, 3, 0.8, 0.3, 7).is_err());
    }

    #[test]
    fn impulse_response_matches_markov() {
        let mut s = PredictorSystem::random(3, 1, 1, 0.4, 0.5, 2).unwrap();
        s.l.fill(0.0);
        let mut u = alloc::vec![DVector::zeros(1); 6];
        u[0][0] = 1.0;
        let e = alloc::vec![DVector::zeros(1); 6];
        let y = s.simulate(&DVector::zeros(3), &u, &e).unwrap();
        let (mu, _) = s.markov_blocks(5);
        for j in 0..5 {
            assert!((y[j + 1][0] - mu[j][(0, 0)]).abs() < 1e-14);
        }
    }
}
