//! Receding-horizon repetitive estimator.
//!
//! The lifted model is compressed onto the spline coefficients, giving the
//! per-revolution state `K̄ⱼ = [Ȳⱼ; δθⱼ; δȲⱼ]` with
//!
//! ```text
//! K̄ⱼ₊₁ = Ā K̄ⱼ + B̂ δθⱼ₊₁
//! Ā = [I  A_u  A_y; 0 0 0; 0  A_u  A_y],  B̂ = [B_h; I; B_h]
//! ```
//!
//! where `A_u = φ⁺ΓK̂_uφ_u`, `A_y = φ⁺ΓK̂_yφ`, `B_h = φ⁺Ĥφ_u`. Each revolution
//! the unconstrained horizon cost is minimized in closed form and only the
//! first move is applied.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::bspline::SplineBasis;
use crate::config::StateWeights;
use crate::error::{check_dim, domain, Error, Result};
use crate::lifting::LiftedModel;

/// Slowest wind speed an estimate may report [m/s].
pub const BEWS_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// `l·N_b`.
    pub out_dim: usize,
    /// `r·N_b`.
    pub in_dim: usize,
}

impl ReducedModel {
    pub fn state_dim(&self) -> usize {
        2 * self.out_dim + self.in_dim
    }

    /// `K̄ⱼ₊₁ = ĀK̄ⱼ + B̂ δθⱼ₊₁`.
    pub fn step(&self, kbar: &DVector<f64>, dtheta: &DVector<f64>) -> DVector<f64> {
        &self.a * kbar + &self.b * dtheta
    }
}

/// Reduction with one basis for inputs and outputs.
pub fn reduce_model(lifted: &LiftedModel, basis: &SplineBasis) -> Result<ReducedModel> {
    reduce_model_with_input(lifted, basis, basis)
}

/// Reduction where inputs are synthesized with `input_basis`.
pub fn reduce_model_with_input(
    lifted: &LiftedModel,
    output_basis: &SplineBasis,
    input_basis: &SplineBasis,
) -> Result<ReducedModel> {
    let phi_y = output_basis.phi();
    let pinv_y = output_basis.pinv();
    let phi_u = input_basis.phi();
    check_dim("output basis rows", lifted.gky.nrows(), phi_y.nrows())?;
    check_dim("input basis rows", lifted.gku.ncols(), phi_u.nrows())?;
    check_dim("output basis rows vs Ĥ", lifted.hhat.nrows(), phi_y.nrows())?;

    let au = pinv_y * &lifted.gku * phi_u;
    let ay = pinv_y * &lifted.gky * phi_y;
    let bh = pinv_y * &lifted.hhat * phi_u;
    let (ny, nu) = (au.nrows(), au.ncols());
    let n = 2 * ny + nu;

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (ny, ny)).fill_with_identity();
    for row in [0, ny + nu] {
        a.view_mut((row, ny), (ny, nu)).copy_from(&au);
        a.view_mut((row, ny + nu), (ny, ny)).copy_from(&ay);
    }
    let mut b = DMatrix::zeros(n, nu);
    b.view_mut((0, 0), (ny, nu)).copy_from(&bh);
    b.view_mut((ny, 0), (nu, nu)).fill_with_identity();
    b.view_mut((ny + nu, 0), (ny, nu)).copy_from(&bh);
    Ok(ReducedModel {
        a,
        b,
        out_dim: ny,
        in_dim: nu,
    })
}

/// Stacked predictions `[K̄ⱼ; …; K̄ⱼ₊N_p] = 𝒜K̄ⱼ + ℬU` with the last move held
/// from `N_u` onward.
pub fn build_prediction(model: &ReducedModel, n_p: usize, n_u: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if n_u < 1 || n_u > n_p {
        return Err(domain(alloc::format!("horizons need 1 ≤ N_u ≤ N_p (N_u={n_u}, N_p={n_p})")));
    }
    let n = model.state_dim();
    let m = model.in_dim;
    let mut powers: Vec<DMatrix<f64>> = Vec::with_capacity(n_p + 1);
    powers.push(DMatrix::identity(n, n));
    for i in 1..=n_p {
        powers.push(&model.a * &powers[i - 1]);
    }
    let impulse: Vec<DMatrix<f64>> = powers.iter().take(n_p).map(|p| p * &model.b).collect();

    let mut a_pred = DMatrix::zeros(n * (n_p + 1), n);
    let mut b_pred = DMatrix::zeros(n * (n_p + 1), m * n_u);
    for s in 0..=n_p {
        a_pred.view_mut((s * n, 0), (n, n)).copy_from(&powers[s]);
        for q in 1..n_u {
            if q <= s {
                b_pred.view_mut((s * n, (q - 1) * m), (n, m)).copy_from(&impulse[s - q]);
            }
        }
        if s >= n_u {
            let mut held = DMatrix::zeros(n, m);
            for block in impulse.iter().take(s - n_u + 1) {
                held += block;
            }
            b_pred.view_mut((s * n, (n_u - 1) * m), (n, m)).copy_from(&held);
        }
    }
    Ok((a_pred, b_pred))
}

/// Horizon weights: `Q` on each predicted state, `R` on each move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RheWeights {
    pub state: StateWeights,
    pub input: f64,
}

impl RheWeights {
    fn q_diag(&self, out_dim: usize, in_dim: usize) -> DVector<f64> {
        DVector::from_fn(2 * out_dim + in_dim, |i, _| {
            if i < out_dim {
                self.state.output
            } else if i < out_dim + in_dim {
                self.state.input_rate
            } else {
                self.state.output_rate
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub a_pred: DMatrix<f64>,
    pub b_pred: DMatrix<f64>,
    /// `H = ℬᵀ𝒬ℬ + ℛ`.
    pub h: DMatrix<f64>,
    /// `F = 𝒜ᵀ𝒬ℬ`.
    pub f: DMatrix<f64>,
    pub n_u: usize,
    pub in_dim: usize,
}

impl QpProblem {
    pub fn new(model: &ReducedModel, n_p: usize, n_u: usize, weights: &RheWeights) -> Result<Self> {
        if !(weights.input > 0.0) || !(weights.state.output >= 0.0 && weights.state.input_rate >= 0.0 && weights.state.output_rate >= 0.0) {
            return Err(domain("weights need R ≻ 0 and Q ⪰ 0"));
        }
        let (a_pred, b_pred) = build_prediction(model, n_p, n_u)?;
        let q = weights.q_diag(model.out_dim, model.in_dim);
        let n = model.state_dim();
        let mut qb = b_pred.clone();
        for (row, mut r) in qb.row_iter_mut().enumerate() {
            r *= q[row % n];
        }
        let mut h = b_pred.transpose() * &qb;
        for i in 0..h.nrows() {
            h[(i, i)] += weights.input;
        }
        let f = a_pred.transpose() * &qb;
        Ok(Self {
            a_pred,
            b_pred,
            h,
            f,
            n_u,
            in_dim: model.in_dim,
        })
    }

    /// `UᵀHU + 2K̄ᵀFU`.
    pub fn cost(&self, kbar: &DVector<f64>, u: &DVector<f64>) -> f64 {
        u.dot(&(&self.h * u)) + 2.0 * kbar.dot(&(&self.f * u))
    }
}

/// Unconstrained minimizer `U* = −H⁻¹FᵀK̄` by Cholesky.
pub fn solve_horizon(qp: &QpProblem, kbar: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("horizon state", qp.f.nrows(), kbar.len())?;
    let h = (&qp.h + qp.h.transpose()) * 0.5;
    let chol = h.cholesky().ok_or(Error::Indefinite)?;
    let rhs = -(qp.f.transpose() * kbar);
    let u = chol.solve(&rhs);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Indefinite);
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    /// Factorization failed; θ kept for this revolution.
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub ybar: DVector<f64>,
    pub theta: DVector<f64>,
    pub dtheta: DVector<f64>,
    pub dybar: DVector<f64>,
    /// Completed revolutions.
    pub j: usize,
}

impl EstimatorState {
    pub fn new(out_dim: usize, in_dim: usize) -> Self {
        Self {
            ybar: DVector::zeros(out_dim),
            theta: DVector::zeros(in_dim),
            dtheta: DVector::zeros(in_dim),
            dybar: DVector::zeros(out_dim),
            j: 0,
        }
    }

    /// `K̄ⱼ = [Ȳⱼ; δθⱼ; δȲⱼ]`.
    pub fn kbar(&self) -> DVector<f64> {
        let (ny, nu) = (self.ybar.len(), self.theta.len());
        let mut k = DVector::zeros(2 * ny + nu);
        k.rows_mut(0, ny).copy_from(&self.ybar);
        k.rows_mut(ny, nu).copy_from(&self.dtheta);
        k.rows_mut(ny + nu, ny).copy_from(&self.dybar);
        k
    }
}

/// Solver settings shared across revolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct RheSettings {
    pub weights: RheWeights,
    pub horizon_pred: usize,
    pub horizon_est: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvanceReport {
    pub status: SolveStatus,
    pub ybar_norm: f64,
    pub dtheta_norm: f64,
}

/// Folds in one revolution of lifted outputs and moves θ by the first
/// optimal increment. `update = false` records the data without moving θ.
pub fn advance(
    state: &mut EstimatorState,
    lifted: Option<&LiftedModel>,
    output_basis: &SplineBasis,
    input_basis: &SplineBasis,
    settings: &RheSettings,
    y_rev: &DVector<f64>,
    update: bool,
) -> Result<AdvanceReport> {
    let ybar = output_basis.project(y_rev)?;
    check_dim("projected outputs", state.ybar.len(), ybar.len())?;
    state.dybar = if state.j == 0 { DVector::zeros(ybar.len()) } else { &ybar - &state.ybar };
    state.ybar = ybar;

    let mut status = SolveStatus::Solved;
    let mut step = DVector::zeros(state.theta.len());
    match (update, lifted) {
        (true, Some(lifted)) => {
            let model = reduce_model_with_input(lifted, output_basis, input_basis)?;
            let qp = QpProblem::new(&model, settings.horizon_pred, settings.horizon_est, &settings.weights)?;
            match solve_horizon(&qp, &state.kbar()) {
                Ok(u) => step.copy_from(&u.rows(0, qp.in_dim)),
                Err(Error::Indefinite) => status = SolveStatus::Frozen,
                Err(e) => return Err(e),
            }
        }
        (true, None) => status = SolveStatus::Frozen,
        (false, _) => {}
    }
    state.theta += &step;
    state.dtheta = step;
    state.j += 1;
    Ok(AdvanceReport {
        status,
        ybar_norm: state.ybar.norm(),
        dtheta_norm: state.dtheta.norm(),
    })
}

/// `U = max(U₀ + φθ, 1 m/s)` per blade at a fractional station.
pub fn estimate_bews(theta: &DVector<f64>, basis: &SplineBasis, position: f64, prior: f64) -> Result<Vec<f64>> {
    Ok(basis
        .evaluate(theta.as_slice(), position)?
        .into_iter()
        .map(|v| (prior + v).max(BEWS_FLOOR))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::build_basis;
    use crate::lifting::LiftedModel;

    fn zero_lifted(period: usize) -> LiftedModel {
        LiftedModel::from_markov(&DMatrix::zeros(3, 6 * 2), 2, 3, 3, period).unwrap()
    }

    fn random_model(seed: u64, ny: usize, nu: usize) -> ReducedModel {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.4
        };
        let au = DMatrix::from_fn(ny, nu, |_, _| next());
        let ay = DMatrix::from_fn(ny, ny, |_, _| next());
        let bh = DMatrix::from_fn(ny, nu, |_, _| next());
        let n = 2 * ny + nu;
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (ny, ny)).fill_with_identity();
        for row in [0, ny + nu] {
            a.view_mut((row, ny), (ny, nu)).copy_from(&au);
            a.view_mut((row, ny + nu), (ny, ny)).copy_from(&ay);
        }
        let mut b = DMatrix::zeros(n, nu);
        b.view_mut((0, 0), (ny, nu)).copy_from(&bh);
        b.view_mut((ny, 0), (nu, nu)).fill_with_identity();
        b.view_mut((ny + nu, 0), (ny, nu)).copy_from(&bh);
        ReducedModel { a, b, out_dim: ny, in_dim: nu }
    }

    #[test]
    fn zero_dynamics_reduce_to_selector() {
        let basis = build_basis(4, 1, 8, 3).unwrap();
        let m = reduce_model(&zero_lifted(8), &basis).unwrap();
        let n = m.state_dim();
        assert_eq!(n, 36);
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (12, 12)).fill_with_identity();
        assert_eq!(m.a, a);
        let mut b = DMatrix::zeros(n, 12);
        b.view_mut((12, 0), (12, 12)).fill_with_identity();
        assert_eq!(m.b, b);
    }

    #[test]
    fn one_step_horizon() {
        let m = random_model(3, 2, 1);
        let (a, b) = build_prediction(&m, 1, 1).unwrap();
        assert_eq!(a.rows(0, 5).into_owned(), DMatrix::identity(5, 5));
        assert_eq!(a.rows(5, 5).into_owned(), m.a);
        assert!(b.rows(0, 5).iter().all(|v| *v == 0.0));
        assert_eq!(b.rows(5, 5).into_owned(), m.b);
        assert!(build_prediction(&m, 1, 2).is_err());
        assert!(build_prediction(&m, 2, 0).is_err());
    }

    #[test]
    fn memoryless_prediction() {
        let mut m = random_model(5, 2, 2);
        m.a.fill(0.0);
        let (_, b) = build_prediction(&m, 3, 3).unwrap();
        let n = m.state_dim();
        for s in 0..4 {
            for q in 0..3 {
                let block = b.view((s * n, q * 2), (n, 2));
                if s == q + 1 {
                    assert_eq!(block.into_owned(), m.b);
                } else {
                    assert!(block.iter().all(|v| *v == 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_state_zero_move() {
        let m = random_model(9, 2, 2);
        let qp = QpProblem::new(&m, 3, 2, &RheWeights { state: StateWeights::default(), input: 0.1 }).unwrap();
        let u = solve_horizon(&qp, &DVector::zeros(m.state_dim())).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_weights() {
        let m = random_model(9, 2, 2);
        let bad = RheWeights { state: StateWeights::default(), input: 0.0 };
        assert!(QpProblem::new(&m, 3, 2, &bad).is_err());
    }

    #[test]
    fn first_revolution_has_no_rate() {
        let basis = build_basis(4, 1, 8, 3).unwrap();
        let settings = RheSettings {
            weights: RheWeights { state: StateWeights::default(), input: 0.1 },
            horizon_pred: 3,
            horizon_est: 2,
        };
        let mut st = EstimatorState::new(12, 12);
        let lifted = zero_lifted(8);
        let r = advance(&mut st, Some(&lifted), &basis, &basis, &settings, &DVector::zeros(24), true).unwrap();
        assert_eq!(r.status, SolveStatus::Solved);
        assert_eq!(st.j, 1);
        assert!(st.theta.iter().all(|v| *v == 0.0));
        assert!(st.dybar.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bews_prior_and_floor() {
        let basis = build_basis(4, 1, 8, 3).unwrap();
        let theta = DVector::zeros(12);
        assert_eq!(estimate_bews(&theta, &basis, 2.5, 9.0).unwrap(), [9.0; 3]);
        let low = DVector::from_element(12, -20.0);
        assert_eq!(estimate_bews(&low, &basis, 0.0, 9.0).unwrap(), [BEWS_FLOOR; 3]);
    }
}
