//! Revolution-lifted model built from the identified Markov parameters.
//!
//! Over one revolution of `P` stations the differenced outputs obey
//!
//! ```text
//! (I − G̃) δY_next = Γ̃K_u δU_prev + Γ̃K_y δY_prev + H̃ δU_next
//! ```
//!
//! with block-Toeplitz `H̃`, `G̃` (band `p`, zero block diagonal). Solving by
//! block forward substitution yields `Γ K̂_u`, `Γ K̂_y` and `Ĥ`, which predict
//! a whole revolution of outputs from the previous one:
//! `Y_next = Y_prev + ΓK̂_u δU_prev + ΓK̂_y δY_prev + Ĥ δU_next`.
//!
//! Markov products with an exponent of `p` or more are treated as zero.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, domain, Result};

/// `M_u[j] = CÃʲB` and `M_y[j] = CÃʲL` for `j = 0..p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovBlocks {
    pub input: Vec<DMatrix<f64>>,
    pub output: Vec<DMatrix<f64>>,
    pub r: usize,
    pub l: usize,
}

impl MarkovBlocks {
    pub fn window(&self) -> usize {
        self.input.len()
    }

    /// Reassembles `Ξ = [CÃᵖ⁻¹B … CB | CÃᵖ⁻¹L … CL]`.
    pub fn join(&self) -> DMatrix<f64> {
        let p = self.window();
        let (r, l) = (self.r, self.l);
        let mut xi = DMatrix::zeros(l, (r + l) * p);
        for j in 0..p {
            let col = p - 1 - j;
            xi.view_mut((0, col * r), (l, r)).copy_from(&self.input[j]);
            xi.view_mut((0, r * p + col * l), (l, l)).copy_from(&self.output[j]);
        }
        xi
    }
}

/// Splits `Ξ̂` into its Markov blocks. The regressor is ordered oldest
/// sample first, so the last block of each half is the `j = 0` product.
pub fn split_markov(xi: &DMatrix<f64>, p: usize, r: usize, l: usize) -> Result<MarkovBlocks> {
    check_dim("Markov matrix rows", l, xi.nrows())?;
    check_dim("Markov matrix columns", (r + l) * p, xi.ncols())?;
    let input = (0..p)
        .map(|j| xi.view((0, (p - 1 - j) * r), (l, r)).into_owned())
        .collect();
    let output = (0..p)
        .map(|j| xi.view((0, r * p + (p - 1 - j) * l), (l, l)).into_owned())
        .collect();
    Ok(MarkovBlocks { input, output, r, l })
}

fn toeplitz(blocks: &[DMatrix<f64>], rows: usize, cols: usize, period: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows * period, cols * period);
    for s in 1..period {
        for (j, block) in blocks.iter().enumerate().take(s) {
            let t = s - 1 - j;
            m.view_mut((s * rows, t * cols), (rows, cols)).copy_from(block);
        }
    }
    m
}

/// `(H̃, G̃)`: block `(s, t)` equals `M[s−t−1]` for `0 < s−t ≤ p`.
pub fn build_toeplitz(blocks: &MarkovBlocks, period: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if period < blocks.window() {
        return Err(domain("lifting needs P ≥ p"));
    }
    Ok((
        toeplitz(&blocks.input, blocks.l, blocks.r, period),
        toeplitz(&blocks.output, blocks.l, blocks.l, period),
    ))
}

/// Solves `(I − G)X = rhs` for block-lower-triangular `G` with zero diagonal
/// blocks of size `block`, touching at most `band` sub-diagonal blocks.
pub fn block_forward_substitution(g: &DMatrix<f64>, rhs: &DMatrix<f64>, block: usize, band: usize) -> DMatrix<f64> {
    let blocks = g.nrows() / block;
    let mut x = DMatrix::zeros(rhs.nrows(), rhs.ncols());
    for s in 0..blocks {
        let mut acc = rhs.rows(s * block, block).into_owned();
        for t in s.saturating_sub(band)..s {
            acc.gemm(1.0, &g.view((s * block, t * block), (block, block)), &x.rows(t * block, block), 1.0);
        }
        x.rows_mut(s * block, block).copy_from(&acc);
    }
    x
}

/// One-revolution predictor in lifted form.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedModel {
    /// `Γ⁽ᴾ⁾K̂_u ∈ ℝ^{lP×rP}`.
    pub gku: DMatrix<f64>,
    /// `Γ⁽ᴾ⁾K̂_y ∈ ℝ^{lP×lP}`.
    pub gky: DMatrix<f64>,
    /// `Ĥ⁽ᴾ⁾ ∈ ℝ^{lP×rP}`.
    pub hhat: DMatrix<f64>,
    pub period: usize,
    pub window: usize,
    pub r: usize,
    pub l: usize,
}

/// `Γ̃K` over the previous revolution: block `(s, i)` is `M[s + P − 1 − i]`.
fn observability_product(blocks: &[DMatrix<f64>], rows: usize, cols: usize, period: usize) -> DMatrix<f64> {
    let p = blocks.len();
    let mut m = DMatrix::zeros(rows * period, cols * period);
    for s in 0..p.min(period) {
        for i in (s + period - p)..period {
            let j = s + period - 1 - i;
            m.view_mut((s * rows, i * cols), (rows, cols)).copy_from(&blocks[j]);
        }
    }
    m
}

/// `Γ K̂ = (I − G̃)⁻¹ Γ̃K` and `Ĥ = (I − G̃)⁻¹ H̃`, by forward substitution.
pub fn solve_lifted(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    blocks: &MarkovBlocks,
    period: usize,
) -> Result<LiftedModel> {
    let (r, l, p) = (blocks.r, blocks.l, blocks.window());
    check_dim("H̃ rows", l * period, h.nrows())?;
    check_dim("H̃ columns", r * period, h.ncols())?;
    check_dim("G̃ rows", l * period, g.nrows())?;
    check_dim("G̃ columns", l * period, g.ncols())?;
    if period < p {
        return Err(domain("lifting needs P ≥ p"));
    }
    let gamma_ku = observability_product(&blocks.input, l, r, period);
    let gamma_ky = observability_product(&blocks.output, l, l, period);
    Ok(LiftedModel {
        gku: block_forward_substitution(g, &gamma_ku, l, p),
        gky: block_forward_substitution(g, &gamma_ky, l, p),
        hhat: block_forward_substitution(g, h, l, p),
        period,
        window: p,
        r,
        l,
    })
}

impl LiftedModel {
    /// Straight from `Ξ̂`.
    pub fn from_markov(xi: &DMatrix<f64>, p: usize, r: usize, l: usize, period: usize) -> Result<Self> {
        let blocks = split_markov(xi, p, r, l)?;
        let (h, g) = build_toeplitz(&blocks, period)?;
        solve_lifted(&h, &g, &blocks, period)
    }

    /// Differenced outputs of the next revolution.
    pub fn predict_delta(
        &self,
        du_prev: &DVector<f64>,
        dy_prev: &DVector<f64>,
        du_next: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_dim("previous δU", self.r * self.period, du_prev.len())?;
        check_dim("previous δY", self.l * self.period, dy_prev.len())?;
        check_dim("next δU", self.r * self.period, du_next.len())?;
        Ok(&self.gku * du_prev + &self.gky * dy_prev + &self.hhat * du_next)
    }

    /// `Y_next = Y_prev + ΓK̂_u δU_prev + ΓK̂_y δY_prev + Ĥ δU_next`.
    pub fn predict(
        &self,
        y_prev: &DVector<f64>,
        du_prev: &DVector<f64>,
        dy_prev: &DVector<f64>,
        du_next: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_dim("previous Y", self.l * self.period, y_prev.len())?;
        Ok(y_prev + self.predict_delta(du_prev, dy_prev, du_next)?)
    }
}
