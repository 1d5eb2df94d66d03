//! Subspace predictive repetitive estimation of blade effective wind speed.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation: the inflow models, the analytic surrogate plant, the
//! cone coefficient table, recursive Markov parameter identification, the
//! revolution-lifted model, the periodic spline basis and the receding
//! horizon estimator, plus a closed-loop harness that wires them together.
//! File formats, scenarios and the command line live in the `spre` crate.
//!
//! ```text
//!  wind field ──► turbine ──► m_i ──┐
//!                                    ├─► e_i ──► sysid ─► lifting ─► rhe ─► θ
//!  U_(i) ──► cone table ──► m̃_i ────┘                                      │
//!    ▲                                                                       │
//!    └────────────────────────── spline synthesis ◄──────────────────────────┘
//! ```
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is how NaN gets rejected alongside nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bspline;
pub mod closed_loop;
pub mod cone;
pub mod config;
mod error;
pub mod lifting;
pub mod prbs;
pub mod rhe;
pub mod synthetic;
pub mod sysid;
pub mod turbine;
pub mod windfield;

pub use error::{Error, Result};

/// Number of blades; the estimator is written for three-bladed rotors.
pub const N_BLADES: usize = 3;
