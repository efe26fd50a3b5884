//! Numerical laboratory for the limiting Bliss functional, its log-log
//! improvement and their behaviour along concentrating sequences on `[0, 1]`.
//!
//! Candidate functions are piecewise linear ([`GridFn`]) with `v(0) = 0`.
//! The weighted exponential integrals
//!
//! ```text
//!   ∫₀¹ exp( W(s) · |v(s)|^N / s^(N-1) ) ds,
//!   W(s) = β·log(e/s) + γ·log log(e/s) + h(1/s)
//! ```
//!
//! are evaluated by [`quad::integrate_exp`], and the surrounding modules
//! provide the Bliss constants, the Taylor series bound, Moser sequences,
//! pointwise approximate-Moser diagnostics and a constrained ascent.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod gridfn;
pub mod optimize;
pub mod quad;
pub mod sequences;
pub mod series;
pub mod special;
pub mod verify;
pub mod weights;

pub mod cli;

pub use error::{Error, Result};
pub use functionals::{eval_functional, grad_slopes};
pub use gridfn::{GridFn, MaxRatioResult};
pub use quad::{QuadConfig, QuadResult};
pub use weights::{Perturbation, WeightSpec};

/// Formats a value with 17 significant digits, the precision used in every
/// CSV column.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}
