//! Random cone-wise linear dynamics.
//!
//! A state vector evolves as `v(t+1) = A v(t)` while its first component is
//! positive and `v(t+1) = B v(t)` while it is negative, with `A` and `B` drawn
//! from random matrix ensembles. The crate samples the ensembles, evolves the
//! dynamics, and measures cone persistence, Lyapunov exponent statistics and
//! finite-size effects, together with the analytic predictions they are
//! compared against.

// Checks are written as `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod persistence;
pub mod quadrature;
pub mod renewal;
pub mod rng;
pub mod spectral;
pub mod surrogate;
pub mod validation;

pub use error::{CwlError, Result};
