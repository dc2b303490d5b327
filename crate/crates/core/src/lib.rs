//! Spectral Galerkin simulation of a pressure-augmented troposphere flow model
//! on the channel `(-π, π) × (0, π)`, together with an executable suite of the
//! identities and inequalities its analysis relies on.
//!
//! The state is the horizontal velocity `u`, expanded in the orthonormal basis
//! `cos(l1·x1)·sin(l2·x2)` / `sin(|l1|·x1)·sin(l2·x2)`. Vertical velocity is
//! recovered from `u` through the continuity equation, and the pressure enters
//! only through the projection onto admissible modes.
//!
//! Modules:
//! - [`spectral`]: mode sets, transforms, differentiation, projection, `v_u`.
//! - [`dynamics`]: the nonlinearity, right-hand side, IMEX steppers and the
//!   exact Galerkin interaction-tensor oracle.
//! - [`analysis`]: norms, energy balance, inequality checks, growth fits and
//!   regime classification.
//! - [`scenarios`]: named reproducible experiments, run directories and
//!   checkpoints.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
mod error;
mod fsutil;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
