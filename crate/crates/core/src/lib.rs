//! Spectral simulation and analysis for the chevron pattern equations.
//!
//! * [`spectral`]: sine-basis transforms and diagonal operators.
//! * [`backward`]: regularized backward evolution with blow-up detection.
//! * [`forward`]: IMEX forward integration with optional Galerkin feedback.
//! * [`analysis`]: closed-form thresholds and the blow-up scaling fit.
//! * [`harness`]: config parsing, experiment orchestration and CSV output.

// Negated comparisons are used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod backward;
pub mod error;
pub mod forward;
pub mod harness;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
