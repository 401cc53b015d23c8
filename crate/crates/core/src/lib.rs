//! Linearized transmission-grid dynamics and demand-side attack synthesis.
//!
//! The crate builds the descriptor model of a DC-flow grid with swing-equation
//! generators and frequency-sensitive loads, relocates a pair of eigenvalues
//! through a single load input with a minimum-norm gain, and maps how much
//! manipulable demand such a relocation needs over a region of targets.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack_synthesis;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod grid_model;
pub mod vulnerability;

pub use error::{Error, Result, Stage};

pub use num_complex::Complex64;
pub use nalgebra::{DMatrix, DVector};
