//! Joint transmit beamforming and movable-antenna (MA) position optimization
//! for a multiuser MISO downlink.
//!
//! The crate is split along the processing chain:
//!
//! - [`channel`]: field-response multipath channel, random scenarios, antenna layouts.
//! - [`fp`]: SINR / sum-rate evaluation and the fractional-programming
//!   (quadratic transform) beamformer update with its ridge-multiplier bisection.
//! - [`position`]: per-antenna position subproblems, their analytic gradients,
//!   and the round-robin gradient ascent with backtracking line search.
//! - [`zf`]: zero-forcing precoding and its closed-form sum-rate.
//! - [`harness`]: FP-based and ZF-based pipelines, fixed-array baselines,
//!   seeded Monte-Carlo sweeps and result emission.
//!
//! Realizations are evaluated data-parallel through rayon when the `parallel`
//! feature is enabled (default); otherwise they run sequentially with
//! identical results.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod fp;
pub mod harness;
pub mod linalg;
pub mod parallel;
pub mod position;
pub mod zf;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex matrix type used throughout (column-major, dynamically sized).
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Real 2-vector used for antenna positions and direction vectors.
pub type Point = nalgebra::Vector2<f64>;
