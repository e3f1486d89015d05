//! Sliding-window CFAR detection in exponentially distributed clutter.
//!
//! * [`stats`]: clutter and target models, dB conversions, random streams.
//! * [`detector`]: window geometry, clutter statistics and the threshold test.
//! * [`analytic`]: closed-form Pd/Pfa and threshold solvers.
//! * [`simulation`]: the reproducible Monte Carlo engine.
//! * [`experiment`], [`verify`]: config-driven runs and the invariant suite
//!   behind the `cfar` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod simulation;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
