//! Multi-view 3D swarm tracking with particle filters.
//!
//! Two trackers are provided: a constant-velocity particle filter (CVPF) and
//! a current-statistical-model Kalman particle filter (CSKPF). The crate also
//! ships a synthetic swarm simulator and trajectory-quality metrics.

// Negated float comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod error;
pub mod eval;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod manager;
pub mod motion;
pub mod sim;

pub use error::{Error, Result};
