//! Delay-embedding forecasting for partially observed dynamical systems.
//!
//! - [`dynamics`]: benchmark systems, RK4 flow maps with Jacobians, diagnostics.
//! - [`embedding`]: delay datasets, normalization, chronological splits, nrmse.
//! - [`nets`]: the feedforward and recurrent delay-map networks and training.
//! - [`oracle`]: nonparametric estimate of the recursion error against delay count.
//! - [`sweep`]: replicated experiment grids, baselines and summaries.

// Index loops mirror the math in the kernels; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod nets;
pub mod oracle;
pub mod sweep;

pub use error::{Error, Result};
