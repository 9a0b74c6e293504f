//! Divide-and-conquer aggregation of cube-root M-estimators.
//!
//! Three non-smooth estimators (location, maximum score, value search) are
//! solved exactly by a shared sweep over weighted indicator intervals. The
//! [`dac`] module splits data into equal groups, averages the group
//! estimates and attaches standard errors and Wald intervals. [`simgen`],
//! [`harness`] and [`limitproc`] provide seeded Monte-Carlo machinery for
//! studying the aggregated estimator.

// `!(x > 0.0)` is used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dac;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod limitproc;
pub mod simgen;
pub mod stats;

pub use error::{Error, Result};
