//! Exact solvers for the three non-smooth M-estimation objectives.

mod location;
mod maxscore;
pub mod sweep;
mod valuesearch;

pub use location::{estimate_location, location_objective, location_sweep, LocationEstimator};
pub use maxscore::{
    estimate_maxscore_2d, estimate_maxscore_highd, maxscore_arcs, maxscore_objective,
    MaxScoreEstimator, RegressionSample,
};
pub use sweep::{evaluate, sweep_max, Segment, SweepResult, WeightedInterval};
pub use valuesearch::{
    estimate_valuesearch_1d, valuesearch_contrast, valuesearch_intervals, valuesearch_objective,
    TreatmentSample, ValueSearchEstimator, DEFAULT_THETA_BOUNDS,
};

use crate::Result;

/// A fitted group estimate: the maximizer and the objective value attained there.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub theta: Vec<f64>,
    pub objective: f64,
}

/// An M-estimator `argmax_theta (1/n) sum_i m(X_i, theta)` over one block of data.
pub trait MEstimator: Sync {
    type Sample: Send + Sync;

    /// Dimension of the returned parameter.
    fn dim(&self) -> usize;

    fn fit(&self, data: &[Self::Sample]) -> Result<Fit>;
}
