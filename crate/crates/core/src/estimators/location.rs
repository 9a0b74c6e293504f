use super::sweep::{evaluate, sweep_max, SweepResult, WeightedInterval};
use super::{Fit, MEstimator};
use crate::{Error, Result};

fn location_intervals(xs: &[f64]) -> Result<Vec<WeightedInterval>> {
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.is_finite() {
                Ok(WeightedInterval::closed(x - 1.0, x + 1.0, 1.0))
            } else {
                Err(Error::NonFiniteInput(format!("observation {i} is {x}")))
            }
        })
        .collect()
}

/// Full sweep of `theta -> #{i : theta - 1 <= x_i <= theta + 1}`.
pub fn location_sweep(xs: &[f64]) -> Result<SweepResult> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("location sample"));
    }
    let intervals = location_intervals(xs)?;
    let (min, max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    sweep_max(&intervals, (min - 1.0, max + 1.0))
}

/// Maximizer of the window count `sum_i 1{theta - 1 <= x_i <= theta + 1}`.
///
/// Ties go to the midpoint of the leftmost maximizing interval.
pub fn estimate_location(xs: &[f64]) -> Result<f64> {
    location_sweep(xs).map(|r| r.representative)
}

/// Window count at `theta`.
pub fn location_objective(xs: &[f64], theta: f64) -> usize {
    xs.iter()
        .filter(|&&x| theta - 1.0 <= x && x <= theta + 1.0)
        .count()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LocationEstimator;

impl MEstimator for LocationEstimator {
    type Sample = f64;

    fn dim(&self) -> usize {
        1
    }

    fn fit(&self, data: &[f64]) -> Result<Fit> {
        let r = location_sweep(data)?;
        debug_assert_eq!(
            evaluate(&location_intervals(data)?, r.representative),
            r.max_value
        );
        Ok(Fit {
            theta: vec![r.representative],
            objective: r.max_value / data.len() as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Count maximized over the breakpoints and the midpoints between
    /// consecutive breakpoints: every piece of the step function is probed.
    fn oracle_max(xs: &[f64]) -> usize {
        let mut pts: Vec<f64> = xs.iter().flat_map(|x| [x - 1.0, x + 1.0]).collect();
        pts.sort_by(f64::total_cmp);
        let mut probes = pts.clone();
        probes.extend(pts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        probes
            .into_iter()
            .map(|t| location_objective(xs, t))
            .max()
            .unwrap()
    }

    #[test]
    fn single_observation() {
        assert_eq!(estimate_location(&[0.37]).unwrap(), 0.37);
        let r = location_sweep(&[0.37]).unwrap();
        assert_eq!(r.maximizing_set[0].lo, 0.37 - 1.0);
        assert_eq!(r.maximizing_set[0].hi, 0.37 + 1.0);
    }

    #[test]
    fn three_points() {
        let xs = [-0.5, 0.2, 3.0];
        let r = location_sweep(&xs).unwrap();
        assert_eq!(r.max_value, 2.0);
        assert_eq!(oracle_max(&xs), 2);
        assert_eq!(r.maximizing_set.len(), 1);
        assert!((r.representative + 0.15).abs() < 1e-15);
    }

    #[test]
    fn four_points_meet_at_one() {
        let xs = [0.0, 0.1, 1.9, 2.0];
        let r = location_sweep(&xs).unwrap();
        assert_eq!(r.max_value, 4.0);
        assert_eq!(oracle_max(&xs), 4);
        assert!(r.maximizing_set[0].is_degenerate());
        assert_eq!(r.representative, 1.0);
    }

    #[test]
    fn empty_and_non_finite() {
        assert!(matches!(estimate_location(&[]), Err(Error::EmptyInput(_))));
        assert!(matches!(
            estimate_location(&[0.0, f64::NAN]),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn fit_reports_fraction() {
        let f = LocationEstimator.fit(&[-0.5, 0.2, 3.0]).unwrap();
        assert!((f.objective - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn attains_exact_max(xs in prop::collection::vec(-4.0f64..4.0, 1..50)) {
            let theta = estimate_location(&xs).unwrap();
            prop_assert_eq!(location_objective(&xs, theta), oracle_max(&xs));
        }

        // Quarter-integer data keeps every shift and midpoint exactly representable.
        #[test]
        fn translation_equivariant_on_dyadic_data(
            ks in prop::collection::vec(-40i32..40, 1..40),
            shift in -400i32..400,
        ) {
            let xs: Vec<f64> = ks.iter().map(|&k| k as f64 / 8.0).collect();
            let c = shift as f64 / 16.0;
            let moved: Vec<f64> = xs.iter().map(|x| x + c).collect();
            prop_assert_eq!(estimate_location(&moved).unwrap(), estimate_location(&xs).unwrap() + c);
        }
    }
}
