//! Value search for a linear treatment rule `d(x, theta) = 1{x theta > 1}`.
//!
//! The inverse-propensity-weighted value
//! `(1/n) sum_i [d_i A_i / pi_i + (1 - d_i)(1 - A_i)/(1 - pi_i)] Y_i`
//! equals `(1/n) sum_i [c_i d_i + base_i]` with the per-sample contrast
//! `c_i = (A_i/pi_i - (1 - A_i)/(1 - pi_i)) Y_i` and `base_i = (1 - A_i) Y_i/(1 - pi_i)`,
//! so only the weighted indicators matter for the argmax.

use super::sweep::{sweep_max, WeightedInterval};
use super::{Fit, MEstimator};
use crate::{Error, Result};

pub const DEFAULT_THETA_BOUNDS: (f64, f64) = (-10.0, 10.0);

#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentSample {
    pub x: Vec<f64>,
    /// Treatment received, 0 or 1.
    pub a: u8,
    pub y: f64,
    /// Known propensity `P(A = 1 | X)`.
    pub pi: f64,
}

impl TreatmentSample {
    pub fn new(x: Vec<f64>, a: u8, y: f64, pi: f64) -> Self {
        Self { x, a, y, pi }
    }
}

/// Returns `(c, base)` so that the sample's weighted value is `c * d + base`.
pub fn valuesearch_contrast(s: &TreatmentSample) -> Result<(f64, f64)> {
    if !(s.pi > 0.0 && s.pi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "propensity {} outside (0, 1)",
            s.pi
        )));
    }
    if s.a > 1 {
        return Err(Error::InvalidArgument(format!(
            "treatment {} is not binary",
            s.a
        )));
    }
    let a = f64::from(s.a);
    let w1 = a / s.pi * s.y;
    let w0 = (1.0 - a) / (1.0 - s.pi) * s.y;
    Ok((w1 - w0, w0))
}

fn scalar_x(s: &TreatmentSample) -> Result<f64> {
    match s.x.as_slice() {
        [x] if x.is_finite() => Ok(*x),
        [x] => Err(Error::NonFiniteInput(format!("covariate {x}"))),
        other => Err(Error::DimensionMismatch {
            expected: 1,
            got: other.len(),
        }),
    }
}

/// Support of `1{x theta > 1}` in theta, weighted by each sample's contrast.
pub fn valuesearch_intervals(data: &[TreatmentSample]) -> Result<Vec<WeightedInterval>> {
    let mut out = Vec::with_capacity(data.len());
    for s in data {
        let (c, _) = valuesearch_contrast(s)?;
        let x = scalar_x(s)?;
        if x > 0.0 {
            out.push(WeightedInterval::new(
                1.0 / x,
                false,
                f64::INFINITY,
                false,
                c,
            ));
        } else if x < 0.0 {
            out.push(WeightedInterval::new(
                f64::NEG_INFINITY,
                false,
                1.0 / x,
                false,
                c,
            ));
        }
    }
    Ok(out)
}

/// Estimated value `(1/n) sum_i [c_i 1{x_i theta > 1} + base_i]`.
pub fn valuesearch_objective(data: &[TreatmentSample], theta: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("value search sample"));
    }
    let mut total = 0.0;
    for s in data {
        let (c, base) = valuesearch_contrast(s)?;
        let x = scalar_x(s)?;
        total += base;
        if x * theta > 1.0 {
            total += c;
        }
    }
    Ok(total / data.len() as f64)
}

/// Exact value search estimate over `theta_bounds`; ties go to the midpoint
/// of the leftmost maximizing interval.
pub fn estimate_valuesearch_1d(data: &[TreatmentSample], theta_bounds: (f64, f64)) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("value search sample"));
    }
    let intervals = valuesearch_intervals(data)?;
    Ok(sweep_max(&intervals, theta_bounds)?.representative)
}

#[derive(Debug, Clone, Copy)]
pub struct ValueSearchEstimator {
    pub bounds: (f64, f64),
}

impl Default for ValueSearchEstimator {
    fn default() -> Self {
        Self {
            bounds: DEFAULT_THETA_BOUNDS,
        }
    }
}

impl MEstimator for ValueSearchEstimator {
    type Sample = TreatmentSample;

    fn dim(&self) -> usize {
        1
    }

    fn fit(&self, data: &[TreatmentSample]) -> Result<Fit> {
        let theta = estimate_valuesearch_1d(data, self.bounds)?;
        Ok(Fit {
            theta: vec![theta],
            objective: valuesearch_objective(data, theta)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(x: f64, a: u8, y: f64, pi: f64) -> TreatmentSample {
        TreatmentSample::new(vec![x], a, y, pi)
    }

    /// Original IPW form, independent of the contrast reduction.
    fn ipw_value(data: &[TreatmentSample], theta: f64) -> f64 {
        data.iter()
            .map(|s| {
                let d = f64::from(u8::from(s.x[0] * theta > 1.0));
                let a = f64::from(s.a);
                (d * a + (1.0 - d) * (1.0 - a)) / (s.pi * a + (1.0 - s.pi) * (1.0 - a)) * s.y
            })
            .sum::<f64>()
            / data.len() as f64
    }

    fn oracle_max(data: &[TreatmentSample], bounds: (f64, f64)) -> f64 {
        let mut probes: Vec<f64> = (0..=20_000)
            .map(|k| bounds.0 + (bounds.1 - bounds.0) * k as f64 / 20_000.0)
            .collect();
        for s in data {
            if s.x[0] != 0.0 {
                let b = 1.0 / s.x[0];
                probes.extend([b - 1e-9, b, b + 1e-9]);
            }
        }
        probes
            .into_iter()
            .filter(|p| *p >= bounds.0 && *p <= bounds.1)
            .map(|p| ipw_value(data, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn contrast_examples() {
        assert_eq!(
            valuesearch_contrast(&t(0.0, 1, 1.0, 0.5)).unwrap(),
            (2.0, 0.0)
        );
        assert_eq!(
            valuesearch_contrast(&t(0.0, 0, 1.0, 0.5)).unwrap(),
            (-2.0, 2.0)
        );
        assert_eq!(
            valuesearch_contrast(&t(0.0, 1, -3.0, 0.25)).unwrap(),
            (-12.0, 0.0)
        );
        assert!(valuesearch_contrast(&t(0.0, 1, 1.0, 1.0)).is_err());
        assert!(valuesearch_contrast(&t(0.0, 1, 1.0, 0.0)).is_err());
    }

    #[test]
    fn single_open_interval() {
        assert_eq!(
            estimate_valuesearch_1d(&[t(1.0, 1, 1.0, 0.5)], DEFAULT_THETA_BOUNDS).unwrap(),
            5.5
        );
    }

    #[test]
    fn two_samples() {
        let data = [t(2.0, 1, 1.0, 0.5), t(1.0, 1, -1.0, 0.5)];
        let intervals = valuesearch_intervals(&data).unwrap();
        let r = sweep_max(&intervals, DEFAULT_THETA_BOUNDS).unwrap();
        assert_eq!(r.max_value, 2.0);
        let seg = r.maximizing_set[0];
        assert_eq!(
            (seg.lo, seg.lo_closed, seg.hi, seg.hi_closed),
            (0.5, false, 1.0, true)
        );
        assert_eq!(r.representative, 0.75);
    }

    #[test]
    fn empty_and_wrong_dimension() {
        assert!(matches!(
            estimate_valuesearch_1d(&[], DEFAULT_THETA_BOUNDS),
            Err(Error::EmptyInput(_))
        ));
        let bad = TreatmentSample::new(vec![1.0, 2.0], 1, 1.0, 0.5);
        assert!(matches!(
            estimate_valuesearch_1d(&[bad], DEFAULT_THETA_BOUNDS),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn random_data(seed: u64, n: usize) -> Vec<TreatmentSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-2.0..2.0);
                let a = u8::from(rng.random_bool(0.5));
                let y = 1.0 + f64::from(a) * (2.0 * x - 1.0) + rng.random_range(-0.5..0.5);
                t(x, a, y, rng.random_range(0.2..0.8))
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_ipw_oracle(seed in any::<u64>(), n in 1usize..50) {
            let data = random_data(seed, n);
            let theta = estimate_valuesearch_1d(&data, DEFAULT_THETA_BOUNDS).unwrap();
            let got = ipw_value(&data, theta);
            let best = oracle_max(&data, DEFAULT_THETA_BOUNDS);
            prop_assert!((got - best).abs() <= 1e-9, "{} vs {}", got, best);
            prop_assert!((valuesearch_objective(&data, theta).unwrap() - got).abs() <= 1e-9);
        }

        #[test]
        fn positive_outcome_scaling_keeps_argmax(seed in any::<u64>(), c in 0.01f64..100.0) {
            let data = random_data(seed, 30);
            let scaled: Vec<_> = data.iter().map(|s| t(s.x[0], s.a, c * s.y, s.pi)).collect();
            let a = sweep_max(&valuesearch_intervals(&data).unwrap(), DEFAULT_THETA_BOUNDS).unwrap();
            let b = sweep_max(&valuesearch_intervals(&scaled).unwrap(), DEFAULT_THETA_BOUNDS).unwrap();
            prop_assert_eq!(a.maximizing_set, b.maximizing_set);
            prop_assert_eq!(a.representative, b.representative);
        }
    }
}
