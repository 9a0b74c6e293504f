//! Monte-Carlo for the one-dimensional limit law of the location estimator.
//!
//! `n^(1/3)(theta_hat - theta_0)` converges to `argmax_h { G(h) - V h^2 / 2 }`
//! where `G` is a two-sided Brownian motion with `Var G(h) = sigma2 |h|`.
//! The variance of that argmax is the asymptotic variance `A` of a single
//! group, so `S n^(2/3) Var(theta_0_hat)` should approach it.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::simgen::{derive_seed, stream_rng};
use crate::stats::{mean, normal_pdf, pairwise_sum, sample_sd};
use crate::{Error, Result};

/// Largest tolerated fraction of replications whose argmax sits on the grid edge.
pub const MAX_BOUNDARY_FRACTION: f64 = 1e-3;

pub const MIN_VARIANCE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitProcessSpec {
    /// Slope of the variance function: `Var G(h) = sigma2 |h|`.
    pub sigma2: f64,
    /// Curvature `V` of the quadratic drift.
    pub curvature: f64,
    /// The grid covers `[-half_width, half_width]`.
    pub half_width: f64,
    pub step: f64,
    pub reps: usize,
    pub seed: u64,
}

impl LimitProcessSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.sigma2, self.curvature, self.half_width, self.step];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "sigma2, V, T and step must be positive: {self:?}"
            )));
        }
        if self.step > self.half_width / 100.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "step {} exceeds half_width / 100 = {}",
                self.step,
                self.half_width / 100.0
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of grid steps on each side of zero.
    pub fn steps_per_side(&self) -> usize {
        (self.half_width / self.step).round() as usize
    }
}

/// Limit process of the location estimator under standard normal data:
/// `sigma2 = V = 2 phi(1)`, on `[-8, 8]` with step 0.01.
pub fn location_limit_spec() -> LimitProcessSpec {
    let two_phi_one = 2.0 * normal_pdf(1.0);
    LimitProcessSpec {
        sigma2: two_phi_one,
        curvature: two_phi_one,
        half_width: 8.0,
        step: 0.01,
        reps: 100_000,
        seed: 0x11AB_0C47,
    }
}

/// Returns `(h, hit_boundary)` for one replication.
fn argmax_once(spec: &LimitProcessSpec, steps: usize, rep: usize) -> (f64, bool) {
    let mut rng = stream_rng(derive_seed(spec.seed, rep as u64, 0));
    let sd = (spec.sigma2 * spec.step).sqrt();
    let half_v = 0.5 * spec.curvature;
    let mut best = 0.0;
    let mut best_k: i64 = 0;
    for side in [1i64, -1] {
        let mut g = 0.0;
        for k in 1..=steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            g += sd * z;
            let h = k as f64 * spec.step;
            let value = g - half_v * h * h;
            // Ties go to the smaller |h|; k only grows, so only the other side can tie.
            if value > best || (value == best && (k as i64) < best_k.abs()) {
                best = value;
                best_k = side * k as i64;
            }
        }
    }
    (
        best_k as f64 * spec.step,
        best_k.unsigned_abs() as usize == steps,
    )
}

/// `spec.reps` independent draws of `argmax_h { G(h) - V h^2 / 2 }` on the grid.
///
/// Fails with [`Error::HalfWidthTooSmall`] when more than 0.1% of the
/// replications peak on the grid boundary.
pub fn simulate_argmax(spec: &LimitProcessSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let steps = spec.steps_per_side();
    let draws: Vec<(f64, bool)> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| argmax_once(spec, steps, rep))
        .collect();
    let hits = draws.iter().filter(|(_, hit)| *hit).count();
    if hits as f64 > MAX_BOUNDARY_FRACTION * spec.reps as f64 {
        return Err(Error::HalfWidthTooSmall {
            hits,
            reps: spec.reps,
        });
    }
    Ok(draws.into_iter().map(|(h, _)| h).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub factor: f64,
    pub sd_base: f64,
    pub sd_scaled: f64,
    /// `sd_scaled / sd_base`.
    pub ratio: f64,
    /// `factor^(2/3)`.
    pub theoretical: f64,
}

/// Compares `spec` with the process whose amplitude is multiplied by
/// `factor` (so `sigma2` grows by `factor^2`).
///
/// Because `Var G(kh) = k Var G(h)`, `argmax { a W(h) - b h^2 }` has the law of
/// `(a/b)^(2/3) argmax { W(h) - h^2 }`, so the SD ratio should be
/// `factor^(2/3)`. Both runs use the same seeds; the scaled run widens the
/// grid by `factor^(2/3)` when that exceeds one and keeps the step.
pub fn scaling_law_check(spec: &LimitProcessSpec, factor: f64) -> Result<ScalingReport> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scaling factor {factor} must be positive"
        )));
    }
    let theoretical = factor.powf(2.0 / 3.0);
    let mut scaled = spec.clone();
    scaled.sigma2 = spec.sigma2 * factor * factor;
    if theoretical > 1.0 {
        scaled.half_width = (spec.half_width * theoretical / spec.step).ceil() * spec.step;
    }
    let sd_base = sample_sd(&simulate_argmax(spec)?);
    let sd_scaled = if factor == 1.0 {
        sd_base
    } else {
        sample_sd(&simulate_argmax(&scaled)?)
    };
    Ok(ScalingReport {
        factor,
        sd_base,
        sd_scaled,
        ratio: sd_scaled / sd_base,
        theoretical,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitVariance {
    pub variance: f64,
    /// Jackknife standard error of `variance`.
    pub mc_se: f64,
    pub samples: usize,
}

/// Sample variance of argmax draws with its jackknife standard error.
pub fn estimate_limit_variance(samples: &[f64]) -> Result<LimitVariance> {
    let n = samples.len();
    if n < MIN_VARIANCE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_VARIANCE_SAMPLES} samples, got {n}"
        )));
    }
    let m = mean(samples);
    let sq: Vec<f64> = samples.iter().map(|x| (x - m) * (x - m)).collect();
    let ss = pairwise_sum(&sq);
    let nf = n as f64;
    let variance = ss / (nf - 1.0);
    // Leave-one-out variances in closed form.
    let loo: Vec<f64> = sq
        .iter()
        .map(|d2| (ss - nf / (nf - 1.0) * d2) / (nf - 2.0))
        .collect();
    let loo_mean = mean(&loo);
    let spread: Vec<f64> = loo
        .iter()
        .map(|v| (v - loo_mean) * (v - loo_mean))
        .collect();
    let mc_se = ((nf - 1.0) / nf * pairwise_sum(&spread)).sqrt();
    Ok(LimitVariance {
        variance,
        mc_se,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::gen_location;
    use crate::stats::skewness_kurtosis;

    fn quick(reps: usize) -> LimitProcessSpec {
        LimitProcessSpec {
            reps,
            ..location_limit_spec()
        }
    }

    #[test]
    fn location_spec_values() {
        let s = location_limit_spec();
        assert_eq!(s.sigma2 / s.curvature, 1.0);
        assert!(s.sigma2 > 0.4839 && s.sigma2 < 0.4840, "{}", s.sigma2);
        s.validate().unwrap();
    }

    #[test]
    fn validation_rejects_coarse_grid() {
        let s = LimitProcessSpec {
            step: 0.5,
            ..location_limit_spec()
        };
        assert!(s.validate().is_err());
        let s = LimitProcessSpec {
            sigma2: 0.0,
            ..location_limit_spec()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn symmetric_and_centred() {
        let spec = quick(100_000);
        let h = simulate_argmax(&spec).unwrap();
        let sd = sample_sd(&h);
        assert!(mean(&h).abs() < 4.0 * sd / (h.len() as f64).sqrt());
        let (skew, _) = skewness_kurtosis(&h).unwrap();
        assert!(skew.abs() < 0.05, "skewness {skew}");
    }

    #[test]
    fn refinement_is_stable() {
        let coarse = simulate_argmax(&quick(100_000)).unwrap();
        let fine = simulate_argmax(&LimitProcessSpec {
            step: 0.005,
            ..quick(100_000)
        })
        .unwrap();
        let (vc, vf) = (
            estimate_limit_variance(&coarse).unwrap(),
            estimate_limit_variance(&fine).unwrap(),
        );
        let rel = (vc.variance - vf.variance).abs() / vf.variance;
        assert!(
            rel < 0.02,
            "coarse {} fine {} rel {rel}",
            vc.variance,
            vf.variance
        );
    }

    #[test]
    fn doubling_sigma2_scales_sd_by_cube_root_two() {
        let base = quick(50_000);
        let doubled = LimitProcessSpec {
            sigma2: 2.0 * base.sigma2,
            half_width: 10.0,
            ..base.clone()
        };
        let ratio = sample_sd(&simulate_argmax(&doubled).unwrap())
            / sample_sd(&simulate_argmax(&base).unwrap());
        let expected = 2f64.cbrt();
        assert!(
            (ratio / expected - 1.0).abs() < 0.03,
            "ratio {ratio} vs {expected}"
        );
    }

    #[test]
    fn scaling_factor_one_is_exact() {
        let r = scaling_law_check(&quick(2_000), 1.0).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.theoretical, 1.0);
    }

    #[test]
    fn scaling_factor_eighth() {
        let r = scaling_law_check(&quick(100_000), 0.125).unwrap();
        assert!((r.ratio / 0.25 - 1.0).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let spec = LimitProcessSpec {
            half_width: 1.0,
            ..quick(2_000)
        };
        assert!(matches!(
            simulate_argmax(&spec),
            Err(Error::HalfWidthTooSmall { .. })
        ));
    }

    #[test]
    fn variance_estimator() {
        let constant = vec![1.5; MIN_VARIANCE_SAMPLES];
        let v = estimate_limit_variance(&constant).unwrap();
        assert_eq!(v.variance, 0.0);
        assert_eq!(v.mc_se, 0.0);
        let normal: Vec<f64> = gen_location(1_000_000, 17).collect();
        let v = estimate_limit_variance(&normal).unwrap();
        assert!((v.variance - 1.0).abs() < 0.01);
        // Var of s^2 for normal data is 2/(n-1).
        assert!(
            (v.mc_se / (2.0f64 / 1e6).sqrt() - 1.0).abs() < 0.05,
            "{}",
            v.mc_se
        );
        assert!(estimate_limit_variance(&[1.0; 10]).is_err());
    }
}
