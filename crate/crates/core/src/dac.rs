//! Split, estimate per group, average.
//!
//! The aggregated estimate is the plain mean of the `S` group maximizers.
//! Its standard error is the between-group spread divided by `sqrt(S)`,
//! and the truncation diagnostic counts groups whose scaled deviation
//! `n^(1/3) |theta_j - theta_0|` exceeds `delta_n = 3^(1/3) (ln n)^(1/3)`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::estimators::MEstimator;
use crate::stats::{normal_quantile, pairwise_sum};
use crate::{Error, Result};

/// Equal group sizes for `n_total` observations split into `groups`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub sizes: Vec<usize>,
    /// Observations left over by `N mod S`; they are not used.
    pub discarded: usize,
}

impl Partition {
    pub fn group_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn warning(&self) -> Option<String> {
        (self.discarded > 0).then(|| format!("{} observations discarded", self.discarded))
    }
}

pub fn partition(n_total: usize, groups: usize) -> Result<Partition> {
    if groups == 0 {
        return Err(Error::InvalidArgument(
            "number of groups must be at least 1".into(),
        ));
    }
    if n_total < groups {
        return Err(Error::InvalidArgument(format!(
            "N = {n_total} is smaller than S = {groups}"
        )));
    }
    let n = n_total / groups;
    Ok(Partition {
        sizes: vec![n; groups],
        discarded: n_total - n * groups,
    })
}

/// Supplies the `n` observations of group `group`.
pub trait GroupSource<T>: Sync {
    fn block(&self, group: usize, n: usize) -> Result<Vec<T>>;
}

/// Consecutive blocks of an in-memory dataset, in file order.
#[derive(Debug, Clone, Copy)]
pub struct SliceSource<'a, T> {
    data: &'a [T],
}

impl<'a, T> SliceSource<'a, T> {
    pub fn new(data: &'a [T]) -> Self {
        Self { data }
    }
}

impl<T: Clone + Sync> GroupSource<T> for SliceSource<'_, T> {
    fn block(&self, group: usize, n: usize) -> Result<Vec<T>> {
        let start = group * n;
        self.data
            .get(start..start + n)
            .map(<[T]>::to_vec)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("group {group} of size {n} exceeds the data"))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEstimate {
    pub group_index: usize,
    pub theta: Vec<f64>,
    pub objective_value: f64,
    pub group_size: usize,
}

fn fit_group<E, Src>(source: &Src, estimator: &E, group: usize, n: usize) -> Result<GroupEstimate>
where
    E: MEstimator,
    Src: GroupSource<E::Sample> + ?Sized,
{
    let data = source.block(group, n).map_err(|e| e.in_group(group))?;
    let fit = estimator.fit(&data).map_err(|e| e.in_group(group))?;
    Ok(GroupEstimate {
        group_index: group,
        theta: fit.theta,
        objective_value: fit.objective,
        group_size: n,
    })
}

/// Fits every group in parallel. Output is ordered by group index and does
/// not depend on the thread count.
pub fn run_groups<E, Src>(
    source: &Src,
    estimator: &E,
    groups: usize,
    n: usize,
) -> Result<Vec<GroupEstimate>>
where
    E: MEstimator,
    Src: GroupSource<E::Sample> + ?Sized,
{
    check_groups(groups, n)?;
    (0..groups)
        .into_par_iter()
        .map(|j| fit_group(source, estimator, j, n))
        .collect()
}

/// Same as [`run_groups`] on the calling thread.
pub fn run_groups_serial<E, Src>(
    source: &Src,
    estimator: &E,
    groups: usize,
    n: usize,
) -> Result<Vec<GroupEstimate>>
where
    E: MEstimator,
    Src: GroupSource<E::Sample> + ?Sized,
{
    check_groups(groups, n)?;
    (0..groups)
        .map(|j| fit_group(source, estimator, j, n))
        .collect()
}

fn check_groups(groups: usize, n: usize) -> Result<()> {
    if groups == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need S >= 1 and n >= 1, got S = {groups}, n = {n}"
        )));
    }
    Ok(())
}

/// Estimates ordered by group index, ties broken by value, so every
/// downstream sum is independent of the order the caller supplied.
fn canonical(estimates: &[GroupEstimate]) -> Result<Vec<&GroupEstimate>> {
    let first = estimates
        .first()
        .ok_or(Error::EmptyInput("group estimates"))?;
    let d = first.theta.len();
    if let Some(bad) = estimates.iter().find(|e| e.theta.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.theta.len(),
        });
    }
    let mut sorted: Vec<&GroupEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| {
        a.group_index.cmp(&b.group_index).then_with(|| {
            a.theta
                .iter()
                .zip(&b.theta)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    Ok(sorted)
}

fn column_means(sorted: &[&GroupEstimate]) -> Vec<f64> {
    let d = sorted[0].theta.len();
    let s = sorted.len() as f64;
    let mut column = Vec::with_capacity(sorted.len());
    (0..d)
        .map(|k| {
            column.clear();
            column.extend(sorted.iter().map(|e| e.theta[k]));
            pairwise_sum(&column) / s
        })
        .collect()
}

/// Componentwise mean of the group estimates.
pub fn aggregate(estimates: &[GroupEstimate]) -> Result<Vec<f64>> {
    Ok(column_means(&canonical(estimates)?))
}

/// Per-coordinate standard error of the aggregate and the sample covariance
/// of the group estimates:
/// `se_k = sqrt(sum_l (theta_lk - mean_k)^2 / ((S - 1) S))`.
pub fn se_hat(estimates: &[GroupEstimate]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let sorted = canonical(estimates)?;
    let s = sorted.len();
    if s < 2 {
        return Err(Error::TooFewGroups);
    }
    let means = column_means(&sorted);
    let d = means.len();
    let dev: Vec<Vec<f64>> = sorted
        .iter()
        .map(|e| e.theta.iter().zip(&means).map(|(t, m)| t - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    let mut products = Vec::with_capacity(s);
    for j in 0..d {
        for k in j..d {
            products.clear();
            products.extend(dev.iter().map(|row| row[j] * row[k]));
            let c = pairwise_sum(&products) / (s - 1) as f64;
            cov[j][k] = c;
            cov[k][j] = c;
        }
    }
    let se = (0..d).map(|k| (cov[k][k] / s as f64).sqrt()).collect();
    Ok((se, cov))
}

/// Two-sided normal quantile for a central interval of probability `level`.
pub fn wald_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    Ok(normal_quantile(0.5 * (1.0 + level)))
}

pub fn wald_ci(theta0: &[f64], se: &[f64], level: f64) -> Result<Vec<(f64, f64)>> {
    if theta0.len() != se.len() {
        return Err(Error::DimensionMismatch {
            expected: theta0.len(),
            got: se.len(),
        });
    }
    let z = wald_z(level)?;
    Ok(theta0
        .iter()
        .zip(se)
        .map(|(t, s)| (t - z * s, t + z * s))
        .collect())
}

/// Settings for the truncation diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationConfig {
    /// Tail constant `C1`; the radius is `max(1, C1^(-1/3)) (3 ln n)^(1/3)`.
    pub c1: f64,
    /// Centre of the deviations; `None` uses the aggregated estimate.
    pub center: Option<Vec<f64>>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            center: None,
        }
    }
}

pub fn truncation_radius(n: usize, c1: f64) -> f64 {
    let cube3 = 3f64.cbrt();
    cube3.max(cube3 / c1.cbrt()) * (n as f64).ln().cbrt()
}

/// Returns `(delta_n, #groups with |n^(1/3)(theta_j - center)| > delta_n)`.
/// Diagnostic only; estimates are never truncated.
pub fn truncation_diagnostic(
    estimates: &[GroupEstimate],
    n: usize,
    config: &TruncationConfig,
) -> Result<(f64, usize)> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "truncation radius needs n >= 2".into(),
        ));
    }
    if !(config.c1 > 0.0) {
        return Err(Error::InvalidArgument("C1 must be positive".into()));
    }
    let center = match &config.center {
        Some(c) => c.clone(),
        None => aggregate(estimates)?,
    };
    let delta = truncation_radius(n, config.c1);
    let scale = (n as f64).cbrt();
    let mut exceed = 0;
    for e in estimates {
        if e.theta.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: e.theta.len(),
            });
        }
        let dist = e
            .theta
            .iter()
            .zip(&center)
            .map(|(t, c)| (scale * (t - c)).powi(2))
            .sum::<f64>()
            .sqrt();
        exceed += usize::from(dist > delta);
    }
    Ok((delta, exceed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub theta0: Vec<f64>,
    pub se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub ci: Vec<(f64, f64)>,
    pub level: f64,
    pub groups: usize,
    pub group_size: usize,
    pub delta_n: f64,
    pub truncation_exceed_count: usize,
}

impl AggregateReport {
    pub fn from_estimates(
        estimates: &[GroupEstimate],
        group_size: usize,
        level: f64,
        truncation: &TruncationConfig,
    ) -> Result<Self> {
        let theta0 = aggregate(estimates)?;
        let (se, cov) = se_hat(estimates)?;
        let ci = wald_ci(&theta0, &se, level)?;
        let (delta_n, truncation_exceed_count) =
            truncation_diagnostic(estimates, group_size, truncation)?;
        Ok(Self {
            theta0,
            se,
            cov,
            ci,
            level,
            groups: estimates.len(),
            group_size,
            delta_n,
            truncation_exceed_count,
        })
    }
}
