//! Monte-Carlo experiments: table cells, rate regressions, normality and
//! tail diagnostics.
//!
//! Replications run in parallel, each with seeds derived from
//! `(master seed, replication, group)`; all reductions walk the
//! replications in index order, so output is identical for any thread count.

mod table;

use std::time::Instant;

use rayon::prelude::*;

use crate::dac::{
    run_groups, run_groups_serial, AggregateReport, GroupEstimate, GroupSource, TruncationConfig,
};
use crate::estimators::{LocationEstimator, MEstimator, MaxScoreEstimator, ValueSearchEstimator};
use crate::simgen::{derive_seed, Example, SimSource, SimulationDesign, TruthSpec};
use crate::stats::{ks_statistic_normal, linear_fit, mean, sample_sd, skewness_kurtosis};
use crate::{Error, Result};

pub use table::{read_table, write_table, MonteCarloTable, TableRow, CSV_HEADER};

/// Outcome of one replication of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub theta0: Vec<f64>,
    pub se: Vec<f64>,
    /// Per coordinate: did the Wald interval contain the truth.
    pub covers: Vec<bool>,
    pub pooled: Option<Vec<f64>>,
    pub truncation_exceed_count: usize,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub table: MonteCarloTable,
    pub replications: Vec<Replication>,
}

impl CellOutcome {
    /// Aggregated estimates of coordinate `k` across replications.
    pub fn theta0_coordinate(&self, k: usize) -> Vec<f64> {
        self.replications.iter().map(|r| r.theta0[k]).collect()
    }

    pub fn pooled_coordinate(&self, k: usize) -> Option<Vec<f64>> {
        self.replications
            .iter()
            .map(|r| r.pooled.as_ref().map(|p| p[k]))
            .collect()
    }
}

fn replicate<E>(
    design: &SimulationDesign,
    estimator: &E,
    truth: &TruthSpec,
    include_pooled: bool,
    rep: usize,
    nested_parallel: bool,
) -> Result<Replication>
where
    E: MEstimator,
    E::Sample: Clone,
    SimSource: GroupSource<E::Sample>,
{
    let source = SimSource {
        valuesearch_noise_sd: design.valuesearch_noise_sd,
        ..SimSource::new(design.master_seed, rep as u64)
    };
    let n = design.group_size();
    let s = design.groups;
    let (groups, pooled) = if include_pooled {
        let mut all = Vec::with_capacity(n * s);
        let mut groups = Vec::with_capacity(s);
        for j in 0..s {
            let block = source.block(j, n)?;
            let fit = estimator.fit(&block).map_err(|e| e.in_group(j))?;
            groups.push(GroupEstimate {
                group_index: j,
                theta: fit.theta,
                objective_value: fit.objective,
                group_size: n,
            });
            all.extend(block);
        }
        (groups, Some(estimator.fit(&all)?.theta))
    } else if nested_parallel {
        (run_groups(&source, estimator, s, n)?, None)
    } else {
        (run_groups_serial(&source, estimator, s, n)?, None)
    };
    let report =
        AggregateReport::from_estimates(&groups, n, design.ci_level, &TruncationConfig::default())?;
    let covers = report
        .ci
        .iter()
        .zip(&truth.theta_true)
        .map(|((lo, hi), t)| lo <= t && t <= hi)
        .collect();
    Ok(Replication {
        theta0: report.theta0,
        se: report.se,
        covers,
        pooled,
        truncation_exceed_count: report.truncation_exceed_count,
    })
}

fn simulate_with<E>(
    design: &SimulationDesign,
    estimator: &E,
    truth: &TruthSpec,
    include_pooled: bool,
) -> Result<Vec<Replication>>
where
    E: MEstimator,
    E::Sample: Clone,
    SimSource: GroupSource<E::Sample>,
{
    let nested = design.reps < rayon::current_num_threads();
    (0..design.reps)
        .into_par_iter()
        .map(|rep| {
            replicate(design, estimator, truth, include_pooled, rep, nested)
                .map_err(|e| e.in_replication(rep))
        })
        .collect()
}

fn check_design(design: &SimulationDesign, truth: &TruthSpec) -> Result<()> {
    design.validate()?;
    if design.groups < 2 {
        return Err(Error::TooFewGroups);
    }
    if truth.theta_true.len() != design.example.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.example.dim(),
            got: truth.theta_true.len(),
        });
    }
    Ok(())
}

/// Runs every replication of `design` and returns the raw outcomes.
pub fn simulate_cell(
    design: &SimulationDesign,
    truth: &TruthSpec,
    include_pooled: bool,
) -> Result<Vec<Replication>> {
    check_design(design, truth)?;
    match design.example {
        Example::Location => simulate_with(design, &LocationEstimator, truth, include_pooled),
        Example::MaxScore => {
            simulate_with(design, &MaxScoreEstimator::new(2), truth, include_pooled)
        }
        Example::ValueSearch => simulate_with(
            design,
            &ValueSearchEstimator::default(),
            truth,
            include_pooled,
        ),
    }
}

/// Bias, SD, mean SE and coverage per coordinate for one design cell.
///
/// Coverage and SD come from the same replications.
pub fn run_cell(
    design: &SimulationDesign,
    truth: &TruthSpec,
    include_pooled: bool,
) -> Result<CellOutcome> {
    let start = Instant::now();
    let replications = simulate_cell(design, truth, include_pooled)?;
    let runtime = start.elapsed().as_secs_f64();
    let reps = replications.len() as f64;
    let rows = truth
        .theta_true
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let est: Vec<f64> = replications.iter().map(|r| r.theta0[k]).collect();
            let se: Vec<f64> = replications.iter().map(|r| r.se[k]).collect();
            let covered = replications.iter().filter(|r| r.covers[k]).count() as f64;
            let pooled: Option<Vec<f64>> = replications
                .iter()
                .map(|r| r.pooled.as_ref().map(|p| p[k]))
                .collect();
            TableRow {
                example: design.example,
                n_total: design.n_total,
                groups: design.groups,
                reps: design.reps,
                coord: k + 1,
                bias: mean(&est) - t,
                sd: sample_sd(&est),
                se_mean: mean(&se),
                cp: covered / reps,
                pooled_bias: pooled.as_ref().map(|p| mean(p) - t),
                pooled_sd: pooled.as_ref().map(|p| sample_sd(p)),
                reps_used: replications.len(),
                runtime_s: Some(runtime),
            }
        })
        .collect();
    Ok(CellOutcome {
        table: MonteCarloTable { rows },
        replications,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateAxis {
    /// SD of the aggregate against group size `n` at fixed `S`.
    GroupSize,
    /// SD of the aggregate against `S` at fixed `n`.
    GroupCount,
    /// SD of the pooled estimator against total size `N = S n`.
    PooledTotal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub example: Example,
    pub axis: RateAxis,
    pub grid: Vec<usize>,
    pub sds: Vec<f64>,
    /// Least-squares slope of `ln sd` on `ln grid`.
    pub slope: f64,
    pub r2: f64,
    /// Summary rows of every grid cell.
    pub table: MonteCarloTable,
}

pub const MIN_RATE_GRID: usize = 4;
pub const MIN_RATE_REPS: usize = 300;

fn rate_report(
    example: Example,
    axis: RateAxis,
    grid: Vec<usize>,
    sds: Vec<f64>,
    table: MonteCarloTable,
) -> Result<RateReport> {
    let lx: Vec<f64> = grid.iter().map(|&g| (g as f64).ln()).collect();
    let ly: Vec<f64> = sds.iter().map(|s| s.ln()).collect();
    if ly.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!(
            "zero SD on the rate grid {grid:?}"
        )));
    }
    let (slope, _, r2) = linear_fit(&lx, &ly)?;
    Ok(RateReport {
        example,
        axis,
        grid,
        sds,
        slope,
        r2,
        table,
    })
}

fn check_rate_grid(grid: &[usize], reps: usize) -> Result<()> {
    let mut distinct = grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < MIN_RATE_GRID {
        return Err(Error::InvalidArgument(format!(
            "rate grid needs at least {MIN_RATE_GRID} distinct sizes, got {grid:?}"
        )));
    }
    if reps < MIN_RATE_REPS {
        return Err(Error::InvalidArgument(format!(
            "rate check needs at least {MIN_RATE_REPS} reps, got {reps}"
        )));
    }
    Ok(())
}

fn cell_seed(master: u64, cell: usize) -> u64 {
    derive_seed(master, cell as u64, 0xFFFF_FFFF)
}

/// Slope of `ln SD(theta_0_hat)` against `ln n` at a fixed number of groups,
/// on the first coordinate. With `include_pooled` the pooled estimator on
/// the same replications gives a second report against `ln N`.
pub fn rate_vs_group_size(
    example: Example,
    groups: usize,
    n_grid: &[usize],
    reps: usize,
    master_seed: u64,
    include_pooled: bool,
) -> Result<(RateReport, Option<RateReport>)> {
    check_rate_grid(n_grid, reps)?;
    let truth = example.truth();
    let mut table = MonteCarloTable::default();
    let mut sds = Vec::with_capacity(n_grid.len());
    let mut pooled_sds = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let design =
            SimulationDesign::new(example, n * groups, groups, reps, cell_seed(master_seed, i));
        let out = run_cell(&design, &truth, include_pooled)?;
        sds.push(out.table.rows[0].sd);
        if let Some(p) = out.table.rows[0].pooled_sd {
            pooled_sds.push(p);
        }
        table.extend(out.table);
    }
    let aggregated = rate_report(
        example,
        RateAxis::GroupSize,
        n_grid.to_vec(),
        sds,
        table.clone(),
    )?;
    let pooled = if include_pooled {
        let totals = n_grid.iter().map(|n| n * groups).collect();
        Some(rate_report(
            example,
            RateAxis::PooledTotal,
            totals,
            pooled_sds,
            table,
        )?)
    } else {
        None
    };
    Ok((aggregated, pooled))
}

/// Slope of `ln SD(theta_0_hat)` against `ln S` at a fixed group size.
pub fn rate_vs_group_count(
    example: Example,
    n: usize,
    s_grid: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<RateReport> {
    check_rate_grid(s_grid, reps)?;
    let truth = example.truth();
    let mut table = MonteCarloTable::default();
    let mut sds = Vec::with_capacity(s_grid.len());
    for (i, &s) in s_grid.iter().enumerate() {
        let design = SimulationDesign::new(example, n * s, s, reps, cell_seed(master_seed, i));
        let out = run_cell(&design, &truth, false)?;
        sds.push(out.table.rows[0].sd);
        table.extend(out.table);
    }
    rate_report(example, RateAxis::GroupCount, s_grid.to_vec(), sds, table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub samples: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-Smirnov distance of the standardized samples from `N(0, 1)`.
    pub ks: f64,
}

pub const MIN_NORMALITY_SAMPLES: usize = 500;

/// Moments and KS distance of samples standardized by their own mean and SD.
pub fn normality_check(samples: &[f64]) -> Result<NormalityReport> {
    if samples.len() < MIN_NORMALITY_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "normality check needs at least {MIN_NORMALITY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let m = mean(samples);
    let sd = sample_sd(samples);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    let z: Vec<f64> = samples.iter().map(|x| (x - m) / sd).collect();
    let (skewness, excess_kurtosis) = skewness_kurtosis(&z)?;
    Ok(NormalityReport {
        samples: samples.len(),
        skewness,
        excess_kurtosis,
        ks: ks_statistic_normal(&z),
    })
}

/// Survival points with fewer exceedances than this are left out of the fit.
pub const TAIL_MIN_COUNT: usize = 10;
pub const MIN_TAIL_REPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub group_size: usize,
    /// Sorted scaled deviations `|n^(1/3)(theta_hat - theta_0)|`.
    pub norms: Vec<f64>,
    pub xs: Vec<f64>,
    pub survival: Vec<f64>,
    /// Slope and fit of `ln survival` on `x^3` over points with at least
    /// [`TAIL_MIN_COUNT`] exceedances.
    pub slope_vs_cube: f64,
    pub r2: f64,
    pub fitted_points: usize,
    pub monotone: bool,
}

impl TailReport {
    /// Empirical `P(|h| >= x)`.
    pub fn survival_at(&self, x: f64) -> f64 {
        let below = self.norms.partition_point(|&v| v < x);
        (self.norms.len() - below) as f64 / self.norms.len() as f64
    }
}

fn single_group_norms<E>(
    estimator: &E,
    n: usize,
    reps: usize,
    seed: u64,
    truth: &[f64],
) -> Result<Vec<f64>>
where
    E: MEstimator,
    SimSource: GroupSource<E::Sample>,
{
    let scale = (n as f64).cbrt();
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = SimSource::new(seed, rep as u64).block(0, n)?;
            let fit = estimator.fit(&data).map_err(|e| e.in_replication(rep))?;
            Ok(fit
                .theta
                .iter()
                .zip(truth)
                .map(|(t, t0)| (scale * (t - t0)).powi(2))
                .sum::<f64>()
                .sqrt())
        })
        .collect()
}

/// Empirical tail of a single group's scaled deviation on `x = 1, 1.5, ..., 5`.
pub fn tail_check(example: Example, n: usize, reps: usize, seed: u64) -> Result<TailReport> {
    if reps < MIN_TAIL_REPS {
        return Err(Error::InvalidArgument(format!(
            "tail check needs at least {MIN_TAIL_REPS} reps, got {reps}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("group size must be positive".into()));
    }
    let truth = example.truth().theta_true;
    let mut norms = match example {
        Example::Location => single_group_norms(&LocationEstimator, n, reps, seed, &truth)?,
        Example::MaxScore => single_group_norms(&MaxScoreEstimator::new(2), n, reps, seed, &truth)?,
        Example::ValueSearch => {
            single_group_norms(&ValueSearchEstimator::default(), n, reps, seed, &truth)?
        }
    };
    norms.sort_unstable_by(f64::total_cmp);
    let mut report = TailReport {
        group_size: n,
        norms,
        xs: (0..=8).map(|i| 1.0 + 0.5 * i as f64).collect(),
        survival: Vec::new(),
        slope_vs_cube: f64::NAN,
        r2: f64::NAN,
        fitted_points: 0,
        monotone: true,
    };
    report.survival = report.xs.iter().map(|&x| report.survival_at(x)).collect();
    report.monotone = report.survival.windows(2).all(|w| w[1] <= w[0]);
    let min_survival = TAIL_MIN_COUNT as f64 / reps as f64;
    let (cubes, logs): (Vec<f64>, Vec<f64>) = report
        .xs
        .iter()
        .zip(&report.survival)
        .filter(|(_, &s)| s >= min_survival)
        .map(|(x, s)| (x.powi(3), s.ln()))
        .unzip();
    report.fitted_points = cubes.len();
    if cubes.len() >= 3 {
        let (slope, _, r2) = linear_fit(&cubes, &logs)?;
        report.slope_vs_cube = slope;
        report.r2 = r2;
    }
    Ok(report)
}
