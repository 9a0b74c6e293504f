//! Maximum score estimation on the unit sphere.
//!
//! In two dimensions `beta = (cos phi, sin phi)` and each score indicator is
//! an arc of angles, so the exact maximizer comes from one sweep over
//! `[-pi, pi]`. For `d >= 3` a coordinate-plane ascent reuses the same
//! angular sweep; it never decreases the score but is not guaranteed to
//! reach the global maximum.

use std::f64::consts::{FRAC_PI_2, PI};

use super::sweep::{sweep_max, SweepResult, WeightedInterval};
use super::{Fit, MEstimator};
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl RegressionSample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dimension(data: &[RegressionSample], d: usize) -> Result<()> {
    for s in data {
        if s.x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.x.len(),
            });
        }
        if !s.y.is_finite() || s.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(format!("sample {s:?}")));
        }
    }
    Ok(())
}

/// Score `sum_i [1{y_i >= 0, x_i'beta >= 0} + 1{y_i < 0, x_i'beta < 0}]`.
pub fn maxscore_objective(data: &[RegressionSample], beta: &[f64]) -> Result<usize> {
    let nb = norm(beta);
    if !((nb - 1.0).abs() <= UNIT_TOLERANCE) {
        return Err(Error::NotUnitVector(nb));
    }
    check_dimension(data, beta.len())?;
    Ok(data
        .iter()
        .filter(|s| {
            let index = dot(&s.x, beta);
            if s.y >= 0.0 {
                index >= 0.0
            } else {
                index < 0.0
            }
        })
        .count())
}

/// Arcs of `phi` on which each sample scores, split so they lie in `[-pi, pi]`.
///
/// Returns the arcs together with the number of samples whose score does not
/// depend on `phi` (those with `x = 0` and `y >= 0`).
pub fn maxscore_arcs(data: &[RegressionSample]) -> Result<(Vec<WeightedInterval>, usize)> {
    check_dimension(data, 2)?;
    let mut arcs = Vec::with_capacity(2 * data.len());
    let mut constant = 0;
    for s in data {
        let (x1, x2) = (s.x[0], s.x[1]);
        if x1 == 0.0 && x2 == 0.0 {
            constant += usize::from(s.y >= 0.0);
            continue;
        }
        let alpha = x2.atan2(x1);
        // x'beta = |x| cos(phi - alpha): nonnegative on the closed half circle
        // centred at alpha, negative on the open opposite half.
        let (start, closed) = if s.y >= 0.0 {
            (alpha - FRAC_PI_2, true)
        } else {
            (alpha + FRAC_PI_2, false)
        };
        push_arc(&mut arcs, start, closed);
    }
    Ok((arcs, constant))
}

fn push_arc(arcs: &mut Vec<WeightedInterval>, start: f64, closed: bool) {
    let mut s = start;
    if s < -PI {
        s += 2.0 * PI;
    } else if s >= PI {
        s -= 2.0 * PI;
    }
    let e = s + PI;
    if e < PI || (e == PI && !closed) {
        arcs.push(WeightedInterval::new(s, closed, e, closed, 1.0));
    } else {
        arcs.push(WeightedInterval::new(s, closed, PI, true, 1.0));
        arcs.push(WeightedInterval::new(-PI, true, e - 2.0 * PI, closed, 1.0));
    }
    if s == -PI && closed {
        // The angle -pi is also the angle pi.
        arcs.push(WeightedInterval::closed(PI, PI, 1.0));
    }
}

fn angular_sweep(data: &[RegressionSample]) -> Result<(SweepResult, usize)> {
    if data.is_empty() {
        return Err(Error::EmptyInput("maximum score sample"));
    }
    let (arcs, constant) = maxscore_arcs(data)?;
    Ok((sweep_max(&arcs, (-PI, PI))?, constant))
}

/// Exact maximum score estimate for two regressors.
///
/// Ties go to the angular midpoint of the first maximizing arc counted from
/// `-pi`; arcs that wrap through `pi` are split there.
pub fn estimate_maxscore_2d(data: &[RegressionSample]) -> Result<[f64; 2]> {
    let (r, _) = angular_sweep(data)?;
    let phi = r.representative;
    Ok([phi.cos(), phi.sin()])
}

fn gram_schmidt_complement(beta: &[f64]) -> Vec<Vec<f64>> {
    let d = beta.len();
    let mut basis: Vec<Vec<f64>> = vec![beta.to_vec()];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for u in &basis {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= p * ui);
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|vi| *vi /= nv);
            basis.push(v);
        }
    }
    basis.split_off(1)
}

/// Complement columns followed by their pairwise diagonals.
fn search_directions(beta: &[f64]) -> Vec<Vec<f64>> {
    let mut dirs = gram_schmidt_complement(beta);
    let k = dirs.len();
    for i in 0..k {
        for j in i + 1..k {
            for sign in [1.0, -1.0] {
                let v: Vec<f64> = dirs[i]
                    .iter()
                    .zip(&dirs[j])
                    .map(|(a, b)| (a + sign * b) / 2f64.sqrt())
                    .collect();
                dirs.push(v);
            }
        }
    }
    dirs
}

/// Heuristic maximum score estimate for `d >= 3`.
///
/// Starting from `beta_init`, repeatedly solves the exact angular problem in
/// the plane spanned by the current estimate and one search direction,
/// accepting strict improvements. The directions are a Gram-Schmidt
/// complement `U` of `beta_init` plus the diagonals `(u_j +- u_k)/sqrt 2`.
/// Stops after a round without improvement or after `max_rounds` rounds. The returned score is
/// never below the score of `beta_init`.
pub fn estimate_maxscore_highd(
    data: &[RegressionSample],
    beta_init: &[f64],
    max_rounds: usize,
) -> Result<Vec<f64>> {
    let d = beta_init.len();
    if d < 3 {
        return Err(Error::InvalidArgument(format!(
            "dimension {d} < 3: use estimate_maxscore_2d for exact two-dimensional estimates"
        )));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidArgument(
            "max_rounds must be at least 1".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("maximum score sample"));
    }
    let mut beta = beta_init.to_vec();
    let mut best = maxscore_objective(data, &beta)?;
    let directions = search_directions(&beta);
    let mut plane = Vec::with_capacity(data.len());

    for _ in 0..max_rounds {
        let mut improved = false;
        for u0 in &directions {
            let mut u = u0.clone();
            let p = dot(&u, &beta);
            u.iter_mut().zip(&beta).for_each(|(ui, bi)| *ui -= p * bi);
            let nu = norm(&u);
            if nu < 1e-12 {
                continue;
            }
            u.iter_mut().for_each(|ui| *ui /= nu);

            plane.clear();
            plane.extend(
                data.iter()
                    .map(|s| RegressionSample::new(vec![dot(&s.x, &beta), dot(&s.x, &u)], s.y)),
            );
            let [c, sn] = estimate_maxscore_2d(&plane)?;
            let mut candidate: Vec<f64> =
                beta.iter().zip(&u).map(|(b, ui)| c * b + sn * ui).collect();
            let nc = norm(&candidate);
            candidate.iter_mut().for_each(|v| *v /= nc);
            let score = maxscore_objective(data, &candidate)?;
            if score > best {
                best = score;
                beta = candidate;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(beta)
}

/// Maximum score estimator for the divide-and-conquer pipeline.
///
/// Two-dimensional data are solved exactly; higher dimensions use
/// [`estimate_maxscore_highd`] from `beta_init` (default: the first axis).
#[derive(Debug, Clone)]
pub struct MaxScoreEstimator {
    pub dim: usize,
    pub beta_init: Option<Vec<f64>>,
    pub max_rounds: usize,
}

impl MaxScoreEstimator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            beta_init: None,
            max_rounds: 50,
        }
    }
}

impl MEstimator for MaxScoreEstimator {
    type Sample = RegressionSample;

    fn dim(&self) -> usize {
        self.dim
    }

    fn fit(&self, data: &[RegressionSample]) -> Result<Fit> {
        let theta = if self.dim == 2 {
            estimate_maxscore_2d(data)?.to_vec()
        } else {
            let init = self.beta_init.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; self.dim];
                e[0] = 1.0;
                e
            });
            estimate_maxscore_highd(data, &init, self.max_rounds)?
        };
        let score = maxscore_objective(data, &theta)?;
        Ok(Fit {
            theta,
            objective: score as f64 / data.len() as f64,
        })
    }
}
