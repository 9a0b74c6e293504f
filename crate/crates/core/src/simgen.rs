//! Seeded generators for the three simulation designs.
//!
//! Every (replication, group) pair draws from its own ChaCha8 stream seeded
//! by [`derive_seed`], so results do not depend on scheduling. Normal
//! variates use the ziggurat sampler of `rand_distr::StandardNormal`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dac::GroupSource;
use crate::estimators::{RegressionSample, TreatmentSample};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    Location,
    MaxScore,
    ValueSearch,
}

impl Example {
    pub const ALL: [Example; 3] = [Example::Location, Example::MaxScore, Example::ValueSearch];

    pub fn name(self) -> &'static str {
        match self {
            Example::Location => "location",
            Example::MaxScore => "maxscore",
            Example::ValueSearch => "valuesearch",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Example::MaxScore => 2,
            _ => 1,
        }
    }

    /// Population maximizer of each design.
    pub fn truth(self) -> TruthSpec {
        let theta_true = match self {
            Example::Location => vec![0.0],
            // (1.5, -1.5) normalised onto the unit circle.
            Example::MaxScore => vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
            Example::ValueSearch => vec![2.0],
        };
        TruthSpec { theta_true }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown example '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    pub theta_true: Vec<f64>,
}

/// One Monte-Carlo cell: `reps` replications of `n_total` observations split into `groups`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDesign {
    pub example: Example,
    pub n_total: usize,
    pub groups: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub ci_level: f64,
    /// Noise standard deviation of the value search design.
    pub valuesearch_noise_sd: f64,
}

impl SimulationDesign {
    pub fn new(
        example: Example,
        n_total: usize,
        groups: usize,
        reps: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            example,
            n_total,
            groups,
            reps,
            master_seed,
            ci_level: 0.95,
            valuesearch_noise_sd: VALUESEARCH_NOISE_SD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.n_total < self.groups {
            return Err(Error::InvalidArgument(format!(
                "need N >= S >= 1, got N = {}, S = {}",
                self.n_total, self.groups
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ci level {} outside (0, 1)",
                self.ci_level
            )));
        }
        if !(self.valuesearch_noise_sd >= 0.0) {
            return Err(Error::InvalidArgument(
                "noise sd must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Observations per group, `floor(N / S)`.
    pub fn group_size(&self) -> usize {
        self.n_total / self.groups
    }
}

/// `e ~ N(0, 0.25)` is read as variance 0.25.
pub const VALUESEARCH_NOISE_SD: f64 = 0.5;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `rep`, group `group` under `master_seed`.
///
/// `splitmix64(master ^ splitmix64(rep << 32 | group))`. Both steps are
/// bijections of `u64`, so for a fixed master seed distinct
/// `(rep, group)` pairs with components below `2^32` never collide.
/// Frozen: changing this changes every simulated number.
pub fn derive_seed(master_seed: u64, rep: u64, group: u64) -> u64 {
    let packed = (rep << 32) | (group & 0xFFFF_FFFF);
    splitmix64(master_seed ^ splitmix64(packed))
}

pub fn stream_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n` i.i.d. standard normal draws.
#[derive(Debug, Clone)]
pub struct LocationStream {
    rng: ChaCha8Rng,
    remaining: usize,
}

impl Iterator for LocationStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(normal(&mut self.rng))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for LocationStream {}

pub fn gen_location(n: usize, seed: u64) -> LocationStream {
    LocationStream {
        rng: stream_rng(seed),
        remaining: n,
    }
}

/// `Y = 1.5 X1 - 1.5 X2 + 0.5 e` with `X1, X2, e` standard normal, drawn in that order.
#[derive(Debug, Clone)]
pub struct MaxScoreStream {
    rng: ChaCha8Rng,
    remaining: usize,
}

impl Iterator for MaxScoreStream {
    type Item = RegressionSample;

    fn next(&mut self) -> Option<RegressionSample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let x1 = normal(&mut self.rng);
        let x2 = normal(&mut self.rng);
        let e = normal(&mut self.rng);
        Some(RegressionSample::new(
            vec![x1, x2],
            1.5 * x1 - 1.5 * x2 + 0.5 * e,
        ))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for MaxScoreStream {}

pub fn gen_maxscore(n: usize, seed: u64) -> MaxScoreStream {
    MaxScoreStream {
        rng: stream_rng(seed),
        remaining: n,
    }
}

/// `Y = 1 + A (2X - 1) + e`, `X ~ N(0, 1)`, `A ~ Bernoulli(1/2)`, `e ~ N(0, noise_sd^2)`, `pi = 1/2`.
///
/// Draw order per sample: `X`, one 64-bit word whose top bit is `A`, then `e`.
#[derive(Debug, Clone)]
pub struct ValueSearchStream {
    rng: ChaCha8Rng,
    remaining: usize,
    noise_sd: f64,
}

impl Iterator for ValueSearchStream {
    type Item = TreatmentSample;

    fn next(&mut self) -> Option<TreatmentSample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let x = normal(&mut self.rng);
        let a = (self.rng.next_u64() >> 63) as u8;
        let e = normal(&mut self.rng);
        let y = 1.0 + f64::from(a) * (2.0 * x - 1.0) + self.noise_sd * e;
        Some(TreatmentSample::new(vec![x], a, y, 0.5))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for ValueSearchStream {}

pub fn gen_valuesearch(n: usize, seed: u64) -> ValueSearchStream {
    gen_valuesearch_with_noise(n, seed, VALUESEARCH_NOISE_SD)
}

pub fn gen_valuesearch_with_noise(n: usize, seed: u64, noise_sd: f64) -> ValueSearchStream {
    ValueSearchStream {
        rng: stream_rng(seed),
        remaining: n,
        noise_sd,
    }
}

/// Simulated data for one replication: group `j` is drawn from
/// `derive_seed(master, rep, j)`.
#[derive(Debug, Clone, Copy)]
pub struct SimSource {
    pub master_seed: u64,
    pub rep: u64,
    pub valuesearch_noise_sd: f64,
}

impl SimSource {
    pub fn new(master_seed: u64, rep: u64) -> Self {
        Self {
            master_seed,
            rep,
            valuesearch_noise_sd: VALUESEARCH_NOISE_SD,
        }
    }

    fn seed(&self, group: usize) -> u64 {
        derive_seed(self.master_seed, self.rep, group as u64)
    }
}

impl GroupSource<f64> for SimSource {
    fn block(&self, group: usize, n: usize) -> Result<Vec<f64>> {
        Ok(gen_location(n, self.seed(group)).collect())
    }
}

impl GroupSource<RegressionSample> for SimSource {
    fn block(&self, group: usize, n: usize) -> Result<Vec<RegressionSample>> {
        Ok(gen_maxscore(n, self.seed(group)).collect())
    }
}

impl GroupSource<TreatmentSample> for SimSource {
    fn block(&self, group: usize, n: usize) -> Result<Vec<TreatmentSample>> {
        Ok(gen_valuesearch_with_noise(n, self.seed(group), self.valuesearch_noise_sd).collect())
    }
}
