//! Exact maximization of a weighted sum of interval indicators.
//!
//! Every objective in this crate reduces to
//! `f(t) = sum_i w_i * 1{t in I_i}` over a compact range, where each `I_i`
//! is an interval whose endpoints are individually open or closed. The
//! sweep sorts the distinct endpoints once and evaluates `f` on every
//! elementary piece (each endpoint and each open gap between consecutive
//! endpoints), so the maximum and the full maximizing set are exact.

use std::cmp::Ordering;

use crate::{Error, Result};

/// Endpoints closer than this are treated as one breakpoint.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Relative tolerance (against `sum |w|`) used to recognise equal piece values.
const TIE_RELATIVE: f64 = 1e-12;

/// One summand `weight * 1{t in [lo, hi]}` with per-endpoint open/closed flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedInterval {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl WeightedInterval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool, weight: f64) -> Self {
        Self {
            lo,
            hi,
            weight,
            lo_closed,
            hi_closed,
        }
    }

    /// `weight * 1{lo <= t <= hi}`.
    pub fn closed(lo: f64, hi: f64, weight: f64) -> Self {
        Self::new(lo, true, hi, true, weight)
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed {
            t >= self.lo
        } else {
            t > self.lo
        };
        let below = if self.hi_closed {
            t <= self.hi
        } else {
            t < self.hi
        };
        above && below
    }

    fn is_empty(&self) -> bool {
        match self.lo.partial_cmp(&self.hi) {
            Some(Ordering::Less) => false,
            Some(Ordering::Equal) => !(self.lo_closed && self.hi_closed),
            _ => true,
        }
    }
}

/// A maximal interval of the argmax set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed {
            t >= self.lo
        } else {
            t > self.lo
        };
        let below = if self.hi_closed {
            t <= self.hi
        } else {
            t < self.hi
        };
        above && below
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Midpoint, or the point itself for a degenerate segment.
    pub fn midpoint(&self) -> f64 {
        if self.is_degenerate() {
            self.lo
        } else {
            self.lo + 0.5 * (self.hi - self.lo)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub max_value: f64,
    /// Disjoint, sorted, non-empty.
    pub maximizing_set: Vec<Segment>,
    /// Midpoint of the first segment of `maximizing_set`.
    pub representative: f64,
}

/// Direct evaluation of `sum_i w_i * 1{t in I_i}` in input order.
pub fn evaluate(intervals: &[WeightedInterval], t: f64) -> f64 {
    intervals
        .iter()
        .filter(|iv| iv.contains(t))
        .map(|iv| iv.weight)
        .sum()
}

/// Exact global maximum of the step function over the closed range `bounds`.
pub fn sweep_max(intervals: &[WeightedInterval], bounds: (f64, f64)) -> Result<SweepResult> {
    let (blo, bhi) = bounds;
    if blo.is_nan() || bhi.is_nan() {
        return Err(Error::NonFiniteInput("bounds contain NaN".into()));
    }
    if !(blo.is_finite() && bhi.is_finite()) {
        return Err(Error::NonFiniteInput("bounds must be finite".into()));
    }
    if !(bhi - blo > MERGE_TOLERANCE) {
        return Err(Error::EmptyDomain(format!(
            "bounds [{blo}, {bhi}] contain no interior"
        )));
    }

    let mut kept = Vec::with_capacity(intervals.len());
    for (i, iv) in intervals.iter().enumerate() {
        if iv.lo.is_nan() || iv.hi.is_nan() || !iv.weight.is_finite() {
            return Err(Error::NonFiniteInput(format!("interval {i}: {iv:?}")));
        }
        if iv.weight == 0.0 {
            continue;
        }
        let mut c = *iv;
        if c.lo < blo {
            c.lo = blo;
            c.lo_closed = true;
        }
        if c.hi > bhi {
            c.hi = bhi;
            c.hi_closed = true;
        }
        if !c.is_empty() {
            kept.push(c);
        }
    }

    let breaks = breakpoints(&kept, blo, bhi);
    let m = breaks.len();
    if m < 2 {
        return Err(Error::EmptyDomain(
            "bounds collapse to a single breakpoint".into(),
        ));
    }
    let index_of = |p: f64| breaks.partition_point(|&b| b <= p).saturating_sub(1);

    // Difference arrays over points 0..m and gaps 0..m-1 (gap k is (b_k, b_{k+1})).
    let mut point_diff = vec![0.0; m + 1];
    let mut point_extra = vec![0.0; m];
    let mut gap_diff = vec![0.0; m];
    let mut scale = 0.0;
    for iv in &kept {
        let a = index_of(iv.lo);
        let b = index_of(iv.hi);
        let w = iv.weight;
        scale += w.abs();
        if a == b {
            if iv.lo_closed && iv.hi_closed {
                point_extra[a] += w;
            }
            continue;
        }
        gap_diff[a] += w;
        gap_diff[b] -= w;
        point_diff[a + 1] += w;
        point_diff[b] -= w;
        if iv.lo_closed {
            point_extra[a] += w;
        }
        if iv.hi_closed {
            point_extra[b] += w;
        }
    }

    // Piece 2k is point k, piece 2k+1 is gap k.
    let mut values = Vec::with_capacity(2 * m - 1);
    let (mut inner, mut gap) = (0.0, 0.0);
    for k in 0..m {
        inner += point_diff[k];
        values.push(inner + point_extra[k]);
        if k + 1 < m {
            gap += gap_diff[k];
            values.push(gap);
        }
    }

    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_RELATIVE * scale;
    let is_max = |v: f64| v >= best - tol;

    let mut segments = Vec::new();
    let mut piece = 0;
    while piece < values.len() {
        if !is_max(values[piece]) {
            piece += 1;
            continue;
        }
        let start = piece;
        while piece + 1 < values.len() && is_max(values[piece + 1]) {
            piece += 1;
        }
        segments.push(segment_of(&breaks, start, piece));
        piece += 1;
    }

    let representative = segments[0].midpoint();
    Ok(SweepResult {
        max_value: evaluate(&kept, representative),
        maximizing_set: segments,
        representative,
    })
}

/// Sorted distinct breakpoints including the bounds, merged within
/// [`MERGE_TOLERANCE`]; each cluster is represented by its smallest member.
fn breakpoints(kept: &[WeightedInterval], blo: f64, bhi: f64) -> Vec<f64> {
    let mut raw = Vec::with_capacity(2 * kept.len() + 2);
    raw.push(blo);
    raw.push(bhi);
    for iv in kept {
        raw.push(iv.lo);
        raw.push(iv.hi);
    }
    raw.sort_unstable_by(f64::total_cmp);
    let mut breaks: Vec<f64> = Vec::with_capacity(raw.len());
    for p in raw {
        match breaks.last() {
            Some(&rep) if p - rep <= MERGE_TOLERANCE => {}
            _ => breaks.push(p),
        }
    }
    breaks
}

fn segment_of(breaks: &[f64], first_piece: usize, last_piece: usize) -> Segment {
    // Even pieces are points (closed), odd pieces are gaps (open at both ends).
    let (lo, lo_closed) = if first_piece.is_multiple_of(2) {
        (breaks[first_piece / 2], true)
    } else {
        (breaks[first_piece / 2], false)
    };
    let (hi, hi_closed) = if last_piece.is_multiple_of(2) {
        (breaks[last_piece / 2], true)
    } else {
        (breaks[last_piece / 2 + 1], false)
    };
    Segment {
        lo,
        lo_closed,
        hi,
        hi_closed,
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Brute-force maximum over every breakpoint, points just either side of
    /// it, and a uniform grid. Independent of the sweep's bookkeeping.
    pub fn grid_max(
        intervals: &[WeightedInterval],
        bounds: (f64, f64),
        grid: usize,
    ) -> (f64, Vec<f64>) {
        let mut probes = Vec::new();
        for k in 0..=grid {
            probes.push(bounds.0 + (bounds.1 - bounds.0) * k as f64 / grid as f64);
        }
        for iv in intervals {
            for p in [iv.lo, iv.hi] {
                if p.is_finite() {
                    probes.extend([p, p - 1e-9, p + 1e-9]);
                }
            }
        }
        probes.retain(|&t| t >= bounds.0 && t <= bounds.1);
        let best = probes
            .iter()
            .map(|&t| evaluate(intervals, t))
            .fold(f64::NEG_INFINITY, f64::max);
        let argmax = probes
            .into_iter()
            .filter(|&t| evaluate(intervals, t) == best)
            .collect();
        (best, argmax)
    }
}
