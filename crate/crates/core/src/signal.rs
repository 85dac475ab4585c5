// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ground-truth piecewise constant functions and their ideal sampling.
//!
//! A function with `m` regions takes value `g_i` on
//! `[R_1 + ... + R_{i-1}, R_1 + ... + R_i)` and zero elsewhere. Region
//! membership uses these half-open intervals, so a sample landing exactly
//! on a discontinuity takes the value of the region to its right. Sample
//! times within `SNAP_TOLERANCE * T` of a breakpoint are treated as lying
//! on it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative distance (in units of `T`) under which a sample time is
/// snapped onto a breakpoint.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// Tolerance used when deciding whether a real number is an integer.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantFunction {
    levels: Vec<f64>,
    region_lengths: Vec<f64>,
    sampling_interval: f64,
}

impl PiecewiseConstantFunction {
    /// Builds a function from absolute region lengths.
    ///
    /// Only structural problems (empty input, mismatched lengths,
    /// non-finite or non-positive durations) are rejected here; the
    /// modelling assumptions are reported by [`validate_function`].
    pub fn new(levels: Vec<f64>, region_lengths: Vec<f64>, sampling_interval: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidFunction("no regions".into()));
        }
        if levels.len() != region_lengths.len() {
            return Err(Error::LengthMismatch {
                left: levels.len(),
                right: region_lengths.len(),
            });
        }
        if !(sampling_interval.is_finite() && sampling_interval > 0.0) {
            return Err(Error::InvalidFunction(format!(
                "sampling interval must be positive, got {sampling_interval}"
            )));
        }
        if let Some(i) = levels.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidFunction(format!("level {} is not finite", i + 1)));
        }
        if let Some(i) = region_lengths.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidFunction(format!(
                "region {} must have a positive finite length",
                i + 1
            )));
        }
        Ok(Self {
            levels,
            region_lengths,
            sampling_interval,
        })
    }

    /// Builds a function whose region lengths are given as multiples of `T`.
    pub fn from_lengths_in_t(levels: Vec<f64>, lengths_in_t: &[f64], sampling_interval: f64) -> Result<Self> {
        let lengths = lengths_in_t.iter().map(|r| r * sampling_interval).collect();
        Self::new(levels, lengths, sampling_interval)
    }

    /// The four-region function `1, -1, 1, -1` with lengths
    /// `1.3T, 1.45T, 1.35T, 1.3T` and `T = 1`, used throughout the worked
    /// example.
    pub fn two_pulse_example() -> Self {
        Self::from_lengths_in_t(vec![1.0, -1.0, 1.0, -1.0], &[1.3, 1.45, 1.35, 1.3], 1.0)
            .expect("example function is well formed")
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn region_lengths(&self) -> &[f64] {
        &self.region_lengths
    }

    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    /// Number of regions `m` in the support.
    pub fn region_count(&self) -> usize {
        self.levels.len()
    }

    /// `g_i` for `i` in `0..=m+1`, with `g_0 = g_{m+1} = 0`.
    pub fn level(&self, i: usize) -> f64 {
        if i == 0 || i > self.levels.len() {
            0.0
        } else {
            self.levels[i - 1]
        }
    }

    /// The `m + 1` discontinuity locations `0, R_1, R_1 + R_2, ...`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.levels.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for r in &self.region_lengths {
            acc += r;
            out.push(acc);
        }
        out
    }

    /// Jumps `g_k - g_{k-1}` for `k = 1..=m+1`.
    pub fn jumps(&self) -> Vec<f64> {
        (1..=self.levels.len() + 1)
            .map(|k| self.level(k) - self.level(k - 1))
            .collect()
    }

    /// Smallest jump magnitude across all `m + 1` discontinuities.
    pub fn min_jump(&self) -> f64 {
        self.jumps().iter().fold(f64::INFINITY, |acc, j| acc.min(j.abs()))
    }

    /// Largest jump magnitude across all `m + 1` discontinuities.
    pub fn max_jump(&self) -> f64 {
        self.jumps().iter().fold(0.0, |acc: f64, j| acc.max(j.abs()))
    }

    /// Region (1-based) containing `t`, or `None` outside the support.
    pub fn region_at(&self, t: f64) -> Option<usize> {
        region_index(&self.breakpoints(), t, self.sampling_interval)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.region_at(t).map_or(0.0, |i| self.levels[i - 1])
    }
}

/// Counts breakpoints at or left of `t` (after snapping) and maps the
/// count to a region index.
fn region_index(breakpoints: &[f64], t: f64, interval: f64) -> Option<usize> {
    let snap = SNAP_TOLERANCE * interval;
    let passed = breakpoints.iter().take_while(|&&b| t >= b - snap).count();
    if passed == 0 || passed == breakpoints.len() {
        None
    } else {
        Some(passed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    FirstLevelZero,
    LastLevelZero,
    /// `g_region == g_{region+1}`.
    AdjacentEqualLevels {
        region: usize,
    },
    RegionTooShort {
        region: usize,
    },
    /// `f_first + ... + f_{first+extra}` is within tolerance of an integer.
    IntegralPartialSum {
        first: usize,
        extra: usize,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FirstLevelZero => write!(f, "first level is zero"),
            Violation::LastLevelZero => write!(f, "last level is zero"),
            Violation::AdjacentEqualLevels { region } => {
                write!(f, "adjacent equal levels (regions {} and {})", region, region + 1)
            }
            Violation::RegionTooShort { region } => {
                write!(f, "region {region} shorter than the sampling interval")
            }
            Violation::IntegralPartialSum { first, extra, sum } => write!(
                f,
                "f partial sum integral (regions {}..={}, sum {sum})",
                first,
                first + extra
            ),
        }
    }
}

/// Lists every modelling assumption the function breaks.
///
/// Partial sums of the fractional parts `f_i` are only checked when every
/// region is at least `T` long, since the decomposition is undefined
/// otherwise.
pub fn validate_function(func: &PiecewiseConstantFunction) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = func.region_count();
    if func.levels[0] == 0.0 {
        out.push(Violation::FirstLevelZero);
    }
    if func.levels[m - 1] == 0.0 {
        out.push(Violation::LastLevelZero);
    }
    for i in 1..m {
        if func.levels[i - 1] == func.levels[i] {
            out.push(Violation::AdjacentEqualLevels { region: i });
        }
    }
    match decompose_lengths(func) {
        Ok(dec) => {
            for first in 1..=m {
                let mut sum = 0.0;
                for extra in 0..=(m - first) {
                    sum += dec.f[first - 1 + extra];
                    if (sum - sum.round()).abs() <= INTEGRALITY_TOLERANCE {
                        out.push(Violation::IntegralPartialSum { first, extra, sum });
                    }
                }
            }
        }
        Err(_) => {
            let t = func.sampling_interval;
            for (i, r) in func.region_lengths.iter().enumerate() {
                if r / t < 1.0 - INTEGRALITY_TOLERANCE {
                    out.push(Violation::RegionTooShort { region: i + 1 });
                }
            }
        }
    }
    out
}

/// `R_i = (n_i - f_i) T` with `n_i >= 2` and `f_i` in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDecomposition {
    pub n: Vec<u64>,
    pub f: Vec<f64>,
    pub sampling_interval: f64,
}

impl RegionDecomposition {
    pub fn region_count(&self) -> usize {
        self.n.len()
    }

    /// Reassembles `R_i` for the 1-based region `i`.
    pub fn length(&self, i: usize) -> f64 {
        (self.n[i - 1] as f64 - self.f[i - 1]) * self.sampling_interval
    }
}

pub fn decompose_lengths(func: &PiecewiseConstantFunction) -> Result<RegionDecomposition> {
    let t = func.sampling_interval;
    let mut n = Vec::with_capacity(func.region_count());
    let mut f = Vec::with_capacity(func.region_count());
    for (i, r) in func.region_lengths.iter().enumerate() {
        let ratio = r / t;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= INTEGRALITY_TOLERANCE * ratio.max(1.0) {
            if nearest < 1.0 {
                return Err(Error::RegionTooShort { region: i + 1 });
            }
            n.push(nearest as u64 + 1);
            f.push(1.0);
        } else {
            if ratio < 1.0 {
                return Err(Error::RegionTooShort { region: i + 1 });
            }
            let whole = ratio.floor() + 1.0;
            n.push(whole as u64);
            f.push(whole - ratio);
        }
    }
    Ok(RegionDecomposition {
        n,
        f,
        sampling_interval: t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub first_sample_time: f64,
    pub count: usize,
    pub interval: f64,
}

impl SamplingGrid {
    pub fn new(first_sample_time: f64, count: usize, interval: f64) -> Self {
        Self {
            first_sample_time,
            count,
            interval,
        }
    }

    /// Time of the 0-based sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.first_sample_time + k as f64 * self.interval
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.time(k))
    }

    /// The same grid shifted by `offset` time units.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            first_sample_time: self.first_sample_time + offset,
            ..*self
        }
    }
}

/// A finite sequence of (possibly noisy) samples, indexed 1..=N in the
/// documentation and 0..N in code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleSequence {
    values: Vec<f64>,
}

impl SampleSequence {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl From<Vec<f64>> for SampleSequence {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Ideal, noiseless sampling of `func` on `grid`.
pub fn sample(func: &PiecewiseConstantFunction, grid: &SamplingGrid) -> SampleSequence {
    debug_assert!(
        (grid.interval - func.sampling_interval).abs() <= 1e-12 * func.sampling_interval,
        "grid and function disagree on T"
    );
    let breakpoints = func.breakpoints();
    let values = grid
        .times()
        .map(|t| region_index(&breakpoints, t, func.sampling_interval).map_or(0.0, |i| func.levels[i - 1]))
        .collect();
    SampleSequence::new(values)
}

/// How many samples of a grid land in each region, and where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCounts {
    /// `eta[i - 1]` samples fall in region `i`.
    pub eta: Vec<usize>,
    /// `delta[i - 1]` is the distance from the left endpoint of region `i`
    /// to the first grid lattice point at or after it; always in `[0, T)`.
    pub delta: Vec<f64>,
    pub leading_zeros: usize,
    pub trailing_zeros: usize,
}

pub fn region_counts(func: &PiecewiseConstantFunction, grid: &SamplingGrid) -> Result<RegionCounts> {
    let t = func.sampling_interval;
    let m = func.region_count();
    let breakpoints = func.breakpoints();
    let mut eta = vec![0usize; m];
    let mut leading_zeros = 0;
    let mut trailing_zeros = 0;
    let end = breakpoints[m];
    for time in grid.times() {
        match region_index(&breakpoints, time, t) {
            Some(i) => eta[i - 1] += 1,
            None if time < end => leading_zeros += 1,
            None => trailing_zeros += 1,
        }
    }
    if let Some(i) = eta.iter().position(|&c| c == 0) {
        return Err(Error::EmptyRegion { region: i + 1 });
    }
    let snap = SNAP_TOLERANCE * t;
    let delta = breakpoints[..m]
        .iter()
        .map(|&left| {
            let k = ((left - snap - grid.first_sample_time) / grid.interval).ceil();
            let mut first = grid.first_sample_time + k * grid.interval;
            if first < left - snap {
                first += grid.interval;
            }
            let d = (first - left).max(0.0);
            if d >= t - snap {
                0.0
            } else {
                d
            }
        })
        .collect();
    Ok(RegionCounts {
        eta,
        delta,
        leading_zeros,
        trailing_zeros,
    })
}

/// `kappa(i, K)` and `d_{i,K}` for regions `i..=i+K`, together with the
/// grid-offset breakpoint that separates the two possible totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCountRule {
    pub first: usize,
    pub extra: usize,
    pub kappa: u64,
    pub d: u64,
    /// `(1 + kappa - sum f) T`, in `(0, T]`.
    pub delta_threshold: f64,
}

impl CumulativeCountRule {
    /// Total number of samples over the regions when the first of them has
    /// grid offset `delta`.
    pub fn predict(&self, delta: f64) -> u64 {
        if delta < self.delta_threshold {
            self.d
        } else {
            self.d - 1
        }
    }
}

pub fn cumulative_count_rule(dec: &RegionDecomposition, first: usize, extra: usize) -> Result<CumulativeCountRule> {
    let m = dec.region_count();
    if first == 0 || first + extra > m {
        return Err(Error::IndexOutOfRange(format!(
            "regions {first}..={} with m = {m}",
            first + extra
        )));
    }
    let range = (first - 1)..(first + extra);
    let sum_f: f64 = dec.f[range.clone()].iter().sum();
    let sum_n: u64 = dec.n[range].iter().sum();
    let kappa = sum_f.floor() as u64;
    Ok(CumulativeCountRule {
        first,
        extra,
        kappa,
        d: sum_n - kappa,
        delta_threshold: (1.0 + kappa as f64 - sum_f) * dec.sampling_interval,
    })
}

/// `g^(l)(t) = g(t + R_0 + ... + R_l)`: the function re-anchored so that
/// discontinuity `l` sits at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslatedFunction {
    pub base: PiecewiseConstantFunction,
    pub reference: usize,
    /// `D_0^(l), ..., D_m^(l)`.
    pub discontinuities: Vec<f64>,
}

impl TranslatedFunction {
    /// The shift `R_0 + ... + R_l` between the original and translated axes.
    pub fn anchor(&self) -> f64 {
        self.base.region_lengths[..self.reference].iter().sum()
    }

    pub fn eval(&self, t: f64) -> f64 {
        region_index(&self.discontinuities, t, self.base.sampling_interval).map_or(0.0, |i| self.base.levels[i - 1])
    }

    pub fn sample(&self, grid: &SamplingGrid) -> SampleSequence {
        SampleSequence::new(grid.times().map(|t| self.eval(t)).collect())
    }
}

pub fn translate_reference(func: &PiecewiseConstantFunction, reference: usize) -> Result<TranslatedFunction> {
    let m = func.region_count();
    if reference > m {
        return Err(Error::IndexOutOfRange(format!("reference {reference} with m = {m}")));
    }
    let r = &func.region_lengths;
    let discontinuities = (0..=m)
        .map(|i| {
            if i < reference {
                -r[i..reference].iter().sum::<f64>()
            } else {
                r[reference..i].iter().sum::<f64>()
            }
        })
        .collect();
    Ok(TranslatedFunction {
        base: func.clone(),
        reference,
        discontinuities,
    })
}
