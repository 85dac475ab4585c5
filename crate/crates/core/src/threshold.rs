// SPDX-License-Identifier: MIT OR Apache-2.0

//! Thresholding of a pair of difference sequences.
//!
//! Components with magnitude strictly below `v` are zeroed; the surviving
//! entries mark the first sample after each discontinuity. A threshold is
//! usable only if both sequences keep the same number of entries with the
//! same sign pattern and the implied per-region sample counts obey the
//! two-grid count constraints (any run of consecutive regions differs by
//! at most one sample between the grids). Candidate thresholds are tried
//! from small to large.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::difference::{nonzero_signature, DifferenceSequence, NonzeroSignature};
use crate::scalar::{from_usize, Scalar};
use crate::{Error, Result};

/// Positions (1-based) of the first sample after each discontinuity, for
/// one sequence. `m + 1` boundaries delimit `m` regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a segmentation needs at least two boundaries, got {}",
                boundaries.len()
            )));
        }
        if boundaries[0] == 0 || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "boundaries must be positive and strictly increasing: {boundaries:?}"
            )));
        }
        Ok(Self { boundaries })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn region_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// `eta_1, ..., eta_m`.
    pub fn region_counts(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Zeroes every component with `|d| < v`; `|d| = v` is kept.
pub fn apply_threshold(d: &DifferenceSequence, v: f64) -> DifferenceSequence {
    DifferenceSequence::new(d.values().iter().map(|&x| if x.abs() < v { 0.0 } else { x }).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdedPair {
    pub v: f64,
    pub t1: DifferenceSequence,
    pub t2: DifferenceSequence,
    pub sig1: NonzeroSignature,
    pub sig2: NonzeroSignature,
}

pub fn threshold_pair(d1: &DifferenceSequence, d2: &DifferenceSequence, v: f64) -> ThresholdedPair {
    let t1 = apply_threshold(d1, v);
    let t2 = apply_threshold(d2, v);
    let sig1 = nonzero_signature(&t1, 0.0);
    let sig2 = nonzero_signature(&t2, 0.0);
    ThresholdedPair { v, t1, t2, sig1, sig2 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    /// Fewer than two entries cannot delimit a region.
    TooFewEntries {
        count: usize,
    },
    CountMismatch {
        left: usize,
        right: usize,
    },
    /// 1-based indices of the entry pairs whose signs disagree.
    SignMismatch {
        pairs: Vec<usize>,
    },
    RegionCountGap {
        region: usize,
        left: usize,
        right: usize,
    },
    /// Regions `first..=last` hold totals differing by more than one.
    CumulativeGap {
        first: usize,
        last: usize,
        difference: i64,
    },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::TooFewEntries { count } => write!(f, "only {count} non-zero entries"),
            Rejection::CountMismatch { left, right } => {
                write!(f, "unequal non-zero counts {left} vs {right}")
            }
            Rejection::SignMismatch { pairs } => {
                let list: Vec<String> = pairs.iter().map(|p| p.to_string()).collect();
                write!(f, "signs differ for pairs {}", list.join(" "))
            }
            Rejection::RegionCountGap { region, left, right } => {
                write!(f, "region {region} has {left} vs {right} samples")
            }
            Rejection::CumulativeGap {
                first,
                last,
                difference,
            } => {
                write!(f, "regions {first}..={last} differ by {difference} samples")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accept { regions: usize },
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept { .. })
    }
}

/// Checks, in order: entry counts, sign pattern, per-region counts and
/// cumulative counts. The first failing criterion is reported.
pub fn compatibility_check(sig1: &NonzeroSignature, sig2: &NonzeroSignature) -> Verdict {
    if sig1.len() != sig2.len() {
        return Verdict::Reject(Rejection::CountMismatch {
            left: sig1.len(),
            right: sig2.len(),
        });
    }
    if sig1.len() < 2 {
        return Verdict::Reject(Rejection::TooFewEntries { count: sig1.len() });
    }
    let pairs: Vec<usize> = sig1
        .entries
        .iter()
        .zip(&sig2.entries)
        .enumerate()
        .filter(|(_, (a, b))| a.sign != b.sign)
        .map(|(k, _)| k + 1)
        .collect();
    if !pairs.is_empty() {
        return Verdict::Reject(Rejection::SignMismatch { pairs });
    }
    let p1 = sig1.positions();
    let p2 = sig2.positions();
    for region in 1..p1.len() {
        let left = p1[region] - p1[region - 1];
        let right = p2[region] - p2[region - 1];
        if left.abs_diff(right) > 1 {
            return Verdict::Reject(Rejection::RegionCountGap { region, left, right });
        }
    }
    if let Some(gap) = cumulative_gap(&p1, &p2) {
        return Verdict::Reject(gap);
    }
    Verdict::Accept { regions: p1.len() - 1 }
}

/// First run of consecutive regions whose totals differ by more than one.
pub(crate) fn cumulative_gap(p1: &[usize], p2: &[usize]) -> Option<Rejection> {
    let offset: Vec<i64> = p1.iter().zip(p2).map(|(&a, &b)| a as i64 - b as i64).collect();
    for a in 0..offset.len() {
        for b in (a + 1)..offset.len() {
            let difference = offset[b] - offset[a];
            if difference.abs() > 1 {
                return Some(Rejection::CumulativeGap {
                    first: a + 1,
                    last: b,
                    difference,
                });
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub v: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleThreshold {
    pub v: f64,
    pub pair: ThresholdedPair,
    pub seg1: Segmentation,
    pub seg2: Segmentation,
    /// Every accepted candidate, ascending.
    pub accepted: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    /// All candidates in the order tried, with their verdicts.
    pub ladder: Vec<Candidate>,
    pub feasible: Option<FeasibleThreshold>,
}

impl ThresholdSearch {
    pub fn is_feasible(&self) -> bool {
        self.feasible.is_some()
    }
}

/// Candidate thresholds: half the smallest pooled magnitude (when it is
/// positive) and the midpoints between consecutive distinct magnitudes.
pub fn candidate_thresholds(d1: &DifferenceSequence, d2: &DifferenceSequence) -> Vec<f64> {
    let mut mags: Vec<f64> = d1
        .values()
        .iter()
        .chain(d2.values())
        .map(|x| x.abs())
        .filter(|x| x.is_finite())
        .collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut out = Vec::with_capacity(mags.len());
    if let Some(&first) = mags.first() {
        if first > 0.0 {
            out.push(first / 2.0);
        }
    }
    out.extend(mags.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out
}

pub fn search_threshold(d1: &DifferenceSequence, d2: &DifferenceSequence) -> Result<ThresholdSearch> {
    if d1.len() != d2.len() {
        return Err(Error::LengthMismatch {
            left: d1.len(),
            right: d2.len(),
        });
    }
    let mut ladder = Vec::new();
    let mut feasible: Option<FeasibleThreshold> = None;
    for v in candidate_thresholds(d1, d2) {
        let pair = threshold_pair(d1, d2, v);
        let verdict = compatibility_check(&pair.sig1, &pair.sig2);
        if verdict.is_accept() {
            match feasible.as_mut() {
                Some(f) => f.accepted.push(v),
                None => {
                    let seg1 = Segmentation::new(pair.sig1.positions())?;
                    let seg2 = Segmentation::new(pair.sig2.positions())?;
                    feasible = Some(FeasibleThreshold {
                        v,
                        pair,
                        seg1,
                        seg2,
                        accepted: vec![v],
                    });
                }
            }
        }
        ladder.push(Candidate { v, verdict });
    }
    Ok(ThresholdSearch { ladder, feasible })
}

/// Pooled per-region means of the two sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate<V = f64> {
    pub values: Vec<V>,
    /// Samples pooled for each region (`eta_k` of both sequences).
    pub counts: Vec<usize>,
}

pub fn estimate_levels<V: Scalar>(
    y1: &[V],
    y2: &[V],
    seg1: &Segmentation,
    seg2: &Segmentation,
) -> Result<LevelEstimate<V>> {
    if seg1.region_count() != seg2.region_count() {
        return Err(Error::RegionCountMismatch {
            left: seg1.region_count(),
            right: seg2.region_count(),
        });
    }
    for (seg, y) in [(seg1, y1), (seg2, y2)] {
        let last = *seg.boundaries().last().expect("non-empty");
        if last > y.len() + 1 {
            return Err(Error::IndexOutOfRange(format!(
                "boundary {last} beyond a sequence of length {}",
                y.len()
            )));
        }
    }
    let mut values = Vec::with_capacity(seg1.region_count());
    let mut counts = Vec::with_capacity(seg1.region_count());
    for k in 0..seg1.region_count() {
        let mut sum = V::zero();
        let mut count = 0;
        for (seg, y) in [(seg1, y1), (seg2, y2)] {
            let b = seg.boundaries();
            for sample in &y[b[k] - 1..b[k + 1] - 1] {
                sum = sum + sample.clone();
                count += 1;
            }
        }
        values.push(sum / from_usize(count));
        counts.push(count);
    }
    Ok(LevelEstimate { values, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difference::difference_sequence;
    use crate::experiments::repro::corrupted_pair;
    use crate::signal::SampleSequence;

    fn diffs(x: f64) -> (DifferenceSequence, DifferenceSequence) {
        let (y1, y2) = corrupted_pair(x);
        (
            difference_sequence(&SampleSequence::new(y1)),
            difference_sequence(&SampleSequence::new(y2)),
        )
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn thresholded_example_sequences() {
        let (d1, d2) = diffs(0.3);
        assert_close(
            apply_threshold(&d1, 1.0).values(),
            &[0.0, 1.6, 0.0, -1.4, 2.0, 0.0, -2.0, 1.6, 0.0],
        );
        assert_close(
            apply_threshold(&d2, 1.0).values(),
            &[0.0, 1.0, -1.4, 0.0, 2.0, -1.4, 1.0, 0.0, 0.0],
        );
        assert!(apply_threshold(&d1, 2.5).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_magnitude_is_kept() {
        let d = DifferenceSequence::new(vec![1.0, -1.0, 0.999]);
        assert_eq!(apply_threshold(&d, 1.0).values(), &[1.0, -1.0, 0.0]);
    }

    #[test]
    fn compatible_at_unit_threshold() {
        let (d1, d2) = diffs(0.3);
        let pair = threshold_pair(&d1, &d2, 1.0);
        assert_eq!(
            compatibility_check(&pair.sig1, &pair.sig2),
            Verdict::Accept { regions: 4 }
        );
    }

    #[test]
    fn failure_modes_at_half() {
        let (d1, d2) = diffs(0.5);
        let low = threshold_pair(&d1, &d2, 0.75);
        assert_eq!(
            compatibility_check(&low.sig1, &low.sig2),
            Verdict::Reject(Rejection::SignMismatch { pairs: vec![6, 7] })
        );
        let high = threshold_pair(&d1, &d2, 1.5);
        assert_eq!(
            compatibility_check(&high.sig1, &high.sig2),
            Verdict::Reject(Rejection::CountMismatch { left: 4, right: 1 })
        );
    }

    #[test]
    fn count_constraints_are_enforced() {
        let sig = |positions: &[usize]| {
            let d = DifferenceSequence::new({
                let mut v = vec![0.0; 12];
                for (k, &p) in positions.iter().enumerate() {
                    v[p - 1] = if k % 2 == 0 { 1.0 } else { -1.0 };
                }
                v
            });
            nonzero_signature(&d, 0.0)
        };
        assert_eq!(
            compatibility_check(&sig(&[1, 4, 5]), &sig(&[1, 2, 5])),
            Verdict::Reject(Rejection::RegionCountGap {
                region: 1,
                left: 3,
                right: 1
            })
        );
        assert_eq!(
            compatibility_check(&sig(&[1, 3, 5, 7]), &sig(&[1, 2, 3, 5])),
            Verdict::Reject(Rejection::CumulativeGap {
                first: 1,
                last: 2,
                difference: 2
            })
        );
        assert_eq!(
            compatibility_check(&sig(&[2]), &sig(&[3])),
            Verdict::Reject(Rejection::TooFewEntries { count: 1 })
        );
    }

    #[test]
    fn search_finds_unit_class() {
        let (d1, d2) = diffs(0.3);
        let search = search_threshold(&d1, &d2).unwrap();
        let found = search.feasible.expect("feasible");
        assert_eq!(found.seg1.boundaries(), &[2, 4, 5, 7, 8]);
        assert_eq!(found.seg2.boundaries(), &[2, 3, 5, 6, 7]);
        assert_eq!(apply_threshold(&d1, found.v), apply_threshold(&d1, 1.0));
        assert_eq!(apply_threshold(&d2, found.v), apply_threshold(&d2, 1.0));
    }

    #[test]
    fn search_is_infeasible_at_half() {
        let (d1, d2) = diffs(0.5);
        let search = search_threshold(&d1, &d2).unwrap();
        assert!(!search.is_feasible());
        assert_eq!(search.ladder.len(), 3);
        assert!(search.ladder.iter().all(|c| !c.verdict.is_accept()));
    }

    #[test]
    fn noiseless_search_takes_smallest_candidate() {
        let (d1, _) = diffs(0.0);
        let search = search_threshold(&d1, &d1).unwrap();
        let found = search.feasible.unwrap();
        assert_eq!(found.v, search.ladder[0].v);
        assert_eq!(found.seg1.boundaries(), &[2, 4, 5, 7, 8]);
    }

    #[test]
    fn levels_follow_closed_form() {
        let seg1 = Segmentation::new(vec![2, 4, 5, 7, 8]).unwrap();
        let seg2 = Segmentation::new(vec![2, 3, 5, 6, 7]).unwrap();
        for x in [0.0, 0.1, 0.3, 0.49] {
            let (y1, y2) = corrupted_pair(x);
            let est = estimate_levels(&y1, &y2, &seg1, &seg2).unwrap();
            assert_close(&est.values, &[1.0 - x / 3.0, -1.0 + x / 3.0, 1.0 - x / 3.0, -1.0]);
            assert_eq!(est.counts, vec![3, 3, 3, 2]);
        }
        let (y1, y2) = corrupted_pair(0.3);
        let est = estimate_levels(&y1, &y2, &seg1, &seg2).unwrap();
        assert_close(&est.values, &[0.9, -0.9, 0.9, -1.0]);
    }

    #[test]
    fn mismatched_segmentations() {
        let (y1, y2) = corrupted_pair(0.0);
        let seg1 = Segmentation::new(vec![2, 4, 5]).unwrap();
        let seg2 = Segmentation::new(vec![2, 3, 5, 6]).unwrap();
        assert!(estimate_levels(&y1, &y2, &seg1, &seg2).is_err());
        assert!(Segmentation::new(vec![3, 3]).is_err());
        assert!(Segmentation::new(vec![3]).is_err());
    }
}
