// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reconstruction of a translated function from two sample-count patterns.
//!
//! Fix a reference discontinuity `l` and place it at `t = 0`. The partial
//! count `sum eta_j` between discontinuity `l` and discontinuity `i`
//! brackets the distance `|D_i|`: when the two patterns give counts `C - 1`
//! and `C`, `D_i` is known to within one sampling interval (`i` in `U^c`);
//! when they agree on `C`, only to within two (`i` in `U`).
//!
//! All interval endpoints are integer multiples of `T`, so bounds are
//! stored as integers in units of `T`, and energies are returned in units
//! of `T` as well. With an exact scalar type the energies are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::{from_usize, half};
use crate::{Error, Result, Scalar};

/// How precisely the location of one discontinuity is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Reference,
    /// Counts differ across patterns: known to within `T`.
    Known,
    /// Counts agree: known to within `2T`.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexClassification {
    pub l: usize,
    /// Indices in `U`.
    pub u: Vec<usize>,
    /// Indices in `U^c`, excluding `l`.
    pub u_c: Vec<usize>,
    /// `c[i]` is `C_i`; `c[l] = 0`.
    pub c: Vec<u64>,
    /// Regions that got a single sample in both patterns without the
    /// neighbouring discontinuity on the reference side being known to
    /// within `T`. Reconstruction for these is outside the guarantee.
    pub precondition_violations: Vec<usize>,
}

impl IndexClassification {
    /// Number of regions.
    pub fn m(&self) -> usize {
        self.c.len() - 1
    }

    pub fn membership(&self, i: usize) -> Membership {
        if i == self.l {
            Membership::Reference
        } else if self.u.contains(&i) {
            Membership::Unknown
        } else {
            Membership::Known
        }
    }

    pub fn precondition_ok(&self) -> bool {
        self.precondition_violations.is_empty()
    }
}

/// Sorts discontinuities `0..=m` into `U` and `U^c` relative to `l`.
/// `eta1` and `eta2` hold the per-region sample counts of each pattern.
pub fn classify_indices(eta1: &[usize], eta2: &[usize], l: usize) -> Result<IndexClassification> {
    if eta1.len() != eta2.len() {
        return Err(Error::RegionCountMismatch {
            left: eta1.len(),
            right: eta2.len(),
        });
    }
    let m = eta1.len();
    if l > m {
        return Err(Error::IndexOutOfRange(format!("reference {l} with m = {m}")));
    }
    let partial = |eta: &[usize], i: usize| -> usize {
        if i < l {
            eta[i..l].iter().sum()
        } else {
            eta[l..i].iter().sum()
        }
    };
    let mut u = Vec::new();
    let mut u_c = Vec::new();
    let mut c = vec![0u64; m + 1];
    for i in (0..=m).filter(|&i| i != l) {
        let (a, b) = (partial(eta1, i), partial(eta2, i));
        match a.abs_diff(b) {
            0 => u.push(i),
            1 => u_c.push(i),
            _ => {
                return Err(Error::InconsistentCounts {
                    index: i,
                    difference: a as i64 - b as i64,
                })
            }
        }
        c[i] = a.max(b) as u64;
    }
    let known = |i: usize| i == l || u_c.contains(&i);
    let precondition_violations = (1..=m)
        .filter(|&r| eta1[r - 1] == 1 && eta2[r - 1] == 1)
        .filter(|&r| {
            // Region r lies between discontinuities r - 1 and r; the one
            // nearer the reference must be known to within T.
            let near = if r > l { r - 1 } else { r };
            !known(near)
        })
        .collect();
    Ok(IndexClassification {
        l,
        u,
        u_c,
        c,
        precondition_violations,
    })
}

/// Open intervals `(left[i], right[i])` containing `D_i`, in units of `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalBounds {
    pub l: usize,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
}

impl IntervalBounds {
    pub fn width(&self, i: usize) -> i64 {
        self.right[i] - self.left[i]
    }

    /// First `i` whose interval starts before the previous one ends.
    pub fn first_overlap(&self) -> Option<usize> {
        (1..self.left.len()).find(|&i| self.right[i - 1] > self.left[i])
    }

    /// Bounds in time units for sampling interval `t`.
    pub fn scaled(&self, t: f64) -> Vec<(f64, f64)> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(&a, &b)| (a as f64 * t, b as f64 * t))
            .collect()
    }
}

pub fn interval_bounds(cls: &IndexClassification) -> IntervalBounds {
    let m = cls.m();
    let l = cls.l;
    let mut left = vec![0i64; m + 1];
    let mut right = vec![0i64; m + 1];
    for i in (0..=m).filter(|&i| i != l) {
        let c = cls.c[i] as i64;
        let (lo, hi) = match cls.membership(i) {
            Membership::Known => (c - 1, c),
            _ => (c - 1, c + 1),
        };
        if i < l {
            left[i] = -hi;
            right[i] = -lo;
        } else {
            left[i] = lo;
            right[i] = hi;
        }
    }
    IntervalBounds { l, left, right }
}

/// Every region is at least `T` long, so consecutive discontinuities are
/// at least `T` apart. Propagating that outward from the reference tightens
/// the inner end of each interval; returns `None` if some interval becomes
/// empty.
pub fn refine_min_spacing(bounds: &IntervalBounds) -> Option<IntervalBounds> {
    let mut out = bounds.clone();
    let l = out.l;
    for i in (0..l).rev() {
        out.right[i] = out.right[i].min(out.right[i + 1] - 1);
    }
    for i in l + 1..out.left.len() {
        out.left[i] = out.left[i].max(out.left[i - 1] + 1);
    }
    let nonempty = (0..out.left.len()).all(|i| i == l || out.left[i] < out.right[i]);
    nonempty.then_some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    /// A level `g_i`, closed at both ends.
    Plateau,
    /// A midpoint `(g_i + g_{i+1}) / 2` over an open uncertainty interval.
    Band,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece<V> {
    /// Endpoints in units of `T`.
    pub start: i64,
    pub end: i64,
    pub value: V,
    pub kind: PieceKind,
}

/// A piecewise constant estimate, zero outside its pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedFunction<V = f64> {
    pub sampling_interval: f64,
    /// In increasing order; plateaus may be single points.
    pub pieces: Vec<Piece<V>>,
}

impl<V: Scalar> ReconstructedFunction<V> {
    /// Value on the open interval `(lo, hi)` (units of `T`), which must not
    /// straddle a piece endpoint.
    fn value_on(&self, lo: i64, hi: i64) -> V {
        self.pieces
            .iter()
            .find(|p| p.start < p.end && p.start <= lo && hi <= p.end)
            .map_or_else(V::zero, |p| p.value.clone())
    }

    /// Value at time `t`. At a shared endpoint a plateau wins over a band.
    pub fn eval(&self, t: f64) -> V {
        let x = t / self.sampling_interval;
        let inside = |p: &Piece<V>| match p.kind {
            PieceKind::Band => (p.start as f64) < x && x < p.end as f64,
            PieceKind::Plateau => p.start as f64 <= x && x <= p.end as f64,
        };
        self.pieces
            .iter()
            .filter(|p| p.kind == PieceKind::Plateau)
            .chain(self.pieces.iter().filter(|p| p.kind == PieceKind::Band))
            .find(|p| inside(p))
            .map_or_else(V::zero, |p| p.value.clone())
    }

    pub fn support(&self) -> Option<(i64, i64)> {
        Some((self.pieces.first()?.start, self.pieces.last()?.end))
    }
}

impl<V: Scalar + fmt::Display> fmt::Display for ReconstructedFunction<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pieces {
            match p.kind {
                PieceKind::Plateau if p.start == p.end => writeln!(f, "t = {}T: {}", p.start, p.value)?,
                PieceKind::Plateau => writeln!(f, "[{}T, {}T]: {}", p.start, p.end, p.value)?,
                PieceKind::Band => writeln!(f, "({}T, {}T): {}", p.start, p.end, p.value)?,
            }
        }
        Ok(())
    }
}

/// Builds the estimate from levels `g_1..g_m`: each level on the closed
/// gap between neighbouring uncertainty intervals, the mean of adjacent
/// levels inside each interval, and zero elsewhere.
pub fn reconstruct<V: Scalar>(
    levels: &[V],
    bounds: &IntervalBounds,
    sampling_interval: f64,
) -> Result<ReconstructedFunction<V>> {
    let m = levels.len();
    if bounds.left.len() != m + 1 || bounds.right.len() != m + 1 {
        return Err(Error::LengthMismatch {
            left: m + 1,
            right: bounds.left.len(),
        });
    }
    if let Some(index) = bounds.first_overlap() {
        return Err(Error::OverlappingBounds { index });
    }
    let level = |i: usize| {
        if i == 0 || i > m {
            V::zero()
        } else {
            levels[i - 1].clone()
        }
    };
    let mut pieces = Vec::with_capacity(2 * m + 1);
    for i in 0..=m {
        if i > 0 {
            pieces.push(Piece {
                start: bounds.right[i - 1],
                end: bounds.left[i],
                value: level(i),
                kind: PieceKind::Plateau,
            });
        }
        if i != bounds.l {
            pieces.push(Piece {
                start: bounds.left[i],
                end: bounds.right[i],
                value: (level(i) + level(i + 1)) * half(),
                kind: PieceKind::Band,
            });
        }
    }
    Ok(ReconstructedFunction {
        sampling_interval,
        pieces,
    })
}

/// Predicted squared error of the estimate, in units of `T`, for true
/// levels `g_1..g_m`.
pub fn error_energy<V: Scalar>(cls: &IndexClassification, levels: &[V]) -> V {
    let m = levels.len();
    let level = |i: usize| {
        if i == 0 || i > m {
            V::zero()
        } else {
            levels[i - 1].clone()
        }
    };
    let term = |i: usize| {
        let h = (level(i) - level(i + 1)) * half();
        h.clone() * h
    };
    let known = cls.u_c.iter().fold(V::zero(), |acc, &i| acc + term(i));
    let unknown = cls.u.iter().fold(V::zero(), |acc, &i| acc + term(i));
    known + unknown * from_usize(2)
}

/// `integral (f1 - f2)^2 dt` in units of `T`.
pub fn energy_between<V: Scalar>(f1: &ReconstructedFunction<V>, f2: &ReconstructedFunction<V>) -> V {
    let mut cuts: Vec<i64> = f1
        .pieces
        .iter()
        .chain(&f2.pieces)
        .flat_map(|p| [p.start, p.end])
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).fold(V::zero(), |acc, w| {
        let diff = f1.value_on(w[0], w[1]) - f2.value_on(w[0], w[1]);
        acc + diff.clone() * diff * V::from_i64(w[1] - w[0]).expect("width fits the scalar type")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    const ETA1: [usize; 4] = [2, 1, 2, 1];
    const ETA2: [usize; 4] = [1, 2, 1, 1];

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn example_classification() {
        let cls = classify_indices(&ETA1, &ETA2, 2).unwrap();
        assert_eq!(cls.u, vec![0]);
        assert_eq!(cls.u_c, vec![1, 3, 4]);
        assert_eq!(cls.c, vec![3, 2, 0, 2, 3]);
        assert!(cls.precondition_ok());
    }

    #[test]
    fn identical_patterns_are_all_unknown() {
        for l in 0..=4 {
            let cls = classify_indices(&ETA1, &ETA1, l).unwrap();
            assert!(cls.u_c.is_empty());
            assert_eq!(cls.u.len(), 4);
        }
    }

    #[test]
    fn inconsistent_counts_are_rejected() {
        let err = classify_indices(&[3, 1], &[1, 1], 0).unwrap_err();
        assert_eq!(
            err,
            Error::InconsistentCounts {
                index: 1,
                difference: 2
            }
        );
        assert!(classify_indices(&[1, 1], &[1], 0).is_err());
        assert!(classify_indices(&[1, 1], &[1, 1], 3).is_err());
    }

    #[test]
    fn precondition_flags_single_sample_regions() {
        // Region 2 has one sample in both patterns; discontinuity 1 sits on
        // the reference side and is in U.
        let cls = classify_indices(&[2, 1, 2], &[2, 1, 1], 3).unwrap();
        assert_eq!(cls.membership(2), Membership::Known);
        assert_eq!(cls.membership(1), Membership::Known);
        assert!(cls.precondition_ok());
        let cls = classify_indices(&[2, 1, 2], &[2, 1, 2], 0).unwrap();
        assert_eq!(cls.precondition_violations, vec![2]);
    }

    #[test]
    fn example_bounds() {
        let b = interval_bounds(&classify_indices(&ETA1, &ETA2, 2).unwrap());
        assert_eq!(b.left, vec![-4, -2, 0, 1, 2]);
        assert_eq!(b.right, vec![-2, -1, 0, 2, 3]);
        assert_eq!(b.first_overlap(), None);
        assert_eq!(refine_min_spacing(&b), Some(b.clone()));
    }

    #[test]
    fn widths_follow_membership() {
        for l in 0..=4 {
            let cls = classify_indices(&ETA1, &ETA2, l).unwrap();
            let b = interval_bounds(&cls);
            for i in (0..=4).filter(|&i| i != l) {
                let want = if cls.u.contains(&i) { 2 } else { 1 };
                assert_eq!(b.width(i), want);
            }
        }
    }

    fn levels(x: Rational64) -> Vec<Rational64> {
        let third = x / 3;
        let one = Rational64::from_integer(1);
        vec![one - third, third - one, one - third, -one]
    }

    #[test]
    fn example_reconstruction() {
        let b = interval_bounds(&classify_indices(&ETA1, &ETA2, 2).unwrap());
        let f = reconstruct(&levels(r(3, 10)), &b, 1.0).unwrap();
        let at = |t: f64| f.eval(t);
        assert_eq!(at(-3.0), r(45, 100));
        assert_eq!(at(-2.0), r(9, 10));
        assert_eq!(at(0.5), r(9, 10));
        assert_eq!(at(1.0), r(9, 10));
        assert_eq!(at(-0.5), r(-9, 10));
        assert_eq!(at(1.5), r(-5, 100));
        assert_eq!(at(2.0), r(-1, 1));
        assert_eq!(at(2.5), r(-1, 2));
        assert_eq!(at(3.5), r(0, 1));
        assert_eq!(at(-4.5), r(0, 1));
        assert_eq!(f.support(), Some((-4, 3)));
    }

    #[test]
    fn zero_levels_give_zero_function() {
        let b = interval_bounds(&classify_indices(&ETA1, &ETA2, 2).unwrap());
        let f = reconstruct(&[0.0; 4], &b, 1.0).unwrap();
        assert!((-50..50).all(|k| f.eval(k as f64 * 0.1) == 0.0));
        assert_eq!(energy_between(&f, &f), 0.0);
    }

    #[test]
    fn small_example_energy_limit() {
        let b = interval_bounds(&classify_indices(&ETA1, &ETA2, 2).unwrap());
        let clean = reconstruct(&levels(r(0, 1)), &b, 1.0).unwrap();
        let limit = reconstruct(&levels(r(1, 2)), &b, 1.0).unwrap();
        assert_eq!(energy_between(&clean, &limit), r(11, 144));
        assert_eq!(energy_between(&limit, &clean), r(11, 144));
    }

    #[test]
    fn predicted_error() {
        let cls = classify_indices(&ETA1, &ETA2, 2).unwrap();
        let g = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(error_energy(&cls, &g), 2.75);
        let other = classify_indices(&ETA1, &ETA2, 0).unwrap();
        assert_ne!(error_energy(&other, &g), 2.75);
        let empty = classify_indices(&[], &[], 0).unwrap();
        assert_eq!(error_energy::<f64>(&empty, &[]), 0.0);
        let all_unknown = classify_indices(&[2, 2], &[2, 2], 1).unwrap();
        let all_known = IndexClassification {
            u: vec![],
            u_c: all_unknown.u.clone(),
            ..all_unknown.clone()
        };
        assert_eq!(
            error_energy(&all_unknown, &[1.0, -1.0]),
            2.0 * error_energy(&all_known, &[1.0, -1.0])
        );
    }

    #[test]
    fn overlapping_bounds_are_rejected_then_refined() {
        let b = IntervalBounds {
            l: 0,
            left: vec![0, 0, 1],
            right: vec![0, 2, 3],
        };
        assert_eq!(b.first_overlap(), Some(2));
        assert_eq!(
            reconstruct(&[1.0, 2.0], &b, 1.0),
            Err(Error::OverlappingBounds { index: 2 })
        );
        let fixed = refine_min_spacing(&b).unwrap();
        assert_eq!(fixed.left, vec![0, 1, 2]);
        assert_eq!(fixed.first_overlap(), None);
        let b = IntervalBounds {
            l: 2,
            left: vec![-3, -2, 0],
            right: vec![-1, 0, 0],
        };
        let fixed = refine_min_spacing(&b).unwrap();
        assert_eq!(fixed.right, vec![-2, -1, 0]);
        assert_eq!(fixed.first_overlap(), None);
    }

    #[test]
    fn energy_is_symmetric_and_float_agrees() {
        let b = interval_bounds(&classify_indices(&ETA1, &ETA2, 3).unwrap());
        let f = reconstruct(&[0.9, -0.9, 0.9, -1.0], &b, 2.0).unwrap();
        let g = reconstruct(&[1.0, -1.0, 1.0, -1.0], &b, 2.0).unwrap();
        let e = energy_between(&f, &g);
        assert_eq!(e, energy_between(&g, &f));
        assert!(e > 0.0);
    }
}
