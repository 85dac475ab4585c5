// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cross-correlation template matching: `r[i] = sum_n y1[n] * y2[n + i]`
//! with both sequences zero outside `1..=N`.

use serde::{Deserialize, Serialize};

use crate::signal::SampleSequence;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// `-(N-1) ..= N-1`.
    pub shifts: Vec<i64>,
    pub values: Vec<f64>,
}

impl CorrelationProfile {
    pub fn value_at(&self, shift: i64) -> Option<f64> {
        let n = (self.shifts.len() as i64 + 1) / 2;
        let idx = shift + n - 1;
        (0..self.values.len() as i64)
            .contains(&idx)
            .then(|| self.values[idx as usize])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.shifts.iter().copied().zip(self.values.iter().copied())
    }
}

pub fn cross_correlation(y1: &SampleSequence, y2: &SampleSequence) -> Result<CorrelationProfile> {
    if y1.len() != y2.len() {
        return Err(Error::LengthMismatch {
            left: y1.len(),
            right: y2.len(),
        });
    }
    let n = y1.len() as i64;
    if n == 0 {
        return Ok(CorrelationProfile {
            shifts: Vec::new(),
            values: Vec::new(),
        });
    }
    let (a, b) = (y1.values(), y2.values());
    let shifts: Vec<i64> = (-(n - 1)..=(n - 1)).collect();
    let values = shifts
        .iter()
        .map(|&i| {
            let lo = 0.max(-i);
            let hi = n.min(n - i);
            (lo..hi).map(|k| a[k as usize] * b[(k + i) as usize]).sum()
        })
        .collect();
    Ok(CorrelationProfile { shifts, values })
}

/// Every shift whose correlation is within `tolerance` of the maximum,
/// ordered by `|shift|` and then by shift. The first entry is the
/// method's recommendation.
pub fn best_shifts(profile: &CorrelationProfile, tolerance: f64) -> Vec<i64> {
    let max = profile.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<i64> = profile
        .iter()
        .filter(|&(_, v)| v >= max - tolerance)
        .map(|(s, _)| s)
        .collect();
    out.sort_by_key(|&s| (s.abs(), s));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::repro::{corrupted_pair, TABLE_ONE};

    fn pair(x: f64) -> (SampleSequence, SampleSequence) {
        let (y1, y2) = corrupted_pair(x);
        (SampleSequence::new(y1), SampleSequence::new(y2))
    }

    #[test]
    fn noiseless_profile() {
        let (y1, y2) = pair(0.0);
        let r = cross_correlation(&y1, &y2).unwrap();
        assert_eq!(r.shifts.len(), 17);
        for (shift, want) in [(-1, 3.0), (0, 1.0), (1, -4.0), (2, 1.0), (-2, -4.0)] {
            assert!((r.value_at(shift).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(best_shifts(&r, 0.0), vec![-1]);
    }

    #[test]
    fn profile_at_small_noise() {
        let (y1, y2) = pair(0.15);
        let r = cross_correlation(&y1, &y2).unwrap();
        assert!((r.value_at(-3).unwrap() - 1.705).abs() < 1e-12);
        assert!((r.value_at(-1).unwrap() - 1.695).abs() < 1e-12);
        assert_eq!(best_shifts(&r, 0.0), vec![-3]);
    }

    #[test]
    fn matches_tabulated_polynomials() {
        for step in 0..=100 {
            let x = 0.5 * step as f64 / 100.0;
            let (y1, y2) = pair(x);
            let r = cross_correlation(&y1, &y2).unwrap();
            for &(shift, c0, c1, c2) in TABLE_ONE.iter() {
                let want = c0 + c1 * x + c2 * x * x;
                assert!((r.value_at(shift).unwrap() - want).abs() < 1e-9, "x={x} shift={shift}");
            }
        }
    }

    #[test]
    fn both_maximizers_at_transition() {
        let x = (7.0 - 41f64.sqrt()) / 4.0;
        let (y1, y2) = pair(x);
        let r = cross_correlation(&y1, &y2).unwrap();
        assert_eq!(best_shifts(&r, 1e-9), vec![-1, -3]);
    }

    #[test]
    fn zero_sequence_gives_zero_profile() {
        let (y1, _) = pair(0.3);
        let zero = SampleSequence::new(vec![0.0; 9]);
        let r = cross_correlation(&y1, &zero).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_mismatch() {
        let a = SampleSequence::new(vec![1.0; 3]);
        let b = SampleSequence::new(vec![1.0; 4]);
        assert!(cross_correlation(&a, &b).is_err());
    }

    #[test]
    fn ties_prefer_small_shifts() {
        let profile = CorrelationProfile {
            shifts: vec![-2, -1, 0, 1, 2],
            values: vec![5.0, 1.0, 0.0, 5.0, 5.0],
        };
        assert_eq!(best_shifts(&profile, 0.0), vec![1, -2, 2]);
    }
}
