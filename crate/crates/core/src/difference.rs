// SPDX-License-Identifier: MIT OR Apache-2.0

//! First-order difference sequences.
//!
//! For a noiseless sequence the non-zero differences are exactly the jumps
//! `g_1, g_2 - g_1, ..., -g_m`, each located at the first sample after the
//! corresponding discontinuity, regardless of where the grid sits.

use serde::{Deserialize, Serialize};

use crate::signal::SampleSequence;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifferenceSequence {
    values: Vec<f64>,
}

impl DifferenceSequence {
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

    /// Value at the 1-based position `j`.
    pub fn at(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// Prefix sums, which recover the source sequence.
    pub fn integrate(&self) -> SampleSequence {
        let mut acc = 0.0;
        SampleSequence::new(
            self.values
                .iter()
                .map(|d| {
                    acc += d;
                    acc
                })
                .collect(),
        )
    }
}

/// `d[n] = s[n] - s[n-1]` with `s[0] = 0`.
pub fn difference_sequence(seq: &SampleSequence) -> DifferenceSequence {
    let mut prev = 0.0;
    DifferenceSequence::new(
        seq.values()
            .iter()
            .map(|&s| {
                let d = s - prev;
                prev = s;
                d
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureEntry {
    /// 1-based position in the difference sequence.
    pub position: usize,
    pub value: f64,
    pub sign: i8,
}

/// The non-zero entries of a difference sequence, in order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NonzeroSignature {
    pub entries: Vec<SignatureEntry>,
}

impl NonzeroSignature {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.position).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.entries.iter().map(|e| e.sign).collect()
    }
}

/// Entries with `|value| > zero_tolerance`.
pub fn nonzero_signature(d: &DifferenceSequence, zero_tolerance: f64) -> NonzeroSignature {
    let entries = d
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > zero_tolerance)
        .map(|(i, &value)| SignatureEntry {
            position: i + 1,
            value,
            sign: if value > 0.0 { 1 } else { -1 },
        })
        .collect();
    NonzeroSignature { entries }
}
