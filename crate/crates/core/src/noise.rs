// SPDX-License-Identifier: MIT OR Apache-2.0

//! Additive noise `y = gamma + e` with reproducible, order-independent draws.
//!
//! Every random draw is keyed by `(seed, index)`: the generator for sample
//! `n` is seeded from a hash of both, so results do not depend on
//! evaluation order or on how work is split across threads. Independent
//! sequences use [`Seed::derive`] to obtain distinct seeds.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::signal::SampleSequence;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// A seed for an independent stream, e.g. the second observed sequence.
    pub fn derive(self, stream: u64) -> Seed {
        Seed(splitmix(self.0 ^ splitmix(stream.wrapping_add(0xA076_1D64_78BD_642F))))
    }

    /// Generator dedicated to draw number `index` of this seed.
    pub fn rng_at(self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(splitmix(self.0.wrapping_add(splitmix(index))))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// `+x` or `-x` with probability one half each.
    SymmetricBinary {
        x: f64,
    },
    Gaussian {
        sigma: f64,
    },
    /// Uniform on `[-halfwidth, halfwidth]`.
    Uniform {
        halfwidth: f64,
    },
    /// A deterministic pattern added componentwise.
    Fixed {
        pattern: Vec<f64>,
    },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            NoiseSpec::SymmetricBinary { x } => x.is_finite() && *x >= 0.0,
            NoiseSpec::Gaussian { sigma } => sigma.is_finite() && *sigma > 0.0,
            NoiseSpec::Uniform { halfwidth } => halfwidth.is_finite() && *halfwidth > 0.0,
            NoiseSpec::Fixed { pattern } => pattern.iter().all(|e| e.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad noise specification {self:?}")))
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, NoiseSpec::Fixed { .. })
    }

    /// One draw from the law. Fixed patterns return zero here; they are
    /// applied positionally by [`apply_noise`].
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::SymmetricBinary { x } => {
                if rng.random::<bool>() {
                    *x
                } else {
                    -*x
                }
            }
            NoiseSpec::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseSpec::Uniform { halfwidth } => rng.random_range(-*halfwidth..=*halfwidth),
            NoiseSpec::Fixed { .. } => 0.0,
        }
    }

    /// Upper bound on `|e|`, if the law is bounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            NoiseSpec::SymmetricBinary { x } => Some(*x),
            NoiseSpec::Gaussian { .. } => None,
            NoiseSpec::Uniform { halfwidth } => Some(*halfwidth),
            NoiseSpec::Fixed { pattern } => Some(pattern.iter().fold(0.0, |a: f64, e| a.max(e.abs()))),
        }
    }
}

/// The noise vector that [`apply_noise`] would add to a sequence of length `n`.
pub fn noise_vector(spec: &NoiseSpec, n: usize, seed: Seed) -> Result<Vec<f64>> {
    spec.validate()?;
    match spec {
        NoiseSpec::Fixed { pattern } => {
            if pattern.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: pattern.len(),
                });
            }
            Ok(pattern.clone())
        }
        _ => Ok((0..n as u64).map(|i| spec.draw(&mut seed.rng_at(i))).collect()),
    }
}

pub fn apply_noise(seq: &SampleSequence, spec: &NoiseSpec, seed: Seed) -> Result<SampleSequence> {
    let noise = noise_vector(spec, seq.len(), seed)?;
    Ok(SampleSequence::new(
        seq.values().iter().zip(noise).map(|(g, e)| g + e).collect(),
    ))
}

/// Empirical `(mean, variance)` of the law; for a fixed pattern, the
/// population statistics of the pattern itself.
pub fn sample_statistics(spec: &NoiseSpec, trials: u64, seed: Seed) -> Result<(f64, f64)> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let (count, sum, sum_sq) = match spec {
        NoiseSpec::Fixed { pattern } => {
            if pattern.is_empty() {
                return Err(Error::InvalidParameter("empty fixed pattern".into()));
            }
            let sum: f64 = pattern.iter().sum();
            let sum_sq: f64 = pattern.iter().map(|e| e * e).sum();
            (pattern.len() as f64, sum, sum_sq)
        }
        _ => {
            let parts = chunked(trials, |range| {
                range.fold((0.0, 0.0), |(s, q), i| {
                    let e = spec.draw(&mut seed.rng_at(i));
                    (s + e, q + e * e)
                })
            });
            let (sum, sum_sq) = parts.into_iter().fold((0.0, 0.0), |(s, q), (a, b)| (s + a, q + b));
            (trials as f64, sum, sum_sq)
        }
    };
    let mean = sum / count;
    let variance = (sum_sq / count - mean * mean).max(0.0);
    Ok((mean, variance))
}

const CHUNK: u64 = 1 << 14;

/// Runs `f` over fixed-size index chunks in parallel and returns the
/// per-chunk results in index order, so that folding them sequentially is
/// independent of thread scheduling.
pub(crate) fn chunked<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}
