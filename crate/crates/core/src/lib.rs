// SPDX-License-Identifier: MIT OR Apache-2.0

//! Alignment, segmentation and reconstruction of a spatially limited
//! piecewise constant function from two noisy sample sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`signal`]: the ground-truth function, sampling grids, region counts
//!   and translations to a chosen reference discontinuity.
//! - [`noise`]: reproducible additive noise.
//! - [`xcorr`]: cross-correlation template matching (the baseline).
//! - [`difference`]: first-order difference sequences.
//! - [`threshold`]: threshold search over difference sequences and level
//!   estimation by pooled averaging.
//! - [`dp`]: the alignment/segmentation DAG and its longest paths.
//! - [`estimator`]: uncertainty intervals for the discontinuities,
//!   reconstruction and error energies.
//! - [`gaussian`]: closed-form edge statistics under Gaussian noise.
//! - [`experiments`]: configuration, pipelines, the worked example and
//!   Monte Carlo comparisons.

#![forbid(unsafe_code)]

pub mod difference;
pub mod dp;
mod error;
pub mod estimator;
pub mod experiments;
pub mod gaussian;
pub mod noise;
mod scalar;
pub mod signal;
pub mod threshold;
pub mod xcorr;

pub use error::{Error, Result};
pub use scalar::Scalar;
