// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("region {region} is shorter than the sampling interval")]
    RegionTooShort { region: usize },
    #[error("region {region} receives no samples from the grid")]
    EmptyRegion { region: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("count patterns disagree by {difference} at discontinuity {index}")]
    InconsistentCounts { index: usize, difference: i64 },
    #[error("uncertainty intervals overlap at discontinuity {index}")]
    OverlappingBounds { index: usize },
    #[error("path contains no segmentation vertex")]
    EmptyPath,
    #[error("segmentations describe {left} and {right} regions")]
    RegionCountMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
