// SPDX-License-Identifier: MIT OR Apache-2.0

//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! methods = ["xcorr", "threshold", "dp"]
//!
//! [function]
//! levels = [1.0, -1.0, 1.0, -1.0]
//! lengths_in_t = [1.3, 1.45, 1.35, 1.3]
//! t = 1.0
//!
//! [grids]
//! offsets = [-0.95, -0.5]   # first sample times, units of T
//! n = 9
//!
//! [noise]
//! kind = "gaussian"
//! sigma = 0.05
//!
//! [dp]
//! v = 1.0
//! weight = "w1"
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dp::WeightKind;
use crate::noise::NoiseSpec;
use crate::signal::{validate_function, PiecewiseConstantFunction, SamplingGrid};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Xcorr,
    Threshold,
    Dp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Xcorr => "xcorr",
            Method::Threshold => "threshold",
            Method::Dp => "dp",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub levels: Vec<f64>,
    pub lengths_in_t: Vec<f64>,
    #[serde(default = "one")]
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// First sample time of each sequence, in units of `T`.
    pub offsets: [f64; 2],
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XcorrConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for XcorrConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Fixed threshold; when absent the candidate ladder is searched.
    pub v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpConfig {
    /// Gate threshold; defaults to half the smallest jump of the function.
    pub v: Option<f64>,
    #[serde(default)]
    pub weight: WeightKind,
    #[serde(default = "default_cap")]
    pub max_paths: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            v: None,
            weight: WeightKind::W1,
            max_paths: default_cap(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    #[serde(default)]
    pub dot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Reference indices for reconstruction; all of them when absent.
    pub references: Option<Vec<usize>>,
    pub function: FunctionConfig,
    pub grids: GridConfig,
    /// Noiseless when absent.
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub xcorr: XcorrConfig,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub dp: DpConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_cap() -> usize {
    64
}

fn all_methods() -> Vec<Method> {
    vec![Method::Xcorr, Method::Threshold, Method::Dp]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn function(&self) -> Result<PiecewiseConstantFunction, ConfigError> {
        PiecewiseConstantFunction::from_lengths_in_t(
            self.function.levels.clone(),
            &self.function.lengths_in_t,
            self.function.t,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn grids(&self) -> [SamplingGrid; 2] {
        let t = self.function.t;
        self.grids.offsets.map(|o| SamplingGrid::new(o * t, self.grids.n, t))
    }

    /// The DP gate threshold, falling back to half the smallest jump.
    pub fn dp_threshold(&self) -> Result<f64, ConfigError> {
        match self.dp.v {
            Some(v) => Ok(v),
            None => Ok(self.function()?.min_jump() / 2.0),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = self.function()?;
        let violations = validate_function(&f);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(ConfigError::Invalid(list.join("; ")));
        }
        if self.grids.n < 2 {
            return Err(ConfigError::Invalid("grids.n must be at least 2".into()));
        }
        if self.grids.offsets.iter().any(|o| !o.is_finite()) {
            return Err(ConfigError::Invalid("grid offsets must be finite".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("no methods selected".into()));
        }
        if let Some(noise) = &self.noise {
            noise.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if let NoiseSpec::Fixed { pattern } = noise {
                if pattern.len() != self.grids.n {
                    return Err(ConfigError::Invalid(format!(
                        "fixed noise pattern has {} entries for {} samples",
                        pattern.len(),
                        self.grids.n
                    )));
                }
            }
        }
        for (name, v) in [("threshold.v", self.threshold.v), ("dp.v", self.dp.v)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.dp.max_paths == 0 {
            return Err(ConfigError::Invalid("dp.max_paths must be positive".into()));
        }
        if !(self.xcorr.tolerance.is_finite() && self.xcorr.tolerance >= 0.0) {
            return Err(ConfigError::Invalid("xcorr.tolerance must be non-negative".into()));
        }
        if let Some(refs) = &self.references {
            let m = f.region_count();
            if let Some(l) = refs.iter().find(|&&l| l > m) {
                return Err(ConfigError::Invalid(format!("reference {l} exceeds m = {m}")));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[function]
levels = [1.0, -1.0, 1.0, -1.0]
lengths_in_t = [1.3, 1.45, 1.35, 1.3]

[grids]
offsets = [-0.95, -0.5]
n = 9
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.dp.max_paths, 64);
        assert_eq!(cfg.xcorr.tolerance, 1e-9);
        assert_eq!(cfg.dp.weight, WeightKind::W1);
        assert_eq!(cfg.methods.len(), 3);
        assert_eq!(cfg.noise, None);
        assert_eq!(cfg.function.t, 1.0);
        assert_eq!(cfg.dp_threshold().unwrap(), 0.5);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = format!("{MINIMAL}\n[dp]\nweigth = \"w2\"\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("weigth"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn noise_section_parses() {
        let text = format!("{MINIMAL}\n[noise]\nkind = \"uniform\"\nhalfwidth = 0.2\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.noise, Some(NoiseSpec::Uniform { halfwidth: 0.2 }));
        let bad = format!("{MINIMAL}\n[noise]\nkind = \"gaussian\"\nsigma = 0.2\nextra = 1\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let text = MINIMAL.replace("[1.3, 1.45, 1.35, 1.3]", "[1.5, 1.5, 1.35, 1.3]");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(ConfigError::Invalid(_))
        ));
        let text = format!("{MINIMAL}\n[dp]\nv = -1.0\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{MINIMAL}\n[noise]\nkind = \"fixed\"\npattern = [0.0, 1.0]\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
