// SPDX-License-Identifier: MIT OR Apache-2.0

//! Repeated noisy trials of one configured instance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiments::config::{ExperimentConfig, Method};
use crate::experiments::pipeline::{run_trial, MethodReport};
use crate::noise::{NoiseSpec, Seed};
use crate::Result;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Option<Method>,
    pub trials: u64,
    /// Trials where the method produced at least one segmentation.
    pub segmented: u64,
    pub exact_rate: f64,
    pub aligned_rate: f64,
    pub segmented_rate: f64,
    /// Trials with at least one boundary pair matching no discontinuity.
    pub false_segmentation_rate: f64,
    pub mean_false_boundaries: f64,
    /// Over segmented trials.
    pub mean_position_error: f64,
    /// Best energy against truth (time units), over trials where one exists.
    pub mean_best_energy: f64,
    pub energy_trials: u64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Record {
    exact: bool,
    aligned: bool,
    segmented: bool,
    false_any: bool,
    false_count: usize,
    position_error: f64,
    best_energy: Option<f64>,
}

impl Record {
    fn from_report(r: &MethodReport) -> Self {
        let first = r.segmentations.first();
        Record {
            exact: r.exact(),
            aligned: r.aligned,
            segmented: first.is_some(),
            false_any: r.segmentations.iter().any(|s| s.false_boundaries > 0),
            false_count: first.map_or(0, |s| s.false_boundaries),
            position_error: first.map_or(0.0, |s| s.mean_position_error),
            best_energy: r.best_estimate().and_then(|e| e.energy_vs_truth),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub seed: u64,
    pub noise: Option<NoiseSpec>,
    pub methods: Vec<MethodSummary>,
}

impl MonteCarloReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == Some(method))
    }
}

/// Runs `trials` independent noise realisations. Trial `k` uses the seed
/// derived from `(cfg.seed, k)`, so results do not depend on scheduling.
pub fn run_monte_carlo(cfg: &ExperimentConfig, trials: u64) -> Result<MonteCarloReport> {
    let base = Seed(cfg.seed);
    let records: Vec<Vec<Record>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let report = run_trial(cfg, base.derive(k))?;
            Ok(report.methods.iter().map(Record::from_report).collect())
        })
        .collect::<Result<_>>()?;

    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(i, &method)| summarize(method, records.iter().map(|r| &r[i])))
        .collect();
    Ok(MonteCarloReport {
        trials,
        seed: cfg.seed,
        noise: cfg.noise.clone(),
        methods,
    })
}

fn summarize<'a>(method: Method, records: impl Iterator<Item = &'a Record>) -> MethodSummary {
    let mut s = MethodSummary {
        method: Some(method),
        ..Default::default()
    };
    let (mut exact, mut aligned, mut false_any, mut false_count) = (0u64, 0u64, 0u64, 0usize);
    let (mut pos, mut energy) = (0.0, 0.0);
    for r in records {
        s.trials += 1;
        exact += u64::from(r.exact);
        aligned += u64::from(r.aligned);
        false_any += u64::from(r.false_any);
        false_count += r.false_count;
        if r.segmented {
            s.segmented += 1;
            pos += r.position_error;
        }
        if let Some(e) = r.best_energy {
            s.energy_trials += 1;
            energy += e;
        }
    }
    let n = s.trials.max(1) as f64;
    s.exact_rate = exact as f64 / n;
    s.aligned_rate = aligned as f64 / n;
    s.segmented_rate = s.segmented as f64 / n;
    s.false_segmentation_rate = false_any as f64 / n;
    s.mean_false_boundaries = false_count as f64 / n;
    s.mean_position_error = if s.segmented > 0 { pos / s.segmented as f64 } else { 0.0 };
    s.mean_best_energy = if s.energy_trials > 0 {
        energy / s.energy_trials as f64
    } else {
        0.0
    };
    s
}
