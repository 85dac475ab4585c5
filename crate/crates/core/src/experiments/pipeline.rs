// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulate, corrupt, align and segment, estimate, score.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::difference::{difference_sequence, DifferenceSequence};
use crate::dp::{build_graph, longest_paths, path_to_segmentation, AlignmentGraph, PathResult, Vertex};
use crate::estimator::{
    classify_indices, energy_between, error_energy, interval_bounds, reconstruct, refine_min_spacing,
    IndexClassification, IntervalBounds, ReconstructedFunction,
};
use crate::experiments::config::{ExperimentConfig, Method};
use crate::noise::{apply_noise, Seed};
use crate::signal::{region_counts, sample, PiecewiseConstantFunction, RegionCounts, SampleSequence, SamplingGrid};
use crate::threshold::{
    compatibility_check, estimate_levels, search_threshold, threshold_pair, Candidate, Segmentation, ThresholdSearch,
    Verdict,
};
use crate::xcorr::{best_shifts, cross_correlation};
use crate::{Error, Result, Scalar};

/// Noise-free facts about an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub levels: Vec<f64>,
    pub counts1: RegionCounts,
    pub counts2: RegionCounts,
    /// First sample after each discontinuity, per sequence.
    pub seg1: Segmentation,
    pub seg2: Segmentation,
}

impl Truth {
    /// Offset that lines up the first true boundary of both sequences.
    pub fn shift(&self) -> i64 {
        self.seg2.boundaries()[0] as i64 - self.seg1.boundaries()[0] as i64
    }

    /// Index of the true discontinuity observed at this pair of positions.
    pub fn discontinuity_at(&self, b1: usize, b2: usize) -> Option<usize> {
        self.seg1
            .boundaries()
            .iter()
            .zip(self.seg2.boundaries())
            .position(|(&a, &b)| a == b1 && b == b2)
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.seg1
            .boundaries()
            .iter()
            .copied()
            .zip(self.seg2.boundaries().iter().copied())
            .collect()
    }
}

fn true_segmentation(counts: &RegionCounts) -> Result<Segmentation> {
    let mut boundaries = Vec::with_capacity(counts.eta.len() + 1);
    let mut b = counts.leading_zeros + 1;
    boundaries.push(b);
    for &eta in &counts.eta {
        b += eta;
        boundaries.push(b);
    }
    Segmentation::new(boundaries)
}

pub fn ground_truth(func: &PiecewiseConstantFunction, grid1: &SamplingGrid, grid2: &SamplingGrid) -> Result<Truth> {
    let counts1 = region_counts(func, grid1)?;
    let counts2 = region_counts(func, grid2)?;
    Ok(Truth {
        levels: func.levels().to_vec(),
        seg1: true_segmentation(&counts1)?,
        seg2: true_segmentation(&counts2)?,
        counts1,
        counts2,
    })
}

/// A reconstruction for one segmentation and reference index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<V = f64> {
    pub l: usize,
    pub classification: IndexClassification,
    /// Bounds actually used; tightened when the raw ones overlap.
    pub bounds: IntervalBounds,
    pub refined: bool,
    pub reconstruction: ReconstructedFunction<V>,
    /// Predicted squared error for the estimated levels, units of `T`.
    pub predicted_energy: V,
}

/// Classifies, bounds and reconstructs. Overlapping bounds are tightened
/// by the minimum region spacing; if that does not resolve them the
/// estimate is rejected.
pub fn build_estimate<V: Scalar>(
    seg1: &Segmentation,
    seg2: &Segmentation,
    levels: &[V],
    l: usize,
    sampling_interval: f64,
) -> Result<Estimate<V>> {
    let classification = classify_indices(&seg1.region_counts(), &seg2.region_counts(), l)?;
    let raw = interval_bounds(&classification);
    let (bounds, refined) = match raw.first_overlap() {
        None => (raw, false),
        Some(index) => match refine_min_spacing(&raw) {
            Some(b) if b.first_overlap().is_none() => (b, true),
            _ => return Err(Error::OverlappingBounds { index }),
        },
    };
    let reconstruction = reconstruct(levels, &bounds, sampling_interval)?;
    let predicted_energy = error_energy(&classification, levels);
    Ok(Estimate {
        l,
        classification,
        bounds,
        refined,
        reconstruction,
        predicted_energy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredEstimate {
    /// Index into the method's segmentation list.
    pub segmentation: usize,
    pub estimate: Estimate,
    /// True discontinuity used as reference, when the estimate's reference
    /// sits on one.
    pub true_reference: Option<usize>,
    /// Energy against the noiseless estimate with the same reference.
    pub energy_vs_truth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationOutcome {
    pub boundaries1: Vec<usize>,
    pub boundaries2: Vec<usize>,
    pub shift: i64,
    pub levels: Vec<f64>,
    /// Equal to the true boundaries in both sequences.
    pub exact: bool,
    /// Boundary pairs that match no true discontinuity.
    pub false_boundaries: usize,
    /// True discontinuities with no matching boundary pair.
    pub missed_boundaries: usize,
    /// Mean over boundary pairs of the distance to the nearest true pair.
    pub mean_position_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XcorrOutcome {
    pub shifts: Vec<i64>,
    pub values: Vec<f64>,
    pub best_shifts: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpOutcome {
    pub v: f64,
    pub weight: f64,
    pub optimal_count: u64,
    pub truncated: bool,
    pub paths: Vec<Vec<Vertex>>,
    /// Paths whose segmentations could not be used.
    pub invalid_paths: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub shift: Option<i64>,
    pub aligned: bool,
    pub xcorr: Option<XcorrOutcome>,
    pub threshold: Option<ThresholdSearch>,
    pub dp: Option<DpOutcome>,
    pub segmentations: Vec<SegmentationOutcome>,
    pub estimates: Vec<ScoredEstimate>,
    /// Estimate with the least energy against truth, falling back to the
    /// least predicted energy.
    pub best: Option<usize>,
    pub diagnostics: Vec<String>,
    pub elapsed_ms: f64,
}

impl MethodReport {
    fn new(method: Method) -> Self {
        Self {
            method,
            shift: None,
            aligned: false,
            xcorr: None,
            threshold: None,
            dp: None,
            segmentations: Vec::new(),
            estimates: Vec::new(),
            best: None,
            diagnostics: Vec::new(),
            elapsed_ms: 0.0,
        }
    }

    pub fn best_estimate(&self) -> Option<&ScoredEstimate> {
        self.best.map(|i| &self.estimates[i])
    }

    pub fn exact(&self) -> bool {
        self.segmentations.len() == 1 && self.segmentations[0].exact
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub truth: Truth,
    pub methods: Vec<MethodReport>,
}

impl RunReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunReport {
        let mut out = self.clone();
        for m in &mut out.methods {
            m.elapsed_ms = 0.0;
        }
        out
    }
}

/// The observed pair for one noise realisation.
pub fn observe(cfg: &ExperimentConfig, seed: Seed) -> Result<(SampleSequence, SampleSequence)> {
    let func = cfg.function().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let [g1, g2] = cfg.grids();
    let (c1, c2) = (sample(&func, &g1), sample(&func, &g2));
    match &cfg.noise {
        None => Ok((c1, c2)),
        Some(spec) => Ok((
            apply_noise(&c1, spec, seed.derive(1))?,
            apply_noise(&c2, spec, seed.derive(2))?,
        )),
    }
}

/// Runs the configured methods on the configured instance.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_trial(cfg, Seed(cfg.seed))
}

/// Runs the configured methods on one noise realisation.
pub fn run_trial(cfg: &ExperimentConfig, seed: Seed) -> Result<RunReport> {
    let func = cfg.function().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let [g1, g2] = cfg.grids();
    let truth = ground_truth(&func, &g1, &g2)?;
    let (y1, y2) = observe(cfg, seed)?;
    let methods = cfg
        .methods
        .iter()
        .map(|&m| run_method(cfg, m, &truth, &y1, &y2))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        seed: seed.0,
        y1: y1.into_values(),
        y2: y2.into_values(),
        truth,
        methods,
    })
}

pub fn run_method(
    cfg: &ExperimentConfig,
    method: Method,
    truth: &Truth,
    y1: &SampleSequence,
    y2: &SampleSequence,
) -> Result<MethodReport> {
    let start = Instant::now();
    let mut report = MethodReport::new(method);
    let (d1, d2) = (difference_sequence(y1), difference_sequence(y2));
    let mut segs: Vec<(Segmentation, Segmentation)> = Vec::new();
    match method {
        Method::Xcorr => {
            let profile = cross_correlation(y1, y2)?;
            let best = best_shifts(&profile, cfg.xcorr.tolerance);
            report.shift = best.first().copied();
            if best.len() > 1 {
                report
                    .diagnostics
                    .push(format!("{} shifts tie for the maximum", best.len()));
            }
            report.xcorr = Some(XcorrOutcome {
                shifts: profile.shifts,
                values: profile.values,
                best_shifts: best,
            });
        }
        Method::Threshold => {
            let search = threshold_search(cfg.threshold.v, &d1, &d2)?;
            match &search.feasible {
                Some(f) => segs.push((f.seg1.clone(), f.seg2.clone())),
                None => {
                    for c in &search.ladder {
                        if let Verdict::Reject(r) = &c.verdict {
                            report.diagnostics.push(format!("v={}: {r}", c.v));
                        }
                    }
                    report.diagnostics.push("no feasible threshold".into());
                }
            }
            report.threshold = Some(search);
        }
        Method::Dp => {
            let v = cfg.dp_threshold().map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let graph = build_graph(&d1, &d2, v, cfg.dp.weight)?;
            let res = longest_paths(&graph, cfg.dp.max_paths);
            let mut invalid = Vec::new();
            for (k, p) in res.paths.iter().enumerate() {
                match path_to_segmentation(p).and_then(|s| s.segmentations()) {
                    Ok(pair) => segs.push(pair),
                    Err(e) => {
                        invalid.push(k);
                        report.diagnostics.push(format!("path {k}: {e}"));
                    }
                }
            }
            if res.optimal_count > 1 {
                report
                    .diagnostics
                    .push(format!("{} maximum-weight paths", res.optimal_count));
            }
            if res.truncated {
                report
                    .diagnostics
                    .push(format!("path list truncated at {}", cfg.dp.max_paths));
            }
            report.dp = Some(dp_outcome(v, &res, invalid));
        }
    }

    for (k, (s1, s2)) in segs.iter().enumerate() {
        let levels = estimate_levels(y1.values(), y2.values(), s1, s2)?.values;
        report
            .segmentations
            .push(score_segmentation(truth, s1, s2, levels.clone()));
        let m = s1.region_count();
        let refs: Vec<usize> = match &cfg.references {
            Some(r) => r.iter().copied().filter(|&l| l <= m).collect(),
            None => (0..=m).collect(),
        };
        for l in refs {
            match build_estimate(s1, s2, &levels, l, cfg.function.t) {
                Ok(estimate) => {
                    let true_reference = truth.discontinuity_at(s1.boundaries()[l], s2.boundaries()[l]);
                    let energy_vs_truth = match true_reference {
                        Some(tl) => truth_estimate(truth, tl, cfg.function.t)
                            .ok()
                            .map(|t| energy_between(&t.reconstruction, &estimate.reconstruction) * cfg.function.t),
                        None => None,
                    };
                    report.estimates.push(ScoredEstimate {
                        segmentation: k,
                        estimate,
                        true_reference,
                        energy_vs_truth,
                    });
                }
                Err(e) => report.diagnostics.push(format!("segmentation {k}, l={l}: {e}")),
            }
        }
    }
    if let Some(first) = report.segmentations.first() {
        report.shift = Some(first.shift);
    }
    report.aligned = report.shift == Some(truth.shift());
    report.best = pick_best(&report.estimates);
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn threshold_search(v: Option<f64>, d1: &DifferenceSequence, d2: &DifferenceSequence) -> Result<ThresholdSearch> {
    let Some(v) = v else {
        return search_threshold(d1, d2);
    };
    let pair = threshold_pair(d1, d2, v);
    let verdict = compatibility_check(&pair.sig1, &pair.sig2);
    let feasible = if verdict.is_accept() {
        Some(crate::threshold::FeasibleThreshold {
            v,
            seg1: Segmentation::new(pair.sig1.positions())?,
            seg2: Segmentation::new(pair.sig2.positions())?,
            pair,
            accepted: vec![v],
        })
    } else {
        None
    };
    Ok(ThresholdSearch {
        ladder: vec![Candidate { v, verdict }],
        feasible,
    })
}

fn dp_outcome(v: f64, res: &PathResult, invalid_paths: Vec<usize>) -> DpOutcome {
    DpOutcome {
        v,
        weight: res.weight,
        optimal_count: res.optimal_count,
        truncated: res.truncated,
        paths: res.paths.clone(),
        invalid_paths,
    }
}

/// The noiseless estimate: true counts, true levels, reference `l`.
pub fn truth_estimate(truth: &Truth, l: usize, sampling_interval: f64) -> Result<Estimate> {
    build_estimate(&truth.seg1, &truth.seg2, &truth.levels, l, sampling_interval)
}

pub fn score_segmentation(
    truth: &Truth,
    s1: &Segmentation,
    s2: &Segmentation,
    levels: Vec<f64>,
) -> SegmentationOutcome {
    let true_pairs = truth.pairs();
    let pairs: Vec<(usize, usize)> = s1
        .boundaries()
        .iter()
        .copied()
        .zip(s2.boundaries().iter().copied())
        .collect();
    let false_boundaries = pairs.iter().filter(|p| !true_pairs.contains(p)).count();
    let missed_boundaries = true_pairs.iter().filter(|p| !pairs.contains(p)).count();
    let distance = |(a, b): (usize, usize)| {
        true_pairs
            .iter()
            .map(|&(c, d)| a.abs_diff(c) + b.abs_diff(d))
            .min()
            .unwrap_or(0) as f64
    };
    let mean_position_error = pairs.iter().map(|&p| distance(p)).sum::<f64>() / pairs.len() as f64;
    SegmentationOutcome {
        boundaries1: s1.boundaries().to_vec(),
        boundaries2: s2.boundaries().to_vec(),
        shift: s2.boundaries()[0] as i64 - s1.boundaries()[0] as i64,
        levels,
        exact: s1 == &truth.seg1 && s2 == &truth.seg2,
        false_boundaries,
        missed_boundaries,
        mean_position_error,
    }
}

fn pick_best(estimates: &[ScoredEstimate]) -> Option<usize> {
    let by = |key: fn(&ScoredEstimate) -> Option<f64>| {
        estimates
            .iter()
            .enumerate()
            .filter_map(|(i, e)| key(e).map(|k| (i, k)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    };
    by(|e| e.energy_vs_truth).or_else(|| by(|e| Some(e.estimate.predicted_energy)))
}

/// Writes `report.json`, `segmentations.csv` and `estimates.csv` into `dir`,
/// plus `graph.dot` when `graph` is given.
pub fn emit_report(
    report: &RunReport,
    dir: &Path,
    graph: Option<(&AlignmentGraph, &[Vec<Vertex>])>,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;

    let mut w = csv::Writer::from_path(dir.join("segmentations.csv"))?;
    w.write_record([
        "method",
        "index",
        "boundaries1",
        "boundaries2",
        "shift",
        "levels",
        "exact",
        "false_boundaries",
        "missed_boundaries",
        "mean_position_error",
    ])?;
    for m in &report.methods {
        for (k, s) in m.segmentations.iter().enumerate() {
            w.write_record([
                m.method.to_string(),
                k.to_string(),
                join(&s.boundaries1),
                join(&s.boundaries2),
                s.shift.to_string(),
                join(&s.levels),
                s.exact.to_string(),
                s.false_boundaries.to_string(),
                s.missed_boundaries.to_string(),
                s.mean_position_error.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("estimates.csv"))?;
    w.write_record([
        "method",
        "segmentation",
        "l",
        "refined",
        "precondition_ok",
        "predicted_energy",
        "true_reference",
        "energy_vs_truth",
        "best",
    ])?;
    for m in &report.methods {
        for (i, e) in m.estimates.iter().enumerate() {
            w.write_record([
                m.method.to_string(),
                e.segmentation.to_string(),
                e.estimate.l.to_string(),
                e.estimate.refined.to_string(),
                e.estimate.classification.precondition_ok().to_string(),
                e.estimate.predicted_energy.to_string(),
                e.true_reference.map(|v| v.to_string()).unwrap_or_default(),
                e.energy_vs_truth.map(|v| v.to_string()).unwrap_or_default(),
                (m.best == Some(i)).to_string(),
            ])?;
        }
    }
    w.flush()?;

    if let Some((g, paths)) = graph {
        std::fs::write(dir.join("graph.dot"), g.to_dot(paths))?;
    }
    Ok(())
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::repro::example_grids;
    use crate::noise::NoiseSpec;

    const EXAMPLE: &str = r#"
seed = 3

[function]
levels = [1.0, -1.0, 1.0, -1.0]
lengths_in_t = [1.3, 1.45, 1.35, 1.3]

[grids]
offsets = [-0.95, -0.5]
n = 9

[threshold]
v = 1.0

[dp]
v = 1.0
"#;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml(EXAMPLE).unwrap()
    }

    #[test]
    fn truth_of_example() {
        let [g1, g2] = example_grids();
        let truth = ground_truth(&PiecewiseConstantFunction::two_pulse_example(), &g1, &g2).unwrap();
        assert_eq!(truth.seg1.boundaries(), &[2, 4, 5, 7, 8]);
        assert_eq!(truth.seg2.boundaries(), &[2, 3, 5, 6, 7]);
        assert_eq!(truth.shift(), 0);
        assert_eq!(truth.discontinuity_at(5, 5), Some(2));
    }

    #[test]
    fn noiseless_run_is_exact() {
        let report = run_pipeline(&config()).unwrap();
        for m in [Method::Threshold, Method::Dp] {
            let r = report.method(m).unwrap();
            assert!(r.exact(), "{m}");
            assert!(r.aligned);
            let best = r.best_estimate().unwrap();
            assert_eq!(best.energy_vs_truth, Some(0.0));
        }
        assert_eq!(report.method(Method::Xcorr).unwrap().shift, Some(-1));
    }

    #[test]
    fn runs_are_reproducible() {
        let mut cfg = config();
        cfg.noise = Some(NoiseSpec::Gaussian { sigma: 0.1 });
        let a = serde_json::to_string(&run_pipeline(&cfg).unwrap().without_timing()).unwrap();
        let b = serde_json::to_string(&run_pipeline(&cfg).unwrap().without_timing()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn emitted_report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_pipeline(&config()).unwrap();
        emit_report(&report, dir.path(), None).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        let csv = std::fs::read_to_string(dir.path().join("segmentations.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }
}
