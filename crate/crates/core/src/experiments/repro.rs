// SPDX-License-Identifier: MIT OR Apache-2.0

//! The two-pulse worked example, end to end.
//!
//! The function has levels `(1, -1, 1, -1)` and region lengths
//! `(1.3, 1.45, 1.35, 1.3) T`, sampled nine times from `-0.95 T` and from
//! `-0.5 T`. Each sequence is corrupted by a fixed `+-x` pattern. The
//! checks below pin the behaviour of every method on this instance.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::difference::{difference_sequence, DifferenceSequence};
use crate::dp::{build_graph, longest_paths, path_to_segmentation, Vertex, WeightKind};
use crate::estimator::{energy_between, ReconstructedFunction};
use crate::experiments::pipeline::{build_estimate, ground_truth};
use crate::signal::{PiecewiseConstantFunction, SampleSequence, SamplingGrid};
use crate::threshold::{estimate_levels, search_threshold, Rejection, Segmentation, Verdict};
use crate::xcorr::{best_shifts, cross_correlation};
use crate::{Result, Scalar};

/// Grid starts in units of `T`.
pub const EXAMPLE_OFFSETS: [f64; 2] = [-0.95, -0.5];
pub const EXAMPLE_LEN: usize = 9;

const GAMMA1: [i64; 9] = [0, 1, 1, -1, 1, 1, -1, 0, 0];
const GAMMA2: [i64; 9] = [0, 1, -1, -1, 1, -1, 0, 0, 0];
const SIGNS1: [i64; 9] = [-1, 1, -1, 1, 1, -1, -1, 1, 1];
const SIGNS2: [i64; 9] = [-1, -1, 1, -1, -1, 1, 1, 1, -1];

/// `(shift, c0, c1, c2)`: the correlation at `shift` equals
/// `c0 + c1 x + c2 x^2` for `x` in `[0, 0.5]`.
pub const TABLE_ONE: [(i64, f64, f64, f64); 17] = [
    (-8, 0.0, 0.0, -1.0),
    (-7, 0.0, 1.0, -2.0),
    (-6, 0.0, 1.0, 1.0),
    (-5, -1.0, -3.0, 2.0),
    (-4, 2.0, -3.0, -3.0),
    (-3, 1.0, 5.0, -2.0),
    (-2, -4.0, 0.0, 5.0),
    (-1, 3.0, -9.0, 2.0),
    (0, 1.0, 3.0, -5.0),
    (1, -4.0, 1.0, 0.0),
    (2, 1.0, -2.0, 1.0),
    (3, 0.0, 2.0, 2.0),
    (4, -1.0, -2.0, 1.0),
    (5, 0.0, 4.0, -2.0),
    (6, 0.0, 0.0, 1.0),
    (7, 0.0, -1.0, -2.0),
    (8, 0.0, 0.0, 1.0),
];

/// Noise level at which shifts `-1` and `-3` tie.
pub fn transition_point() -> f64 {
    (7.0 - 41f64.sqrt()) / 4.0
}

pub fn example_function() -> PiecewiseConstantFunction {
    PiecewiseConstantFunction::two_pulse_example()
}

pub fn example_grids() -> [SamplingGrid; 2] {
    EXAMPLE_OFFSETS.map(|o| SamplingGrid::new(o, EXAMPLE_LEN, 1.0))
}

/// The fixed `+-x` noise patterns.
pub fn noise_patterns(x: f64) -> (Vec<f64>, Vec<f64>) {
    (
        SIGNS1.map(|s| s as f64 * x).to_vec(),
        SIGNS2.map(|s| s as f64 * x).to_vec(),
    )
}

/// The corrupted sequences `gamma + e` in any scalar type.
pub fn corrupted_pair_in<V: Scalar>(x: V) -> (Vec<V>, Vec<V>) {
    let make = |gamma: &[i64; 9], signs: &[i64; 9]| -> Vec<V> {
        gamma
            .iter()
            .zip(signs)
            .map(|(&g, &s)| V::from_i64(g).expect("small integer") + V::from_i64(s).expect("sign") * x.clone())
            .collect()
    };
    (make(&GAMMA1, &SIGNS1), make(&GAMMA2, &SIGNS2))
}

pub fn corrupted_pair(x: f64) -> (Vec<f64>, Vec<f64>) {
    corrupted_pair_in(x)
}

fn difference_pair(x: f64) -> (DifferenceSequence, DifferenceSequence) {
    let (y1, y2) = corrupted_pair(x);
    (
        difference_sequence(&SampleSequence::new(y1)),
        difference_sequence(&SampleSequence::new(y2)),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: u8, name: &str, failures: Vec<String>, ok_detail: String) -> Self {
        let passed = failures.is_empty();
        Check {
            id,
            name: name.to_string(),
            passed,
            detail: if passed { ok_detail } else { failures.join("; ") },
        }
    }
}

/// Correlations against the tabulated polynomials on 101 points of
/// `[0, 0.5]`.
pub fn check_correlation_table() -> Check {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for step in 0..=100 {
        let x = 0.5 * step as f64 / 100.0;
        let (y1, y2) = corrupted_pair(x);
        let profile = match cross_correlation(&SampleSequence::new(y1), &SampleSequence::new(y2)) {
            Ok(p) => p,
            Err(e) => return Check::new(1, "correlation table", vec![e.to_string()], String::new()),
        };
        for &(shift, c0, c1, c2) in &TABLE_ONE {
            let want = c0 + c1 * x + c2 * x * x;
            let err = profile.value_at(shift).map_or(f64::INFINITY, |got| (got - want).abs());
            worst = worst.max(err);
            if err > 1e-9 {
                failures.push(format!("x={x} shift={shift} off by {err:e}"));
            }
        }
    }
    Check::new(1, "correlation table", failures, format!("max deviation {worst:.1e}"))
}

/// Best shift before and after the transition, and both at it.
pub fn check_argmax_transition() -> Check {
    let mut failures = Vec::new();
    let best = |x: f64, tol: f64| -> Vec<i64> {
        let (y1, y2) = corrupted_pair(x);
        cross_correlation(&SampleSequence::new(y1), &SampleSequence::new(y2))
            .map(|p| best_shifts(&p, tol))
            .unwrap_or_default()
    };
    for (x, want) in [(0.10, vec![-1]), (0.20, vec![-3])] {
        let got = best(x, 0.0);
        if got != want {
            failures.push(format!("x={x}: best shifts {got:?}, expected {want:?}"));
        }
    }
    let xt = transition_point();
    let mut at = best(xt, 1e-9);
    at.sort_unstable();
    if at != vec![-3, -1] {
        failures.push(format!("x={xt}: maximizers {at:?}, expected -3 and -1"));
    }
    Check::new(2, "argmax transition", failures, format!("tie at x={xt:.6}"))
}

pub const THRESHOLD_XS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.49];

/// Threshold search recovers the segmentation and levels for `x < 0.5`
/// and fails at `x = 0.5` in both ways.
pub fn check_thresholding() -> Check {
    let mut failures = Vec::new();
    let want1 = [2, 4, 5, 7, 8];
    let want2 = [2, 3, 5, 6, 7];
    for x in THRESHOLD_XS {
        let (d1, d2) = difference_pair(x);
        let search = match search_threshold(&d1, &d2) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("x={x}: {e}"));
                continue;
            }
        };
        let Some(found) = search.feasible else {
            failures.push(format!("x={x}: no feasible threshold"));
            continue;
        };
        if !accepts_at(x, 1.0) {
            failures.push(format!("x={x}: v=1 not accepted"));
        }
        if found.seg1.boundaries() != want1 || found.seg2.boundaries() != want2 {
            failures.push(format!(
                "x={x}: boundaries {:?}/{:?}",
                found.seg1.boundaries(),
                found.seg2.boundaries()
            ));
            continue;
        }
        let (y1, y2) = corrupted_pair(x);
        match estimate_levels(&y1, &y2, &found.seg1, &found.seg2) {
            Ok(est) => {
                let want = [1.0 - x / 3.0, -1.0 + x / 3.0, 1.0 - x / 3.0, -1.0];
                if est.values.iter().zip(want).any(|(a, b)| (a - b).abs() > 1e-12) {
                    failures.push(format!("x={x}: levels {:?}", est.values));
                }
            }
            Err(e) => failures.push(format!("x={x}: {e}")),
        }
    }

    let (d1, d2) = difference_pair(0.5);
    match search_threshold(&d1, &d2) {
        Ok(search) => {
            if search.is_feasible() {
                failures.push("x=0.5: unexpectedly feasible".into());
            }
            let sign_ok = search.ladder.iter().any(|c| {
                c.v > 0.5 && c.v <= 1.0 && matches!(c.verdict, Verdict::Reject(Rejection::SignMismatch { .. }))
            });
            let count_ok = search.ladder.iter().any(|c| {
                c.v > 1.0 && c.v < 2.0 && c.verdict == Verdict::Reject(Rejection::CountMismatch { left: 4, right: 1 })
            });
            if !sign_ok {
                failures.push("x=0.5: no sign mismatch in (0.5, 1]".into());
            }
            if !count_ok {
                failures.push("x=0.5: no 4 vs 1 count mismatch in (1, 2)".into());
            }
        }
        Err(e) => failures.push(format!("x=0.5: {e}")),
    }
    Check::new(3, "thresholding", failures, "m=4 for x<0.5; infeasible at 0.5".into())
}

fn accepts_at(x: f64, v: f64) -> bool {
    let (d1, d2) = difference_pair(x);
    let pair = crate::threshold::threshold_pair(&d1, &d2, v);
    crate::threshold::compatibility_check(&pair.sig1, &pair.sig2).is_accept()
}

pub fn example_path() -> Vec<Vertex> {
    use Vertex::*;
    vec![
        Start,
        Align(0, 0),
        Seg(2, 2, 0),
        Seg(4, 3, 1),
        Seg(5, 5, 0),
        Seg(7, 6, 1),
        Seg(8, 7, 1),
        Terminal,
    ]
}

pub fn tied_paths() -> [Vec<Vertex>; 2] {
    use Vertex::*;
    let head = [
        Start,
        Align(0, 0),
        Seg(2, 2, 0),
        Seg(3, 3, 0),
        Seg(4, 4, 0),
        Seg(5, 5, 0),
    ];
    let mut first = head.to_vec();
    first.extend([Seg(6, 6, 0), Seg(8, 7, 1), Terminal]);
    let mut second = head.to_vec();
    second.extend([Seg(7, 6, 1), Seg(8, 7, 1), Terminal]);
    [first, second]
}

pub fn check_dp() -> Check {
    let mut failures = Vec::new();
    for x in [0.0, 0.2, 0.49] {
        let (d1, d2) = difference_pair(x);
        match build_graph(&d1, &d2, 1.0, WeightKind::W1) {
            Ok(g) => {
                let res = longest_paths(&g, 64);
                if res.weight != 5.0 || res.paths != vec![example_path()] || res.optimal_count != 1 {
                    failures.push(format!(
                        "x={x}: weight {} with {} path(s)",
                        res.weight, res.optimal_count
                    ));
                }
            }
            Err(e) => failures.push(format!("x={x}: {e}")),
        }
    }
    let (d1, d2) = difference_pair(0.5);
    match build_graph(&d1, &d2, 0.75, WeightKind::W1) {
        Ok(g) => {
            let res = longest_paths(&g, 64);
            if res.weight != 6.0 || res.paths != tied_paths().to_vec() {
                failures.push(format!("x=0.5: weight {} with paths {:?}", res.weight, res.paths));
            }
            for p in &res.paths {
                match path_to_segmentation(p) {
                    Ok(s) if s.regions() == 5 => {}
                    Ok(s) => failures.push(format!("x=0.5: {} regions", s.regions())),
                    Err(e) => failures.push(format!("x=0.5: {e}")),
                }
            }
        }
        Err(e) => failures.push(format!("x=0.5: {e}")),
    }
    Check::new(
        4,
        "longest paths",
        failures,
        "unique weight-5 path; two weight-6 paths at 0.5".into(),
    )
}

/// Exact reconstruction from the corrupted pair at rational noise level
/// `x`, for a segmentation and reference index.
pub fn exact_reconstruction(
    x: Rational64,
    seg1: &Segmentation,
    seg2: &Segmentation,
    l: usize,
) -> Result<(ReconstructedFunction<Rational64>, bool)> {
    let (y1, y2) = corrupted_pair_in(x);
    let levels = estimate_levels(&y1, &y2, seg1, seg2)?;
    let est = build_estimate(seg1, seg2, &levels.values, l, 1.0)?;
    Ok((est.reconstruction, est.refined))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TieCandidate {
    pub path: usize,
    pub l: usize,
    /// Exact energy against the noiseless estimate, as `(numer, denom)`
    /// in units of `T`; `None` when the estimate cannot be built.
    pub energy: Option<(i64, i64)>,
    pub refined: bool,
}

/// Energies of the thresholding limit and of the best tied-path estimate,
/// both against the noiseless estimate with reference index 2, plus the
/// full candidate list for the tie.
pub fn example_energies() -> Result<(Rational64, Vec<TieCandidate>)> {
    let seg1 = Segmentation::new(vec![2, 4, 5, 7, 8])?;
    let seg2 = Segmentation::new(vec![2, 3, 5, 6, 7])?;
    let (clean, _) = exact_reconstruction(Rational64::from_integer(0), &seg1, &seg2, 2)?;
    let (limit, _) = exact_reconstruction(Rational64::new(1, 2), &seg1, &seg2, 2)?;
    let threshold_energy = energy_between(&clean, &limit);

    let mut candidates = Vec::new();
    for (p, path) in tied_paths().iter().enumerate() {
        let (s1, s2) = path_to_segmentation(path)?.segmentations()?;
        for l in 0..=s1.region_count() {
            let built = exact_reconstruction(Rational64::new(1, 2), &s1, &s2, l);
            let (energy, refined) = match built {
                Ok((f, refined)) => {
                    let e = energy_between(&clean, &f);
                    (Some((*e.numer(), *e.denom())), refined)
                }
                Err(_) => (None, false),
            };
            candidates.push(TieCandidate {
                path: p + 1,
                l,
                energy,
                refined,
            });
        }
    }
    Ok((threshold_energy, candidates))
}

/// Best tie candidate: smallest energy, then lowest path and index.
pub fn best_tie_candidate(candidates: &[TieCandidate]) -> Option<&TieCandidate> {
    candidates.iter().filter(|c| c.energy.is_some()).min_by(|a, b| {
        let ea = a.energy.map(|(n, d)| Rational64::new(n, d));
        let eb = b.energy.map(|(n, d)| Rational64::new(n, d));
        ea.cmp(&eb).then(a.path.cmp(&b.path)).then(a.l.cmp(&b.l))
    })
}

pub fn check_energies() -> Check {
    let mut failures = Vec::new();
    match example_energies() {
        Ok((limit, candidates)) => {
            if limit != Rational64::new(11, 144) {
                failures.push(format!("threshold limit energy {limit}"));
            }
            match best_tie_candidate(&candidates) {
                Some(best) => {
                    let e = best.energy.map(|(n, d)| Rational64::new(n, d));
                    if e != Some(Rational64::new(41, 144)) || (best.path, best.l) != (2, 3) {
                        failures.push(format!("best tie candidate {best:?}"));
                    }
                }
                None => failures.push("no tie candidate could be reconstructed".into()),
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    Check::new(5, "energies", failures, "11/144 T and 41/144 T".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelReport {
    pub x: f64,
    pub best_shifts: Vec<i64>,
    pub threshold_feasible: bool,
    pub threshold_v: Option<f64>,
    pub threshold_boundaries: Option<(Vec<usize>, Vec<usize>)>,
    pub levels: Option<Vec<f64>>,
    pub dp_v: f64,
    pub dp_weight: f64,
    pub dp_paths: Vec<Vec<Vertex>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperRepro {
    pub true_boundaries: (Vec<usize>, Vec<usize>),
    pub levels: Vec<NoiseLevelReport>,
    pub tie_candidates: Vec<TieCandidate>,
    pub checks: Vec<Check>,
}

impl PaperRepro {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const REPORT_XS: [f64; 5] = [0.0, 0.15, 0.3, 0.49, 0.5];

/// Runs every method on the worked example at several noise levels and
/// evaluates the example checks.
pub fn run_paper_repro() -> Result<PaperRepro> {
    let [g1, g2] = example_grids();
    let truth = ground_truth(&example_function(), &g1, &g2)?;
    let mut levels = Vec::new();
    for x in REPORT_XS {
        let (y1, y2) = corrupted_pair(x);
        let (s1, s2) = (SampleSequence::new(y1.clone()), SampleSequence::new(y2.clone()));
        let shifts = best_shifts(&cross_correlation(&s1, &s2)?, 1e-9);
        let (d1, d2) = (difference_sequence(&s1), difference_sequence(&s2));
        let search = search_threshold(&d1, &d2)?;
        let (threshold_v, threshold_boundaries, est) = match &search.feasible {
            Some(f) => (
                Some(f.v),
                Some((f.seg1.boundaries().to_vec(), f.seg2.boundaries().to_vec())),
                Some(estimate_levels(&y1, &y2, &f.seg1, &f.seg2)?.values),
            ),
            None => (None, None, None),
        };
        let dp_v = if x < 0.5 { 1.0 } else { 0.75 };
        let res = longest_paths(&build_graph(&d1, &d2, dp_v, WeightKind::W1)?, 64);
        levels.push(NoiseLevelReport {
            x,
            best_shifts: shifts,
            threshold_feasible: search.is_feasible(),
            threshold_v,
            threshold_boundaries,
            levels: est,
            dp_v,
            dp_weight: res.weight,
            dp_paths: res.paths,
        });
    }
    let (_, tie_candidates) = example_energies()?;
    let checks = vec![
        check_correlation_table(),
        check_argmax_transition(),
        check_thresholding(),
        check_dp(),
        check_energies(),
    ];
    Ok(PaperRepro {
        true_boundaries: (truth.seg1.boundaries().to_vec(), truth.seg2.boundaries().to_vec()),
        levels,
        tie_candidates,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sample;

    #[test]
    fn sequences_match_sampled_function() {
        let f = example_function();
        let [g1, g2] = example_grids();
        let (y1, y2) = corrupted_pair(0.0);
        assert_eq!(sample(&f, &g1).values(), y1.as_slice());
        assert_eq!(sample(&f, &g2).values(), y2.as_slice());
    }

    #[test]
    fn exact_pair_matches_float_pair() {
        let (a, b) = corrupted_pair_in(Rational64::new(3, 10));
        let (fa, fb) = corrupted_pair(0.3);
        for (r, f) in a.iter().chain(&b).zip(fa.iter().chain(&fb)) {
            assert!((*r.numer() as f64 / *r.denom() as f64 - f).abs() < 1e-15);
        }
    }

    #[test]
    fn reproduction_passes() {
        let report = run_paper_repro().unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(report.true_boundaries, (vec![2, 4, 5, 7, 8], vec![2, 3, 5, 6, 7]));
        let at = |x: f64| report.levels.iter().find(|r| r.x == x).unwrap();
        assert_eq!(at(0.0).best_shifts, vec![-1]);
        assert!(at(0.0).threshold_feasible);
        assert!(!at(0.5).threshold_feasible);
        let lv = at(0.3).levels.clone().unwrap();
        for (a, b) in lv.iter().zip([0.9, -0.9, 0.9, -1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
