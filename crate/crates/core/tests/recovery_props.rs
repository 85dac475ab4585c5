// SPDX-License-Identifier: MIT OR Apache-2.0

use pcalign::difference::{difference_sequence, nonzero_signature, DifferenceSequence};
use pcalign::dp::{build_graph, longest_paths, path_to_segmentation, WeightKind};
use pcalign::experiments::random::{random_instance, Instance, InstanceParams};
use pcalign::noise::{apply_noise, NoiseSpec, Seed};
use pcalign::signal::{sample, SamplingGrid};
use pcalign::threshold::{apply_threshold, compatibility_check, search_threshold, threshold_pair};
use pcalign::xcorr::cross_correlation;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 1-based index of the first sample at or after each discontinuity.
fn true_boundaries(inst: &Instance, g: &SamplingGrid) -> Vec<usize> {
    let snap = 1e-12 * g.interval;
    inst.function
        .breakpoints()
        .iter()
        .map(|&b| {
            (0..g.count)
                .find(|&k| g.first_sample_time + k as f64 * g.interval >= b - snap)
                .expect("grid covers the support")
                + 1
        })
        .collect()
}

/// Jump sequence `g_1, g_2 - g_1, ..., -g_m`.
fn jumps(inst: &Instance) -> Vec<f64> {
    let levels = inst.function.levels();
    let mut prev = 0.0;
    let mut out: Vec<f64> = levels
        .iter()
        .map(|&g| {
            let j = g - prev;
            prev = g;
            j
        })
        .collect();
    out.push(-prev);
    out
}

fn noisy_differences(inst: &Instance, spec: &NoiseSpec, seed: u64) -> (DifferenceSequence, DifferenceSequence) {
    let s = Seed(seed);
    let y1 = apply_noise(&sample(&inst.function, &inst.grids[0]), spec, s.derive(1)).unwrap();
    let y2 = apply_noise(&sample(&inst.function, &inst.grids[1]), spec, s.derive(2)).unwrap();
    (difference_sequence(&y1), difference_sequence(&y2))
}

/// Uniform noise below a quarter of the smallest jump, so differences of
/// noise stay below half of it.
fn low_noise(inst: &Instance) -> NoiseSpec {
    NoiseSpec::Uniform {
        halfwidth: 0.24 * inst.function.min_jump(),
    }
}

fn instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = InstanceParams::default();
    (0..count).map(|_| random_instance(&mut rng, &p)).collect()
}

#[test]
fn noiseless_signatures_locate_every_discontinuity() {
    for inst in instances(3, 1000) {
        let want = jumps(&inst);
        for g in &inst.grids {
            let d = difference_sequence(&sample(&inst.function, g));
            let sig = nonzero_signature(&d, 0.0);
            assert_eq!(sig.positions(), true_boundaries(&inst, g));
            let got = sig.values();
            assert_eq!(got.len(), want.len());
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12, "{got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn thresholding_at_the_margin_recovers_the_truth() {
    for (k, inst) in instances(4, 1000).into_iter().enumerate() {
        let spec = low_noise(&inst);
        let (d1, d2) = noisy_differences(&inst, &spec, k as u64);
        let v = inst.function.min_jump() / 2.0;
        let pair = threshold_pair(&d1, &d2, v);
        let verdict = compatibility_check(&pair.sig1, &pair.sig2);
        assert!(verdict.is_accept(), "trial {k}: {verdict:?}");
        assert_eq!(
            pair.sig1.positions(),
            true_boundaries(&inst, &inst.grids[0]),
            "trial {k}"
        );
        assert_eq!(
            pair.sig2.positions(),
            true_boundaries(&inst, &inst.grids[1]),
            "trial {k}"
        );
    }
}

/// The ascending search stops at the smallest accepted candidate, which can
/// sit below the margin and keep sign-consistent noise spikes. It never
/// drops a true boundary, since every accepted candidate is below the margin
/// class and every true jump is above it. The exact rate is reported.
#[test]
fn ascending_search_keeps_every_true_boundary() {
    let mut exact = 0;
    let total = 1000;
    for (k, inst) in instances(5, total).into_iter().enumerate() {
        let spec = low_noise(&inst);
        let (d1, d2) = noisy_differences(&inst, &spec, k as u64);
        let found = search_threshold(&d1, &d2)
            .unwrap()
            .feasible
            .expect("a margin threshold exists");
        let want1 = true_boundaries(&inst, &inst.grids[0]);
        let want2 = true_boundaries(&inst, &inst.grids[1]);
        let smallest_true = want1
            .iter()
            .map(|&b| d1.at(b).abs())
            .chain(want2.iter().map(|&b| d2.at(b).abs()))
            .fold(f64::INFINITY, f64::min);
        assert!(found.v < smallest_true, "trial {k}");
        assert!(want1.iter().all(|b| found.seg1.boundaries().contains(b)), "trial {k}");
        assert!(want2.iter().all(|b| found.seg2.boundaries().contains(b)), "trial {k}");
        exact += usize::from(found.seg1.boundaries() == want1 && found.seg2.boundaries() == want2);
    }
    println!("ascending search exact on {exact}/{total} low-noise trials");
}

#[test]
fn longest_path_at_the_margin_recovers_the_truth() {
    for (k, inst) in instances(6, 1000).into_iter().enumerate() {
        let spec = low_noise(&inst);
        let (d1, d2) = noisy_differences(&inst, &spec, 1000 + k as u64);
        let v = inst.function.min_jump() / 2.0;
        let graph = build_graph(&d1, &d2, v, WeightKind::W1).unwrap();
        let res = longest_paths(&graph, 8);
        let m = inst.function.region_count();
        assert_eq!(res.weight, (m + 1) as f64, "trial {k}");
        assert_eq!(res.optimal_count, 1, "trial {k}");
        let seg = path_to_segmentation(&res.paths[0]).unwrap();
        assert_eq!(seg.boundaries1, true_boundaries(&inst, &inst.grids[0]), "trial {k}");
        assert_eq!(seg.boundaries2, true_boundaries(&inst, &inst.grids[1]), "trial {k}");
    }
}

fn counts(b: &[usize]) -> Vec<i64> {
    b.windows(2).map(|w| (w[1] - w[0]) as i64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn returned_paths_respect_count_constraints(
        seed in any::<u64>(),
        sigma in 0.05f64..1.0,
        v in 0.05f64..1.5,
        kind in prop::sample::select(vec![WeightKind::W1, WeightKind::W2, WeightKind::W3]),
    ) {
        let inst = instances(seed, 1).pop().unwrap();
        let (d1, d2) = noisy_differences(&inst, &NoiseSpec::Gaussian { sigma }, seed);
        let res = longest_paths(&build_graph(&d1, &d2, v, kind).unwrap(), 16);
        for path in &res.paths {
            let seg = path_to_segmentation(path).unwrap();
            let (c1, c2) = (counts(&seg.boundaries1), counts(&seg.boundaries2));
            prop_assert_eq!(c1.len(), c2.len());
            // Per-region counts within one sample.
            prop_assert!(c1.iter().zip(&c2).all(|(a, b)| (a - b).abs() <= 1), "{:?} vs {:?}", c1, c2);
            // Totals counted from the alignment vertex within one sample.
            let (k1, k2) = seg.alignment;
            for (&b1, &b2) in seg.boundaries1.iter().zip(&seg.boundaries2) {
                let offset = (b1 as i64 - k1 as i64) - (b2 as i64 - k2 as i64);
                prop_assert!(offset.abs() <= 1, "{:?}", seg);
            }
            prop_assert!(c1.iter().chain(&c2).all(|&c| c >= 1));
            let w = graph_weight(&d1, &d2, v, kind, path);
            prop_assert!((w - res.weight).abs() <= 1e-9 * res.weight.abs().max(1.0));
        }
    }

    #[test]
    fn thresholding_is_idempotent(xs in prop::collection::vec(-5.0f64..5.0, 1..40), v in 0.0f64..5.0) {
        let d = DifferenceSequence::new(xs);
        let once = apply_threshold(&d, v);
        prop_assert_eq!(apply_threshold(&once, v), once);
    }

    #[test]
    fn compatibility_is_symmetric(
        a in prop::collection::vec(prop::sample::select(vec![-2.0f64, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0]), 2..14),
        b in prop::collection::vec(prop::sample::select(vec![-2.0f64, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0]), 2..14),
    ) {
        let s1 = nonzero_signature(&DifferenceSequence::new(a), 0.0);
        let s2 = nonzero_signature(&DifferenceSequence::new(b), 0.0);
        prop_assert_eq!(
            compatibility_check(&s1, &s2).is_accept(),
            compatibility_check(&s2, &s1).is_accept()
        );
    }

    #[test]
    fn correlation_is_antisymmetric_in_shift(
        pair in (1usize..20).prop_flat_map(|n| (
            prop::collection::vec(-4i32..=4, n),
            prop::collection::vec(-4i32..=4, n),
        )),
    ) {
        let y1: Vec<f64> = pair.0.iter().map(|&x| x as f64 * 0.25).collect();
        let y2: Vec<f64> = pair.1.iter().map(|&x| x as f64 * 0.25).collect();
        let p12 = cross_correlation(&y1.clone().into(), &y2.clone().into()).unwrap();
        let p21 = cross_correlation(&y2.into(), &y1.into()).unwrap();
        for (i, r) in p12.iter() {
            prop_assert_eq!(Some(r), p21.value_at(-i));
        }
    }
}

fn graph_weight(
    d1: &DifferenceSequence,
    d2: &DifferenceSequence,
    v: f64,
    kind: WeightKind,
    path: &[pcalign::dp::Vertex],
) -> f64 {
    build_graph(d1, d2, v, kind).unwrap().path_weight(path).unwrap()
}
