// SPDX-License-Identifier: MIT OR Apache-2.0

//! Noise studies on the two-pulse instance sampled at offsets -0.95T and
//! -0.5T with nine samples each.

use pcalign::difference::difference_sequence;
use pcalign::experiments::{run_monte_carlo, ExperimentConfig, Method};
use pcalign::threshold::{compatibility_check, search_threshold, threshold_pair};

const GAMMA1: [f64; 9] = [0.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 0.0, 0.0];
const GAMMA2: [f64; 9] = [0.0, 1.0, -1.0, -1.0, 1.0, -1.0, 0.0, 0.0, 0.0];
const TRUE1: [usize; 5] = [2, 4, 5, 7, 8];
const TRUE2: [usize; 5] = [2, 3, 5, 6, 7];

fn config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
seed = 2024
methods = ["threshold", "dp"]

[function]
levels = [1.0, -1.0, 1.0, -1.0]
lengths_in_t = [1.3, 1.45, 1.35, 1.3]

[grids]
offsets = [-0.95, -0.5]
n = 9

{extra}
"#
    ))
    .unwrap()
}

/// Every one of the 2^18 sign patterns at x = 0.15: a separating threshold
/// exists and the ascending search is feasible, but a fixed v = 1 is not
/// always accepted because the outer jumps are only 1.
#[test]
fn every_binary_pattern_at_low_noise_is_separable() {
    let x = 0.15;
    let (mut searched_exact, mut unit_ok) = (0u32, 0u32);
    let total = 1u32 << 18;
    for bits in 0..total {
        let e = |k: u32| if bits >> k & 1 == 1 { x } else { -x };
        let y1: Vec<f64> = (0..9).map(|k| GAMMA1[k] + e(k as u32)).collect();
        let y2: Vec<f64> = (0..9).map(|k| GAMMA2[k] + e(9 + k as u32)).collect();
        let d1 = difference_sequence(&y1.into());
        let d2 = difference_sequence(&y2.into());

        let on = |d: &pcalign::difference::DifferenceSequence, t: &[usize]| {
            let (mut lo_true, mut hi_zero) = (f64::INFINITY, 0.0f64);
            for j in 1..=9 {
                if t.contains(&j) {
                    lo_true = lo_true.min(d.at(j).abs());
                } else {
                    hi_zero = hi_zero.max(d.at(j).abs());
                }
            }
            (lo_true, hi_zero)
        };
        let (t1, z1) = on(&d1, &TRUE1);
        let (t2, z2) = on(&d2, &TRUE2);
        assert!(z1.max(z2) < t1.min(t2), "pattern {bits:#x} has no margin");

        let found = search_threshold(&d1, &d2).unwrap().feasible;
        let found = found.unwrap_or_else(|| panic!("pattern {bits:#x} infeasible"));
        searched_exact += u32::from(found.seg1.boundaries() == TRUE1 && found.seg2.boundaries() == TRUE2);

        let p = threshold_pair(&d1, &d2, 1.0);
        unit_ok += u32::from(compatibility_check(&p.sig1, &p.sig2).is_accept());
    }
    println!("x=0.15: ascending search exact on {searched_exact}/{total}; v=1 accepted on {unit_ok}/{total}");
    assert!(unit_ok < total);
}

#[test]
fn binary_noise_below_the_margin_keeps_the_search_feasible() {
    let report = run_monte_carlo(&config("[noise]\nkind = \"symmetric_binary\"\nx = 0.15"), 1000).unwrap();
    let t = report.method(Method::Threshold).unwrap();
    assert_eq!(t.segmented_rate, 1.0);
    println!("threshold search exact rate {}", t.exact_rate);
}

/// With the smallest jump 1 and sigma = 0.08, half the jump exceeds
/// 4 sigma sqrt(2), so each gated difference errs with probability below
/// Q(4) and a union bound over 18 components gives well under 1%.
#[test]
fn gaussian_noise_below_the_margin_keeps_the_longest_path_exact() {
    let cfg = config("[noise]\nkind = \"gaussian\"\nsigma = 0.08\n\n[dp]\nv = 0.5\nweight = \"w1\"");
    let report = run_monte_carlo(&cfg, 1000).unwrap();
    let dp = report.method(Method::Dp).unwrap();
    assert!(dp.exact_rate >= 0.99, "exact rate {}", dp.exact_rate);
}
