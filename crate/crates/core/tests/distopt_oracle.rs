//! Minimum-distortion decisions and optimizers against exhaustive search.

mod common;

use common::*;
use dmatch::distopt::{decide_distortion, decide_expansions, min_distortion, min_distortion_naive};
use dmatch::metric::{distortion, expansion, inverse_expansion};
use dmatch::oracle::brute_min_distortion;
use dmatch::FiniteMetric;
use rand::Rng;

struct Small {
    seed: u64,
    x: FiniteMetric,
    y: FiniteMetric,
}

fn corpus(count: usize, base: u64) -> Vec<Small> {
    (0..count)
        .map(|i| {
            let seed = base + i as u64;
            let mut r = rng(seed);
            let k = 2 + i % 2;
            let n = r.gen_range(k.max(4)..=8);
            let y = if i % 3 == 0 {
                tree_metric(&mut r, n)
            } else {
                euclidean(&mut r, n, 2, 10.0)
            };
            let x = if i % 2 == 0 {
                planted_pattern(&mut r, &y, k, 1.5)
            } else {
                euclidean(&mut r, k, 2, 10.0)
            };
            Small { seed, x, y }
        })
        .collect()
}

#[test]
fn expansion_decisions_respect_the_band() {
    for case in corpus(40, 100) {
        let (dist, best) = brute_min_distortion(&case.x, &case.y).unwrap();
        let e = expansion(&best, &case.x, &case.y).unwrap();
        let e_inv = inverse_expansion(&best, &case.x, &case.y).unwrap();
        let eps = 0.25;
        // The optimum's own bounds must be accepted.
        let m = decide_expansions(&case.x, &case.y, e, e_inv, eps).unwrap();
        let m = m.unwrap_or_else(|| panic!("seed {}: optimum refused", case.seed));
        assert!(expansion(&m, &case.x, &case.y).unwrap() <= (1.0 + eps) * e * (1.0 + 1e-9));
        assert!(inverse_expansion(&m, &case.x, &case.y).unwrap() <= (1.0 + eps) * e_inv * (1.0 + 1e-9));
        // Bounds whose product is below the minimum, with room for the slack,
        // must be refused.
        let shrink = (1.0 + eps).powi(2) * 1.01;
        if dist / shrink >= 1.0 {
            let got = decide_expansions(&case.x, &case.y, e / shrink, e_inv, eps).unwrap();
            assert!(got.is_none(), "seed {}: accepted an impossible expansion", case.seed);
        }
    }
}

#[test]
fn distortion_decisions_at_and_below_the_optimum() {
    for case in corpus(40, 200) {
        let (dist, _) = brute_min_distortion(&case.x, &case.y).unwrap();
        let eps = 0.5;
        let yes = decide_distortion(&case.x, &case.y, dist, eps).unwrap();
        let m = yes.unwrap_or_else(|| panic!("seed {}: Δ = dist refused", case.seed));
        assert!(distortion(&m, &case.x, &case.y).unwrap() <= (1.0 + eps) * dist * (1.0 + 1e-9));
        let below = dist / (1.0 + eps).powi(2);
        if below >= 1.0 {
            assert!(
                decide_distortion(&case.x, &case.y, below, eps).unwrap().is_none(),
                "seed {}",
                case.seed
            );
        }
    }
}

#[test]
fn optimizers_land_in_the_band() {
    for case in corpus(60, 300) {
        let (dist, _) = brute_min_distortion(&case.x, &case.y).unwrap();
        for eps in [0.25, 1.0] {
            let fast = min_distortion(&case.x, &case.y, eps).unwrap();
            let naive = min_distortion_naive(&case.x, &case.y, eps).unwrap();
            for (name, got) in [("wspd", &fast), ("naive", &naive)] {
                assert!(
                    dist <= got.delta * (1.0 + 1e-9) && got.delta <= (1.0 + eps) * dist * (1.0 + 1e-9),
                    "seed {} {name}: Δ = {} vs dist = {dist}",
                    case.seed,
                    got.delta
                );
                let again = distortion(&got.matching, &case.x, &case.y).unwrap();
                assert_eq!(again, got.delta);
            }
            let ratio = fast.delta.max(naive.delta) / fast.delta.min(naive.delta);
            assert!(ratio <= (1.0 + eps).powi(2));
        }
    }
}

#[test]
fn monotone_on_probe_transcripts() {
    for case in corpus(15, 400) {
        let eps = 0.5;
        let probes: Vec<f64> = (0..12).map(|i| 1.25f64.powi(i)).collect();
        let answers: Vec<bool> = probes
            .iter()
            .map(|&d| decide_distortion(&case.x, &case.y, d, eps).unwrap().is_some())
            .collect();
        for (i, &yes) in answers.iter().enumerate() {
            if !yes {
                continue;
            }
            for j in i + 1..probes.len() {
                if probes[j] >= probes[i] * (1.0 + eps) {
                    assert!(
                        answers[j],
                        "seed {}: positive at {} but not at {}",
                        case.seed, probes[i], probes[j]
                    );
                }
            }
        }
    }
}
