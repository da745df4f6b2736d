//! Pair decomposition coverage, separation and length sandwiches,
//! checked exhaustively.

mod common;

use common::*;
use dmatch::wspd::{build_wspd, candidate_lengths};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn coverage_and_separation_exhaustive() {
    let mut r = rng(31);
    for i in 0..24 {
        let n = r.gen_range(2..=100);
        let s = if i % 3 == 2 {
            tree_metric(&mut r, n)
        } else {
            euclidean(&mut r, n, 2, 50.0)
        };
        for eps in [1.0, 0.5, 0.2] {
            check_wspd(&s, eps);
        }
    }
}

#[test]
fn candidate_lengths_sandwich_every_distance() {
    let mut r = rng(32);
    for _ in 0..5 {
        let s = euclidean(&mut r, 60, 2, 30.0);
        let eps = 0.2;
        let lengths = candidate_lengths(&s, eps).unwrap();
        assert!(lengths.windows(2).all(|w| w[0] < w[1]));
        for u in 0..s.len() {
            for v in u + 1..s.len() {
                let d = s.d(u, v);
                let hit = lengths.iter().any(|&l| l / (1.0 + eps) <= d && d <= (1.0 + eps) * l);
                assert!(hit, "distance {d} between {u} and {v} unmatched");
            }
        }
    }
}

#[test]
fn pair_count_stays_near_linear() {
    let mut r = rng(33);
    let mut ratios = Vec::new();
    for n in [200, 800, 3200] {
        let s = euclidean(&mut r, n, 2, 100.0);
        let w = build_wspd(&s, 2.0).unwrap();
        ratios.push(w.pairs().len() as f64 / n as f64);
    }
    // A soft trend check: the per-point count levels off as n grows (small
    // samples have fewer far-apart clusters to pair, so it starts low).
    assert!(ratios[2] - ratios[1] < ratios[1] - ratios[0], "{ratios:?}");
    assert!(ratios[2] <= 3.0 * ratios[0], "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_small_sets(seed in 0u64..u64::MAX, n in 2usize..40, eps in 0.1f64..1.0) {
        let mut r = rng(seed);
        let s = euclidean(&mut r, n, 2, 10.0);
        check_wspd(&s, eps);
    }
}
