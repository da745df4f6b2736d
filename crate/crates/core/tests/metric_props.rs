//! Metric-level invariants and the JSON round trip.

mod common;

use common::*;
use dmatch::io::{metric_to_json, parse_metric};
use dmatch::metric::{achieved_rho, distortion, expansion, inverse_expansion, matching_distance, verify_matching};
use dmatch::{FiniteMetric, Matching, Scale};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn space(seed: u64, n: usize, tree: bool) -> FiniteMetric {
    let mut r = rng(seed);
    if tree {
        tree_metric(&mut r, n)
    } else {
        euclidean(&mut r, n, 2, 10.0)
    }
}

fn random_matching(seed: u64, k: usize, n: usize) -> Matching {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(&mut rng(seed));
    all.truncate(k);
    Matching::new(all).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spread_is_at_least_one(seed in any::<u64>(), n in 2usize..20, tree in any::<bool>()) {
        let y = space(seed, n, tree);
        let all: Vec<usize> = (0..n).collect();
        prop_assert!(y.dmin(&all).unwrap() <= y.diam(&all).unwrap());
        prop_assert!(y.spread(&all).unwrap() >= 1.0);
        prop_assert_eq!(y.diam(&all).unwrap(), y.diameter());
    }

    #[test]
    fn matching_distance_is_a_metric(seed in any::<u64>(), n in 4usize..12, k in 1usize..4) {
        let y = space(seed, n, seed % 2 == 0);
        let m: Vec<Matching> = (0..3).map(|i| random_matching(seed ^ (i + 1), k, n)).collect();
        let d = |a: usize, b: usize| matching_distance(&m[a], &m[b], &y).unwrap();
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert!(d(0, 2) <= (d(0, 1) + d(1, 2)) * (1.0 + 1e-12));
    }

    #[test]
    fn verified_matchings_have_small_distortion(seed in any::<u64>(), n in 3usize..10, k in 2usize..4, rho in 1.0f64..4.0) {
        let x = space(seed.wrapping_add(7), k, false);
        let y = space(seed, n, seed % 2 == 1);
        let sigma = random_matching(seed, k, n);
        let achieved = achieved_rho(&sigma, &x, &y).unwrap();
        prop_assert!(verify_matching(&sigma, &x, &y, achieved));
        let dist = distortion(&sigma, &x, &y).unwrap();
        prop_assert!((dist - expansion(&sigma, &x, &y).unwrap() * inverse_expansion(&sigma, &x, &y).unwrap()).abs() <= 1e-12 * dist);
        if verify_matching(&sigma, &x, &y, rho) {
            prop_assert!(dist <= rho * rho * (1.0 + 1e-8));
        }
        prop_assert!(dist <= achieved * achieved * (1.0 + 1e-8));
    }

    #[test]
    fn rescaling_round_trips(seed in any::<u64>(), n in 2usize..10, f in 0.01f64..100.0) {
        let y = space(seed, n, true);
        let back = y.rescale(f).unwrap().rescale(1.0 / f).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((back.d(i, j) - y.d(i, j)).abs() <= 1e-12 * y.d(i, j).max(1.0));
            }
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), n in 1usize..10, tree in any::<bool>()) {
        let y = space(seed, n, tree);
        let again = parse_metric(&metric_to_json(&y), true).unwrap();
        prop_assert_eq!(again.to_rows(), y.to_rows());
    }
}

#[test]
fn scales_are_powers_of_two() {
    assert_eq!(Scale::at_least(3.0).unwrap().exp(), 2);
    assert_eq!(Scale::at_least(4.0).unwrap().exp(), 2);
    assert_eq!(Scale::at_least(0.3).unwrap().exp(), -1);
    assert_eq!(Scale::from_exp(-3).value(), 0.125);
    assert_eq!(Scale::exact(8.0), Some(Scale::from_exp(3)));
    assert_eq!(Scale::exact(6.0), None);
}

#[test]
fn validation_reports_each_defect() {
    assert!(FiniteMetric::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    assert!(FiniteMetric::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    assert!(FiniteMetric::from_matrix(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
    assert!(FiniteMetric::from_matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
    let bad = FiniteMetric::from_matrix_unchecked(vec![vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]])
        .unwrap();
    assert!(!bad.validate().is_valid());
    assert!(Matching::new(vec![1, 1]).is_err());
}
