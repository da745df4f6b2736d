//! Clique gadgets: metric validity, the doubling bound, and the reduction's
//! if-and-only-if, all against exhaustive oracles.

mod common;

use common::*;
use dmatch::gadgets::{doubling_cover_check, gen_clique_instance, gen_min_distortion_instance, matching_to_clique};
use dmatch::matcher::solve_distortion;
use dmatch::metric::verify_matching;
use dmatch::oracle::{brute_k_clique, brute_rho_matchings};

fn ring_of_each(targets: &[usize], m: usize) -> Vec<usize> {
    let mut rings: Vec<usize> = targets.iter().map(|&t| t / m).collect();
    rings.sort_unstable();
    rings
}

#[test]
fn reduction_is_an_equivalence() {
    let mut with = 0;
    let mut without = 0;
    for g in graph_corpus(50, 24, 500) {
        for k in [2, 3] {
            let clique = brute_k_clique(&g, k).unwrap();
            if let Some(c) = &clique {
                assert!(g.is_clique(c));
            }
            for rho in [1.0, 2.0] {
                let inst = gen_clique_instance(&g, k, rho).unwrap();
                let found = brute_rho_matchings(&inst.x, &inst.y, rho, None).unwrap();
                assert_eq!(clique.is_some(), !found.is_empty(), "k = {k}, ρ = {rho}");
                for sigma in &found {
                    // One image per ring, and the images spell out a clique.
                    assert_eq!(ring_of_each(sigma.targets(), 24), (0..k).collect::<Vec<_>>());
                    let vertices = matching_to_clique(sigma, &inst);
                    assert_eq!(vertices.len(), k);
                    assert!(g.is_clique(&vertices));
                }
            }
            if clique.is_some() {
                with += 1;
            } else {
                without += 1;
            }
        }
    }
    assert!(
        with >= 10 && without >= 10,
        "corpus is lopsided: {with} with, {without} without"
    );
}

#[test]
fn clique_aligned_matchings_verify() {
    for g in graph_corpus(20, 24, 600) {
        if let Some(c) = brute_k_clique(&g, 3).unwrap() {
            let inst = gen_clique_instance(&g, 3, 1.5).unwrap();
            let sigma = inst.clique_matching(&c).unwrap();
            assert!(verify_matching(&sigma, &inst.x, &inst.y, 1.5));
            assert_eq!(matching_to_clique(&sigma, &inst), c);
        }
    }
}

#[test]
fn generated_spaces_are_metrics() {
    for (i, g) in graph_corpus(12, 24, 700).into_iter().enumerate() {
        let k = 1 + i % 4;
        let inst = gen_clique_instance(&g, k, 1.0 + i as f64 / 4.0).unwrap();
        assert!(inst.exact_triangle_violations().is_empty());
        assert!(inst.y.validate().is_valid());
        assert!(inst.x.validate().is_valid());
        let far = gen_min_distortion_instance(&g, k, 2.0).unwrap();
        assert!(far.y.validate().is_valid());
        assert!(far.x.validate().is_valid());
    }
    // Larger vertex counts too.
    let g = graph_corpus(1, 40, 710).remove(0);
    assert!(gen_clique_instance(&g, 3, 1.0)
        .unwrap()
        .exact_triangle_violations()
        .is_empty());
}

#[test]
fn balls_split_into_three_half_balls() {
    for (i, g) in graph_corpus(8, 24, 800).into_iter().enumerate() {
        for k in 1..=4 {
            let inst = gen_clique_instance(&g, k, 1.0).unwrap();
            assert_eq!(doubling_cover_check(&inst).unwrap(), None, "graph {i}, k = {k}");
        }
    }
}

#[test]
fn solver_decodes_cliques_for_small_slack() {
    let eps = 0.004;
    for g in graph_corpus(16, 24, 900) {
        let inst = gen_clique_instance(&g, 3, 1.0).unwrap();
        let clique = brute_k_clique(&g, 3).unwrap();
        let got = solve_distortion(&inst.x, &inst.y, 1.0, eps, false).unwrap();
        assert_eq!(got.is_found(), clique.is_some());
        if let Some(m) = got.first() {
            assert!(verify_matching(m, &inst.x, &inst.y, 1.0 + eps));
            assert!(g.is_clique(&matching_to_clique(m, &inst)));
        }
    }
}
