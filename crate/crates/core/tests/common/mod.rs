//! Seeded instance generators shared by the integration suites.
#![allow(dead_code)]

use dmatch::gadgets::Graph;
use dmatch::wspd::build_wspd;
use dmatch::FiniteMetric;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line(xs: &[f64]) -> FiniteMetric {
    FiniteMetric::from_points(xs.iter().map(|&v| vec![v]).collect()).unwrap()
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize, side: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..side)).collect())
        .collect()
}

pub fn euclidean(rng: &mut impl Rng, n: usize, dim: usize, side: f64) -> FiniteMetric {
    FiniteMetric::from_points(random_points(rng, n, dim, side)).unwrap()
}

/// Shortest-path metric of a random weighted tree.
pub fn tree_metric(rng: &mut impl Rng, n: usize) -> FiniteMetric {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let w = rng.gen_range(0.2..3.0);
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut dist = vec![f64::NAN; n];
            dist[s] = 0.0;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, w) in &adj[u] {
                    if dist[v].is_nan() {
                        dist[v] = dist[u] + w;
                        stack.push(v);
                    }
                }
            }
            dist
        })
        .collect();
    // Path sums accumulate in different orders from the two ends.
    #[allow(clippy::needless_range_loop)]
    for a in 0..n {
        for b in 0..a {
            rows[a][b] = rows[b][a];
        }
    }
    FiniteMetric::from_matrix(rows).unwrap()
}

/// A pattern made from `k` points of `y`, each distance stretched by a
/// random factor in `[1/spread, spread]` and then repaired into a metric by
/// taking shortest paths.
pub fn planted_pattern(rng: &mut impl Rng, y: &FiniteMetric, k: usize, spread: f64) -> FiniteMetric {
    let mut pick: Vec<usize> = (0..y.len()).collect();
    pick.shuffle(rng);
    pick.truncate(k);
    let mut rows = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let f = if spread > 1.0 {
                spread.powf(rng.gen_range(-1.0..1.0))
            } else {
                1.0
            };
            rows[a][b] = y.d(pick[a], pick[b]) * f;
            rows[b][a] = rows[a][b];
        }
    }
    for via in 0..k {
        for a in 0..k {
            for b in 0..k {
                let alt = rows[a][via] + rows[via][b];
                if alt < rows[a][b] {
                    rows[a][b] = alt;
                }
            }
        }
    }
    FiniteMetric::from_matrix(rows).unwrap()
}

/// One matcher test case.
#[derive(Clone, Debug)]
pub struct Case {
    pub seed: u64,
    pub x: FiniteMetric,
    pub y: FiniteMetric,
    pub rho: f64,
    pub eps: f64,
}

/// Mixed corpus of small Euclidean and tree-metric instances. Half the
/// patterns are planted near a subset of `Y`, half are independent.
pub fn matcher_corpus(count: usize, base_seed: u64) -> Vec<Case> {
    const RHOS: [f64; 3] = [1.0, 1.5, 2.0];
    const EPSS: [f64; 3] = [0.1, 0.5, 1.0];
    (0..count)
        .map(|i| {
            let seed = base_seed + i as u64;
            let mut r = rng(seed);
            let k = 2 + i % 3;
            let n = r.gen_range(k.max(5)..=12);
            let y = if i % 2 == 0 {
                euclidean(&mut r, n, 2, 10.0)
            } else {
                tree_metric(&mut r, n)
            };
            let rho = RHOS[(i / 3) % 3];
            let eps = EPSS[(i / 9) % 3];
            let x = if (i / 2) % 2 == 0 {
                planted_pattern(&mut r, &y, k, rho.sqrt())
            } else if i % 2 == 0 {
                euclidean(&mut r, k, 2, 10.0)
            } else {
                tree_metric(&mut r, k)
            };
            Case { seed, x, y, rho, eps }
        })
        .collect()
}

/// Quadratic greedy: scan points in order, keep one unless an earlier
/// center is strictly closer than `r`; cover by the first such center.
pub fn greedy_reference(y: &FiniteMetric, r: f64) -> (Vec<usize>, Vec<usize>) {
    let mut centers: Vec<usize> = Vec::new();
    let mut cover = Vec::new();
    for p in 0..y.len() {
        match centers.iter().find(|&&c| y.d(c, p) < r) {
            Some(&c) => cover.push(c),
            None => {
                centers.push(p);
                cover.push(p);
            }
        }
    }
    (centers, cover)
}

/// Exhaustive pair coverage, separation and length sandwich.
pub fn check_wspd(s: &FiniteMetric, eps: f64) {
    let w = build_wspd(s, 1.0 / eps).unwrap();
    let n = s.len();
    let mut covered = vec![false; n * n];
    for pair in w.pairs() {
        let a = w.members(pair.node_a);
        let b = w.members(pair.node_b);
        assert!(a.contains(&pair.rep_a) && b.contains(&pair.rep_b));
        assert_eq!(pair.length, s.d(pair.rep_a, pair.rep_b));
        let gap = a
            .iter()
            .flat_map(|&u| b.iter().map(move |&v| (u, v)))
            .map(|(u, v)| s.d(u, v))
            .fold(f64::INFINITY, f64::min);
        assert!(gap > 0.0, "sides overlap");
        assert!(s.diam(&a).unwrap() <= eps * gap * (1.0 + 1e-9));
        assert!(s.diam(&b).unwrap() <= eps * gap * (1.0 + 1e-9));
        for &u in &a {
            for &v in &b {
                covered[u * n + v] = true;
                covered[v * n + u] = true;
                let (d, l) = (s.d(u, v), pair.length);
                assert!(d <= (1.0 + 2.0 * eps) * l * (1.0 + 1e-9));
                assert!(l <= (1.0 + 2.0 * eps) * d * (1.0 + 1e-9));
            }
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            assert!(covered[u * n + v], "pair ({u}, {v}) uncovered");
        }
    }
}

/// Random graphs on `m` vertices with densities spread across [0.02, 0.4].
pub fn graph_corpus(count: usize, m: usize, base: u64) -> Vec<Graph> {
    (0..count)
        .map(|i| {
            let mut r = rng(base + i as u64);
            let p = 0.02 + 0.38 * i as f64 / count as f64;
            let edges: Vec<(usize, usize)> = (0..m)
                .flat_map(|u| (u + 1..m).map(move |v| (u, v)))
                .filter(|_| r.gen_bool(p))
                .collect();
            Graph::new(m, edges).unwrap()
        })
        .collect()
}
