//! k-clique gadgets: pattern/space pairs that admit a ρ-matching exactly
//! when a graph has a k-clique.
//!
//! `Y` holds `k` rings of `m` points each, one ring per clique slot and one
//! point per vertex. Within a ring, points sit evenly on a circle of
//! perimeter 1. Between rings `i ≠ i'` (numbered from 1) the distance is
//! `2^max(i,i')`, shortened by `1/m` when the two vertices are not adjacent.
//! The pattern has one point per ring at distances `2^max(i,i')·ρ`.
//!
//! Every core distance is an integer multiple of `1/m`, so the numerators
//! are kept alongside the floating-point metric for exact checks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetric, Matching};

/// Smallest vertex count a gadget accepts.
pub const MIN_VERTICES: usize = 24;

/// Simple undirected graph on vertices `0..m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    m: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.m, r.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            m: g.m,
            edges: g.edges.into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl Graph {
    /// Normalizes each edge to `(min, max)` and drops repeats.
    pub fn new(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if u >= m || v >= m {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) leaves the vertex range 0..{m}"
                )));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self { m, edges: set })
    }

    pub fn complete(m: usize) -> Self {
        let edges = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect();
        Self { m, edges }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Whether the vertices are distinct and pairwise adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(a, &u)| vertices[a + 1..].iter().all(|&v| u != v && self.has_edge(u, v)))
    }
}

/// A generated reduction instance.
#[derive(Clone, Debug)]
pub struct CliqueInstance {
    pub x: FiniteMetric,
    pub y: FiniteMetric,
    pub rho: f64,
    pub k: usize,
    pub m: usize,
    /// Distance of the extra far point, in the minimum-distortion variant.
    pub lambda: Option<f64>,
    /// Core `Y` distances times `m`, row-major over the `k·m` ring points.
    numerators: Vec<u64>,
}

impl CliqueInstance {
    /// Flat `Y` index of vertex `vertex` on ring `ring` (both 0-based).
    pub fn index_of(&self, ring: usize, vertex: usize) -> usize {
        debug_assert!(ring < self.k && vertex < self.m);
        ring * self.m + vertex
    }

    /// Ring and vertex of a flat `Y` index; `None` for the far point.
    pub fn ring_vertex(&self, index: usize) -> Option<(usize, usize)> {
        (index < self.k * self.m).then(|| (index / self.m, index % self.m))
    }

    /// Flat index of the far point, in the minimum-distortion variant.
    pub fn far_point(&self) -> Option<usize> {
        self.lambda.map(|_| self.k * self.m)
    }

    /// Number of ring points (excludes the far point).
    pub fn ring_points(&self) -> usize {
        self.k * self.m
    }

    /// `m·d_Y(a, b)` for two ring points, exactly.
    pub fn numerator(&self, a: usize, b: usize) -> u64 {
        self.numerators[a * self.k * self.m + b]
    }

    /// Triples of ring points breaking the triangle inequality, checked in
    /// exact integer arithmetic.
    pub fn exact_triangle_violations(&self) -> Vec<(usize, usize, usize)> {
        let n = self.ring_points();
        let mut bad = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let direct = self.numerator(a, b);
                for c in 0..n {
                    if c != a && c != b && direct > self.numerator(a, c) + self.numerator(c, b) {
                        bad.push((a, b, c));
                    }
                }
            }
        }
        bad
    }

    /// The matching sending pattern point `i` to vertex `clique[i]` on ring `i`.
    pub fn clique_matching(&self, clique: &[usize]) -> Result<Matching> {
        if clique.len() != self.k {
            return Err(Error::LengthMismatch(clique.len(), self.k));
        }
        if let Some(&v) = clique.iter().find(|&&v| v >= self.m) {
            return Err(Error::IndexOutOfRange { index: v, size: self.m });
        }
        let mut targets: Vec<usize> = clique.iter().enumerate().map(|(i, &v)| self.index_of(i, v)).collect();
        if let Some(far) = self.far_point() {
            targets.push(far);
        }
        Matching::new(targets)
    }
}

fn check(g: &Graph, k: usize, rho: f64) -> Result<()> {
    if g.m() < MIN_VERTICES {
        return Err(Error::InvalidGraph(format!(
            "gadgets need at least {MIN_VERTICES} vertices, got {}",
            g.m()
        )));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > 60 {
        return Err(Error::InvalidParameter(format!("k = {k} overflows the ring exponents")));
    }
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ρ must be a finite value ≥ 1, got {rho}"
        )));
    }
    Ok(())
}

fn ring_numerators(g: &Graph, k: usize) -> Vec<u64> {
    let m = g.m();
    let n = k * m;
    let mut num = vec![0u64; n * n];
    for a in 0..n {
        let (i, j) = (a / m, a % m);
        for b in 0..n {
            let (i2, j2) = (b / m, b % m);
            num[a * n + b] = if i == i2 {
                let gap = j.abs_diff(j2);
                gap.min(m - gap) as u64
            } else {
                // Ring numbers are 1-based in the distance formula.
                let full = (1u64 << (i.max(i2) + 1)) * m as u64;
                if g.has_edge(j, j2) {
                    full
                } else {
                    full - 1
                }
            };
        }
    }
    num
}

fn pattern_rows(k: usize, rho: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|i2| {
                    if i == i2 {
                        0.0
                    } else {
                        2f64.powi(i.max(i2) as i32 + 1) * rho
                    }
                })
                .collect()
        })
        .collect()
}

/// The gadget for deciding whether `g` has a `k`-clique as a ρ-matching
/// question.
pub fn gen_clique_instance(g: &Graph, k: usize, rho: f64) -> Result<CliqueInstance> {
    check(g, k, rho)?;
    let m = g.m();
    let n = k * m;
    let numerators = ring_numerators(g, k);
    let rows = (0..n)
        .map(|a| (0..n).map(|b| numerators[a * n + b] as f64 / m as f64).collect())
        .collect();
    Ok(CliqueInstance {
        x: FiniteMetric::from_matrix(pattern_rows(k, rho))?,
        y: FiniteMetric::from_matrix_unchecked(rows)?,
        rho,
        k,
        m,
        lambda: None,
        numerators,
    })
}

/// `λ = 5mρ²2^k`, the distance of the extra far points.
pub fn far_distance(m: usize, k: usize, rho: f64) -> f64 {
    5.0 * m as f64 * rho * rho * 2f64.powi(k as i32)
}

/// The clique gadget extended by one far point on each side, both at
/// distance `λ` from everything else. For graphs with a `k`-clique the
/// minimum distortion is exactly ρ.
pub fn gen_min_distortion_instance(g: &Graph, k: usize, rho: f64) -> Result<CliqueInstance> {
    let base = gen_clique_instance(g, k, rho)?;
    let lambda = far_distance(g.m(), k, rho);
    let extend = |rows: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let n = rows.len();
        let mut out: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|mut r| {
                r.push(lambda);
                r
            })
            .collect();
        let mut last = vec![lambda; n + 1];
        last[n] = 0.0;
        out.push(last);
        out
    };
    Ok(CliqueInstance {
        x: FiniteMetric::from_matrix(extend(base.x.to_rows()))?,
        y: FiniteMetric::from_matrix_unchecked(extend(base.y.to_rows()))?,
        lambda: Some(lambda),
        ..base
    })
}

/// The graph vertices a matching's ring points stand for, ascending and
/// deduplicated. The far point, if used, is ignored.
pub fn matching_to_clique(sigma: &Matching, inst: &CliqueInstance) -> Vec<usize> {
    let mut out: Vec<usize> = sigma
        .targets()
        .iter()
        .filter_map(|&t| inst.ring_vertex(t).map(|(_, v)| v))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Checks that every closed ball `ball(p, r)` of the ring points, for every
/// center `p` and every radius `r` among the interpoint distances, is covered
/// by at most three balls of radius `r/2` centered at ring points.
///
/// Returns the first failing `(center, m·r)`, if any. Limited to 128 ring
/// points.
pub fn doubling_cover_check(inst: &CliqueInstance) -> Result<Option<(usize, u64)>> {
    let n = inst.ring_points();
    if n > 128 {
        return Err(Error::InvalidParameter(format!(
            "cover check handles at most 128 points, got {n}"
        )));
    }
    let mut radii: Vec<u64> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| inst.numerator(a, b))
        .collect();
    radii.sort_unstable();
    radii.dedup();

    // Ring points within `r` of `c`, or within `r/2` when `half` is set.
    let ball = |c: usize, r: u64, half: bool| -> u128 {
        (0..n).fold(0u128, |mask, p| {
            let d = inst.numerator(c, p);
            let inside = if half { 2 * d <= r } else { d <= r };
            if inside {
                mask | (1u128 << p)
            } else {
                mask
            }
        })
    };

    for &r in &radii {
        let halves: Vec<u128> = (0..n).map(|c| ball(c, r, true)).collect();
        for p in 0..n {
            let target = ball(p, r, false);
            if !covers(target, &halves, 3) {
                return Ok(Some((p, r)));
            }
        }
    }
    Ok(None)
}

/// Whether `budget` of the `balls` cover `target`: branch on the balls that
/// contain the lowest uncovered point.
fn covers(target: u128, balls: &[u128], budget: usize) -> bool {
    if target == 0 {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let low = target & target.wrapping_neg();
    balls
        .iter()
        .filter(|&&b| b & low != 0)
        .any(|&b| covers(target & !b, balls, budget - 1))
}
