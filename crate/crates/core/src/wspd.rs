//! Well-separated pair decomposition over a net tree.
//!
//! Every node of the tree stands for the points in its subtree. Pairs of
//! nodes are refined, always splitting the side with the larger radius, until
//! both sides are small compared to the gap between them.

use crate::ann::{AnnIndex, Indexed};
use crate::error::{Error, Result};
use crate::metric::{le_tol, FiniteMetric};

/// One side of a pair: a whole subtree, or just the point stored at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WspdNode {
    Subtree(u32),
    Point(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WspdPair {
    pub rep_a: usize,
    pub rep_b: usize,
    pub node_a: WspdNode,
    pub node_b: WspdNode,
    pub length: f64,
}

/// The decomposition together with the tree its node handles refer to.
#[derive(Clone, Debug)]
pub struct Wspd {
    tree: AnnIndex,
    pairs: Vec<WspdPair>,
    separation: f64,
}

impl Wspd {
    pub fn pairs(&self) -> &[WspdPair] {
        &self.pairs
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// The points a node handle stands for, ascending.
    pub fn members(&self, node: WspdNode) -> Vec<usize> {
        match node {
            WspdNode::Point(n) => vec![self.tree.node_point(n)],
            WspdNode::Subtree(n) => {
                let mut out = Vec::new();
                let mut stack = vec![n];
                while let Some(v) = stack.pop() {
                    out.push(self.tree.node_point(v));
                    stack.extend_from_slice(self.tree.node_children(v));
                }
                out.sort_unstable();
                out
            }
        }
    }
}

fn rep(tree: &AnnIndex, node: WspdNode) -> usize {
    match node {
        WspdNode::Subtree(n) | WspdNode::Point(n) => tree.node_point(n),
    }
}

fn reach(tree: &AnnIndex, node: WspdNode) -> f64 {
    match node {
        WspdNode::Subtree(n) => tree.node_reach(n),
        WspdNode::Point(_) => 0.0,
    }
}

/// The parts a subtree splits into: its own point and each child subtree.
fn parts(tree: &AnnIndex, n: u32) -> Vec<WspdNode> {
    let children = tree.node_children(n);
    let mut out = Vec::with_capacity(children.len() + 1);
    out.push(WspdNode::Point(n));
    out.extend(children.iter().map(|&c| {
        if tree.node_children(c).is_empty() {
            WspdNode::Point(c)
        } else {
            WspdNode::Subtree(c)
        }
    }));
    out
}

/// Decomposition in which every pair `(A, B)` has
/// `max(diam A, diam B) ≤ d(A, B) / s`, and every pair of distinct points is
/// split by at least one pair.
pub fn build_wspd(space: &FiniteMetric, s: f64) -> Result<Wspd> {
    if space.len() < 2 {
        return Err(Error::TooFewPoints(space.len()));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("separation must be positive, got {s}")));
    }
    let host = Indexed(space);
    let tree = AnnIndex::with_points(&host, 0..space.len())?;
    let root = tree.root_node().expect("nonempty tree");

    let mut pairs = Vec::new();
    // Self-pairs ask for all point pairs inside one subtree; cross pairs ask
    // for all point pairs between two disjoint subtrees.
    let mut selves = vec![root];
    let mut cross: Vec<(WspdNode, WspdNode)> = Vec::new();
    while let Some(n) = selves.pop() {
        let ps = parts(&tree, n);
        for (i, &a) in ps.iter().enumerate() {
            if let WspdNode::Subtree(c) = a {
                selves.push(c);
            }
            for &b in &ps[i + 1..] {
                cross.push((a, b));
            }
        }
        while let Some((a, b)) = cross.pop() {
            let (ra, rb) = (reach(&tree, a), reach(&tree, b));
            let (pa, pb) = (rep(&tree, a), rep(&tree, b));
            let d = space.d(pa, pb);
            // Diameters are at most twice the reach; the gap is at least the
            // representative distance minus both reaches.
            let gap = d - ra - rb;
            if 2.0 * ra.max(rb) * s <= gap || (ra == 0.0 && rb == 0.0) {
                pairs.push(WspdPair {
                    rep_a: pa,
                    rep_b: pb,
                    node_a: a,
                    node_b: b,
                    length: d,
                });
                continue;
            }
            let (big, other) = if ra >= rb { (a, b) } else { (b, a) };
            let WspdNode::Subtree(m) = big else {
                unreachable!("a point side has zero reach");
            };
            for part in parts(&tree, m) {
                cross.push((part, other));
            }
        }
    }
    Ok(Wspd {
        tree,
        pairs,
        separation: s,
    })
}

/// Lengths `ℓ_i` such that every interpoint distance lies within a factor
/// `1 + ε` of some `ℓ_i`. Ascending, near-duplicates merged.
pub fn candidate_lengths(space: &FiniteMetric, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    let wspd = build_wspd(space, 3.0 / eps)?;
    let mut lengths: Vec<f64> = wspd.pairs.iter().map(|p| p.length).collect();
    lengths.sort_unstable_by(f64::total_cmp);
    lengths.dedup_by(|later, kept| le_tol(*later, *kept));
    Ok(lengths)
}
