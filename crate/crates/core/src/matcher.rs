//! The (ρ, ε) matcher.
//!
//! The pattern is split recursively (Kruskal, stopped at two components)
//! until singletons remain. At every node `W` of that split tree, and for
//! every center `y` of a net of `Y` at scale `r_W`, we keep a set of
//! matchings of `W` that is
//!
//! * sound: each is a `(1+β)ρ`-matching landing in `ball(y, 3r)`,
//! * sparse: any two differ by at least `βr/(2ρ²)` in the product metric,
//! * complete: every ρ-matching of `W` is within `βr/ρ²` of a kept one at
//!   some center.
//!
//! Singletons are seeded from a fine net of `Y`; a child's sets are lifted
//! to the parent's scale by merging centers into their coarse ancestors, and
//! the two children are then combined pairwise over neighboring centers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ann::{AnnIndex, PointSpace};
use crate::error::{Error, Result};
use crate::metric::{le_tol, lt_tol, product_distance, FiniteMetric, Matching, Scale};
use crate::nets::{self, NetLayer};

/// Matchings of one pattern subset compared under the product metric.
/// Stored matchings sit row-major in `flat`, `width` targets per row.
struct ProductSpace<'a> {
    y: &'a FiniteMetric,
    width: usize,
    flat: &'a [usize],
}

impl ProductSpace<'_> {
    fn row(&self, i: usize) -> &[usize] {
        &self.flat[i * self.width..(i + 1) * self.width]
    }
}

/// A few points of `Y`, numbered by position so an index over them stays
/// small; queries are points of `Y`.
struct Picked<'a> {
    y: &'a FiniteMetric,
    points: &'a [usize],
}

impl PointSpace for Picked<'_> {
    type Query = usize;

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.y.d(self.points[a], self.points[b])
    }

    fn query_distance(&self, q: &usize, a: usize) -> f64 {
        self.y.d(*q, self.points[a])
    }
}

impl PointSpace for ProductSpace<'_> {
    type Query = [usize];

    fn distance(&self, a: usize, b: usize) -> f64 {
        product_distance(self.row(a), self.row(b), self.y)
    }

    fn query_distance(&self, q: &[usize], a: usize) -> f64 {
        product_distance(q, self.row(a), self.y)
    }
}

/// Matchings of a pattern subset anchored at one net center, pairwise at
/// least [`separation`](Self::separation) apart under `d_M`.
#[derive(Clone, Debug)]
pub struct MatchingSet {
    owner: usize,
    width: usize,
    separation: f64,
    flat: Vec<usize>,
    index: AnnIndex,
}

impl MatchingSet {
    fn new(owner: usize, width: usize, separation: f64) -> Self {
        Self {
            owner,
            width,
            separation,
            flat: Vec::new(),
            index: AnnIndex::new(),
        }
    }

    /// The net center the set is anchored at.
    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// Targets of the `i`-th matching, aligned with the family's subset.
    pub fn get(&self, i: usize) -> &[usize] {
        &self.flat[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.flat.chunks_exact(self.width)
    }

    /// Keeps `targets` unless a stored matching is closer than the
    /// separation radius. Returns whether it was kept.
    fn offer(&mut self, y: &FiniteMetric, targets: &[usize]) -> bool {
        let space = ProductSpace {
            y,
            width: self.width,
            flat: &self.flat,
        };
        if self.index.any_closer_than(&space, targets, self.separation) {
            return false;
        }
        let id = self.len();
        self.flat.extend_from_slice(targets);
        let space = ProductSpace {
            y,
            width: self.width,
            flat: &self.flat,
        };
        self.index.insert(&space, id).expect("fresh row id");
        true
    }
}

/// All matching sets of one pattern subset at one scale, ordered by owner.
/// Centers with nothing to keep are omitted.
#[derive(Clone, Debug)]
pub struct SetFamily {
    pub subset: Vec<usize>,
    pub beta: f64,
    pub rho: f64,
    pub scale: Scale,
    pub sets: Vec<MatchingSet>,
}

impl SetFamily {
    /// Separation radius `βr/(2ρ²)` every set at this scale honors.
    pub fn separation(&self) -> f64 {
        separation(self.beta, self.scale.value(), self.rho)
    }

    /// Coverage radius `βr/ρ²`.
    pub fn coverage(&self) -> f64 {
        2.0 * self.separation()
    }

    pub fn total(&self) -> usize {
        self.sets.iter().map(MatchingSet::len).sum()
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(MatchingSet::len).max().unwrap_or(0)
    }

    /// Every kept matching as `(owner, targets)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.sets.iter().flat_map(|s| s.iter().map(move |t| (s.owner, t)))
    }
}

fn separation(beta: f64, r: f64, rho: f64) -> f64 {
    beta * r / (2.0 * rho * rho)
}

/// Splits `subset` into two nonempty parts with
/// `diam(subset) ≤ (|subset| − 1)·d(P, Q)`: Kruskal over the pattern's
/// pairs, stopped when two components remain. `P` holds the smallest index.
pub fn split_pattern(x: &FiniteMetric, subset: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if subset.len() < 2 {
        return Err(Error::TooFewPoints(subset.len()));
    }
    if let Some(&index) = subset.iter().find(|&&i| i >= x.len()) {
        return Err(Error::IndexOutOfRange { index, size: x.len() });
    }
    let mut w = subset.to_vec();
    w.sort_unstable();
    w.dedup();
    if w.len() < 2 {
        return Err(Error::TooFewPoints(w.len()));
    }

    let mut edges = Vec::with_capacity(w.len() * (w.len() - 1) / 2);
    for a in 0..w.len() {
        for b in a + 1..w.len() {
            edges.push((x.d(w[a], w[b]), a, b));
        }
    }
    edges.sort_unstable_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));

    let mut parent: Vec<usize> = (0..w.len()).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut components = w.len();
    for (_, a, b) in edges {
        if components == 2 {
            break;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            components -= 1;
        }
    }
    let root = find(&mut parent, 0);
    let (p, q) = (0..w.len()).partition::<Vec<_>, _>(|&i| find(&mut parent, i) == root);
    Ok((
        p.into_iter().map(|i| w[i]).collect(),
        q.into_iter().map(|i| w[i]).collect(),
    ))
}

/// A node of the recursive pattern split.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitNode {
    /// Pattern indices, ascending.
    pub subset: Vec<usize>,
    pub beta: f64,
    /// `scale_for(ρ·diam(W))`; `None` at singletons.
    pub scale: Option<Scale>,
    /// Node ids of the two parts.
    pub children: Option<(usize, usize)>,
}

/// Split tree in preorder; node 0 is the whole pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTree {
    pub nodes: Vec<SplitNode>,
}

impl SplitTree {
    pub fn root(&self) -> &SplitNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn go(t: &SplitTree, i: usize) -> usize {
            match t.nodes[i].children {
                Some((a, b)) => 1 + go(t, a).max(go(t, b)),
                None => 0,
            }
        }
        go(self, 0)
    }
}

fn check_params(rho: f64, eps: f64) -> Result<()> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ρ must be a finite value ≥ 1, got {rho}"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// Recursive split of the whole pattern. The root carries slack `ε`; a node
/// with `|W|` points hands `β/(8|W| − 8)` to both parts.
pub fn build_split_tree(x: &FiniteMetric, eps: f64, rho: f64) -> Result<SplitTree> {
    check_params(rho, eps)?;
    if x.is_empty() {
        return Err(Error::EmptySubset);
    }
    fn grow(x: &FiniteMetric, rho: f64, subset: Vec<usize>, beta: f64, nodes: &mut Vec<SplitNode>) -> Result<usize> {
        let id = nodes.len();
        if subset.len() == 1 {
            nodes.push(SplitNode {
                subset,
                beta,
                scale: None,
                children: None,
            });
            return Ok(id);
        }
        let scale = nets::scale_for(rho * x.diam(&subset)?)?;
        let child_beta = beta / (8 * subset.len() - 8) as f64;
        let (p, q) = split_pattern(x, &subset)?;
        nodes.push(SplitNode {
            subset,
            beta,
            scale: Some(scale),
            children: None,
        });
        let a = grow(x, rho, p, child_beta, nodes)?;
        let b = grow(x, rho, q, child_beta, nodes)?;
        nodes[id].children = Some((a, b));
        Ok(id)
    }
    let mut nodes = Vec::new();
    grow(x, rho, (0..x.len()).collect(), eps, &mut nodes)?;
    Ok(SplitTree { nodes })
}

/// Seeds the sets of a single pattern point `x` at the scale of `layer`:
/// a `βr/(2ρ²)`-net of `Y`, each net point filed under its covering center.
pub fn base_singleton(x: usize, beta: f64, rho: f64, layer: &NetLayer, y: &FiniteMetric) -> Result<SetFamily> {
    let scale = layer
        .scale()
        .ok_or_else(|| Error::InvalidParameter(format!("layer radius {} is not a power of two", layer.radius())))?;
    let sep = separation(beta, scale.value(), rho);
    let fine = nets::build_r_net(y, sep)?;
    let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &p in fine.centers() {
        grouped.entry(layer.cover()[p]).or_default().push(p);
    }
    let sets = grouped
        .into_iter()
        .map(|(owner, points)| {
            // Net points are already pairwise separated; offering them one by
            // one only builds the index.
            let mut set = MatchingSet::new(owner, 1, sep);
            for p in points {
                set.offer(y, &[p]);
            }
            set
        })
        .collect();
    Ok(SetFamily {
        subset: vec![x],
        beta,
        rho,
        scale,
        sets,
    })
}

/// Moves a family from the scale of `fine` to the (at least twice larger)
/// scale of `coarse`: every fine center hands its matchings to its coarse
/// ancestor, which keeps them greedily at the coarser separation.
pub fn lift(family: &SetFamily, fine: &NetLayer, coarse: &NetLayer, y: &FiniteMetric) -> Result<SetFamily> {
    let to = coarse
        .scale()
        .ok_or_else(|| Error::InvalidParameter(format!("layer radius {} is not a power of two", coarse.radius())))?;
    if fine.scale() != Some(family.scale) {
        return Err(Error::InvalidParameter(
            "fine layer does not match the family's scale".into(),
        ));
    }
    if to.exp() < family.scale.exp() + 1 {
        return Err(Error::InvalidParameter(format!(
            "lift needs the target scale to be at least twice 2^{}, got 2^{}",
            family.scale.exp(),
            to.exp()
        )));
    }
    let up = nets::ancestors(fine, coarse, y)?;
    let mut groups: BTreeMap<usize, Vec<&MatchingSet>> = BTreeMap::new();
    for set in &family.sets {
        let slot = fine
            .slot_of(set.owner)
            .ok_or_else(|| Error::InvalidParameter(format!("owner {} is not a center of the fine layer", set.owner)))?;
        groups.entry(up[slot]).or_default().push(set);
    }
    let sep = separation(family.beta, to.value(), family.rho);
    let width = family.subset.len();
    let groups: Vec<_> = groups.into_iter().collect();
    let sets = groups
        .into_par_iter()
        .map(|(owner, members)| {
            let mut set = MatchingSet::new(owner, width, sep);
            for m in members {
                for t in m.iter() {
                    set.offer(y, t);
                }
            }
            set
        })
        .collect();
    Ok(SetFamily {
        subset: family.subset.clone(),
        beta: family.beta,
        rho: family.rho,
        scale: to,
        sets,
    })
}

/// Pairs up matchings of two disjoint pattern parts around net centers.
struct Joiner<'a> {
    p: &'a SetFamily,
    q: &'a SetFamily,
    layer: &'a NetLayer,
    y: &'a FiniteMetric,
    adjacency: &'a [Vec<usize>],
    r: f64,
    limit: f64,
    subset: Vec<usize>,
    /// Where each merged slot reads from: (from P?, position in that part).
    layout: Vec<(bool, usize)>,
    /// `(slot in P, slot in Q, d_X)` for every pair across the cut.
    cross: Vec<(usize, usize, f64)>,
    /// The cross pair with the shortest pattern distance; it confines
    /// partners most.
    key: (usize, usize, f64),
    p_at: BTreeMap<usize, usize>,
    q_at: BTreeMap<usize, usize>,
}

impl<'a> Joiner<'a> {
    fn new(
        p: &'a SetFamily,
        q: &'a SetFamily,
        eps: f64,
        layer: &'a NetLayer,
        x: &FiniteMetric,
        y: &'a FiniteMetric,
    ) -> Result<Self> {
        let scale = layer
            .scale()
            .ok_or_else(|| Error::InvalidParameter(format!("layer radius {} is not a power of two", layer.radius())))?;
        if p.scale != scale || q.scale != scale {
            return Err(Error::InvalidParameter("families must sit at the layer's scale".into()));
        }
        if p.rho != q.rho {
            return Err(Error::InvalidParameter("families were built for different ρ".into()));
        }
        if p.subset.iter().any(|i| q.subset.contains(i)) {
            return Err(Error::InvalidParameter("pattern parts overlap".into()));
        }
        let adjacency = layer
            .adjacency()
            .ok_or_else(|| Error::InvalidParameter("layer has no horizontal edges".into()))?;

        let mut subset: Vec<usize> = p.subset.iter().chain(&q.subset).copied().collect();
        subset.sort_unstable();
        let layout = subset
            .iter()
            .map(|i| match p.subset.iter().position(|v| v == i) {
                Some(at) => (true, at),
                None => (false, q.subset.iter().position(|v| v == i).unwrap()),
            })
            .collect();
        // Cross pairs are the only ones to check: within a part, stored
        // matchings are (1+β)ρ-matchings with β < ε already.
        let cross: Vec<(usize, usize, f64)> = p
            .subset
            .iter()
            .enumerate()
            .flat_map(|(a, &i)| q.subset.iter().enumerate().map(move |(b, &j)| (a, b, x.d(i, j))))
            .collect();
        let key = cross
            .iter()
            .copied()
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .ok_or(Error::EmptySubset)?;
        let by_owner = |fam: &SetFamily| -> BTreeMap<usize, usize> {
            fam.sets.iter().enumerate().map(|(i, s)| (s.owner, i)).collect()
        };
        Ok(Self {
            p,
            q,
            layer,
            y,
            adjacency,
            r: scale.value(),
            limit: (1.0 + eps) * p.rho,
            subset,
            layout,
            cross,
            key,
            p_at: by_owner(p),
            q_at: by_owner(q),
        })
    }

    /// Calls `visit` on every admissible union at the center in `slot`:
    /// left matchings in order, and for each its compatible partners in
    /// order. Stops early when `visit` returns `false`.
    fn each_union(&self, slot: usize, mut visit: impl FnMut(&[usize]) -> bool) {
        let (y, r, limit) = (self.y, self.r, self.limit);
        let center = self.layer.centers()[slot];
        let near = &self.adjacency[slot];
        let in_ball = |t: &[usize]| t.iter().all(|&v| le_tol(y.d(center, v), 3.0 * r));
        let gather = |fam: &'a SetFamily, at: &BTreeMap<usize, usize>| -> Vec<&'a [usize]> {
            near.iter()
                .filter_map(|c| at.get(c))
                .flat_map(|&i| fam.sets[i].iter())
                .filter(|t| in_ball(t))
                .collect()
        };
        let left = gather(self.p, &self.p_at);
        if left.is_empty() {
            return;
        }
        let right = gather(self.q, &self.q_at);
        if right.is_empty() {
            return;
        }

        // Right matchings by their target on the key pair, so each left
        // matching only visits partners within reach of it.
        let (key_i, key_j, key_dx) = self.key;
        let mut by_target: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, b) in right.iter().enumerate() {
            by_target.entry(b[key_j]).or_default().push(idx);
        }
        let keys: Vec<usize> = by_target.keys().copied().collect();
        let space = Picked { y, points: &keys };
        let targets = AnnIndex::with_points(&space, 0..keys.len()).expect("distinct positions");

        let mut merged = vec![0; self.subset.len()];
        let mut partners = Vec::new();
        for a in &left {
            partners.clear();
            for (v, _) in targets.range_with_distances(&space, &a[key_i], limit * key_dx) {
                partners.extend_from_slice(&by_target[&keys[v]]);
            }
            partners.sort_unstable();
            for b in partners.iter().map(|&idx| right[idx]) {
                let fits = self.cross.iter().all(|&(i, j, dx)| {
                    let (u, v) = (a[i], b[j]);
                    if u == v {
                        return false;
                    }
                    let dy = y.d(u, v);
                    le_tol(dy, limit * dx) && le_tol(dx, limit * dy)
                });
                if !fits {
                    continue;
                }
                for (m, &(from_p, at)) in merged.iter_mut().zip(&self.layout) {
                    *m = if from_p { a[at] } else { b[at] };
                }
                if !visit(&merged) {
                    return;
                }
            }
        }
    }
}

/// Joins the families of two disjoint pattern parts, both at the scale of
/// `layer`, into a family of their union with slack `eps`.
///
/// At every center `y`, each matching of `P` anchored at a neighbor of `y`
/// is paired with each matching of `Q` anchored at a neighbor of `y`. The
/// union is kept when it is injective, lies in `ball(y, 3r)`, is a
/// `(1+ε)ρ`-matching, and is at least `εr/(2ρ²)` from everything kept at `y`.
pub fn combine(
    p: &SetFamily,
    q: &SetFamily,
    eps: f64,
    layer: &NetLayer,
    x: &FiniteMetric,
    y: &FiniteMetric,
) -> Result<SetFamily> {
    let joiner = Joiner::new(p, q, eps, layer, x, y)?;
    let sep = separation(eps, joiner.r, p.rho);
    let width = joiner.subset.len();
    let sets = layer
        .centers()
        .par_iter()
        .enumerate()
        .filter_map(|(slot, &center)| {
            let mut set = MatchingSet::new(center, width, sep);
            joiner.each_union(slot, |m| {
                set.offer(y, m);
                true
            });
            (!set.is_empty()).then_some(set)
        })
        .collect();
    Ok(SetFamily {
        subset: joiner.subset,
        beta: eps,
        rho: p.rho,
        scale: p.scale,
        sets,
    })
}

/// The first matching [`combine`] would keep, without building the rest of
/// the family.
fn combine_first(
    p: &SetFamily,
    q: &SetFamily,
    eps: f64,
    layer: &NetLayer,
    x: &FiniteMetric,
    y: &FiniteMetric,
) -> Result<Option<Vec<usize>>> {
    let joiner = Joiner::new(p, q, eps, layer, x, y)?;
    Ok((0..layer.centers().len()).into_par_iter().find_map_first(|slot| {
        let mut first = None;
        joiner.each_union(slot, |m| {
            first = Some(m.to_vec());
            false
        });
        first
    }))
}

/// Outcome of [`solve_distortion`].
#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    NotFound,
    One(Matching),
    /// Every kept matching, deduplicated and in lexicographic order. Always
    /// the answer when all matchings were asked for, even if empty.
    All(Vec<Matching>),
}

impl Solution {
    pub fn is_found(&self) -> bool {
        match self {
            Solution::NotFound => false,
            Solution::One(_) => true,
            Solution::All(all) => !all.is_empty(),
        }
    }

    /// The first matching, if any.
    pub fn first(&self) -> Option<&Matching> {
        match self {
            Solution::NotFound => None,
            Solution::One(m) => Some(m),
            Solution::All(all) => all.first(),
        }
    }
}

/// Counters from one run of the matcher.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Distinct net scales that were built.
    pub layers: usize,
    /// Largest single matching set built. The root family is only built in
    /// full when every matching is asked for.
    pub max_set_size: usize,
}

/// Family of split-tree node `id`, brought to the `target` scale.
#[allow(clippy::too_many_arguments)]
fn solve_node(
    tree: &SplitTree,
    id: usize,
    target: Scale,
    layers: &BTreeMap<i32, NetLayer>,
    x: &FiniteMetric,
    y: &FiniteMetric,
    rho: f64,
    stats: &mut SolveStats,
) -> Result<SetFamily> {
    let node = &tree.nodes[id];
    let family = match (node.children, node.scale) {
        (Some((a, b)), Some(own)) => {
            let layer = &layers[&own.exp()];
            let p = solve_node(tree, a, own, layers, x, y, rho, stats)?;
            let q = solve_node(tree, b, own, layers, x, y, rho, stats)?;
            let joined = combine(&p, &q, node.beta, layer, x, y)?;
            if own == target {
                joined
            } else {
                let lifted = lift(&joined, layer, &layers[&target.exp()], y)?;
                stats.max_set_size = stats.max_set_size.max(joined.max_set_size());
                lifted
            }
        }
        _ => base_singleton(node.subset[0], node.beta, rho, &layers[&target.exp()], y)?,
    };
    stats.max_set_size = stats.max_set_size.max(family.max_set_size());
    Ok(family)
}

/// Everything below the root: the split tree, its layers, and the families
/// of the root's two parts at the root scale.
struct Prepared {
    tree: SplitTree,
    layers: BTreeMap<i32, NetLayer>,
    parts: (SetFamily, SetFamily),
}

fn prepare(x: &FiniteMetric, y: &FiniteMetric, rho: f64, eps: f64, stats: &mut SolveStats) -> Result<Option<Prepared>> {
    check_params(rho, eps)?;
    let k = x.len();
    if k < 2 {
        return Err(Error::TooFewPoints(k));
    }
    if k > y.len() {
        return Err(Error::PatternTooLarge { k, n: y.len() });
    }
    if lt_tol(rho * x.diameter(), nets::min_distance(y)?) {
        return Ok(None);
    }
    let tree = build_split_tree(x, eps, rho)?;

    let mut layers: BTreeMap<i32, NetLayer> = BTreeMap::new();
    for node in &tree.nodes {
        if let Some(s) = node.scale {
            if let std::collections::btree_map::Entry::Vacant(slot) = layers.entry(s.exp()) {
                slot.insert(nets::build_layer(y, s)?);
            }
        }
    }
    stats.layers = layers.len();

    let root = tree.root();
    let top = root.scale.expect("root of a pattern with two points has a scale");
    let (a, b) = root.children.expect("root of a pattern with two points is split");
    let p = solve_node(&tree, a, top, &layers, x, y, rho, stats)?;
    let q = solve_node(&tree, b, top, &layers, x, y, rho, stats)?;
    Ok(Some(Prepared {
        tree,
        layers,
        parts: (p, q),
    }))
}

impl Prepared {
    fn top_layer(&self) -> &NetLayer {
        &self.layers[&self.tree.root().scale.expect("split root").exp()]
    }
}

/// Runs the split-tree pipeline and returns the root family at scale
/// `r_X`, or `None` when `ρ·diam(X) < dmin(Y)` rules out every matching.
/// Requires `|X| ≥ 2`.
pub fn root_family(x: &FiniteMetric, y: &FiniteMetric, rho: f64, eps: f64) -> Result<(Option<SetFamily>, SolveStats)> {
    let mut stats = SolveStats::default();
    let Some(prep) = prepare(x, y, rho, eps, &mut stats)? else {
        return Ok((None, stats));
    };
    let (p, q) = &prep.parts;
    let family = combine(p, q, prep.tree.root().beta, prep.top_layer(), x, y)?;
    stats.max_set_size = stats.max_set_size.max(family.max_set_size());
    Ok((Some(family), stats))
}

/// Finds a `(1+ε)ρ`-matching of `X` into `Y` whenever a ρ-matching exists.
///
/// Returns [`Solution::One`] with the first kept matching, or with
/// `want_all` every kept matching; these cover all ρ-matchings to within
/// `εr_X/ρ²` in the product metric. A single-point pattern maps to point 0
/// (or, with `want_all`, to every point).
pub fn solve_distortion(x: &FiniteMetric, y: &FiniteMetric, rho: f64, eps: f64, want_all: bool) -> Result<Solution> {
    solve_distortion_with_stats(x, y, rho, eps, want_all).map(|(s, _)| s)
}

/// [`solve_distortion`] plus run counters.
pub fn solve_distortion_with_stats(
    x: &FiniteMetric,
    y: &FiniteMetric,
    rho: f64,
    eps: f64,
    want_all: bool,
) -> Result<(Solution, SolveStats)> {
    check_params(rho, eps)?;
    let k = x.len();
    if k == 0 {
        return Err(Error::EmptySubset);
    }
    if k > y.len() {
        return Err(Error::PatternTooLarge { k, n: y.len() });
    }
    if k == 1 {
        let solution = if want_all {
            Solution::All((0..y.len()).map(|p| Matching::from_vec_unchecked(vec![p])).collect())
        } else {
            Solution::One(Matching::from_vec_unchecked(vec![0]))
        };
        return Ok((solution, SolveStats::default()));
    }
    if want_all {
        let (family, stats) = root_family(x, y, rho, eps)?;
        let mut all: Vec<Vec<usize>> = family.iter().flat_map(|f| f.iter().map(|(_, t)| t.to_vec())).collect();
        all.sort_unstable();
        all.dedup();
        return Ok((
            Solution::All(all.into_iter().map(Matching::from_vec_unchecked).collect()),
            stats,
        ));
    }
    // One answer only: stop at the first matching the root would keep.
    let mut stats = SolveStats::default();
    let Some(prep) = prepare(x, y, rho, eps, &mut stats)? else {
        return Ok((Solution::NotFound, stats));
    };
    let (p, q) = &prep.parts;
    let first = combine_first(p, q, prep.tree.root().beta, prep.top_layer(), x, y)?;
    let solution = first.map_or(Solution::NotFound, |t| Solution::One(Matching::from_vec_unchecked(t)));
    Ok((solution, stats))
}
