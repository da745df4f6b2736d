//! r-nets, horizontal adjacency, relaxed ancestors, and the full navigating net.
//!
//! The matcher only ever builds the handful of layers it needs with
//! [`build_r_net`], [`horizontal_edges`] and [`ancestors`]. The full
//! [`NavigatingNet`] stacks a layer at every scale between the closest pair
//! and the diameter; it is kept as a reference structure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ann::{AnnIndex, Indexed};
use crate::error::{Error, Result};
use crate::metric::{le_tol, FiniteMetric, Scale};

/// Horizontal edges join centers at most this many radii apart.
pub const HORIZONTAL_FACTOR: f64 = 6.0;

const NOT_CENTER: u32 = u32::MAX;

/// An r-net of a space: centers pairwise at least `r` apart, every point
/// within `r` of its assigned center.
#[derive(Clone, Debug)]
pub struct NetLayer {
    radius: f64,
    centers: Vec<usize>,
    cover: Vec<usize>,
    adjacency: Option<Vec<Vec<usize>>>,
    slot: Vec<u32>,
    index: AnnIndex,
}

impl NetLayer {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The scale of the layer when its radius is a power of two.
    pub fn scale(&self) -> Option<Scale> {
        Scale::exact(self.radius)
    }

    /// Centers in ascending index order.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// For every point of the space, a center within the radius.
    pub fn cover(&self) -> &[usize] {
        &self.cover
    }

    /// Position of `point` in [`centers`](Self::centers), if it is a center.
    pub fn slot_of(&self, point: usize) -> Option<usize> {
        match self.slot.get(point) {
            Some(&s) if s != NOT_CENTER => Some(s as usize),
            _ => None,
        }
    }

    pub fn is_center(&self, point: usize) -> bool {
        self.slot_of(point).is_some()
    }

    /// Horizontal neighbors of the center in slot `slot`, self included.
    /// Empty until [`attach_horizontal_edges`](Self::attach_horizontal_edges).
    pub fn neighbors(&self, slot: usize) -> &[usize] {
        self.adjacency.as_ref().map_or(&[], |adj| &adj[slot])
    }

    pub fn adjacency(&self) -> Option<&[Vec<usize>]> {
        self.adjacency.as_deref()
    }

    /// Computes and stores the horizontal edges.
    pub fn attach_horizontal_edges(&mut self, y: &FiniteMetric) {
        self.adjacency = Some(horizontal_edges(self, y));
    }

    /// Net-tree index over the centers.
    pub fn index(&self) -> &AnnIndex {
        &self.index
    }

    fn from_parts(radius: f64, centers: Vec<usize>, cover: Vec<usize>, index: AnnIndex, n: usize) -> Self {
        let mut slot = vec![NOT_CENTER; n];
        for (s, &c) in centers.iter().enumerate() {
            slot[c] = s as u32;
        }
        Self {
            radius,
            centers,
            cover,
            adjacency: None,
            slot,
            index,
        }
    }

    /// JSON view for inspection: centers, deduplicated edges `u < v`, cover.
    pub fn dump(&self) -> LayerDump {
        let mut edges = Vec::new();
        if let Some(adj) = &self.adjacency {
            for (s, list) in adj.iter().enumerate() {
                let u = self.centers[s];
                edges.extend(list.iter().filter(|&&v| u < v).map(|&v| [u, v]));
            }
        }
        edges.sort_unstable();
        LayerDump {
            r_exp: self.scale().map(Scale::exp),
            centers: self.centers.clone(),
            edges,
            cover: self.cover.clone(),
        }
    }
}

/// Serialized form of a [`NetLayer`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDump {
    pub r_exp: Option<i32>,
    pub centers: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub cover: Vec<usize>,
}

/// The smallest power of two that is at least `v`.
pub fn scale_for(v: f64) -> Result<Scale> {
    Scale::at_least(v)
}

/// Greedy r-net in ascending index order: a point becomes a center unless
/// an earlier center lies strictly within `r`; otherwise it is covered by
/// the smallest such center.
pub fn build_r_net(y: &FiniteMetric, r: f64) -> Result<NetLayer> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("net radius must be positive, got {r}")));
    }
    let space = Indexed(y);
    let n = y.len();
    let mut index = AnnIndex::new();
    let mut centers = Vec::new();
    let mut cover = Vec::with_capacity(n);
    for p in 0..n {
        let blocker = index
            .range_with_distances(&space, &p, r)
            .into_iter()
            .find(|&(_, d)| d < r)
            .map(|(c, _)| c);
        match blocker {
            Some(c) => cover.push(c),
            None => {
                index.insert(&space, p)?;
                centers.push(p);
                cover.push(p);
            }
        }
    }
    Ok(NetLayer::from_parts(r, centers, cover, index, n))
}

/// r-net at a power-of-two scale, with its horizontal edges.
pub fn build_layer(y: &FiniteMetric, scale: Scale) -> Result<NetLayer> {
    let mut layer = build_r_net(y, scale.value())?;
    layer.attach_horizontal_edges(y);
    Ok(layer)
}

/// For every center, the centers within `6r` (itself included), ascending.
pub fn horizontal_edges(layer: &NetLayer, y: &FiniteMetric) -> Vec<Vec<usize>> {
    let space = Indexed(y);
    let reach = HORIZONTAL_FACTOR * layer.radius;
    layer
        .centers
        .iter()
        .map(|&c| {
            layer
                .index
                .range_with_distances(&space, &c, reach)
                .into_iter()
                .filter(|&(_, d)| d <= reach)
                .map(|(p, _)| p)
                .collect()
        })
        .collect()
}

/// For every center of `fine`, the nearest center of `coarse` (smallest index
/// on ties), which lies within the coarse radius by covering. Parallel to
/// `fine.centers()`.
pub fn ancestors(fine: &NetLayer, coarse: &NetLayer, y: &FiniteMetric) -> Result<Vec<usize>> {
    if coarse.radius < fine.radius {
        return Err(Error::InvalidParameter(format!(
            "coarse radius {} is below fine radius {}",
            coarse.radius, fine.radius
        )));
    }
    let space = Indexed(y);
    let reach = coarse.radius;
    fine.centers
        .iter()
        .map(|&c| {
            coarse
                .index
                .range_with_distances(&space, &c, reach)
                .into_iter()
                .filter(|&(_, d)| le_tol(d, reach))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(p, _)| p)
                .ok_or(Error::NoAncestor {
                    center: c,
                    radius: reach,
                })
        })
        .collect()
}

/// Smallest interpoint distance, via exact nearest-neighbor queries.
pub fn min_distance(y: &FiniteMetric) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::TooFewPoints(y.len()));
    }
    let space = Indexed(y);
    let index = AnnIndex::with_points(&space, 0..y.len())?;
    Ok((0..y.len())
        .filter_map(|p| index.nearest_excluding(&space, &p, p).map(|(_, d)| d))
        .fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, Default)]
struct NavNode {
    /// Point one level up; `None` only at the top.
    parent: Option<usize>,
    children: Vec<usize>,
    neighbors: Vec<usize>,
}

/// A stack of r-nets from the finest scale `r_min` (every point) to the
/// coarsest `r_max` (a single root), joined by horizontal edges within each
/// level and parent links between consecutive levels.
#[derive(Clone, Debug)]
pub struct NavigatingNet {
    root: usize,
    top: Scale,
    /// `levels[t]` lives at scale `2^(top - t)`.
    levels: Vec<BTreeMap<usize, NavNode>>,
    n: usize,
}

impl NavigatingNet {
    /// Incremental top-down construction. Point 0 is the root; the other
    /// points are inserted in index order.
    pub fn build(y: &FiniteMetric) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::TooFewPoints(0));
        }
        let root = 0;
        let far = (1..n).map(|p| y.d(root, p)).fold(0.0, f64::max);
        let top = if far > 0.0 {
            Scale::at_least(far)?
        } else {
            Scale::from_exp(0)
        };
        let mut net = Self {
            root,
            top,
            levels: vec![BTreeMap::from([(
                root,
                NavNode {
                    neighbors: vec![root],
                    ..NavNode::default()
                },
            )])],
            n,
        };
        for p in 1..n {
            net.insert(y, p);
        }
        Ok(net)
    }

    fn radius_at(&self, t: usize) -> f64 {
        2f64.powi(self.top.exp() - t as i32)
    }

    fn insert(&mut self, y: &FiniteMetric, p: usize) {
        let within = |q: usize, r: f64| y.d(p, q) <= HORIZONTAL_FACTOR * r;
        // N(p, r) at every existing level, top-down through the children of
        // the previous level's set.
        let mut near: Vec<Vec<usize>> = Vec::with_capacity(self.levels.len());
        near.push(
            vec![self.root]
                .into_iter()
                .filter(|&q| within(q, self.radius_at(0)))
                .collect(),
        );
        for t in 1..self.levels.len() {
            let r = self.radius_at(t);
            let mut set: Vec<usize> = near[t - 1]
                .iter()
                .flat_map(|q| self.levels[t - 1][q].children.iter().copied())
                .filter(|&c| within(c, r))
                .collect();
            set.sort_unstable();
            set.dedup();
            near.push(set);
        }

        // Extend the hierarchy downward when p is closer to an existing
        // point than the current finest radius allows. The top level only
        // ever holds the root, so there is always at least one level below.
        let bottom = self.levels.len() - 1;
        let closest = near[bottom]
            .iter()
            .map(|&q| (y.d(p, q), q))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((dc, _)) = closest {
            let r_min = self.radius_at(bottom);
            if dc < r_min || self.levels.len() == 1 {
                let target = Scale::at_least(dc).unwrap();
                let target = if target.value() > dc { target.halved() } else { target };
                while self.levels.len() == 1 || self.radius_at(self.levels.len() - 1) > target.value() {
                    self.push_copy_level(y);
                    let t = self.levels.len() - 1;
                    let r = self.radius_at(t);
                    let mut set: Vec<usize> = near[t - 1]
                        .iter()
                        .flat_map(|q| self.levels[t - 1][q].children.iter().copied())
                        .filter(|&c| within(c, r))
                        .collect();
                    set.sort_unstable();
                    set.dedup();
                    near.push(set);
                }
            }
        }

        // Insert p top-down wherever it is at least r from N(p, r). The top
        // level always stays the single root.
        let mut above_has_p = false;
        for t in 1..self.levels.len() {
            let r = self.radius_at(t);
            if near[t].iter().any(|&q| y.d(p, q) < r) {
                above_has_p = false;
                continue;
            }
            let parent = if above_has_p {
                p
            } else {
                near[t - 1]
                    .iter()
                    .map(|&q| (y.d(p, q), q))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .map(|(_, q)| q)
                    .expect("coarser level covers every point")
            };
            let mut neighbors = near[t].clone();
            for &q in &near[t] {
                self.levels[t].get_mut(&q).unwrap().neighbors.push(p);
            }
            neighbors.push(p);
            neighbors.sort_unstable();
            self.levels[t].insert(
                p,
                NavNode {
                    parent: Some(parent),
                    children: Vec::new(),
                    neighbors,
                },
            );
            self.levels[t - 1].get_mut(&parent).unwrap().children.push(p);
            above_has_p = true;
        }
    }

    /// Adds a level below the current finest one holding a copy of every
    /// point there, each the child of its own copy.
    fn push_copy_level(&mut self, y: &FiniteMetric) {
        let t = self.levels.len();
        let r = self.radius_at(t);
        let above = &self.levels[t - 1];
        let mut level = BTreeMap::new();
        for (&q, node) in above {
            let neighbors = node
                .neighbors
                .iter()
                .copied()
                .chain(std::iter::once(q))
                .filter(|&v| y.d(q, v) <= HORIZONTAL_FACTOR * r)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            level.insert(
                q,
                NavNode {
                    parent: Some(q),
                    children: Vec::new(),
                    neighbors,
                },
            );
        }
        let keys: Vec<usize> = level.keys().copied().collect();
        for q in keys {
            self.levels[t - 1].get_mut(&q).unwrap().children.push(q);
        }
        self.levels.push(level);
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn r_max(&self) -> Scale {
        self.top
    }

    pub fn r_min(&self) -> Scale {
        Scale::from_exp(self.top.exp() - (self.levels.len() as i32 - 1))
    }

    /// Scales from finest to coarsest.
    pub fn scales(&self) -> Vec<Scale> {
        (0..self.levels.len())
            .rev()
            .map(|t| Scale::from_exp(self.top.exp() - t as i32))
            .collect()
    }

    fn level_of(&self, scale: Scale) -> Option<usize> {
        let t = self.top.exp() - scale.exp();
        (t >= 0 && (t as usize) < self.levels.len()).then_some(t as usize)
    }

    /// Centers at `scale`, ascending.
    pub fn centers(&self, scale: Scale) -> Vec<usize> {
        self.level_of(scale)
            .map(|t| self.levels[t].keys().copied().collect())
            .unwrap_or_default()
    }

    /// Parent (at twice the scale) of `point` in the net at `scale`.
    pub fn parent(&self, scale: Scale, point: usize) -> Option<usize> {
        let t = self.level_of(scale)?;
        self.levels[t].get(&point)?.parent
    }

    pub fn children(&self, scale: Scale, point: usize) -> &[usize] {
        self.level_of(scale)
            .and_then(|t| self.levels[t].get(&point))
            .map_or(&[], |node| &node.children)
    }

    /// Horizontal neighbors, self included.
    pub fn neighbors(&self, scale: Scale, point: usize) -> &[usize] {
        self.level_of(scale)
            .and_then(|t| self.levels[t].get(&point))
            .map_or(&[], |node| &node.neighbors)
    }

    /// Number of horizontal, child and parent edges at a node.
    pub fn degree(&self, scale: Scale, point: usize) -> usize {
        let t = match self.level_of(scale) {
            Some(t) => t,
            None => return 0,
        };
        self.levels[t].get(&point).map_or(0, |node| {
            node.neighbors.iter().filter(|&&v| v != point).count()
                + node.children.len()
                + usize::from(node.parent.is_some())
        })
    }

    /// The net at `scale` as a standalone layer, with each point covered by
    /// its nearest center (smallest index on ties).
    pub fn layer(&self, y: &FiniteMetric, scale: Scale) -> Result<NetLayer> {
        let t = self
            .level_of(scale)
            .ok_or_else(|| Error::InvalidParameter(format!("no level at scale 2^{}", scale.exp())))?;
        let centers: Vec<usize> = self.levels[t].keys().copied().collect();
        let space = Indexed(y);
        let index = AnnIndex::with_points(&space, centers.iter().copied())?;
        let cover = (0..self.n)
            .map(|p| index.nearest(&space, &p).map(|(c, _)| c))
            .collect::<Result<Vec<_>>>()?;
        let adjacency = centers.iter().map(|c| self.levels[t][c].neighbors.clone()).collect();
        let mut layer = NetLayer::from_parts(scale.value(), centers, cover, index, self.n);
        layer.adjacency = Some(adjacency);
        Ok(layer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetric {
        FiniteMetric::from_points(xs.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn scale_for_examples() {
        assert_eq!(scale_for(3.0).unwrap().value(), 4.0);
        assert_eq!(scale_for(4.0).unwrap().value(), 4.0);
        assert_eq!(scale_for(0.3).unwrap().value(), 0.5);
        assert!(scale_for(0.0).is_err());
    }

    #[test]
    fn tiny_radius_keeps_every_point() {
        let y = line(&[0.0, 1.0, 3.0, 7.0]);
        let layer = build_r_net(&y, 0.5).unwrap();
        assert_eq!(layer.centers(), &[0, 1, 2, 3]);
        assert_eq!(layer.cover(), &[0, 1, 2, 3]);
    }

    #[test]
    fn huge_radius_keeps_the_first_point() {
        let y = line(&[5.0, 1.0, 3.0, 7.0]);
        let layer = build_r_net(&y, 100.0).unwrap();
        assert_eq!(layer.centers(), &[0]);
        assert_eq!(layer.cover(), &[0, 0, 0, 0]);
    }

    #[test]
    fn line_of_five_at_radius_two() {
        // 0 is a center; 1 is within 2 of it; 2 is exactly 2 away, so it is a
        // center; 3 is covered by 2; 4 is exactly 2 from center 2.
        let y = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let layer = build_r_net(&y, 2.0).unwrap();
        assert_eq!(layer.centers(), &[0, 2, 4]);
        assert_eq!(layer.cover(), &[0, 0, 2, 2, 4]);
    }

    #[test]
    fn horizontal_edges_small_cases() {
        let y = line(&[0.0]);
        let mut layer = build_r_net(&y, 1.0).unwrap();
        layer.attach_horizontal_edges(&y);
        assert_eq!(layer.neighbors(0), &[0]);

        // Two centers 7r apart share no edge.
        let y = line(&[0.0, 7.0]);
        let mut layer = build_r_net(&y, 1.0).unwrap();
        layer.attach_horizontal_edges(&y);
        assert_eq!(layer.neighbors(0), &[0]);
        assert_eq!(layer.neighbors(1), &[1]);

        // Exactly 6r apart is an edge.
        let y = line(&[0.0, 6.0]);
        let layer = build_layer(&y, Scale::from_exp(0)).unwrap();
        assert_eq!(layer.neighbors(0), &[0, 1]);
    }

    #[test]
    fn ancestors_identity_and_root() {
        let y = line(&[0.0, 1.0, 2.5, 4.0]);
        let fine = build_r_net(&y, 1.0).unwrap();
        assert_eq!(ancestors(&fine, &fine, &y).unwrap(), fine.centers().to_vec());
        let coarse = build_r_net(&y, 8.0).unwrap();
        assert_eq!(ancestors(&fine, &coarse, &y).unwrap(), vec![0; fine.centers().len()]);
        assert!(ancestors(&coarse, &fine, &y).is_err());
    }

    #[test]
    fn min_distance_matches_scan() {
        let y = line(&[0.0, 3.0, 3.5, 9.0, 20.0]);
        assert_eq!(min_distance(&y).unwrap(), 0.5);
        assert!(min_distance(&line(&[1.0])).is_err());
    }

    #[test]
    fn navigating_net_on_a_single_point() {
        let y = line(&[2.0]);
        let net = NavigatingNet::build(&y).unwrap();
        assert_eq!(net.scales().len(), 1);
        assert_eq!(net.centers(net.r_max()), vec![0]);
    }

    #[test]
    fn navigating_net_on_a_line_of_eight() {
        let y = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let net = NavigatingNet::build(&y).unwrap();
        assert_eq!(net.r_min().value(), 1.0);
        assert!([4.0, 8.0].contains(&net.r_max().value()));
        assert_eq!(net.centers(net.r_min()), (0..8).collect::<Vec<_>>());
        assert_eq!(net.centers(net.r_max()), vec![0]);
    }
}
