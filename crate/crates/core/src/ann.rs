//! Dynamic approximate nearest-neighbor index over a point set.
//!
//! The index is a net tree: every active point owns one node at an integer
//! level `ℓ`, and each child lies within `2^ℓ` of its parent. Children are
//! attached one level below their parent and are never within half the
//! parent's radius of an earlier sibling, so the branching factor stays
//! bounded on doubling inputs. Each node caches an upper bound on the
//! distance to its descendants, which is what the queries prune with.
//!
//! The index does not own the points. Every call takes the [`PointSpace`]
//! that defines the distances, and callers must pass the same space each time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::metric::{ceil_log2, le_tol, FiniteMetric, Probe};

/// Ratio guaranteed by [`AnnIndex::ann_query`].
pub const ANN_RATIO: f64 = 1.5;

/// Distances between indexed points, and from queries to indexed points.
pub trait PointSpace {
    type Query: ?Sized;

    fn distance(&self, a: usize, b: usize) -> f64;

    fn query_distance(&self, q: &Self::Query, a: usize) -> f64;

    /// Rejects queries the space cannot measure.
    fn check_query(&self, _q: &Self::Query) -> Result<()> {
        Ok(())
    }
}

impl PointSpace for FiniteMetric {
    type Query = Probe<'static>;

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.d(a, b)
    }

    fn query_distance(&self, q: &Probe<'static>, a: usize) -> f64 {
        match *q {
            Probe::Index(i) => self.d(i, a),
            Probe::Coords(c) => self.probe_distance(Probe::Coords(c), a).unwrap_or(f64::NAN),
        }
    }

    fn check_query(&self, q: &Probe<'static>) -> Result<()> {
        match *q {
            Probe::Index(i) if i >= self.len() => Err(Error::IndexOutOfRange {
                index: i,
                size: self.len(),
            }),
            Probe::Index(_) => Ok(()),
            Probe::Coords(c) => self.probe_distance(Probe::Coords(c), 0).map(|_| ()),
        }
    }
}

/// Query adapter: a [`FiniteMetric`] probed by index only.
///
/// Lets callers that hold a borrowed [`Probe`] avoid the `'static` bound of
/// the blanket impl.
pub struct Indexed<'a>(pub &'a FiniteMetric);

impl PointSpace for Indexed<'_> {
    type Query = usize;

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.0.d(a, b)
    }

    fn query_distance(&self, q: &usize, a: usize) -> f64 {
        self.0.d(*q, a)
    }

    fn check_query(&self, q: &usize) -> Result<()> {
        if *q < self.0.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: *q,
                size: self.0.len(),
            })
        }
    }
}

/// Query adapter: a Euclidean [`FiniteMetric`] probed by coordinates.
pub struct Located<'a>(pub &'a FiniteMetric);

impl PointSpace for Located<'_> {
    type Query = [f64];

    fn distance(&self, a: usize, b: usize) -> f64 {
        self.0.d(a, b)
    }

    fn query_distance(&self, q: &[f64], a: usize) -> f64 {
        self.0.probe_distance(Probe::Coords(q), a).unwrap_or(f64::NAN)
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        if self.0.is_empty() {
            return Ok(());
        }
        self.0.probe_distance(Probe::Coords(q), 0).map(|_| ())
    }
}

type NodeId = u32;
const NONE: NodeId = NodeId::MAX;
/// Level of a lone root, which has no radius yet.
const FLOOR: i32 = i32::MIN / 2;

#[derive(Clone, Debug)]
struct Node {
    point: usize,
    level: i32,
    parent: NodeId,
    children: Vec<NodeId>,
    /// Upper bound on the distance from `point` to any descendant.
    reach: f64,
}

#[inline]
fn radius(level: i32) -> f64 {
    if level <= FLOOR {
        0.0
    } else {
        2f64.powi(level)
    }
}

#[inline]
fn level_for(d: f64) -> i32 {
    if d > 0.0 {
        ceil_log2(d)
    } else {
        FLOOR
    }
}

/// Dynamic net-tree index with insert, delete, (3/2)-approximate nearest
/// neighbor, and exact fixed-radius queries.
#[derive(Clone, Debug, Default)]
pub struct AnnIndex {
    nodes: Vec<Node>,
    free: Vec<NodeId>,
    slot: Vec<NodeId>,
    root: Option<NodeId>,
    len: usize,
}

/// Entry of the best-first frontier, ordered so the heap pops the smallest
/// lower bound first.
struct Frontier {
    bound: f64,
    node: NodeId,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl AnnIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index holding `points`, inserted in the given order.
    pub fn with_points<S: PointSpace>(space: &S, points: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut index = Self::new();
        for p in points {
            index.insert(space, p)?;
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, point: usize) -> bool {
        self.slot.get(point).is_some_and(|&s| s != NONE)
    }

    /// Active points in ascending order.
    pub fn points(&self) -> Vec<usize> {
        self.slot
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != NONE)
            .map(|(p, _)| p)
            .collect()
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        let point = node.point;
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        if self.slot.len() <= point {
            self.slot.resize(point + 1, NONE);
        }
        self.slot[point] = id;
        id
    }

    pub fn insert<S: PointSpace>(&mut self, space: &S, point: usize) -> Result<()> {
        if self.contains(point) {
            return Err(Error::AlreadyActive(point));
        }
        self.len += 1;
        let Some(root) = self.root else {
            let id = self.alloc(Node {
                point,
                level: FLOOR,
                parent: NONE,
                children: Vec::new(),
                reach: 0.0,
            });
            self.root = Some(id);
            return Ok(());
        };

        let mut current = root;
        let mut dist = space.distance(self.nodes[root as usize].point, point);
        if dist > radius(self.nodes[root as usize].level) {
            // Widening the root keeps every existing parent link valid.
            self.nodes[root as usize].level = level_for(dist);
        }
        loop {
            let node = &mut self.nodes[current as usize];
            node.reach = node.reach.max(dist);
            let node = &self.nodes[current as usize];
            let next = node
                .children
                .iter()
                .map(|&c| {
                    let child = &self.nodes[c as usize];
                    (c, space.distance(child.point, point), child.level)
                })
                .find(|&(_, d, level)| d <= radius(level));
            match next {
                Some((c, d, _)) => {
                    current = c;
                    dist = d;
                }
                None => {
                    let level = self.nodes[current as usize].level - 1;
                    let id = self.alloc(Node {
                        point,
                        level,
                        parent: current,
                        children: Vec::new(),
                        reach: 0.0,
                    });
                    self.nodes[current as usize].children.push(id);
                    return Ok(());
                }
            }
        }
    }

    /// Removes `point`. Points below it in the tree are reinserted.
    pub fn delete<S: PointSpace>(&mut self, space: &S, point: usize) -> Result<()> {
        if !self.contains(point) {
            return Err(Error::NotActive(point));
        }
        let id = self.slot[point];
        let parent = self.nodes[id as usize].parent;
        let mut orphans = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if n != id {
                orphans.push(node.point);
            }
            stack.extend(node.children.iter().rev());
            self.slot[node.point] = NONE;
            self.free.push(n);
        }
        self.len -= orphans.len() + 1;
        if parent == NONE {
            self.root = None;
        } else {
            self.nodes[parent as usize].children.retain(|&c| c != id);
        }
        for p in orphans {
            self.insert(space, p)?;
        }
        Ok(())
    }

    fn best_first<S: PointSpace>(
        &self,
        space: &S,
        q: &S::Query,
        ratio: f64,
        skip: Option<usize>,
    ) -> Option<(usize, f64)> {
        let root = self.root?;
        let mut best: Option<(usize, f64)> = None;
        let offer = |point: usize, d: f64, best: &mut Option<(usize, f64)>| {
            if Some(point) == skip {
                return;
            }
            let better = match *best {
                None => true,
                Some((bp, bd)) => d < bd || (d == bd && point < bp),
            };
            if better {
                *best = Some((point, d));
            }
        };
        let mut heap = BinaryHeap::new();
        let rd = space.query_distance(q, self.nodes[root as usize].point);
        offer(self.nodes[root as usize].point, rd, &mut best);
        heap.push(Frontier {
            bound: (rd - self.nodes[root as usize].reach).max(0.0),
            node: root,
        });
        while let Some(Frontier { bound, node }) = heap.pop() {
            if let Some((_, bd)) = best {
                if ratio * bound >= bd {
                    break;
                }
            }
            for &c in &self.nodes[node as usize].children {
                let child = &self.nodes[c as usize];
                let d = space.query_distance(q, child.point);
                offer(child.point, d, &mut best);
                if child.children.is_empty() {
                    continue;
                }
                let lb = (d - child.reach).max(0.0);
                let keep = match best {
                    None => true,
                    Some((_, bd)) => ratio * lb < bd,
                };
                if keep {
                    heap.push(Frontier { bound: lb, node: c });
                }
            }
        }
        best
    }

    /// A (3/2)-approximate nearest active point to `q`.
    pub fn ann_query<S: PointSpace>(&self, space: &S, q: &S::Query) -> Result<usize> {
        self.ann_query_with_distance(space, q).map(|(p, _)| p)
    }

    pub fn ann_query_with_distance<S: PointSpace>(&self, space: &S, q: &S::Query) -> Result<(usize, f64)> {
        space.check_query(q)?;
        self.best_first(space, q, ANN_RATIO, None).ok_or(Error::EmptyIndex)
    }

    /// Exact nearest active point, ties to the smaller index.
    pub fn nearest<S: PointSpace>(&self, space: &S, q: &S::Query) -> Result<(usize, f64)> {
        space.check_query(q)?;
        self.best_first(space, q, 1.0, None).ok_or(Error::EmptyIndex)
    }

    /// Exact nearest active point other than `exclude`.
    pub fn nearest_excluding<S: PointSpace>(&self, space: &S, q: &S::Query, exclude: usize) -> Option<(usize, f64)> {
        self.best_first(space, q, 1.0, Some(exclude))
    }

    /// Active points within `r` of `q` together with their distances, by
    /// ascending point index. The boundary uses the shared tolerance.
    pub fn range_with_distances<S: PointSpace>(&self, space: &S, q: &S::Query, r: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let Some(root) = self.root else {
            return out;
        };
        let mut stack = vec![(root, space.query_distance(q, self.nodes[root as usize].point))];
        while let Some((n, d)) = stack.pop() {
            let node = &self.nodes[n as usize];
            if le_tol(d, r) {
                out.push((node.point, d));
            }
            for &c in &node.children {
                let child = &self.nodes[c as usize];
                let dc = space.query_distance(q, child.point);
                if le_tol(dc - child.reach, r) {
                    stack.push((c, dc));
                }
            }
        }
        out.sort_unstable_by_key(|&(p, _)| p);
        out
    }

    /// Whether some active point lies strictly closer than `r` to `q`.
    /// Stops at the first one found.
    pub fn any_closer_than<S: PointSpace>(&self, space: &S, q: &S::Query, r: f64) -> bool {
        let Some(root) = self.root else {
            return false;
        };
        let mut stack = vec![(root, space.query_distance(q, self.nodes[root as usize].point))];
        while let Some((n, d)) = stack.pop() {
            if d < r {
                return true;
            }
            for &c in &self.nodes[n as usize].children {
                let child = &self.nodes[c as usize];
                let dc = space.query_distance(q, child.point);
                if le_tol(dc - child.reach, r) {
                    stack.push((c, dc));
                }
            }
        }
        false
    }

    /// Active points within `r` of `q`, by ascending index.
    pub fn range_query<S: PointSpace>(&self, space: &S, q: &S::Query, r: f64) -> Result<Vec<usize>> {
        space.check_query(q)?;
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        Ok(self
            .range_with_distances(space, q, r)
            .into_iter()
            .map(|(p, _)| p)
            .collect())
    }

    /// Fixed-radius query by repeated (3/2)-ANN extraction: pull out
    /// approximate neighbors while they lie within `3r/2`, report those
    /// within `r`, then reinsert everything that was pulled out.
    ///
    /// Mutates the index while it runs; the primary [`range_query`] does not.
    ///
    /// [`range_query`]: AnnIndex::range_query
    pub fn range_query_by_extraction<S: PointSpace>(&mut self, space: &S, q: &S::Query, r: f64) -> Result<Vec<usize>> {
        space.check_query(q)?;
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        let mut pulled = Vec::new();
        let mut found = Vec::new();
        while let Some((p, d)) = self.best_first(space, q, ANN_RATIO, None) {
            if !le_tol(d, 1.5 * r) {
                break;
            }
            if le_tol(d, r) {
                found.push(p);
            }
            self.delete(space, p)?;
            pulled.push(p);
        }
        for p in pulled {
            self.insert(space, p)?;
        }
        found.sort_unstable();
        Ok(found)
    }

    // Read-only access to the tree shape, for hierarchical consumers.

    pub(crate) fn root_node(&self) -> Option<NodeId> {
        self.root
    }

    pub(crate) fn node_point(&self, n: NodeId) -> usize {
        self.nodes[n as usize].point
    }

    pub(crate) fn node_children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n as usize].children
    }

    pub(crate) fn node_reach(&self, n: NodeId) -> f64 {
        self.nodes[n as usize].reach
    }

    /// Checks parent covering and reach bounds. Test support.
    #[doc(hidden)]
    pub fn check_invariants<S: PointSpace>(&self, space: &S) -> std::result::Result<(), String> {
        let Some(root) = self.root else {
            return if self.len == 0 {
                Ok(())
            } else {
                Err("no root but nonzero length".into())
            };
        };
        let mut count = 0;
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            count += 1;
            let node = &self.nodes[n as usize];
            if self.slot[node.point] != n {
                return Err(format!("slot of point {} is stale", node.point));
            }
            for &c in &node.children {
                let child = &self.nodes[c as usize];
                let d = space.distance(node.point, child.point);
                if d > radius(node.level) {
                    return Err(format!("child {} is {d} from parent {}", child.point, node.point));
                }
                if child.level >= node.level {
                    return Err(format!("child {} is not below its parent", child.point));
                }
                stack.push(c);
            }
            // reach must dominate every descendant distance
            let mut sub = node.children.clone();
            while let Some(s) = sub.pop() {
                let dn = space.distance(node.point, self.nodes[s as usize].point);
                if dn > node.reach {
                    return Err(format!("reach of {} underestimates descendant", node.point));
                }
                sub.extend(&self.nodes[s as usize].children);
            }
        }
        if count != self.len {
            return Err(format!("tree holds {count} nodes but length is {}", self.len));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetric {
        FiniteMetric::from_points(xs.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn insert_then_delete_leaves_empty_index() {
        let m = line(&[0.0, 1.0]);
        let mut ix = AnnIndex::new();
        ix.insert(&m, 1).unwrap();
        ix.delete(&m, 1).unwrap();
        assert!(ix.is_empty());
        assert_eq!(ix.ann_query(&m, &Probe::Index(0)), Err(Error::EmptyIndex));
    }

    #[test]
    fn single_point_is_always_the_answer() {
        let m = line(&[0.0, 1.0, 5.0]);
        let mut ix = AnnIndex::new();
        ix.insert(&m, 2).unwrap();
        for q in 0..3 {
            assert_eq!(ix.ann_query(&m, &Probe::Index(q)).unwrap(), 2);
        }
    }

    #[test]
    fn membership_errors() {
        let m = line(&[0.0, 1.0]);
        let mut ix = AnnIndex::new();
        ix.insert(&m, 0).unwrap();
        assert_eq!(ix.insert(&m, 0), Err(Error::AlreadyActive(0)));
        assert_eq!(ix.delete(&m, 1), Err(Error::NotActive(1)));
    }

    #[test]
    fn external_query_on_a_line() {
        let m = line(&[0.0, 1.0, 2.0, 10.0]);
        let ix = AnnIndex::with_points(&m, 0..4).unwrap();
        let space = Located(&m);
        assert_eq!(ix.ann_query(&space, &[9.9][..]).unwrap(), 3);
        assert_eq!(ix.ann_query(&space, &[1.0][..]).unwrap(), 1);
    }

    #[test]
    fn matrix_rejects_coordinate_queries() {
        let m = FiniteMetric::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ix = AnnIndex::with_points(&m, 0..2).unwrap();
        assert!(matches!(
            ix.ann_query(&Located(&m), &[0.0][..]),
            Err(Error::ForeignQuery(_))
        ));
    }

    #[test]
    fn range_on_a_line() {
        let m = line(&[0.0, 1.0, 2.0, 10.0]);
        let ix = AnnIndex::with_points(&m, 0..4).unwrap();
        assert_eq!(ix.range_query(&m, &Probe::Index(1), 1.0).unwrap(), vec![0, 1, 2]);
        let partial = AnnIndex::with_points(&m, [0, 3]).unwrap();
        assert!(partial.range_query(&m, &Probe::Index(1), 0.5).unwrap().is_empty());
        assert!(ix.range_query(&m, &Probe::Index(1), 0.0).is_err());
    }

    #[test]
    fn extraction_path_restores_the_index() {
        let m = line(&[0.0, 1.0, 2.0, 3.0, 10.0, 11.0]);
        let mut ix = AnnIndex::with_points(&m, 0..6).unwrap();
        let got = ix.range_query_by_extraction(&m, &Probe::Index(2), 1.0).unwrap();
        assert_eq!(got, vec![1, 2, 3]);
        assert_eq!(ix.points(), (0..6).collect::<Vec<_>>());
        ix.check_invariants(&m).unwrap();
    }

    #[test]
    fn deleting_inner_nodes_keeps_invariants() {
        let m = line(&[0.0, 0.5, 1.0, 4.0, 4.5, 9.0, 16.0, 16.25]);
        let mut ix = AnnIndex::with_points(&m, 0..8).unwrap();
        for p in [0, 6, 3] {
            ix.delete(&m, p).unwrap();
            ix.check_invariants(&m).unwrap();
        }
        assert_eq!(ix.points(), vec![1, 2, 4, 5, 7]);
        assert_eq!(ix.nearest(&m, &Probe::Index(6)).unwrap(), (7, 0.25));
    }
}
