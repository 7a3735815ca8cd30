//! Exact nearest-neighbor search over oriented 3-D points.
//!
//! A small kd-tree specialized for the correspondence matcher: nodes carry
//! the point normal inline so the usual query — "nearest point whose normal
//! opposes mine" — touches a single contiguous array, and distance ties are
//! broken deterministically by the lowest point index so repeated runs
//! produce identical matches.
//!
//! Nodes live in one flat `Vec` in preorder (each node is followed by its
//! near subtree), which keeps traversal mostly cache-adjacent; the tree
//! shape is fully determined by the input order.

use crate::geom::Vec3;
use crate::surface::PointNormal;

/// Child-slot sentinel for "no subtree".
const NO_CHILD: u32 = u32::MAX;

struct Node {
    position: Vec3,
    /// Unit normal of the point, stored inline for filtered queries.
    normal: Vec3,
    /// Index into the original point list.
    point: u32,
    left: u32,
    right: u32,
}

/// Exact nearest-neighbor index over a fixed set of oriented points.
pub struct SpatialIndex {
    nodes: Vec<Node>,
    /// Axis-aligned bounding box of the indexed points (zeros when empty).
    lo: Vec3,
    hi: Vec3,
}

impl SpatialIndex {
    /// Builds the index. Point order defines the indices reported by queries.
    pub fn build(points: &[PointNormal]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        build_into(&mut order, points, 0, &mut nodes);
        let mut lo = Vec3::zeros();
        let mut hi = Vec3::zeros();
        if let Some(first) = points.first() {
            lo = first.position;
            hi = first.position;
            for p in &points[1..] {
                for axis in 0..3 {
                    lo[axis] = lo[axis].min(p.position[axis]);
                    hi[axis] = hi[axis].max(p.position[axis]);
                }
            }
        }
        Self { nodes, lo, hi }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nearest point to `query`, or `None` for an empty index.
    pub fn nearest(&self, query: &Vec3) -> Option<(usize, f64)> {
        self.nearest_node(query, |_| true)
    }

    /// Nearest point to `query` among those accepted by `admissible`.
    ///
    /// Returns `(index, squared distance)`. Among points at exactly equal
    /// distance the lowest index wins, matching a linear scan in index order.
    pub fn nearest_where(
        &self,
        query: &Vec3,
        admissible: impl Fn(usize) -> bool,
    ) -> Option<(usize, f64)> {
        self.nearest_node(query, |node| admissible(node.point as usize))
    }

    /// Nearest point whose unit normal `n` satisfies `n · normal ≤
    /// threshold`, i.e. points facing against `normal` when the threshold is
    /// negative. Tie handling matches [`Self::nearest_where`].
    pub fn nearest_opposing(
        &self,
        query: &Vec3,
        normal: &Vec3,
        threshold: f64,
    ) -> Option<(usize, f64)> {
        self.nearest_opposing_from(query, normal, threshold, None)
    }

    /// Like [`Self::nearest_opposing`], but primed with a known admissible
    /// candidate `(point index, squared distance to this query)` — typically
    /// the winner of a neighboring query. The candidate only tightens
    /// pruning, so the result is identical to the unseeded search; the caller
    /// must guarantee the seed point itself passes the normal filter.
    pub fn nearest_opposing_from(
        &self,
        query: &Vec3,
        normal: &Vec3,
        threshold: f64,
        seed: Option<(usize, f64)>,
    ) -> Option<(usize, f64)> {
        self.nearest_node_from(query, |node| node.normal.dot(normal) <= threshold, seed)
    }

    fn nearest_node(&self, query: &Vec3, accept: impl Fn(&Node) -> bool) -> Option<(usize, f64)> {
        self.nearest_node_from(query, accept, None)
    }

    fn nearest_node_from(
        &self,
        query: &Vec3,
        accept: impl Fn(&Node) -> bool,
        seed: Option<(usize, f64)>,
    ) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        // `u32::MAX` doubles as "nothing admissible yet": real point indices
        // are below it, and the tie rule prefers lower indices anyway.
        let mut best_idx = u32::MAX;
        let mut best_d2 = f64::INFINITY;
        if let Some((idx, d2)) = seed {
            best_idx = idx as u32;
            best_d2 = d2;
        }
        if self.pruning_hopeless(query) {
            for node in &self.nodes {
                Self::consider(node, query, &accept, &mut best_idx, &mut best_d2);
            }
        } else {
            self.search(0, query, 0, &accept, &mut best_idx, &mut best_d2);
        }
        (best_idx != u32::MAX).then_some((best_idx as usize, best_d2))
    }

    /// True when no splitting plane could ever prune, so the recursive search
    /// would visit every node and a flat scan is equivalent but cheaper.
    ///
    /// Along each axis the plane offset `|query − split|` is at most the gap
    /// from the query to the box plus the box extent, while the best distance
    /// can never drop below the gap to the box as a whole. A query far enough
    /// outside the box therefore keeps every far subtree reachable. Tiny
    /// indexes scan unconditionally — traversal bookkeeping costs more than
    /// the distances.
    fn pruning_hopeless(&self, query: &Vec3) -> bool {
        if self.nodes.len() <= 16 {
            return true;
        }
        let mut outside_d2 = 0.0;
        let mut reach = [0.0f64; 3];
        for axis in 0..3 {
            let gap = (self.lo[axis] - query[axis])
                .max(query[axis] - self.hi[axis])
                .max(0.0);
            outside_d2 += gap * gap;
            reach[axis] = gap + (self.hi[axis] - self.lo[axis]);
        }
        reach.iter().all(|r| r * r <= outside_d2)
    }

    /// Offers one node as a candidate; ties keep the lowest point index, so
    /// the winner is independent of visit order. The distance test runs
    /// before the (costlier) admissibility filter — most visited nodes are
    /// not improvements and never need filtering.
    fn consider(
        node: &Node,
        query: &Vec3,
        accept: &impl Fn(&Node) -> bool,
        best_idx: &mut u32,
        best_d2: &mut f64,
    ) {
        let d2 = (node.position - query).norm_squared();
        if d2 > *best_d2 || (d2 == *best_d2 && node.point >= *best_idx) {
            return;
        }
        if accept(node) {
            *best_idx = node.point;
            *best_d2 = d2;
        }
    }

    fn search(
        &self,
        slot: u32,
        query: &Vec3,
        depth: usize,
        accept: &impl Fn(&Node) -> bool,
        best_idx: &mut u32,
        best_d2: &mut f64,
    ) {
        let node = &self.nodes[slot as usize];
        Self::consider(node, query, accept, best_idx, best_d2);
        let axis = depth % 3;
        let delta = query[axis] - node.position[axis];
        let (near, far) = if delta < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if near != NO_CHILD {
            self.search(near, query, depth + 1, accept, best_idx, best_d2);
        }
        // Visit the far side when it could still hold the winner. `<=` rather
        // than `<` matters: an exactly tied point with a lower index may live
        // across the splitting plane.
        if delta * delta <= *best_d2 && far != NO_CHILD {
            self.search(far, query, depth + 1, accept, best_idx, best_d2);
        }
    }
}

/// Appends the subtree over `indices` to `nodes` in preorder and returns its
/// root slot (or [`NO_CHILD`] for an empty range).
fn build_into(indices: &mut [u32], points: &[PointNormal], depth: usize, nodes: &mut Vec<Node>) -> u32 {
    if indices.is_empty() {
        return NO_CHILD;
    }
    let axis = depth % 3;
    let mid = indices.len() / 2;
    // Median selection under a total order (coordinate, then index): the
    // chosen element and the two partitions are unique, so construction is
    // deterministic even with duplicated coordinates.
    if indices.len() > 1 {
        indices.select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize].position[axis]
                .total_cmp(&points[b as usize].position[axis])
                .then(a.cmp(&b))
        });
    }
    let point = indices[mid];
    let slot = nodes.len() as u32;
    nodes.push(Node {
        position: points[point as usize].position,
        normal: *points[point as usize].normal.as_vec(),
        point,
        left: NO_CHILD,
        right: NO_CHILD,
    });
    let (lo, hi) = indices.split_at_mut(mid);
    let left = build_into(lo, points, depth + 1, nodes);
    let right = build_into(&mut hi[1..], points, depth + 1, nodes);
    nodes[slot as usize].left = left;
    nodes[slot as usize].right = right;
    slot
}
