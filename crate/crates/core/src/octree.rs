//! Axis-aligned octree over a point set, queried with planes.
//!
//! Leaves hold indices into the caller's point slice. Cells are lower-closed
//! and upper-open along every axis, except that the root's upper faces are
//! closed, so every point lands in exactly one leaf.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{Plane, Point, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum OctreeError {
    #[error("cannot build an octree over zero points")]
    Empty,
    #[error("invalid octree parameters: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctreeParams {
    pub max_leaf_points: usize,
    pub max_depth: usize,
    /// Children smaller than this edge length are never created.
    pub min_leaf: f64,
    /// Non-empty cells with a larger edge are always split (subject to the
    /// depth and `min_leaf` caps).
    pub max_leaf_edge: Option<f64>,
}

impl Default for OctreeParams {
    fn default() -> Self {
        OctreeParams { max_leaf_points: 32, max_depth: 10, min_leaf: 0.0, max_leaf_edge: None }
    }
}

impl OctreeParams {
    /// Defaults tied to the finger width: leaves never exceed the width of a
    /// finger and stop splitting at a quarter of it.
    pub fn for_finger_width(width: f64) -> Self {
        OctreeParams { max_leaf_points: 32, max_depth: 10, min_leaf: width / 4.0, max_leaf_edge: Some(width) }
    }
}

const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
enum NodeKind {
    Leaf { start: u32, len: u32 },
    Internal { children: [u32; 8] },
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    center: Point,
    half: f64,
    depth: u16,
    kind: NodeKind,
}

/// A leaf cell and the points it holds.
#[derive(Debug, Clone, Copy)]
pub struct Leaf<'a> {
    pub center: Point,
    pub half: f64,
    pub depth: usize,
    pub indices: &'a [u32],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Octree {
    nodes: Vec<Node>,
    indices: Vec<u32>,
    params: OctreeParams,
}

impl Octree {
    pub fn build(points: &[Point], params: OctreeParams) -> Result<Octree, OctreeError> {
        if points.is_empty() {
            return Err(OctreeError::Empty);
        }
        if params.max_leaf_points == 0 {
            return Err(OctreeError::BadParams("max_leaf_points must be at least 1"));
        }
        if params.max_depth == 0 {
            return Err(OctreeError::BadParams("max_depth must be at least 1"));
        }
        if !(params.min_leaf >= 0.0) {
            return Err(OctreeError::BadParams("min_leaf must be non-negative"));
        }
        let (lo, hi) = crate::geometry::bounds(points);
        let extent = (hi - lo).max();
        let half = if extent > 0.0 { 0.5 * extent * 1.01 } else { 0.5 };
        let center = Point::from((lo.coords + hi.coords) * 0.5);

        let mut tree = Octree { nodes: Vec::new(), indices: Vec::with_capacity(points.len()), params };
        let all: Vec<u32> = (0..points.len() as u32).collect();
        tree.build_node(points, all, center, half, 0);
        Ok(tree)
    }

    fn build_node(&mut self, points: &[Point], idx: Vec<u32>, center: Point, half: f64, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let p = &self.params;
        let too_full = idx.len() > p.max_leaf_points;
        let too_big = p.max_leaf_edge.is_some_and(|e| 2.0 * half > e) && !idx.is_empty();
        let can_split = depth < p.max_depth && half >= p.min_leaf && idx.len() > 1;
        if !(can_split && (too_full || too_big)) {
            let start = self.indices.len() as u32;
            self.indices.extend_from_slice(&idx);
            self.nodes.push(Node {
                center,
                half,
                depth: depth as u16,
                kind: NodeKind::Leaf { start, len: idx.len() as u32 },
            });
            return id;
        }
        self.nodes.push(Node { center, half, depth: depth as u16, kind: NodeKind::Internal { children: [EMPTY; 8] } });
        let mut buckets: [Vec<u32>; 8] = Default::default();
        for i in idx {
            buckets[octant(&center, &points[i as usize])].push(i);
        }
        let mut children = [EMPTY; 8];
        let q = half * 0.5;
        for (k, bucket) in buckets.into_iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let c = Point::new(
                center.x + if k & 1 != 0 { q } else { -q },
                center.y + if k & 2 != 0 { q } else { -q },
                center.z + if k & 4 != 0 { q } else { -q },
            );
            children[k] = self.build_node(points, bucket, c, q, depth + 1);
        }
        self.nodes[id as usize].kind = NodeKind::Internal { children };
        id
    }

    pub fn params(&self) -> &OctreeParams {
        &self.params
    }

    pub fn root_center(&self) -> Point {
        self.nodes[0].center
    }

    pub fn root_half(&self) -> f64 {
        self.nodes[0].half
    }

    pub fn point_count(&self) -> usize {
        self.indices.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = Leaf<'_>> + '_ {
        self.nodes.iter().filter_map(move |n| match n.kind {
            NodeKind::Leaf { start, len } => Some(Leaf {
                center: n.center,
                half: n.half,
                depth: n.depth as usize,
                indices: &self.indices[start as usize..(start + len) as usize],
            }),
            NodeKind::Internal { .. } => None,
        })
    }

    /// Smallest leaf half-size present in the tree.
    pub fn min_leaf_half(&self) -> f64 {
        self.leaves().map(|l| l.half).fold(f64::INFINITY, f64::min)
    }

    /// Indices of every point stored in a leaf whose cube meets `plane`,
    /// in ascending order.
    pub fn query_plane(&self, plane: &Plane) -> Vec<u32> {
        self.query_slab(plane, 0.0)
    }

    /// Like [`Octree::query_plane`] but for the slab `|distance| <= half_thickness`:
    /// returns the points of every leaf whose cube meets the slab.
    pub fn query_slab(&self, plane: &Plane, half_thickness: f64) -> Vec<u32> {
        let n = plane.normal();
        let reach = n.x.abs() + n.y.abs() + n.z.abs();
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if plane.signed_distance(&node.center).abs() > node.half * reach + half_thickness {
                continue;
            }
            match &node.kind {
                NodeKind::Leaf { start, len } => {
                    out.extend_from_slice(&self.indices[*start as usize..(*start + *len) as usize])
                }
                NodeKind::Internal { children } => stack.extend(children.iter().copied().filter(|&c| c != EMPTY)),
            }
        }
        out.sort_unstable();
        out
    }

    /// Indices of the points with `|distance| <= half_thickness`, ascending.
    /// Leaves entirely inside the slab are taken whole; only leaves crossing
    /// its boundary are filtered point by point.
    pub fn query_slab_exact(&self, points: &[Point], plane: &Plane, half_thickness: f64) -> Vec<u32> {
        let n = plane.normal();
        let reach = n.x.abs() + n.y.abs() + n.z.abs();
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            let d = plane.signed_distance(&node.center).abs();
            let r = node.half * reach;
            if d > r + half_thickness {
                continue;
            }
            match &node.kind {
                NodeKind::Leaf { start, len } => {
                    let slice = &self.indices[*start as usize..(*start + *len) as usize];
                    if d + r <= half_thickness {
                        out.extend_from_slice(slice);
                    } else {
                        out.extend(slice.iter().copied().filter(|&i| plane.signed_distance(&points[i as usize]).abs() <= half_thickness));
                    }
                }
                NodeKind::Internal { children } => stack.extend(children.iter().copied().filter(|&c| c != EMPTY)),
            }
        }
        out.sort_unstable();
        out
    }

    /// Indices of the points with signed distance ≤ 0, in ascending order.
    pub fn query_halfspace(&self, points: &[Point], plane: &Plane) -> Vec<u32> {
        let n = plane.normal();
        let reach = n.x.abs() + n.y.abs() + n.z.abs();
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            let d = plane.signed_distance(&node.center);
            let r = node.half * reach;
            if d - r > 0.0 {
                continue;
            }
            match &node.kind {
                NodeKind::Leaf { start, len } => {
                    let slice = &self.indices[*start as usize..(*start + *len) as usize];
                    out.extend(slice.iter().copied().filter(|&i| plane.signed_distance(&points[i as usize]) <= 0.0));
                }
                NodeKind::Internal { children } => stack.extend(children.iter().copied().filter(|&c| c != EMPTY)),
            }
        }
        out.sort_unstable();
        out
    }

    /// Whether `p` lies in the cell of `leaf`, up to rounding of the cell bounds.
    pub fn cell_contains(&self, leaf: &Leaf<'_>, p: &Point) -> bool {
        let tol = 1e-9 * leaf.half.max(1e-3);
        (0..3).all(|k| p[k] >= leaf.center[k] - leaf.half - tol && p[k] <= leaf.center[k] + leaf.half + tol)
    }

    /// Leaf boxes as an OBJ wireframe (`v` and `l` records).
    pub fn leaf_wireframe_obj(&self) -> String {
        let mut out = String::from("# octree leaves\n");
        let mut base = 1;
        for leaf in self.leaves() {
            for k in 0..8 {
                let c = Vec3::new(
                    if k & 1 != 0 { 1.0 } else { -1.0 },
                    if k & 2 != 0 { 1.0 } else { -1.0 },
                    if k & 4 != 0 { 1.0 } else { -1.0 },
                );
                let v = leaf.center + c * leaf.half;
                let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
            }
            for (a, b) in [(0, 1), (1, 3), (3, 2), (2, 0), (4, 5), (5, 7), (7, 6), (6, 4), (0, 4), (1, 5), (2, 6), (3, 7)] {
                let _ = writeln!(out, "l {} {}", base + a, base + b);
            }
            base += 8;
        }
        out
    }
}

fn octant(center: &Point, p: &Point) -> usize {
    (p.x >= center.x) as usize | ((p.y >= center.y) as usize) << 1 | ((p.z >= center.z) as usize) << 2
}
