#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use slicegrasp::geometry::{Plane, Point, Projected, Vec2};
use slicegrasp::octree::Octree;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rotate(v: Vec2, a: f64) -> Vec2 {
    let (s, c) = a.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// First 0.01° step at which the rotating segment crosses an obstacle,
/// detected by a side change of the obstacle relative to the segment line.
pub fn dense_sweep(origin: Vec2, length: f64, start: Vec2, sign: f64, max_angle: f64, obstacles: &[Vec2]) -> f64 {
    let step = 0.01f64.to_radians();
    let dir0 = start.normalize();
    let side = |dir: Vec2, p: &Vec2| {
        let rel = p - origin;
        dir.x * rel.y - dir.y * rel.x
    };
    let mut prev_dir = dir0;
    let mut a = 0.0;
    while a < max_angle {
        let next = (a + step).min(max_angle);
        let dir = rotate(dir0, sign * next);
        for p in obstacles {
            let rel = p - origin;
            if rel.norm() > length {
                continue;
            }
            let (s0, s1) = (side(prev_dir, p), side(dir, p));
            let ahead = dir.dot(&rel) > 0.0 || prev_dir.dot(&rel) > 0.0;
            if ahead && (s0 == 0.0 || s0.signum() != s1.signum()) {
                return next;
            }
        }
        prev_dir = dir;
        a = next;
    }
    max_angle
}

pub fn projected(points: &[Vec2]) -> Vec<Projected> {
    points.iter().enumerate().map(|(i, p)| Projected { coords: *p, source: i as u32 }).collect()
}

/// Leaves whose cube has corners on both sides of (or on) the plane.
pub fn brute_force_plane(tree: &Octree, plane: &Plane) -> Vec<u32> {
    let mut out = Vec::new();
    for leaf in tree.leaves() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..8 {
            let corner = Point::new(
                leaf.center.x + if k & 1 != 0 { leaf.half } else { -leaf.half },
                leaf.center.y + if k & 2 != 0 { leaf.half } else { -leaf.half },
                leaf.center.z + if k & 4 != 0 { leaf.half } else { -leaf.half },
            );
            let d = plane.signed_distance(&corner);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo <= 0.0 && hi >= 0.0 {
            out.extend_from_slice(leaf.indices);
        }
    }
    out.sort_unstable();
    out
}

pub fn audit_partition(tree: &Octree, points: &[Point]) {
    let mut seen = vec![false; points.len()];
    let mut total = 0;
    for leaf in tree.leaves() {
        total += leaf.indices.len();
        for &i in leaf.indices {
            assert!(!seen[i as usize], "index {i} in two leaves");
            seen[i as usize] = true;
            assert!(tree.cell_contains(&leaf, &points[i as usize]));
        }
    }
    assert_eq!(total, points.len());
    assert!(seen.iter().all(|&s| s));
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Facets found by testing every d-subset's hyperplane against all points,
/// and the volume as a sum of simplices from the centroid.
pub fn brute_force_hull(points: &[Vec<f64>]) -> (BTreeSet<Vec<u32>>, f64) {
    let d = points[0].len();
    let n = points.len();
    let c: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
    let mut facets = BTreeSet::new();
    let mut volume = 0.0;
    let mut fact = 1.0;
    for k in 2..=d {
        fact *= k as f64;
    }
    for subset in combinations(n, d) {
        // normal = right singular vector of the smallest singular value
        let m = DMatrix::from_fn(d, d, |r, k| if r + 1 < d { points[subset[r + 1]][k] - points[subset[0]][k] } else { 0.0 });
        let svd = m.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        if svd.singular_values[order[1]] < 1e-9 {
            continue;
        }
        let normal: Vec<f64> = vt.row(order[0]).iter().copied().collect();
        let off = dot(&normal, &points[subset[0]]);
        let sides: Vec<f64> = points.iter().map(|p| dot(&normal, p) - off).collect();
        let tol = 1e-9;
        let above = sides.iter().any(|&s| s > tol);
        let below = sides.iter().any(|&s| s < -tol);
        if above && below {
            continue;
        }
        facets.insert(subset.iter().map(|&i| i as u32).collect::<Vec<u32>>());
        let m = DMatrix::from_fn(d, d, |r, k| points[subset[r]][k] - c[k]);
        volume += m.determinant().abs() / fact;
    }
    (facets, volume)
}

/// Largest origin-centred ball inside the hull, from every supporting
/// hyperplane through a d-subset; `None` when the origin is not inside.
pub fn brute_force_inradius(points: &[Vec<f64>]) -> Option<f64> {
    let d = points[0].len();
    let mut best = f64::INFINITY;
    for subset in combinations(points.len(), d) {
        let m = DMatrix::from_fn(d, d, |r, k| if r + 1 < d { points[subset[r + 1]][k] - points[subset[0]][k] } else { 0.0 });
        let svd = m.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        if svd.singular_values[order[1]] < 1e-9 {
            continue;
        }
        let mut normal: Vec<f64> = vt.row(order[0]).iter().copied().collect();
        let mut off = dot(&normal, &points[subset[0]]);
        let sides: Vec<f64> = points.iter().map(|p| dot(&normal, p) - off).collect();
        let above = sides.iter().any(|&s| s > 1e-9);
        let below = sides.iter().any(|&s| s < -1e-9);
        if above && below {
            continue;
        }
        if above {
            normal.iter_mut().for_each(|x| *x = -*x);
            off = -off;
        }
        // every point satisfies normal . x <= off; the origin is inside when off > 0
        best = best.min(off);
    }
    (best > 0.0 && best.is_finite()).then_some(best)
}
