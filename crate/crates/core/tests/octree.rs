mod common;
mod oracles;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;

use slicegrasp::geometry::{Plane, Point};
use slicegrasp::octree::{Octree, OctreeParams};

fn random_plane(rng: &mut impl Rng, lo: f64, hi: f64) -> Plane {
    let n = common::unit_vector(rng);
    let through = Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi));
    Plane::through(&through, n).unwrap()
}

#[test]
fn ten_thousand_points_partition() {
    let mut rng = common::rng(1);
    let pts = common::points_in_box(&mut rng, 10_000, -50.0, 50.0);
    let tree = Octree::build(&pts, OctreeParams::default()).unwrap();
    oracles::audit_partition(&tree, &pts);
}

#[test]
fn plane_query_matches_leaf_enumeration() {
    let mut rng = common::rng(2);
    let pts = common::points_in_box(&mut rng, 5_000, 0.0, 100.0);
    let tree = Octree::build(&pts, OctreeParams::default()).unwrap();
    for _ in 0..100 {
        let plane = random_plane(&mut rng, 0.0, 100.0);
        assert_eq!(tree.query_plane(&plane), oracles::brute_force_plane(&tree, &plane));
    }
}

#[test]
fn plane_through_a_point_returns_it() {
    let mut rng = common::rng(3);
    let pts = common::points_in_box(&mut rng, 5_000, -10.0, 10.0);
    let tree = Octree::build(&pts, OctreeParams { max_leaf_points: 8, ..Default::default() }).unwrap();
    for _ in 0..200 {
        let k = rng.random_range(0..pts.len());
        let plane = Plane::through(&pts[k], common::unit_vector(&mut rng)).unwrap();
        let got: BTreeSet<u32> = tree.query_plane(&plane).into_iter().collect();
        assert!(got.contains(&(k as u32)));
    }
}

#[test]
fn halfspace_matches_point_sign_test() {
    let mut rng = common::rng(4);
    let pts = common::points_in_box(&mut rng, 3_000, -20.0, 20.0);
    let tree = Octree::build(&pts, OctreeParams::default()).unwrap();
    for _ in 0..50 {
        let plane = random_plane(&mut rng, -20.0, 20.0);
        let brute: Vec<u32> =
            (0..pts.len() as u32).filter(|&i| plane.signed_distance(&pts[i as usize]) <= 0.0).collect();
        assert_eq!(tree.query_halfspace(&pts, &plane), brute);
    }
}

#[test]
fn slab_query_contains_every_slab_point() {
    let mut rng = common::rng(5);
    let pts = common::points_in_box(&mut rng, 5_000, -30.0, 30.0);
    let tree = Octree::build(&pts, OctreeParams::for_finger_width(16.0)).unwrap();
    for _ in 0..50 {
        let plane = random_plane(&mut rng, -30.0, 30.0);
        let got: BTreeSet<u32> = tree.query_slab(&plane, 8.0).into_iter().collect();
        for (i, p) in pts.iter().enumerate() {
            if plane.signed_distance(p).abs() <= 8.0 {
                assert!(got.contains(&(i as u32)));
            }
        }
    }
}

#[test]
fn wireframe_has_twelve_edges_per_leaf() {
    let mut rng = common::rng(6);
    let pts = common::points_in_box(&mut rng, 500, 0.0, 1.0);
    let tree = Octree::build(&pts, OctreeParams { max_leaf_points: 16, ..Default::default() }).unwrap();
    let obj = tree.leaf_wireframe_obj();
    let leaves = tree.leaves().count();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8 * leaves);
    assert_eq!(obj.lines().filter(|l| l.starts_with("l ")).count(), 12 * leaves);
}

fn cloud() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64), 1..400)
        .prop_map(|v| v.into_iter().map(|(x, y, z)| Point::new(x, y, z)).collect())
}

fn params() -> impl Strategy<Value = OctreeParams> {
    (1usize..40, 1usize..12, prop_oneof![Just(0.0), 0.5..20.0f64], prop::option::of(5.0..80.0f64)).prop_map(
        |(max_leaf_points, max_depth, min_leaf, max_leaf_edge)| OctreeParams {
            max_leaf_points,
            max_depth,
            min_leaf,
            max_leaf_edge,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_holds_for_any_parameters(pts in cloud(), p in params()) {
        let tree = Octree::build(&pts, p).unwrap();
        oracles::audit_partition(&tree, &pts);
    }

    #[test]
    fn build_is_deterministic(pts in cloud(), p in params()) {
        prop_assert_eq!(Octree::build(&pts, p).unwrap(), Octree::build(&pts, p).unwrap());
    }

    #[test]
    fn query_is_independent_of_insertion_order(pts in cloud(), seed in any::<u64>(), nx in -1.0..1.0f64, ny in -1.0..1.0f64, off in -80.0..80.0f64) {
        let n = slicegrasp::geometry::Vec3::new(nx, ny, 1.0);
        let plane = Plane::new(n, off).unwrap();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        let mut rng = common::rng(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<Point> = order.iter().map(|&i| pts[i]).collect();
        let a = Octree::build(&pts, OctreeParams::default()).unwrap();
        let b = Octree::build(&shuffled, OctreeParams::default()).unwrap();
        let from_a: BTreeSet<u32> = a.query_plane(&plane).into_iter().collect();
        let from_b: BTreeSet<u32> = b.query_plane(&plane).into_iter().map(|k| order[k as usize] as u32).collect();
        prop_assert_eq!(from_a, from_b);
    }

    #[test]
    fn plane_query_equals_enumeration(pts in cloud(), p in params(), nx in -1.0..1.0f64, ny in -1.0..1.0f64, nz in -1.0..1.0f64, off in -120.0..120.0f64) {
        prop_assume!(nx * nx + ny * ny + nz * nz > 1e-4);
        let tree = Octree::build(&pts, p).unwrap();
        let plane = Plane::new(slicegrasp::geometry::Vec3::new(nx, ny, nz), off).unwrap();
        prop_assert_eq!(tree.query_plane(&plane), oracles::brute_force_plane(&tree, &plane));
    }
}
