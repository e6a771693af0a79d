mod common;
mod oracles;

use proptest::prelude::*;
use rand::Rng;

use slicegrasp::geometry::{object_stats, PointSet, PointSource, Plane, PlaneFrame, Point, Vec2, Vec3};
use slicegrasp::gripper::{closure_order_check, Finger, GraspCandidate, GraspMode, GripperParams};
use slicegrasp::octree::{Octree, OctreeParams};
use slicegrasp::planner::corpus::uv_sphere;
use slicegrasp::slice::{close_joint_2d, evaluate_candidate_traced, slice_points, ContactConfig, LinkId, Outcome, Slicer};

#[test]
fn joint_closure_matches_dense_sweep() {
    let mut rng = common::rng(21);
    let tol = 0.02f64.to_radians();
    for _ in 0..1000 {
        let origin = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let length = rng.random_range(5.0..60.0);
        let a0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let start = Vec2::new(a0.cos(), a0.sin());
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let max_angle = rng.random_range(10.0f64..180.0).to_radians();
        let n = rng.random_range(0..25);
        let obstacles: Vec<Vec2> =
            (0..n).map(|_| Vec2::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0))).collect();
        let got = close_joint_2d(origin, length, start, sign, max_angle, &oracles::projected(&obstacles), 1e-9);
        let oracle = oracles::dense_sweep(origin, length, start, sign, max_angle, &obstacles);
        assert!((got.angle - oracle).abs() <= tol, "got {} oracle {}", got.angle.to_degrees(), oracle.to_degrees());
    }
}

#[test]
fn wrapped_sphere_is_symmetric() {
    let gripper = GripperParams::default();
    let mesh = uv_sphere(Point::origin(), 30.0, 60, 120);
    let object = PointSet::from_mesh(&mesh).unwrap();
    let stats = object_stats(&object).unwrap();
    let tree = Octree::build(&object.points, OctreeParams::for_finger_width(gripper.finger_width)).unwrap();
    let cand = GraspCandidate::new(Point::new(0.0, 0.0, 150.0), -Vec3::z(), Vec3::x(), GraspMode::Envelope, 0);
    let cfg = ContactConfig::default();
    let eval = evaluate_candidate_traced(&object, Slicer::Octree(&tree), &cand, &gripper, &stats, &cfg);
    let set = &eval.contacts;
    assert_eq!(set.outcome, Outcome::Wrapped);
    for link in [LinkId::ProximalLeft, LinkId::ProximalRight] {
        assert!(set.contacts.iter().any(|c| c.link == link), "no contact on {link:?}");
    }
    assert!((set.states[0].proximal - set.states[1].proximal).abs() < 1e-6);
    assert!((set.states[0].distal - set.states[1].distal).abs() < 1e-6);
    assert!(set.traces.iter().all(|t| closure_order_check(t)));
}

#[test]
fn palm_stops_at_the_pole() {
    let gripper = GripperParams::default();
    let mesh = uv_sphere(Point::origin(), 1.0, 30, 60);
    let object = PointSet::from_mesh(&mesh).unwrap();
    let stats = object_stats(&object).unwrap();
    let cand = GraspCandidate::new(Point::new(0.0, 0.0, 100.0), -Vec3::z(), Vec3::x(), GraspMode::Envelope, 0);
    let cfg = ContactConfig::default();
    let eval = evaluate_candidate_traced(&object, Slicer::WholeSet, &cand, &gripper, &stats, &cfg);
    let z = eval.contacts.pose.translation.z;
    assert!((z - (1.0 + cfg.contact_tol)).abs() < 1e-9, "palm at {z}");
}

#[test]
fn fingertip_palm_distance() {
    let gripper = GripperParams::default();
    let mesh = uv_sphere(Point::origin(), 4.0, 20, 40);
    let object = PointSet::from_mesh(&mesh).unwrap();
    let stats = object_stats(&object).unwrap();
    let cand = GraspCandidate::new(Point::new(0.0, 0.0, 150.0), -Vec3::z(), Vec3::x(), GraspMode::Fingertip, 0);
    let eval = evaluate_candidate_traced(&object, Slicer::WholeSet, &cand, &gripper, &stats, &ContactConfig::default());
    let palm = Point::from(eval.contacts.pose.translation);
    assert!(((palm - stats.centroid).norm() - 81.0).abs() < 1e-9);
}

#[test]
fn tiny_object_out_of_reach() {
    let gripper = GripperParams::default();
    // a small cluster far beyond the fingertips, slightly off the palm axis
    let pts: Vec<Point> = (0..20).map(|i| Point::new(0.3 + 0.01 * i as f64, 0.0, -0.01 * i as f64)).collect();
    let object = PointSet::new(pts, PointSource::PointCloud).unwrap();
    let mut stats = object_stats(&object).unwrap();
    // put the centroid somewhere the palm can park far from the cluster
    stats.centroid = Point::new(0.0, 0.0, 300.0);
    let cand = GraspCandidate::new(Point::new(0.0, 0.0, 500.0), -Vec3::z(), Vec3::x(), GraspMode::Fingertip, 0);
    let eval = evaluate_candidate_traced(&object, Slicer::WholeSet, &cand, &gripper, &stats, &ContactConfig::default());
    assert_eq!(eval.contacts.outcome, Outcome::LimitReachedNoContact);
    assert!(eval.contacts.contacts.is_empty());
}

fn ellipsoid_cloud(rng: &mut impl Rng, n: usize, axes: [f64; 3]) -> PointSet {
    let pts = (0..n)
        .map(|_| {
            let u = common::unit_vector(rng);
            Point::new(u.x * axes[0], u.y * axes[1], u.z * axes[2])
        })
        .collect();
    PointSet::new(pts, PointSource::PointCloud).unwrap()
}

/// Whether any obstacle is crossed strictly before `angle` (less a tolerance).
fn crossed_before(origin: Vec2, length: f64, start: Vec2, sign: f64, angle: f64, obstacles: &[Vec2], tol: f64) -> bool {
    let limit = angle - tol;
    limit > 0.0 && oracles::dense_sweep(origin, length, start, sign, limit, obstacles) < limit
}

#[test]
fn convex_objects_are_not_penetrated() {
    let gripper = GripperParams::default();
    let cfg = ContactConfig::default();
    let mut rng = common::rng(22);
    for _ in 0..20 {
        let axes = [rng.random_range(10.0..40.0), rng.random_range(10.0..40.0), rng.random_range(10.0..40.0)];
        let object = ellipsoid_cloud(&mut rng, 4000, axes);
        let stats = object_stats(&object).unwrap();
        let tree = Octree::build(&object.points, OctreeParams::for_finger_width(gripper.finger_width)).unwrap();
        for _ in 0..5 {
            let d = common::unit_vector(&mut rng);
            let closing = common::unit_vector(&mut rng).cross(&d);
            let cand = GraspCandidate::new(Point::from(d * 150.0), -d, closing, GraspMode::Envelope, 0);
            let eval = evaluate_candidate_traced(&object, Slicer::Octree(&tree), &cand, &gripper, &stats, &cfg);
            let set = &eval.contacts;
            if set.outcome == Outcome::Unreachable {
                continue;
            }
            let pts: Vec<Vec2> = eval.sliced.iter().map(|p| p.coords).collect();
            // nothing in the palm corridor lies behind the palm face
            assert!(pts.iter().filter(|p| p.x.abs() <= 0.5 * gripper.palm_span).all(|p| p.y > 0.0));
            for f in Finger::BOTH {
                let s = set.states[f.index()];
                let knuckle = f.knuckle_2d(&gripper);
                let sign = f.sweep_sign();
                assert!(!crossed_before(knuckle, gripper.max_reach(), f.direction_2d(0.0), sign, s.proximal, &pts, 0.02f64.to_radians()));
                let dir1 = f.direction_2d(s.proximal);
                let elbow = knuckle + dir1 * gripper.proximal_length;
                assert!(!crossed_before(elbow, gripper.distal_length, dir1, sign, s.distal, &pts, 0.02f64.to_radians()));
            }
        }
    }
}

#[test]
fn octree_slice_equals_brute_force() {
    let mut rng = common::rng(23);
    let pts = common::points_in_box(&mut rng, 5000, -40.0, 40.0);
    let tree = Octree::build(&pts, OctreeParams::for_finger_width(16.0)).unwrap();
    for _ in 0..50 {
        let n = common::unit_vector(&mut rng);
        let through = Point::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
        let plane = Plane::through(&through, n).unwrap();
        let u = slicegrasp::geometry::any_perpendicular(&n);
        let frame = PlaneFrame { origin: through, u, v: n.cross(&u) };
        let got = slice_points(&pts, Slicer::Octree(&tree), &plane, &frame, 8.0);
        let expected: Vec<u32> = (0..pts.len() as u32).filter(|&i| plane.signed_distance(&pts[i as usize]).abs() <= 8.0).collect();
        assert_eq!(got.iter().map(|p| p.source).collect::<Vec<_>>(), expected);
        for p in &got {
            let q = pts[p.source as usize] - through;
            assert!((p.coords.x - q.dot(&frame.u)).abs() < 1e-9 && (p.coords.y - q.dot(&frame.v)).abs() < 1e-9);
        }
    }
}

fn obstacles() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-60.0..60.0f64, -60.0..60.0f64), 0..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn adding_obstacles_never_opens_the_joint(base in obstacles(), extra in obstacles(), a0 in 0.0..std::f64::consts::TAU, left in any::<bool>()) {
        let start = Vec2::new(a0.cos(), a0.sin());
        let sign = if left { 1.0 } else { -1.0 };
        let pts: Vec<Vec2> = base.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let mut more = pts.clone();
        more.extend(extra.iter().map(|&(x, y)| Vec2::new(x, y)));
        let a = close_joint_2d(Vec2::zeros(), 50.0, start, sign, 2.0, &oracles::projected(&pts), 1e-9);
        let b = close_joint_2d(Vec2::zeros(), 50.0, start, sign, 2.0, &oracles::projected(&more), 1e-9);
        prop_assert!(b.angle <= a.angle);
    }

    #[test]
    fn touching_points_lie_on_the_final_segment(base in obstacles(), a0 in 0.0..std::f64::consts::TAU, left in any::<bool>()) {
        let start = Vec2::new(a0.cos(), a0.sin());
        let sign = if left { 1.0 } else { -1.0 };
        let pts: Vec<Vec2> = base.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let tol = 0.5f64.to_radians();
        let c = close_joint_2d(Vec2::zeros(), 50.0, start, sign, 2.0, &oracles::projected(&pts), tol);
        let dir = oracles::rotate(start, sign * c.angle);
        for &k in &c.touching {
            let p = pts[k];
            prop_assert!(p.norm() <= 50.0);
            let angle_off = (dir.x * p.y - dir.y * p.x).atan2(dir.dot(&p)).abs();
            prop_assert!(angle_off <= tol + 1e-9);
        }
        // first-contact minimality: nothing is crossed before angle - tol
        prop_assert!(!crossed_before(Vec2::zeros(), 50.0, start, sign, c.angle, &pts, tol + 0.02f64.to_radians()));
    }

    #[test]
    fn traces_follow_the_closure_order(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let gripper = GripperParams::default();
        let axes = [rng.random_range(5.0..45.0), rng.random_range(5.0..45.0), rng.random_range(5.0..45.0)];
        let object = ellipsoid_cloud(&mut rng, 1500, axes);
        let stats = object_stats(&object).unwrap();
        let tree = Octree::build(&object.points, OctreeParams::for_finger_width(gripper.finger_width)).unwrap();
        let d = common::unit_vector(&mut rng);
        let closing = common::unit_vector(&mut rng).cross(&d);
        let mode = if rng.random_bool(0.5) { GraspMode::Envelope } else { GraspMode::Fingertip };
        let cand = GraspCandidate::new(Point::from(d * 120.0), -d, closing, mode, 0);
        let cfg = ContactConfig::default();
        let a = evaluate_candidate_traced(&object, Slicer::Octree(&tree), &cand, &gripper, &stats, &cfg);
        let b = evaluate_candidate_traced(&object, Slicer::Octree(&tree), &cand, &gripper, &stats, &cfg);
        prop_assert_eq!(&a.contacts, &b.contacts);
        for t in &a.contacts.traces {
            prop_assert!(closure_order_check(t));
        }
        for s in &a.contacts.states {
            prop_assert!(s.within_limits(&gripper));
        }
    }
}
