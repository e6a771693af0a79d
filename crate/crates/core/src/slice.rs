//! Contact computation by slicing the object with the finger flexion plane.
//!
//! For each candidate the palm is advanced along the approach until it meets
//! the nearest sliced point, then each finger closes in the grasp plane:
//! the proximal joint first (the whole straight finger sweeps, so a distal
//! touch also stops it), then the distal joint from the proximal tip. Links
//! are zero-thickness segments; obstacles are the object points inside a
//! slab around the grasp plane, projected onto it.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geometry::{project_to_plane, ObjectStats, Plane, PlaneFrame, Point, PointSet, Projected, RigidTransform, Vec2, Vec3};
use crate::gripper::{Finger, FingerState, GraspCandidate, GraspMode, GripperParams};
use crate::octree::Octree;

/// Slack added to every inclusion threshold so points sitting exactly on a
/// boundary are kept regardless of rounding (mm or radians).
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactConfig {
    /// Contact angles within this of the first one also touch (radians).
    pub angular_tol: f64,
    /// Palm contact distance tolerance (mm).
    pub contact_tol: f64,
    /// Half thickness of the slab of points considered for a slice (mm);
    /// `None` uses half the finger width.
    pub slab_half_thickness: Option<f64>,
    /// Contacts kept per link after farthest-point reduction.
    pub max_contacts_per_link: usize,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            angular_tol: 0.5f64.to_radians(),
            contact_tol: 0.5,
            slab_half_thickness: None,
            max_contacts_per_link: 4,
        }
    }
}

impl ContactConfig {
    pub fn slab(&self, gripper: &GripperParams) -> f64 {
        self.slab_half_thickness.unwrap_or(0.5 * gripper.finger_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkId {
    Palm,
    #[serde(rename = "proximal-L")]
    ProximalLeft,
    #[serde(rename = "proximal-R")]
    ProximalRight,
    #[serde(rename = "distal-L")]
    DistalLeft,
    #[serde(rename = "distal-R")]
    DistalRight,
}

impl LinkId {
    pub fn proximal(f: Finger) -> LinkId {
        match f {
            Finger::Left => LinkId::ProximalLeft,
            Finger::Right => LinkId::ProximalRight,
        }
    }

    pub fn distal(f: Finger) -> LinkId {
        match f {
            Finger::Left => LinkId::DistalLeft,
            Finger::Right => LinkId::DistalRight,
        }
    }

    pub fn finger(self) -> Option<Finger> {
        match self {
            LinkId::Palm => None,
            LinkId::ProximalLeft | LinkId::DistalLeft => Some(Finger::Left),
            LinkId::ProximalRight | LinkId::DistalRight => Some(Finger::Right),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub position: Point,
    /// Unit surface normal pointing out of the object toward the link.
    pub normal: Vec3,
    pub link: LinkId,
    pub source: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Wrapped,
    Fingertip,
    LimitReachedNoContact,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSet {
    pub contacts: Vec<Contact>,
    /// Final joint angles, indexed by [`Finger::index`].
    pub states: [FingerState; 2],
    /// Wrist pose after the approach stage.
    pub pose: RigidTransform,
    pub outcome: Outcome,
    pub mode: GraspMode,
    /// Per-finger closure traces starting at the open state.
    pub traces: [Vec<FingerState>; 2],
}

impl ContactSet {
    /// True when at least one contact sits on each finger.
    pub fn both_fingers(&self) -> bool {
        Finger::BOTH.iter().all(|f| self.contacts.iter().any(|c| c.link.finger() == Some(*f)))
    }
}

/// Where slicing draws its candidate points from.
#[derive(Debug, Clone, Copy)]
pub enum Slicer<'a> {
    /// Octree slab query with an exact distance filter on boundary leaves.
    Octree(&'a Octree),
    /// Linear distance scan over every point of the object.
    WholeSet,
}

/// Points of the slab around `plane`, projected into `frame`, ascending by source index.
pub fn slice_points(points: &[Point], slicer: Slicer<'_>, plane: &Plane, frame: &PlaneFrame, slab: f64) -> Vec<Projected> {
    let indices: Vec<u32> = match slicer {
        Slicer::Octree(tree) => tree.query_slab_exact(points, plane, slab + BOUNDARY_SLACK),
        Slicer::WholeSet => (0..points.len() as u32)
            .filter(|&i| plane.signed_distance(&points[i as usize]).abs() <= slab + BOUNDARY_SLACK)
            .collect(),
    };
    project_to_plane(points, &indices, plane, frame).expect("grasp frames are orthonormal")
}

/// Result of sweeping one joint.
#[derive(Debug, Clone, PartialEq)]
pub struct JointClosure {
    /// Rotation at first contact, or the joint limit.
    pub angle: f64,
    /// Indices into the obstacle slice of every point touching at `angle`.
    pub touching: Vec<usize>,
}

impl JointClosure {
    pub fn hit(&self) -> bool {
        !self.touching.is_empty()
    }
}

/// Rotation needed to bring a segment along `start` (sweeping with `sign`)
/// onto `rel`, in `[0, 2π)`.
fn sweep_angle(start: &Vec2, sign: f64, rel: &Vec2) -> f64 {
    let cross = start.x * rel.y - start.y * rel.x;
    let dot = start.dot(rel);
    let mut phi = sign * cross.atan2(dot);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi > TAU - 1e-9 {
        phi = 0.0;
    }
    phi
}

/// Rotates a segment of `length` about `origin` from `start` until it first
/// passes through an obstacle point or reaches `max_angle`.
pub fn close_joint_2d(
    origin: Vec2,
    length: f64,
    start: Vec2,
    sign: f64,
    max_angle: f64,
    obstacles: &[Projected],
    angular_tol: f64,
) -> JointClosure {
    let mut best = f64::INFINITY;
    let mut hits: Vec<(usize, f64)> = Vec::new();
    for (k, o) in obstacles.iter().enumerate() {
        let rel = o.coords - origin;
        let dist = rel.norm();
        if dist > length + BOUNDARY_SLACK || dist < 1e-12 {
            continue;
        }
        let phi = sweep_angle(&start, sign, &rel);
        if phi <= max_angle + BOUNDARY_SLACK {
            best = best.min(phi);
            hits.push((k, phi));
        }
    }
    if hits.is_empty() {
        return JointClosure { angle: max_angle, touching: Vec::new() };
    }
    let touching = hits.into_iter().filter(|&(_, phi)| phi <= best + angular_tol + BOUNDARY_SLACK).map(|(k, _)| k).collect();
    JointClosure { angle: best.min(max_angle), touching }
}

/// Palm placement for a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Standoff {
    /// Distance moved along the approach from the candidate position.
    pub advance: f64,
    pub pose: RigidTransform,
    /// Obstacle indices touching the palm (envelope mode only).
    pub palm_touching: Vec<usize>,
}

/// Advances the palm until the nearest sliced point in the palm corridor
/// touches it (envelope), or parks it at the fingertip distance from the
/// centroid. `None` when the palm cannot be placed.
pub fn approach_standoff(
    sliced: &[Projected],
    cand: &GraspCandidate,
    params: &GripperParams,
    stats: &ObjectStats,
    cfg: &ContactConfig,
) -> Option<Standoff> {
    let half_span = 0.5 * params.palm_span;
    let in_corridor = |p: &Projected| p.coords.x.abs() <= half_span + BOUNDARY_SLACK;
    let (advance, palm_touching) = match cand.mode {
        GraspMode::Envelope => {
            let nearest = sliced.iter().filter(|p| in_corridor(p)).map(|p| p.coords.y).reduce(f64::min)?;
            let touching = sliced
                .iter()
                .enumerate()
                .filter(|(_, p)| in_corridor(p) && p.coords.y <= nearest + cfg.contact_tol + BOUNDARY_SLACK)
                .map(|(k, _)| k)
                .collect();
            (nearest - cfg.contact_tol, touching)
        }
        GraspMode::Fingertip => {
            let to_cg = (stats.centroid - cand.position()).dot(&cand.approach);
            let advance = to_cg - params.fingertip_distance();
            // the palm block may not sit inside the object
            if sliced.iter().any(|p| in_corridor(p) && p.coords.y < advance) {
                return None;
            }
            (advance, Vec::new())
        }
    };
    let mut pose = cand.pose;
    pose.translation += cand.approach * advance;
    Some(Standoff { advance, pose, palm_touching })
}

/// Everything computed for one candidate, including the projected slice
/// (palm-relative coordinates) for debugging.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub contacts: ContactSet,
    pub sliced: Vec<Projected>,
}

pub fn evaluate_candidate(
    object: &PointSet,
    slicer: Slicer<'_>,
    cand: &GraspCandidate,
    params: &GripperParams,
    stats: &ObjectStats,
    cfg: &ContactConfig,
) -> ContactSet {
    evaluate_candidate_traced(object, slicer, cand, params, stats, cfg).contacts
}

pub fn evaluate_candidate_traced(
    object: &PointSet,
    slicer: Slicer<'_>,
    cand: &GraspCandidate,
    params: &GripperParams,
    stats: &ObjectStats,
    cfg: &ContactConfig,
) -> Evaluation {
    let points = &object.points;
    let normal = cand.plane_normal();
    let closing = cand.closing_axis();
    let plane = Plane::through(&cand.position(), normal).expect("unit plane normal");
    let frame = PlaneFrame { origin: cand.position(), u: closing, v: cand.approach };
    let mut sliced = slice_points(points, slicer, &plane, &frame, cfg.slab(params));

    let open = [FingerState::default(); 2];
    let Some(standoff) = approach_standoff(&sliced, cand, params, stats, cfg) else {
        return Evaluation {
            contacts: ContactSet {
                contacts: Vec::new(),
                states: open,
                pose: cand.pose,
                outcome: Outcome::Unreachable,
                mode: cand.mode,
                traces: [vec![open[0]], vec![open[1]]],
            },
            sliced,
        };
    };
    for p in &mut sliced {
        p.coords.y -= standoff.advance;
    }

    let lift_normal = |source: u32, link_dir: Option<Vec2>| -> Vec3 {
        if let Some(ns) = &object.normals {
            return ns[source as usize];
        }
        match link_dir {
            None => -cand.approach,
            Some(d) => {
                let perp = closing * (-d.y) + cand.approach * d.x;
                let p = points[source as usize];
                let inward = if perp.dot(&(stats.centroid - p)) >= 0.0 { perp } else { -perp };
                -inward
            }
        }
    };

    let mut contacts: Vec<Contact> = Vec::new();
    let palm: Vec<Contact> = standoff
        .palm_touching
        .iter()
        .map(|&k| {
            let s = sliced[k].source;
            Contact { position: points[s as usize], normal: lift_normal(s, None), link: LinkId::Palm, source: s }
        })
        .collect();
    contacts.extend(reduce_contacts(palm, cfg.max_contacts_per_link));

    let mut states = open;
    let mut traces: [Vec<FingerState>; 2] = [Vec::new(), Vec::new()];
    for finger in Finger::BOTH {
        let knuckle = finger.knuckle_2d(params);
        let sign = finger.sweep_sign();
        let prox = close_joint_2d(
            knuckle,
            params.max_reach(),
            finger.direction_2d(0.0),
            sign,
            params.proximal_limit,
            &sliced,
            cfg.angular_tol,
        );
        let theta1 = prox.angle;
        let dir1 = finger.direction_2d(theta1);
        let elbow = knuckle + dir1 * params.proximal_length;
        let dist = close_joint_2d(elbow, params.distal_length, dir1, sign, params.distal_limit, &sliced, cfg.angular_tol);
        let theta2 = dist.angle;
        let dir2 = finger.direction_2d(theta1 + theta2);

        let mut proximal_hits = Vec::new();
        let mut distal_hits = Vec::new();
        for &k in &prox.touching {
            let along = (sliced[k].coords - knuckle).norm();
            if along <= params.proximal_length {
                proximal_hits.push(k);
            } else {
                distal_hits.push(k);
            }
        }
        // a distal touch during the proximal sweep is superseded by the distal sweep
        if dist.hit() {
            distal_hits = dist.touching.clone();
        }
        let lift = |hits: &[usize], link: LinkId, d: Vec2| -> Vec<Contact> {
            hits.iter()
                .map(|&k| {
                    let s = sliced[k].source;
                    Contact { position: points[s as usize], normal: lift_normal(s, Some(d)), link, source: s }
                })
                .collect()
        };
        contacts.extend(reduce_contacts(lift(&proximal_hits, LinkId::proximal(finger), dir1), cfg.max_contacts_per_link));
        contacts.extend(reduce_contacts(lift(&distal_hits, LinkId::distal(finger), dir2), cfg.max_contacts_per_link));

        let state = FingerState::new(theta1, theta2);
        states[finger.index()] = state;
        traces[finger.index()] = vec![FingerState::default(), FingerState::new(theta1, 0.0), state];
    }

    let mut set = ContactSet {
        contacts,
        states,
        pose: standoff.pose,
        outcome: Outcome::LimitReachedNoContact,
        mode: cand.mode,
        traces,
    };
    if set.both_fingers() {
        set.outcome = match cand.mode {
            GraspMode::Envelope => Outcome::Wrapped,
            GraspMode::Fingertip => Outcome::Fingertip,
        };
    }
    Evaluation { contacts: set, sliced }
}

/// Reference closure with no slicing and no closed forms: the palm is placed
/// by scanning every point, then each joint is rotated in steps of `step`
/// and every object point is tested for crossing the link. Angles are
/// accurate to one step. `None` when the palm cannot be placed.
pub fn stepped_sweep(
    points: &[Point],
    cand: &GraspCandidate,
    params: &GripperParams,
    stats: &ObjectStats,
    cfg: &ContactConfig,
    step: f64,
) -> Option<[FingerState; 2]> {
    let slab = cfg.slab(params);
    let n = cand.plane_normal();
    let (u_axis, v_axis) = (cand.closing_axis(), cand.approach);
    let origin = cand.position();
    let half_span = 0.5 * params.palm_span;
    let advance = match cand.mode {
        GraspMode::Envelope => {
            let nearest = points
                .iter()
                .filter(|p| (*p - origin).dot(&n).abs() <= slab && (*p - origin).dot(&u_axis).abs() <= half_span)
                .map(|p| (p - origin).dot(&v_axis))
                .reduce(f64::min)?;
            nearest - cfg.contact_tol
        }
        GraspMode::Fingertip => (stats.centroid - origin).dot(&v_axis) - params.fingertip_distance(),
    };
    let palm = origin + v_axis * advance;

    // first step at which some point changes side of the rotating link
    let sweep = |pivot: Vec2, length: f64, start: Vec2, sign: f64, limit: f64| -> f64 {
        let rotate = |a: f64| {
            let (s, c) = (sign * a).sin_cos();
            Vec2::new(c * start.x - s * start.y, s * start.x + c * start.y)
        };
        let mut prev = start;
        let mut a = 0.0;
        while a < limit {
            let next = (a + step).min(limit);
            let dir = rotate(next);
            for p in points {
                let rel3 = p - palm;
                if rel3.dot(&n).abs() > slab {
                    continue;
                }
                let rel = Vec2::new(rel3.dot(&u_axis), rel3.dot(&v_axis)) - pivot;
                if rel.norm() > length {
                    continue;
                }
                let s0 = prev.x * rel.y - prev.y * rel.x;
                let s1 = dir.x * rel.y - dir.y * rel.x;
                let ahead = dir.dot(&rel) > 0.0 || prev.dot(&rel) > 0.0;
                if ahead && (s0 == 0.0 || s0.signum() != s1.signum()) {
                    return next;
                }
            }
            prev = dir;
            a = next;
        }
        limit
    };

    let mut states = [FingerState::default(); 2];
    for finger in Finger::BOTH {
        let knuckle = finger.knuckle_2d(params);
        let sign = finger.sweep_sign();
        let theta1 = sweep(knuckle, params.max_reach(), finger.direction_2d(0.0), sign, params.proximal_limit);
        let dir1 = finger.direction_2d(theta1);
        let elbow = knuckle + dir1 * params.proximal_length;
        let theta2 = sweep(elbow, params.distal_length, dir1, sign, params.distal_limit);
        states[finger.index()] = FingerState::new(theta1, theta2);
    }
    Some(states)
}

/// Keeps at most `max` contacts by farthest-point sampling, seeded with the
/// lowest source index. Output is ordered by source index.
pub fn reduce_contacts(mut contacts: Vec<Contact>, max: usize) -> Vec<Contact> {
    contacts.sort_by_key(|c| c.source);
    contacts.dedup_by_key(|c| c.source);
    if contacts.len() <= max || max == 0 {
        return contacts;
    }
    let mut chosen = vec![0usize];
    let mut gap: Vec<f64> = contacts.iter().map(|c| (c.position - contacts[0].position).norm_squared()).collect();
    while chosen.len() < max {
        // near-equal gaps count as ties and go to the lowest source index
        let far = gap.iter().copied().fold(0.0f64, f64::max);
        let next = gap.iter().position(|&d| d >= far - 1e-9 * far.max(1.0)).expect("non-empty");
        chosen.push(next);
        for (i, c) in contacts.iter().enumerate() {
            gap[i] = gap[i].min((c.position - contacts[next].position).norm_squared());
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| contacts[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn obs(pts: &[(f64, f64)]) -> Vec<Projected> {
        pts.iter().enumerate().map(|(i, &(x, y))| Projected { coords: Vec2::new(x, y), source: i as u32 }).collect()
    }

    const TOL: f64 = 0.5 * std::f64::consts::PI / 180.0;

    #[test]
    fn quarter_turn_contact() {
        let o = obs(&[(0.0, 1.0)]);
        let r = close_joint_2d(Vec2::zeros(), 1.0, Vec2::x(), 1.0, std::f64::consts::PI, &o, TOL);
        assert_relative_eq!(r.angle, FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(r.touching, vec![0]);
    }

    #[test]
    fn diagonal_contact() {
        let h = 0.5f64.sqrt();
        let r = close_joint_2d(Vec2::zeros(), 1.0, Vec2::x(), 1.0, std::f64::consts::PI, &obs(&[(h, h)]), TOL);
        assert_relative_eq!(r.angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn first_contact_wins() {
        let a = 30f64.to_radians();
        let b = 60f64.to_radians();
        let o = obs(&[(0.9 * b.cos(), 0.9 * b.sin()), (0.9 * a.cos(), 0.9 * a.sin())]);
        let r = close_joint_2d(Vec2::zeros(), 1.0, Vec2::x(), 1.0, std::f64::consts::PI, &o, TOL);
        assert_relative_eq!(r.angle, a, epsilon = 1e-12);
        assert_eq!(r.touching, vec![1]);
    }

    #[test]
    fn out_of_reach_hits_limit() {
        let o = obs(&[(0.0, 2.0), (-3.0, 0.0)]);
        let r = close_joint_2d(Vec2::zeros(), 1.0, Vec2::x(), 1.0, 1.2, &o, TOL);
        assert_eq!(r.angle, 1.2);
        assert!(r.touching.is_empty());
    }

    #[test]
    fn clockwise_sweep() {
        let o = obs(&[(0.0, -0.5), (0.0, 0.5)]);
        let r = close_joint_2d(Vec2::zeros(), 1.0, Vec2::x(), -1.0, std::f64::consts::PI, &o, TOL);
        assert_relative_eq!(r.angle, FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(r.touching, vec![0]);
    }

    #[test]
    fn reduction_keeps_extremes() {
        let mk = |x: f64, s: u32| Contact { position: Point::new(x, 0.0, 0.0), normal: Vec3::z(), link: LinkId::Palm, source: s };
        let cs: Vec<Contact> = (0..10).map(|i| mk(i as f64, i)).collect();
        let r = reduce_contacts(cs, 2);
        assert_eq!(r.iter().map(|c| c.source).collect::<Vec<_>>(), vec![0, 9]);
        let dup = vec![mk(0.0, 3), mk(0.0, 3)];
        assert_eq!(reduce_contacts(dup, 4).len(), 1);
    }
}
