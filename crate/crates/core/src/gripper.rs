//! Two-finger underactuated gripper: geometry, forward kinematics and the
//! proximal-before-distal closure contract.
//!
//! Gripper frame: the palm face is the plane `z = 0` centred at the origin,
//! `x` is the closing axis (left knuckle at `-W/2`, right at `+W/2`), `z` is
//! the approach direction and `y` is the normal of the grasp plane in which
//! both fingers flex. A [`GraspCandidate`] pose maps this frame into the
//! object frame.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, RigidTransform, SceneLinks, TriMesh, Vec2, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum GripperError {
    #[error("invalid gripper parameter: {0}")]
    BadParams(String),
    #[error("{finger:?} finger state ({proximal}, {distal}) is outside the joint limits")]
    OutOfLimits { finger: Finger, proximal: f64, distal: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperParams {
    /// Proximal link length (mm).
    pub proximal_length: f64,
    /// Distal link length (mm).
    pub distal_length: f64,
    /// Distance between the two knuckle joints (mm).
    pub palm_span: f64,
    /// Finger width across the grasp plane (mm).
    pub finger_width: f64,
    /// Link thickness used for mesh-level refinement (mm).
    pub link_thickness: f64,
    /// Joint limits (radians).
    pub proximal_limit: f64,
    pub distal_limit: f64,
    /// Depth of the palm block behind the palm face (mm).
    pub palm_depth: f64,
    /// Palm-to-CG distance in fingertip mode, as a fraction of the max reach.
    pub fingertip_standoff: f64,
}

impl Default for GripperParams {
    fn default() -> Self {
        GripperParams {
            proximal_length: 50.0,
            distal_length: 40.0,
            palm_span: 60.0,
            finger_width: 16.0,
            link_thickness: 10.0,
            proximal_limit: std::f64::consts::FRAC_PI_2,
            distal_limit: std::f64::consts::FRAC_PI_2,
            palm_depth: 20.0,
            fingertip_standoff: 0.9,
        }
    }
}

impl GripperParams {
    pub fn validate(&self) -> Result<(), GripperError> {
        let positive = [
            ("proximal_length", self.proximal_length),
            ("palm_span", self.palm_span),
            ("finger_width", self.finger_width),
            ("palm_depth", self.palm_depth),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GripperError::BadParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.distal_length >= 0.0) || !(self.link_thickness >= 0.0) {
            return Err(GripperError::BadParams("lengths must be non-negative".into()));
        }
        for (name, v) in [("proximal_limit", self.proximal_limit), ("distal_limit", self.distal_limit)] {
            if !(v > 0.0 && v <= std::f64::consts::PI) {
                return Err(GripperError::BadParams(format!("{name} must lie in (0, pi], got {v}")));
            }
        }
        if !(self.fingertip_standoff > 0.0) {
            return Err(GripperError::BadParams("fingertip_standoff must be positive".into()));
        }
        Ok(())
    }

    /// Length of a fully extended finger.
    pub fn max_reach(&self) -> f64 {
        self.proximal_length + self.distal_length
    }

    /// Widest cross-section the proximal links can flank when open.
    pub fn wrap_span(&self) -> f64 {
        self.palm_span + 2.0 * self.proximal_length
    }

    /// Palm-to-CG distance used for fingertip grasps.
    pub fn fingertip_distance(&self) -> f64 {
        self.max_reach() * self.fingertip_standoff
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Finger {
    Left,
    Right,
}

impl Finger {
    pub const BOTH: [Finger; 2] = [Finger::Left, Finger::Right];

    pub fn index(self) -> usize {
        match self {
            Finger::Left => 0,
            Finger::Right => 1,
        }
    }

    /// Knuckle position in grasp-plane coordinates (closing axis, approach axis).
    pub fn knuckle_2d(self, params: &GripperParams) -> Vec2 {
        match self {
            Finger::Left => Vec2::new(-0.5 * params.palm_span, 0.0),
            Finger::Right => Vec2::new(0.5 * params.palm_span, 0.0),
        }
    }

    /// In-plane link direction at cumulative flexion `angle`.
    pub fn direction_2d(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        match self {
            Finger::Left => Vec2::new(s, c),
            Finger::Right => Vec2::new(-s, c),
        }
    }

    /// Rotation sense of flexion in the (closing, approach) plane: `+1`
    /// counter-clockwise, `-1` clockwise.
    pub fn sweep_sign(self) -> f64 {
        match self {
            Finger::Left => -1.0,
            Finger::Right => 1.0,
        }
    }
}

/// Joint angles of one finger (radians, zero = straight along the approach).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FingerState {
    pub proximal: f64,
    pub distal: f64,
}

impl FingerState {
    pub fn new(proximal: f64, distal: f64) -> Self {
        FingerState { proximal, distal }
    }

    pub fn within_limits(&self, params: &GripperParams) -> bool {
        const SLACK: f64 = 1e-12;
        self.proximal >= -SLACK
            && self.proximal <= params.proximal_limit + SLACK
            && self.distal >= -SLACK
            && self.distal <= params.distal_limit + SLACK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraspMode {
    Envelope,
    Fingertip,
}

/// One entry of the grasp pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspCandidate {
    /// Gripper frame to object frame; the translation is the palm centre.
    pub pose: RigidTransform,
    pub approach: Vec3,
    pub mode: GraspMode,
    pub pool_index: usize,
}

impl GraspCandidate {
    /// Builds a candidate from a palm position, approach and closing axis.
    /// The closing axis is re-orthogonalised against the approach.
    pub fn new(position: Point, approach: Vec3, closing: Vec3, mode: GraspMode, pool_index: usize) -> Self {
        let z = approach.normalize();
        let x = (closing - z * z.dot(&closing)).normalize();
        let y = z.cross(&x);
        let rotation = nalgebra::Matrix3::from_columns(&[x, y, z]);
        GraspCandidate { pose: RigidTransform::new(rotation, position.coords), approach: z, mode, pool_index }
    }

    pub fn closing_axis(&self) -> Vec3 {
        self.pose.rotation.column(0).into()
    }

    pub fn plane_normal(&self) -> Vec3 {
        self.pose.rotation.column(1).into()
    }

    pub fn position(&self) -> Point {
        Point::from(self.pose.translation)
    }

    pub fn transformed(&self, t: &RigidTransform) -> GraspCandidate {
        GraspCandidate {
            pose: t.compose(&self.pose),
            approach: t.rotation * self.approach,
            mode: self.mode,
            pool_index: self.pool_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Link centre lines of a posed gripper in the object frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperLinks {
    /// Knuckle-to-knuckle segment on the palm face.
    pub palm: Segment,
    pub proximal: [Segment; 2],
    pub distal: [Segment; 2],
}

pub fn forward_kinematics(
    params: &GripperParams,
    pose: &RigidTransform,
    states: &[FingerState; 2],
) -> Result<GripperLinks, GripperError> {
    for f in Finger::BOTH {
        let s = states[f.index()];
        if !s.within_limits(params) {
            return Err(GripperError::OutOfLimits { finger: f, proximal: s.proximal, distal: s.distal });
        }
    }
    let to_world = |q: Vec2| pose.apply(&Point::new(q.x, 0.0, q.y));
    let mut proximal = [Segment { start: Point::origin(), end: Point::origin() }; 2];
    let mut distal = proximal;
    for f in Finger::BOTH {
        let s = states[f.index()];
        let base = f.knuckle_2d(params);
        let mid = base + f.direction_2d(s.proximal) * params.proximal_length;
        let tip = mid + f.direction_2d(s.proximal + s.distal) * params.distal_length;
        proximal[f.index()] = Segment { start: to_world(base), end: to_world(mid) };
        distal[f.index()] = Segment { start: to_world(mid), end: to_world(tip) };
    }
    let palm = Segment {
        start: to_world(Finger::Left.knuckle_2d(params)),
        end: to_world(Finger::Right.knuckle_2d(params)),
    };
    Ok(GripperLinks { palm, proximal, distal })
}

/// Checks that a finger's closure trace is monotone and that the distal joint
/// only moves once the proximal joint has reached its final angle.
pub fn closure_order_check(trace: &[FingerState]) -> bool {
    const TOL: f64 = 1e-12;
    let Some(first) = trace.first() else { return false };
    if first.proximal.abs() > TOL || first.distal.abs() > TOL {
        return false;
    }
    let final_proximal = trace.last().expect("non-empty").proximal;
    trace.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        if b.proximal < a.proximal - TOL || b.distal < a.distal - TOL {
            return false;
        }
        if b.distal > a.distal + TOL {
            return (a.proximal - final_proximal).abs() <= TOL && (b.proximal - final_proximal).abs() <= TOL;
        }
        true
    })
}

/// Box mesh around a link centre line: `width` along `across`, `thickness`
/// along the in-plane perpendicular.
pub fn link_box(seg: &Segment, across: &Vec3, width: f64, thickness: f64) -> TriMesh {
    let axis = seg.end - seg.start;
    let len = axis.norm();
    let dir = if len > 0.0 { axis / len } else { Vec3::z() };
    let side = across.cross(&dir).normalize();
    let (hw, ht) = (0.5 * width, 0.5 * thickness);
    let mut vertices = Vec::with_capacity(8);
    for k in 0..8 {
        let along = if k & 1 != 0 { len } else { 0.0 };
        let w = if k & 2 != 0 { hw } else { -hw };
        let t = if k & 4 != 0 { ht } else { -ht };
        vertices.push(seg.start + dir * along + across * w + side * t);
    }
    TriMesh { vertices, facets: box_facets() }
}

fn box_facets() -> Vec<[u32; 3]> {
    // corners indexed by bits (along, across, side)
    vec![
        [0, 2, 6], [0, 6, 4], // start cap
        [1, 5, 7], [1, 7, 3], // end cap
        [0, 4, 5], [0, 5, 1],
        [2, 3, 7], [2, 7, 6],
        [0, 1, 3], [0, 3, 2],
        [4, 6, 7], [4, 7, 5],
    ]
}

/// Posed link meshes: palm block plus four finger boxes.
pub fn link_meshes(
    params: &GripperParams,
    pose: &RigidTransform,
    states: &[FingerState; 2],
    thickness: f64,
) -> Result<SceneLinks, GripperError> {
    let links = forward_kinematics(params, pose, states)?;
    let across: Vec3 = pose.rotation.column(1).into();
    let approach: Vec3 = pose.rotation.column(2).into();
    let palm_seg = Segment { start: links.palm.start, end: links.palm.end };
    // palm block sits behind the palm face
    let mut palm = link_box(&palm_seg, &across, params.finger_width, params.palm_depth);
    let shift = -approach * (0.5 * params.palm_depth);
    for v in &mut palm.vertices {
        *v += shift;
    }
    let b = |s: &Segment| link_box(s, &across, params.finger_width, thickness);
    Ok(SceneLinks {
        palm,
        proximal_left: b(&links.proximal[0]),
        proximal_right: b(&links.proximal[1]),
        distal_left: b(&links.distal[0]),
        distal_right: b(&links.distal[1]),
    })
}
