//! Thick-link refinement of a chosen grasp by mesh–mesh contact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{centroid, Point, SceneLinks, TriMesh, Vec3};
use crate::gripper::{forward_kinematics, link_meshes, Finger, FingerState, GripperError, GripperParams};
use crate::slice::{reduce_contacts, Contact, ContactSet, LinkId};

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("{0:?} already intersects the object in the open pose")]
    PoseConflict(LinkId),
    #[error(transparent)]
    Gripper(#[from] GripperError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub iterations: usize,
    /// Search window beyond the zero-thickness angle (degrees).
    pub overshoot_deg: f64,
    /// Coarse scan step used to bracket the first contact (degrees).
    pub scan_step_deg: f64,
    /// Link thickness; `None` takes it from the gripper.
    pub thickness: Option<f64>,
    pub max_contacts_per_link: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { iterations: 24, overshoot_deg: 5.0, scan_step_deg: 0.5, thickness: None, max_contacts_per_link: 4 }
    }
}

/// Contact point between two triangles, with the facet indices involved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub point: Point,
    pub facet_a: u32,
    pub facet_b: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshContact {
    pub hit: bool,
    pub witnesses: Vec<Witness>,
}

fn bbox(points: impl IntoIterator<Item = Point>) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn boxes_overlap(a: &(Point, Point), b: &(Point, Point), tol: f64) -> bool {
    (0..3).all(|k| a.0[k] <= b.1[k] + tol && b.0[k] <= a.1[k] + tol)
}

fn mesh_scale(m: &TriMesh) -> f64 {
    let (lo, hi) = m.bounds();
    (hi - lo).amax()
}

/// Default contact tolerance for a pair of meshes.
pub fn contact_tolerance(a: &TriMesh, b: &TriMesh) -> f64 {
    1e-9 * mesh_scale(a).max(mesh_scale(b)).max(1.0)
}

pub fn meshes_intersect(a: &TriMesh, b: &TriMesh) -> MeshContact {
    meshes_intersect_tol(a, b, contact_tolerance(a, b))
}

/// All intersecting triangle pairs; each witness is the midpoint of the
/// pair's intersection (on triangle `a`).
pub fn meshes_intersect_tol(a: &TriMesh, b: &TriMesh, tol: f64) -> MeshContact {
    let boxes_b: Vec<_> = (0..b.facets.len()).map(|f| bbox(b.triangle(f))).collect();
    let whole_b = bbox(b.vertices.iter().copied());
    let mut witnesses = Vec::new();
    for fa in 0..a.facets.len() {
        let ta = a.triangle(fa);
        let ba = bbox(ta);
        if !boxes_overlap(&ba, &whole_b, tol) {
            continue;
        }
        for (fb, bb) in boxes_b.iter().enumerate() {
            if boxes_overlap(&ba, bb, tol) {
                if let Some(p) = triangle_intersection(&ta, &b.triangle(fb), tol) {
                    witnesses.push(Witness { point: p, facet_a: fa as u32, facet_b: fb as u32 });
                }
            }
        }
    }
    MeshContact { hit: !witnesses.is_empty(), witnesses }
}

fn plane_of(t: &[Point; 3]) -> Option<(Vec3, f64)> {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let len = n.norm();
    if !(len > 0.0) {
        return None;
    }
    let n = n / len;
    Some((n, n.dot(&t[0].coords)))
}

/// Intersection test for two triangles with distance tolerance `tol`;
/// returns a point of the intersection lying on `a`.
pub fn triangle_intersection(a: &[Point; 3], b: &[Point; 3], tol: f64) -> Option<Point> {
    let (na, oa) = plane_of(a)?;
    let (nb, ob) = plane_of(b)?;
    let db = b.map(|p| na.dot(&p.coords) - oa);
    if db.iter().all(|&d| d > tol) || db.iter().all(|&d| d < -tol) {
        return None;
    }
    let da = a.map(|p| nb.dot(&p.coords) - ob);
    if da.iter().all(|&d| d > tol) || da.iter().all(|&d| d < -tol) {
        return None;
    }
    let dir = na.cross(&nb);
    if db.iter().all(|d| d.abs() <= tol) || da.iter().all(|d| d.abs() <= tol) || dir.norm() < 1e-12 {
        return coplanar_intersection(a, b, &na, tol);
    }
    let dir = dir.normalize();
    let sa = plane_section(a, &da, &dir, tol)?;
    let sb = plane_section(b, &db, &dir, tol)?;
    let lo = sa.0.max(sb.0);
    let hi = sa.2.min(sb.2);
    if lo > hi + tol {
        return None;
    }
    let mid = 0.5 * (lo + hi);
    let span = sa.2 - sa.0;
    let s = if span > 0.0 { ((mid - sa.0) / span).clamp(0.0, 1.0) } else { 0.0 };
    Some(sa.1 + (sa.3 - sa.1) * s)
}

/// Where a triangle crosses a plane, as the extreme points along `dir`:
/// (t_min, p_min, t_max, p_max).
fn plane_section(t: &[Point; 3], d: &[f64; 3], dir: &Vec3, tol: f64) -> Option<(f64, Point, f64, Point)> {
    let mut pts: Vec<Point> = Vec::with_capacity(4);
    for i in 0..3 {
        if d[i].abs() <= tol {
            pts.push(t[i]);
        }
        let j = (i + 1) % 3;
        if (d[i] > tol && d[j] < -tol) || (d[i] < -tol && d[j] > tol) {
            pts.push(t[i] + (t[j] - t[i]) * (d[i] / (d[i] - d[j])));
        }
    }
    let mut out: Option<(f64, Point, f64, Point)> = None;
    for p in pts {
        let s = dir.dot(&p.coords);
        out = Some(match out {
            None => (s, p, s, p),
            Some((lo, plo, hi, phi)) => {
                let (lo, plo) = if s < lo { (s, p) } else { (lo, plo) };
                let (hi, phi) = if s > hi { (s, p) } else { (hi, phi) };
                (lo, plo, hi, phi)
            }
        });
    }
    out
}

fn coplanar_intersection(a: &[Point; 3], b: &[Point; 3], n: &Vec3, tol: f64) -> Option<Point> {
    let drop = n.iamax();
    let (i, j) = match drop {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let flat = |p: &Point| (p[i], p[j]);
    let a2 = a.map(|p| flat(&p));
    let b2 = b.map(|p| flat(&p));
    let mut hits: Vec<Point> = Vec::new();
    for k in 0..3 {
        if inside_2d(&b2, a2[k], tol) {
            hits.push(a[k]);
        }
        if inside_2d(&a2, b2[k], tol) {
            hits.push(b[k]);
        }
    }
    for ka in 0..3 {
        let (p0, p1) = (a2[ka], a2[(ka + 1) % 3]);
        for kb in 0..3 {
            let (q0, q1) = (b2[kb], b2[(kb + 1) % 3]);
            if let Some(s) = segment_cross_2d(p0, p1, q0, q1, tol) {
                hits.push(a[ka] + (a[(ka + 1) % 3] - a[ka]) * s);
            }
        }
    }
    if hits.is_empty() {
        return None;
    }
    let sum = hits.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    // pull the average back onto a's plane
    let mean = Point::from(sum / hits.len() as f64);
    Some(mean - n * n.dot(&(mean - a[0])))
}

fn cross2(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn inside_2d(t: &[(f64, f64); 3], p: (f64, f64), tol: f64) -> bool {
    let area = cross2(t[0], t[1], t[2]);
    if area == 0.0 {
        return false;
    }
    let s = area.signum();
    (0..3).all(|k| {
        let (e0, e1) = (t[k], t[(k + 1) % 3]);
        let len = ((e1.0 - e0.0).powi(2) + (e1.1 - e0.1).powi(2)).sqrt();
        s * cross2(e0, e1, p) >= -tol * len
    })
}

/// Parameter along `p0→p1` where it crosses `q0→q1`, if it does.
fn segment_cross_2d(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64), tol: f64) -> Option<f64> {
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let s = (q1.0 - q0.0, q1.1 - q0.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    let (lr, ls) = ((r.0 * r.0 + r.1 * r.1).sqrt(), (s.0 * s.0 + s.1 * s.1).sqrt());
    if denom.abs() <= 1e-14 * lr * ls || lr == 0.0 || ls == 0.0 {
        return None;
    }
    let w = (q0.0 - p0.0, q0.1 - p0.1);
    let t = (w.0 * s.1 - w.1 * s.0) / denom;
    let u = (w.0 * r.1 - w.1 * r.0) / denom;
    let (et, eu) = (tol / lr, tol / ls);
    if t >= -et && t <= 1.0 + et && u >= -eu && u <= 1.0 + eu {
        Some(t.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Object triangles with cached bounding boxes for repeated link queries.
struct ObjectIndex<'a> {
    mesh: &'a TriMesh,
    boxes: Vec<(Point, Point)>,
    center: Point,
    tol: f64,
}

impl<'a> ObjectIndex<'a> {
    fn new(mesh: &'a TriMesh, tol: f64) -> Self {
        let boxes = (0..mesh.facets.len()).map(|f| bbox(mesh.triangle(f))).collect();
        ObjectIndex { mesh, boxes, center: centroid(&mesh.vertices), tol }
    }

    fn near(&self, region: &(Point, Point)) -> Vec<u32> {
        (0..self.boxes.len() as u32).filter(|&f| boxes_overlap(&self.boxes[f as usize], region, self.tol)).collect()
    }

    fn touches(&self, link: &TriMesh, pool: &[u32]) -> bool {
        let lb = bbox(link.vertices.iter().copied());
        let link_tris: Vec<_> = (0..link.facets.len()).map(|f| (link.triangle(f), bbox(link.triangle(f)))).collect();
        pool.iter().any(|&f| {
            let ob = &self.boxes[f as usize];
            boxes_overlap(ob, &lb, self.tol) && {
                let tri = self.mesh.triangle(f as usize);
                link_tris.iter().any(|(lt, bb)| boxes_overlap(ob, bb, self.tol) && triangle_intersection(&tri, lt, self.tol).is_some())
            }
        })
    }

    fn contacts(&self, link: &TriMesh, pool: &[u32], id: LinkId) -> Vec<Contact> {
        let mut out = Vec::new();
        for &f in pool {
            let tri = self.mesh.triangle(f as usize);
            for lf in 0..link.facets.len() {
                if let Some(p) = triangle_intersection(&tri, &link.triangle(lf), self.tol) {
                    out.push(Contact { position: p, normal: self.outward_normal(f as usize), link: id, source: f });
                    break;
                }
            }
        }
        out
    }

    fn outward_normal(&self, f: usize) -> Vec3 {
        let n = self.mesh.facet_normal(f);
        let t = self.mesh.triangle(f);
        let c = Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0);
        if n.dot(&(c - self.center)) < 0.0 {
            -n
        } else {
            n
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedGrasp {
    pub states: [FingerState; 2],
    /// Contacts at the touching angles; `source` is the object facet index.
    pub contacts: Vec<Contact>,
    pub traces: [Vec<FingerState>; 2],
    /// Per finger: whether each joint stopped on contact.
    pub touched: [[bool; 2]; 2],
    pub thickness: f64,
}

fn finger_links(links: &SceneLinks, f: Finger) -> (&TriMesh, &TriMesh) {
    match f {
        Finger::Left => (&links.proximal_left, &links.distal_left),
        Finger::Right => (&links.proximal_right, &links.distal_right),
    }
}

/// Largest angle in `[0, hi]` before `hits` first turns true, bracketed by a
/// coarse scan and narrowed by bisection. Returns `(free, touching)` angles;
/// `touching` is `None` if nothing is hit up to `hi`.
fn first_contact(hi: f64, step: f64, iterations: usize, mut hits: impl FnMut(f64) -> Result<bool, RefineError>) -> Result<(f64, Option<f64>), RefineError> {
    let mut prev = 0.0;
    let mut bracket = None;
    let mut k = 1;
    while prev < hi {
        let a = (k as f64 * step).min(hi);
        if hits(a)? {
            bracket = Some(a);
            break;
        }
        prev = a;
        k += 1;
    }
    let Some(mut hit) = bracket else { return Ok((hi, None)) };
    let mut free = prev;
    for _ in 0..iterations {
        let mid = 0.5 * (free + hit);
        if hits(mid)? {
            hit = mid;
        } else {
            free = mid;
        }
    }
    Ok((free, Some(hit)))
}

/// Re-closes each finger with links of finite thickness against the object
/// mesh, keeping the palm pose from `grasp`.
pub fn refine_grasp(object: &TriMesh, grasp: &ContactSet, params: &GripperParams, cfg: &RefineConfig) -> Result<RefinedGrasp, RefineError> {
    let thickness = cfg.thickness.unwrap_or(params.link_thickness);
    let pose = grasp.pose;
    let scale = mesh_scale(object).max(params.max_reach());
    let index = ObjectIndex::new(object, 1e-9 * scale.max(1.0));
    let all: Vec<u32> = (0..object.facets.len() as u32).collect();

    let open = [FingerState::default(); 2];
    let start = link_meshes(params, &pose, &open, thickness)?;
    let open_links = [
        (LinkId::Palm, &start.palm),
        (LinkId::ProximalLeft, &start.proximal_left),
        (LinkId::ProximalRight, &start.proximal_right),
        (LinkId::DistalLeft, &start.distal_left),
        (LinkId::DistalRight, &start.distal_right),
    ];
    for (id, mesh) in open_links {
        if index.touches(mesh, &all) {
            return Err(RefineError::PoseConflict(id));
        }
    }

    let step = cfg.scan_step_deg.to_radians().max(1e-6);
    let overshoot = cfg.overshoot_deg.to_radians();
    let mut states = open;
    let mut touched = [[false; 2]; 2];
    let mut contacts = Vec::new();
    for f in Finger::BOTH {
        let fi = f.index();
        // everything the finger can sweep through
        let base = forward_kinematics(params, &pose, &open)?.proximal[fi].start;
        let reach = params.max_reach() + thickness + params.finger_width;
        let region = (base - Vec3::repeat(reach), base + Vec3::repeat(reach));
        let pool = index.near(&region);

        let pose_at = |s: FingerState| -> Result<SceneLinks, RefineError> {
            let mut st = open;
            st[fi] = s;
            Ok(link_meshes(params, &pose, &st, thickness)?)
        };

        let zt = grasp.states[fi];
        let hi1 = (zt.proximal + overshoot).min(params.proximal_limit);
        let (theta1, hit1) = first_contact(hi1, step, cfg.iterations, |a| {
            let links = pose_at(FingerState::new(a, 0.0))?;
            let (p, d) = finger_links(&links, f);
            Ok(index.touches(p, &pool) || index.touches(d, &pool))
        })?;
        let mut prox_contacts = Vec::new();
        let mut dist_contacts = Vec::new();
        if let Some(h) = hit1 {
            let links = pose_at(FingerState::new(h, 0.0))?;
            let (p, d) = finger_links(&links, f);
            prox_contacts = index.contacts(p, &pool, LinkId::proximal(f));
            dist_contacts = index.contacts(d, &pool, LinkId::distal(f));
            touched[fi][0] = true;
        }

        let hi2 = (zt.distal + overshoot).min(params.distal_limit);
        let (theta2, hit2) = first_contact(hi2, step, cfg.iterations, |a| {
            let links = pose_at(FingerState::new(theta1, a))?;
            Ok(index.touches(finger_links(&links, f).1, &pool))
        })?;
        if let Some(h) = hit2 {
            let links = pose_at(FingerState::new(theta1, h))?;
            dist_contacts = index.contacts(finger_links(&links, f).1, &pool, LinkId::distal(f));
            touched[fi][1] = true;
        }
        contacts.extend(reduce_contacts(prox_contacts, cfg.max_contacts_per_link));
        contacts.extend(reduce_contacts(dist_contacts, cfg.max_contacts_per_link));
        states[fi] = FingerState::new(theta1, theta2);
    }
    let traces = states.map(|s| vec![FingerState::default(), FingerState::new(s.proximal, 0.0), s]);
    Ok(RefinedGrasp { states, contacts, traces, touched, thickness })
}
