//! Geometry primitives shared by every stage of the planner.
//!
//! All lengths are millimeters. Values are immutable once built and are
//! shared read-only across parallel grasp evaluations.

mod io;
mod scene;
mod upsample;

pub use io::{load_geometry, parse_geometry, weld_vertices, write_stl_binary, Format, Geometry};
pub use scene::{export_scene, load_obj_groups, SceneLinks};
pub use upsample::upsample_surface;

use nalgebra::{Matrix3, Point3, Vector2, Vector3};
use thiserror::Error;

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Default vertex weld tolerance (mm).
pub const DEFAULT_WELD_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported geometry format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed {format} data: {detail}")]
    Parse { format: &'static str, detail: String },
    #[error("geometry contains no usable points")]
    Empty,
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("facet references vertex {index} but only {count} vertices exist")]
    BadIndex { index: usize, count: usize },
    #[error("upsampling spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("projection frame is not orthonormal to the plane")]
    BadFrame,
    #[error("plane normal has zero length")]
    DegeneratePlane,
}

/// Where the points of a [`PointSet`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointSource {
    MeshVertices,
    PointCloud,
    Upsampled,
}

/// Triangle mesh with welded vertices and no zero-area facets.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub facets: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Builds a mesh, welding vertices within `weld_tol` and dropping
    /// degenerate facets.
    pub fn new(vertices: Vec<Point>, facets: Vec<[u32; 3]>, weld_tol: f64) -> Result<Self, GeometryError> {
        for f in &facets {
            for &i in f {
                if i as usize >= vertices.len() {
                    return Err(GeometryError::BadIndex { index: i as usize, count: vertices.len() });
                }
            }
        }
        if vertices.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        let (welded, remap) = weld_vertices(&vertices, weld_tol);
        let mut out = Vec::with_capacity(facets.len());
        for f in facets {
            let g = [remap[f[0] as usize], remap[f[1] as usize], remap[f[2] as usize]];
            if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
                continue;
            }
            let area2 = (welded[g[1] as usize] - welded[g[0] as usize])
                .cross(&(welded[g[2] as usize] - welded[g[0] as usize]))
                .norm();
            if area2 <= f64::EPSILON * 16.0 {
                continue;
            }
            out.push(g);
        }
        if welded.is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(TriMesh { vertices: welded, facets: out })
    }

    pub fn triangle(&self, f: usize) -> [Point; 3] {
        let [a, b, c] = self.facets[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Unit normal of a facet following its winding.
    pub fn facet_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn facet_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Area-weighted vertex normals, flipped to point away from `center`.
    pub fn vertex_normals(&self, center: &Point) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for (fi, f) in self.facets.iter().enumerate() {
            let [a, b, c] = self.triangle(fi);
            let mut n = (b - a).cross(&(c - a));
            // orient each facet outward before accumulating so that STL files
            // with inconsistent winding still produce usable normals
            let centroid = Point::from((a.coords + b.coords + c.coords) / 3.0);
            if n.dot(&(centroid - center)) < 0.0 {
                n = -n;
            }
            for &v in f {
                acc[v as usize] += n;
            }
        }
        acc.into_iter()
            .zip(&self.vertices)
            .map(|(n, p)| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    let r = p - center;
                    if r.norm() > 0.0 { r.normalize() } else { Vec3::z() }
                }
            })
            .collect()
    }

    pub fn bounds(&self) -> (Point, Point) {
        bounds(&self.vertices)
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|p| t.apply(p)).collect(),
            facets: self.facets.clone(),
        }
    }
}

/// Deduplicated object points, optionally carrying outward surface normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub normals: Option<Vec<Vec3>>,
    pub source: PointSource,
}

impl PointSet {
    pub fn new(points: Vec<Point>, source: PointSource) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        Ok(PointSet { points, normals: None, source })
    }

    /// Point set of the mesh vertices with area-weighted normals.
    pub fn from_mesh(mesh: &TriMesh) -> Result<Self, GeometryError> {
        let mut set = PointSet::new(mesh.vertices.clone(), PointSource::MeshVertices)?;
        let center = centroid(&mesh.vertices);
        set.normals = Some(mesh.vertex_normals(&center));
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointSet {
        PointSet {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            normals: self.normals.as_ref().map(|ns| ns.iter().map(|n| t.rotation * n).collect()),
            source: self.source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vec3,
    offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Result<Self, GeometryError> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(GeometryError::DegeneratePlane);
        }
        Ok(Plane { normal: normal / len, offset: offset / len })
    }

    pub fn through(point: &Point, normal: Vec3) -> Result<Self, GeometryError> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(GeometryError::DegeneratePlane);
        }
        let n = normal / len;
        Ok(Plane { normal: n, offset: n.dot(&point.coords) })
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

/// Orthonormal in-plane frame used to express projected points in 2-D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Point,
    pub u: Vec3,
    pub v: Vec3,
}

impl PlaneFrame {
    pub fn lift(&self, q: &Vec2) -> Point {
        self.origin + self.u * q.x + self.v * q.y
    }

    pub fn to_2d(&self, p: &Point) -> Vec2 {
        let r = p - self.origin;
        Vec2::new(r.dot(&self.u), r.dot(&self.v))
    }
}

/// A point projected onto a plane, remembering which input point it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub coords: Vec2,
    pub source: u32,
}

/// Orthogonally projects `indices` of `points` onto `plane` and expresses
/// them in `frame`.
pub fn project_to_plane(
    points: &[Point],
    indices: &[u32],
    plane: &Plane,
    frame: &PlaneFrame,
) -> Result<Vec<Projected>, GeometryError> {
    const TOL: f64 = 1e-9;
    let n = plane.normal();
    let ok = (frame.u.norm() - 1.0).abs() < TOL
        && (frame.v.norm() - 1.0).abs() < TOL
        && frame.u.dot(&frame.v).abs() < TOL
        && frame.u.dot(n).abs() < TOL
        && frame.v.dot(n).abs() < TOL;
    if !ok {
        return Err(GeometryError::BadFrame);
    }
    Ok(indices
        .iter()
        .map(|&i| {
            let p = points[i as usize];
            let foot = p - n * plane.signed_distance(&p);
            Projected { coords: frame.to_2d(&foot), source: i }
        })
        .collect())
}

/// Rotation plus translation mapping a local frame into the object frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform { rotation: Matrix3::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        (r.transpose() * r - Matrix3::identity()).amax() <= tol && (r.determinant() - 1.0).abs() <= tol
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectStats {
    /// Vertex centroid, used as the object's center of gravity.
    pub centroid: Point,
    /// Largest distance from the centroid to any point.
    pub radius: f64,
    pub min: Point,
    pub max: Point,
}

impl ObjectStats {
    pub fn extents(&self) -> Vec3 {
        self.max - self.min
    }
}

pub fn object_stats(points: &PointSet) -> Result<ObjectStats, GeometryError> {
    object_stats_of(&points.points)
}

pub fn object_stats_of(points: &[Point]) -> Result<ObjectStats, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::Empty);
    }
    let c = centroid(points);
    let radius = points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
    let (min, max) = bounds(points);
    Ok(ObjectStats { centroid: c, radius, min, max })
}

pub(crate) fn centroid(points: &[Point]) -> Point {
    let sum: Vec3 = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    Point::from(sum / points.len() as f64)
}

pub(crate) fn bounds(points: &[Point]) -> (Point, Point) {
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

/// Unit vector perpendicular to `v`, built from the global axis least aligned with it.
pub fn any_perpendicular(v: &Vec3) -> Vec3 {
    let a = v.abs();
    let axis = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - v * v.dot(&axis)).normalize()
}
