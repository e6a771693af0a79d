//! Synthetic test objects.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use super::{gripper_config_text, PlanError};
use crate::geometry::{write_stl_binary, Point, TriMesh, Vec3, DEFAULT_WELD_TOL};
use crate::gripper::GripperParams;
use crate::shape::ObjectClass;

fn weld(vertices: Vec<Point>, facets: Vec<[u32; 3]>) -> TriMesh {
    TriMesh::new(vertices, facets, DEFAULT_WELD_TOL).expect("generated mesh is valid")
}

/// Latitude/longitude sphere.
pub fn uv_sphere(center: Point, radius: f64, stacks: usize, slices: usize) -> TriMesh {
    let stacks = stacks.max(2);
    let slices = slices.max(3);
    let mut v = vec![center + Vec3::z() * radius];
    for i in 1..stacks {
        let polar = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let az = TAU * j as f64 / slices as f64;
            v.push(center + Vec3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()) * radius);
        }
    }
    v.push(center - Vec3::z() * radius);
    let south = (v.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * slices + j % slices) as u32;
    let mut f = Vec::new();
    for j in 0..slices {
        f.push([0, ring(1, j), ring(1, j + 1)]);
        f.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            f.push([a, c, d]);
            f.push([a, d, b]);
        }
    }
    weld(v, f)
}

/// Axis-aligned box with each face gridded at roughly `spacing`.
pub fn box_mesh(min: Point, size: [f64; 3], spacing: f64) -> TriMesh {
    let n = |s: f64| ((s / spacing).ceil() as usize).max(1);
    let mut v = Vec::new();
    let mut f = Vec::new();
    // each face: origin corner, two edge vectors, outward orientation by order
    let [sx, sy, sz] = size;
    let faces: [(Point, Vec3, Vec3); 6] = [
        (min, Vec3::new(0.0, sy, 0.0), Vec3::new(sx, 0.0, 0.0)),
        (min + Vec3::new(0.0, 0.0, sz), Vec3::new(sx, 0.0, 0.0), Vec3::new(0.0, sy, 0.0)),
        (min, Vec3::new(sx, 0.0, 0.0), Vec3::new(0.0, 0.0, sz)),
        (min + Vec3::new(0.0, sy, 0.0), Vec3::new(0.0, 0.0, sz), Vec3::new(sx, 0.0, 0.0)),
        (min, Vec3::new(0.0, 0.0, sz), Vec3::new(0.0, sy, 0.0)),
        (min + Vec3::new(sx, 0.0, 0.0), Vec3::new(0.0, sy, 0.0), Vec3::new(0.0, 0.0, sz)),
    ];
    for (o, a, b) in faces {
        let (na, nb) = (n(a.norm()), n(b.norm()));
        let base = v.len() as u32;
        for i in 0..=na {
            for j in 0..=nb {
                v.push(o + a * (i as f64 / na as f64) + b * (j as f64 / nb as f64));
            }
        }
        let id = |i: usize, j: usize| base + (i * (nb + 1) + j) as u32;
        for i in 0..na {
            for j in 0..nb {
                f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    weld(v, f)
}

/// Closed cylinder along z from `base`.
pub fn cylinder(base: Point, radius: f64, height: f64, around: usize, rings: usize) -> TriMesh {
    let around = around.max(3);
    let rings = rings.max(1);
    let mut v = Vec::new();
    for i in 0..=rings {
        let z = height * i as f64 / rings as f64;
        for j in 0..around {
            let az = TAU * j as f64 / around as f64;
            v.push(base + Vec3::new(radius * az.cos(), radius * az.sin(), z));
        }
    }
    let id = |i: usize, j: usize| (i * around + j % around) as u32;
    let mut f = Vec::new();
    for i in 0..rings {
        for j in 0..around {
            f.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    // caps as concentric fans so the cap surface is sampled too
    let cap_rings = ((radius / (TAU * radius / around as f64)).ceil() as usize).max(1);
    for (z, top) in [(0.0, false), (height, true)] {
        let center = v.len() as u32;
        v.push(base + Vec3::new(0.0, 0.0, z));
        let mut prev: Vec<u32> = vec![center; around];
        for r in 1..=cap_rings {
            let cur: Vec<u32> = if r == cap_rings {
                (0..around).map(|j| id(if top { rings } else { 0 }, j)).collect()
            } else {
                let rr = radius * r as f64 / cap_rings as f64;
                (0..around)
                    .map(|j| {
                        let az = TAU * j as f64 / around as f64;
                        v.push(base + Vec3::new(rr * az.cos(), rr * az.sin(), z));
                        (v.len() - 1) as u32
                    })
                    .collect()
            };
            for j in 0..around {
                let k = (j + 1) % around;
                let quad = [prev[j], cur[j], cur[k], prev[k]];
                let tris = [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]];
                for t in tris {
                    if t[0] == t[2] || t[0] == t[1] || t[1] == t[2] {
                        continue;
                    }
                    f.push(if top { t } else { [t[0], t[2], t[1]] });
                }
            }
            prev = cur;
        }
    }
    weld(v, f)
}

/// Torus around `axis` through `center`.
pub fn torus(center: Point, axis: Vec3, major: f64, minor: f64, n_major: usize, n_minor: usize) -> TriMesh {
    let axis = axis.normalize();
    let e1 = crate::geometry::any_perpendicular(&axis);
    let e2 = axis.cross(&e1);
    let mut v = Vec::new();
    for i in 0..n_major {
        let a = TAU * i as f64 / n_major as f64;
        let radial = e1 * a.cos() + e2 * a.sin();
        for j in 0..n_minor {
            let b = TAU * j as f64 / n_minor as f64;
            v.push(center + radial * (major + minor * b.cos()) + axis * (minor * b.sin()));
        }
    }
    let id = |i: usize, j: usize| ((i % n_major) * n_minor + j % n_minor) as u32;
    let mut f = Vec::new();
    for i in 0..n_major {
        for j in 0..n_minor {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    weld(v, f)
}

/// Concatenation of meshes (no boolean union).
pub fn merge(parts: &[TriMesh]) -> TriMesh {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for p in parts {
        let base = v.len() as u32;
        v.extend_from_slice(&p.vertices);
        f.extend(p.facets.iter().map(|t| t.map(|i| i + base)));
    }
    weld(v, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Archetype {
    Sphere,
    Bar,
    Plate,
    SmallCube,
    Mug,
    LBracket,
    /// Too large for the default gripper to close on.
    Oversized,
}

impl Archetype {
    pub const STANDARD: [Archetype; 6] =
        [Archetype::Sphere, Archetype::Bar, Archetype::Plate, Archetype::SmallCube, Archetype::Mug, Archetype::LBracket];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Sphere => "sphere",
            Archetype::Bar => "bar",
            Archetype::Plate => "plate",
            Archetype::SmallCube => "small_cube",
            Archetype::Mug => "mug",
            Archetype::LBracket => "l_bracket",
            Archetype::Oversized => "oversized",
        }
    }

    /// Expected class with the default gripper, where it is clear-cut.
    pub fn expected_class(self) -> Option<ObjectClass> {
        match self {
            Archetype::Sphere | Archetype::Oversized => Some(ObjectClass::ThreeDimensionalLarge),
            Archetype::Bar => Some(ObjectClass::OneDimensional),
            Archetype::Plate => Some(ObjectClass::TwoDimensionalFlat),
            Archetype::SmallCube => Some(ObjectClass::ThreeDimensionalSmall),
            Archetype::Mug | Archetype::LBracket => None,
        }
    }

    pub fn mesh(self) -> TriMesh {
        let o = Point::origin();
        match self {
            Archetype::Sphere => uv_sphere(o, 25.0, 150, 300),
            Archetype::Bar => box_mesh(Point::new(-50.0, -5.0, -5.0), [100.0, 10.0, 10.0], 1.0),
            Archetype::Plate => box_mesh(Point::new(-50.0, -50.0, -2.5), [100.0, 100.0, 5.0], 2.0),
            Archetype::SmallCube => box_mesh(Point::new(-5.0, -5.0, -5.0), [10.0, 10.0, 10.0], 1.0),
            Archetype::Mug => merge(&[
                cylinder(Point::new(0.0, 0.0, -45.0), 24.0, 90.0, 120, 60),
                torus(Point::new(34.0, 0.0, 0.0), Vec3::y(), 18.0, 4.0, 96, 20),
            ]),
            Archetype::LBracket => merge(&[
                box_mesh(Point::new(-40.0, -15.0, -5.0), [80.0, 30.0, 10.0], 2.0),
                box_mesh(Point::new(-40.0, -15.0, 5.0), [10.0, 30.0, 50.0], 2.0),
            ]),
            Archetype::Oversized => uv_sphere(o, 200.0, 60, 120),
        }
    }
}

/// Writes the synthetic objects as binary STL plus a default `gripper.toml`.
pub fn write_corpus(dir: &Path, include_oversized: bool) -> Result<Vec<PathBuf>, PlanError> {
    let io = |path: &Path, e: std::io::Error| PlanError::Io { path: path.to_path_buf(), source: e };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut kinds = Archetype::STANDARD.to_vec();
    if include_oversized {
        kinds.push(Archetype::Oversized);
    }
    let mut out = Vec::new();
    for k in kinds {
        let path = dir.join(format!("{}.stl", k.name()));
        std::fs::write(&path, write_stl_binary(&k.mesh())).map_err(|e| io(&path, e))?;
        out.push(path);
    }
    let g = dir.join("gripper.toml");
    std::fs::write(&g, gripper_config_text(&GripperParams::default())).map_err(|e| io(&g, e))?;
    Ok(out)
}
