use std::fmt::Write as _;
use std::path::Path;

use super::{GeometryError, Point, TriMesh, Vec3};

/// Posed gripper link meshes for a scene file.
#[derive(Debug, Clone)]
pub struct SceneLinks {
    pub palm: TriMesh,
    pub proximal_left: TriMesh,
    pub proximal_right: TriMesh,
    pub distal_left: TriMesh,
    pub distal_right: TriMesh,
}

/// Writes one OBJ file with a `g` group per part. Contact markers are small
/// octahedra of edge scale `marker_size`; the group is omitted when there are
/// no contacts.
pub fn export_scene(
    object: &TriMesh,
    links: &SceneLinks,
    contacts: &[Point],
    marker_size: f64,
    path: &Path,
) -> Result<(), GeometryError> {
    let text = scene_obj(object, links, contacts, marker_size);
    std::fs::write(path, text).map_err(|source| GeometryError::Io { path: path.display().to_string(), source })
}

pub(crate) fn scene_obj(object: &TriMesh, links: &SceneLinks, contacts: &[Point], marker_size: f64) -> String {
    let mut out = String::from("# grasp scene, units: mm\n");
    let mut base = 1usize;
    let groups: [(&str, &TriMesh); 6] = [
        ("object", object),
        ("palm", &links.palm),
        ("proximal-L", &links.proximal_left),
        ("proximal-R", &links.proximal_right),
        ("distal-L", &links.distal_left),
        ("distal-R", &links.distal_right),
    ];
    for (name, mesh) in groups {
        write_group(&mut out, name, mesh, &mut base);
    }
    if !contacts.is_empty() {
        let markers = contact_markers(contacts, marker_size);
        write_group(&mut out, "contacts", &markers, &mut base);
    }
    out
}

fn write_group(out: &mut String, name: &str, mesh: &TriMesh, base: &mut usize) {
    let _ = writeln!(out, "g {name}");
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &mesh.facets {
        let _ = writeln!(out, "f {} {} {}", f[0] as usize + *base, f[1] as usize + *base, f[2] as usize + *base);
    }
    *base += mesh.vertices.len();
}

fn contact_markers(contacts: &[Point], size: f64) -> TriMesh {
    let mut vertices = Vec::with_capacity(contacts.len() * 6);
    let mut facets = Vec::with_capacity(contacts.len() * 8);
    let axes = [Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
    for c in contacts {
        let b = vertices.len() as u32;
        vertices.extend(axes.iter().map(|a| c + a * size));
        for &(i, j) in &[(0u32, 2u32), (2, 1), (1, 3), (3, 0)] {
            facets.push([b + i, b + j, b + 4]);
            facets.push([b + j, b + i, b + 5]);
        }
    }
    TriMesh { vertices, facets }
}

/// Reads an OBJ file keeping `g` groups apart. Groups appear in file order;
/// each group's mesh is welded independently.
pub fn load_obj_groups(path: &Path, weld_tol: f64) -> Result<Vec<(String, TriMesh)>, GeometryError> {
    let src = std::fs::read_to_string(path).map_err(|source| GeometryError::Io { path: path.display().to_string(), source })?;
    let mut all: Vec<Point> = Vec::new();
    let mut groups: Vec<(String, Vec<[u32; 3]>)> = vec![("default".to_string(), Vec::new())];
    for (ln, line) in src.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["g", name, ..] => groups.push((name.to_string(), Vec::new())),
            ["v", x, y, z, ..] => {
                let parse = |t: &str| {
                    t.parse::<f64>().map_err(|_| GeometryError::Parse { format: "OBJ", detail: format!("line {}", ln + 1) })
                };
                all.push(Point::new(parse(x)?, parse(y)?, parse(z)?));
            }
            ["f", rest @ ..] if rest.len() >= 3 => {
                let idx: Vec<u32> = rest
                    .iter()
                    .map(|t| {
                        let i: usize = t.split('/').next().unwrap_or("").parse().map_err(|_| GeometryError::Parse {
                            format: "OBJ",
                            detail: format!("line {}", ln + 1),
                        })?;
                        if i == 0 || i > all.len() {
                            return Err(GeometryError::BadIndex { index: i, count: all.len() });
                        }
                        Ok(i as u32 - 1)
                    })
                    .collect::<Result<_, _>>()?;
                let faces = &mut groups.last_mut().expect("non-empty").1;
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    for (name, faces) in groups {
        if faces.is_empty() {
            continue;
        }
        let mut used: Vec<u32> = faces.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let local: std::collections::HashMap<u32, u32> =
            used.iter().enumerate().map(|(k, &g)| (g, k as u32)).collect();
        let verts = used.iter().map(|&g| all[g as usize]).collect();
        let facets = faces.iter().map(|f| [local[&f[0]], local[&f[1]], local[&f[2]]]).collect();
        out.push((name, TriMesh::new(verts, facets, weld_tol)?));
    }
    Ok(out)
}
