use std::collections::HashMap;
use std::path::Path;

use super::{GeometryError, Point, PointSet, PointSource, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Stl,
    Obj,
    Ply,
    Xyz,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Format, GeometryError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        Format::from_name(&ext)
    }

    pub fn from_name(name: &str) -> Result<Format, GeometryError> {
        match name.to_ascii_lowercase().as_str() {
            "stl" => Ok(Format::Stl),
            "obj" => Ok(Format::Obj),
            "ply" => Ok(Format::Ply),
            "xyz" | "txt" => Ok(Format::Xyz),
            other => Err(GeometryError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Mesh(TriMesh),
    Points(PointSet),
}

impl Geometry {
    pub fn point_count(&self) -> usize {
        match self {
            Geometry::Mesh(m) => m.vertices.len(),
            Geometry::Points(p) => p.len(),
        }
    }
}

/// Reads a mesh or point cloud from disk. `hint` overrides the extension.
pub fn load_geometry(path: &Path, hint: Option<Format>, weld_tol: f64) -> Result<Geometry, GeometryError> {
    let format = match hint {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    let bytes = std::fs::read(path).map_err(|source| GeometryError::Io { path: path.display().to_string(), source })?;
    parse_geometry(&bytes, format, weld_tol)
}

pub fn parse_geometry(bytes: &[u8], format: Format, weld_tol: f64) -> Result<Geometry, GeometryError> {
    let geometry = match format {
        Format::Stl => {
            let (v, f) = parse_stl(bytes)?;
            Geometry::Mesh(TriMesh::new(v, f, weld_tol)?)
        }
        Format::Obj => {
            let (v, f) = parse_obj(text(bytes, "OBJ")?)?;
            mesh_or_points(v, f, weld_tol)?
        }
        Format::Ply => {
            let (v, f) = parse_ply(text(bytes, "PLY")?)?;
            mesh_or_points(v, f, weld_tol)?
        }
        Format::Xyz => Geometry::Points(PointSet::new(parse_xyz(text(bytes, "XYZ")?)?, PointSource::PointCloud)?),
    };
    match &geometry {
        Geometry::Mesh(m) if m.facets.is_empty() => Err(GeometryError::Empty),
        _ => Ok(geometry),
    }
}

fn mesh_or_points(v: Vec<Point>, f: Vec<[u32; 3]>, weld_tol: f64) -> Result<Geometry, GeometryError> {
    if v.is_empty() {
        return Err(GeometryError::Empty);
    }
    if f.is_empty() {
        let (welded, _) = weld_vertices(&v, weld_tol);
        Ok(Geometry::Points(PointSet::new(welded, PointSource::PointCloud)?))
    } else {
        Ok(Geometry::Mesh(TriMesh::new(v, f, weld_tol)?))
    }
}

fn text<'a>(bytes: &'a [u8], format: &'static str) -> Result<&'a str, GeometryError> {
    std::str::from_utf8(bytes).map_err(|e| GeometryError::Parse { format, detail: e.to_string() })
}

fn parse_err(format: &'static str, detail: impl Into<String>) -> GeometryError {
    GeometryError::Parse { format, detail: detail.into() }
}

fn parse_f64(tok: Option<&str>, format: &'static str, line: usize) -> Result<f64, GeometryError> {
    let tok = tok.ok_or_else(|| parse_err(format, format!("line {line}: missing coordinate")))?;
    let v: f64 = tok.parse().map_err(|_| parse_err(format, format!("line {line}: bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    Ok(v)
}

/// Merges vertices closer than `tol`. Returns the unique vertices (in first
/// occurrence order) and the old→new index map.
pub fn weld_vertices(vertices: &[Point], tol: f64) -> (Vec<Point>, Vec<u32>) {
    let cell = if tol > 0.0 { tol } else { 1.0 };
    let key = |p: &Point| -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut unique: Vec<Point> = Vec::new();
    let mut remap = Vec::with_capacity(vertices.len());
    for p in vertices {
        let k = key(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in bucket {
                            let d = (unique[j as usize] - p).norm();
                            if d <= tol {
                                found = Some(j);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let idx = match found {
            Some(j) => j,
            None => {
                let j = unique.len() as u32;
                unique.push(*p);
                grid.entry(k).or_default().push(j);
                j
            }
        };
        remap.push(idx);
    }
    (unique, remap)
}

fn parse_stl(bytes: &[u8]) -> Result<(Vec<Point>, Vec<[u32; 3]>), GeometryError> {
    if bytes.len() >= 84 {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if bytes.len() == 84 + 50 * n {
            return parse_stl_binary(bytes, n);
        }
    }
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(256)]).to_string();
    if head.trim_start().starts_with("solid") {
        parse_stl_ascii(text(bytes, "STL")?)
    } else {
        Err(parse_err("STL", "neither a valid binary nor an ASCII STL"))
    }
}

fn parse_stl_binary(bytes: &[u8], n: usize) -> Result<(Vec<Point>, Vec<[u32; 3]>), GeometryError> {
    let mut verts = Vec::with_capacity(3 * n);
    let mut facets = Vec::with_capacity(n);
    let read = |off: usize| f32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]) as f64;
    for t in 0..n {
        let base = 84 + 50 * t + 12;
        for k in 0..3 {
            let o = base + 12 * k;
            let p = Point::new(read(o), read(o + 4), read(o + 8));
            if !p.coords.iter().all(|c| c.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
            verts.push(p);
        }
        let i = 3 * t as u32;
        facets.push([i, i + 1, i + 2]);
    }
    Ok((verts, facets))
}

fn parse_stl_ascii(src: &str) -> Result<(Vec<Point>, Vec<[u32; 3]>), GeometryError> {
    let mut verts = Vec::new();
    let mut facets = Vec::new();
    let mut pending: Vec<u32> = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("vertex") => {
                let x = parse_f64(toks.next(), "STL", ln + 1)?;
                let y = parse_f64(toks.next(), "STL", ln + 1)?;
                let z = parse_f64(toks.next(), "STL", ln + 1)?;
                pending.push(verts.len() as u32);
                verts.push(Point::new(x, y, z));
            }
            Some("endloop") => {
                if pending.len() < 3 {
                    return Err(parse_err("STL", format!("line {}: loop with {} vertices", ln + 1, pending.len())));
                }
                for k in 1..pending.len() - 1 {
                    facets.push([pending[0], pending[k], pending[k + 1]]);
                }
                pending.clear();
            }
            _ => {}
        }
    }
    Ok((verts, facets))
}

fn parse_obj(src: &str) -> Result<(Vec<Point>, Vec<[u32; 3]>), GeometryError> {
    let mut verts = Vec::new();
    let mut facets = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), "OBJ", ln + 1)?;
                let y = parse_f64(toks.next(), "OBJ", ln + 1)?;
                let z = parse_f64(toks.next(), "OBJ", ln + 1)?;
                verts.push(Point::new(x, y, z));
            }
            Some("f") => {
                let idx = toks
                    .map(|t| obj_index(t, verts.len(), ln + 1))
                    .collect::<Result<Vec<_>, _>>()?;
                if idx.len() < 3 {
                    return Err(parse_err("OBJ", format!("line {}: face with fewer than 3 vertices", ln + 1)));
                }
                for k in 1..idx.len() - 1 {
                    facets.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((verts, facets))
}

fn obj_index(tok: &str, count: usize, line: usize) -> Result<u32, GeometryError> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| parse_err("OBJ", format!("line {line}: bad index {tok:?}")))?;
    let resolved = if i < 0 { count as i64 + i } else { i - 1 };
    if resolved < 0 || resolved as usize >= count {
        return Err(GeometryError::BadIndex { index: resolved.max(0) as usize, count });
    }
    Ok(resolved as u32)
}

fn parse_ply(src: &str) -> Result<(Vec<Point>, Vec<[u32; 3]>), GeometryError> {
    let mut lines = src.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(parse_err("PLY", "missing 'ply' magic"));
    }
    let mut n_vertex = 0usize;
    let mut n_face = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut ascii = false;
    for line in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] => ascii = *fmt == "ascii",
            ["element", name, count] => {
                current = name.to_string();
                let c: usize = count.parse().map_err(|_| parse_err("PLY", "bad element count"))?;
                match *name {
                    "vertex" => n_vertex = c,
                    "face" => n_face = c,
                    _ => {}
                }
            }
            ["property", "list", ..] => {}
            ["property", _ty, name] if current == "vertex" => vertex_props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    if !ascii {
        return Err(GeometryError::UnsupportedFormat("binary PLY".into()));
    }
    let col = |name: &str| {
        vertex_props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| parse_err("PLY", format!("vertex property {name} missing")))
    };
    let (cx, cy, cz) = (col("x")?, col("y")?, col("z")?);
    let mut body = lines.filter(|l| !l.trim().is_empty());
    let mut verts = Vec::with_capacity(n_vertex);
    for i in 0..n_vertex {
        let line = body.next().ok_or_else(|| parse_err("PLY", format!("expected {n_vertex} vertices, got {i}")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let x = parse_f64(toks.get(cx).copied(), "PLY", i + 1)?;
        let y = parse_f64(toks.get(cy).copied(), "PLY", i + 1)?;
        let z = parse_f64(toks.get(cz).copied(), "PLY", i + 1)?;
        verts.push(Point::new(x, y, z));
    }
    let mut facets = Vec::with_capacity(n_face);
    for i in 0..n_face {
        let line = body.next().ok_or_else(|| parse_err("PLY", format!("expected {n_face} faces, got {i}")))?;
        let toks: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| parse_err("PLY", format!("bad face index {t:?}"))))
            .collect::<Result<_, _>>()?;
        let k = *toks.first().ok_or_else(|| parse_err("PLY", "empty face line"))? as usize;
        if toks.len() < k + 1 || k < 3 {
            return Err(parse_err("PLY", format!("face {i} is malformed")));
        }
        let idx = &toks[1..=k];
        for &j in idx {
            if j as usize >= verts.len() {
                return Err(GeometryError::BadIndex { index: j as usize, count: verts.len() });
            }
        }
        for t in 1..k - 1 {
            facets.push([idx[0], idx[t], idx[t + 1]]);
        }
    }
    Ok((verts, facets))
}

fn parse_xyz(src: &str) -> Result<Vec<Point>, GeometryError> {
    let mut pts = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        let x = parse_f64(toks.next(), "XYZ", ln + 1)?;
        let y = parse_f64(toks.next(), "XYZ", ln + 1)?;
        let z = parse_f64(toks.next(), "XYZ", ln + 1)?;
        pts.push(Point::new(x, y, z));
    }
    if pts.is_empty() {
        return Err(GeometryError::Empty);
    }
    Ok(pts)
}

/// Binary little-endian STL encoding of a mesh.
pub fn write_stl_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.facets.len());
    out.extend_from_slice(&[0u8; 80]);
    out.extend_from_slice(&(mesh.facets.len() as u32).to_le_bytes());
    for fi in 0..mesh.facets.len() {
        let n = mesh.facet_normal(fi);
        for c in n.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for p in mesh.triangle(fi) {
            for c in p.coords.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0u8; 2]);
    }
    out
}
