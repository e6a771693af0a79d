use super::{centroid, weld_vertices, GeometryError, Point, PointSet, PointSource, TriMesh, Vec3};

/// Densifies a mesh surface with a barycentric grid on every facet.
///
/// Each facet is split into `n` steps per edge with `n = ceil(longest edge /
/// spacing)`, which guarantees at least one sample per `spacing²` of facet
/// area. The original vertices come first and keep their indices.
pub fn upsample_surface(mesh: &TriMesh, spacing: f64) -> Result<PointSet, GeometryError> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(GeometryError::BadSpacing(spacing));
    }
    let center = centroid(&mesh.vertices);
    let mut normals = mesh.vertex_normals(&center);
    let mut extra: Vec<Point> = Vec::new();
    let mut extra_normals: Vec<Vec3> = Vec::new();

    for fi in 0..mesh.facets.len() {
        let [a, b, c] = mesh.triangle(fi);
        let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
        let n = (longest / spacing).ceil().max(1.0) as usize;
        if n == 1 {
            continue;
        }
        let mut normal = mesh.facet_normal(fi);
        let mid = Point::from((a.coords + b.coords + c.coords) / 3.0);
        if normal.dot(&(mid - center)) < 0.0 {
            normal = -normal;
        }
        let inv = 1.0 / n as f64;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let k = n - i - j;
                if i == n || j == n || k == n {
                    continue;
                }
                let (wb, wc) = (i as f64 * inv, j as f64 * inv);
                let wa = 1.0 - wb - wc;
                extra.push(Point::from(a.coords * wa + b.coords * wb + c.coords * wc));
                extra_normals.push(normal);
            }
        }
    }

    // shared edge samples of neighbouring facets coincide up to rounding
    let (welded, remap) = weld_vertices(&extra, 1e-7 * spacing.min(1.0));
    let mut welded_normals = vec![Vec3::zeros(); welded.len()];
    let mut seen = vec![false; welded.len()];
    for (i, &j) in remap.iter().enumerate() {
        if !seen[j as usize] {
            seen[j as usize] = true;
            welded_normals[j as usize] = extra_normals[i];
        }
    }

    let source = if welded.is_empty() { PointSource::MeshVertices } else { PointSource::Upsampled };
    let mut points = mesh.vertices.clone();
    points.extend(welded);
    normals.extend(welded_normals);
    let mut set = PointSet::new(points, source)?;
    set.normals = Some(normals);
    Ok(set)
}
