//! Principal-component shape analysis and object classification.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geometry::{centroid, GeometryError, Point, PointSet, Vec3};
use crate::gripper::GripperParams;

/// Principal axes of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeProfile {
    /// Covariance eigenvalues, non-increasing (mm²).
    pub eigenvalues: [f64; 3],
    /// Orthonormal, right-handed principal axes matching `eigenvalues`.
    pub axes: [Vec3; 3],
    /// Extent of the points along each axis (mm).
    pub extents: [f64; 3],
    /// Min/max of `(p - centroid) · axis` for each axis.
    pub spans: [(f64, f64); 3],
    pub centroid: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectClass {
    OneDimensional,
    TwoDimensionalFlat,
    ThreeDimensionalLarge,
    ThreeDimensionalSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Variance ratio read as "much larger".
    pub r_big: f64,
    /// Variance ratio below which two components count as similar.
    pub r_sim: f64,
    /// Small/large cut as a fraction of the finger reach.
    pub small_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { r_big: 9.0, r_sim: 4.0, small_fraction: 0.5 }
    }
}

pub fn pca(points: &PointSet) -> Result<ShapeProfile, GeometryError> {
    pca_of(&points.points)
}

pub fn pca_of(points: &[Point]) -> Result<ShapeProfile, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::Empty);
    }
    let c = centroid(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let mut eigenvalues = [0.0; 3];
    let mut axes = [Vec3::zeros(); 3];
    for (k, &i) in order.iter().enumerate() {
        let v = eig.eigenvalues[i];
        eigenvalues[k] = if v <= 1e-12 * top { 0.0 } else { v };
        axes[k] = eig.eigenvectors.column(i).into_owned().normalize();
    }
    // canonical signs: largest-magnitude component positive, then e3 = e1 x e2
    for axis in axes.iter_mut().take(2) {
        let big = axis.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if big < 0.0 {
            *axis = -*axis;
        }
    }
    axes[1] = (axes[1] - axes[0] * axes[0].dot(&axes[1])).normalize();
    axes[2] = axes[0].cross(&axes[1]);

    let mut spans = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    for p in points {
        let d = p - c;
        for k in 0..3 {
            let t = d.dot(&axes[k]);
            spans[k].0 = spans[k].0.min(t);
            spans[k].1 = spans[k].1.max(t);
        }
    }
    let extents = [spans[0].1 - spans[0].0, spans[1].1 - spans[1].0, spans[2].1 - spans[2].0];
    Ok(ShapeProfile { eigenvalues, axes, extents, spans, centroid: c })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

pub fn classify(profile: &ShapeProfile, gripper: &GripperParams, cfg: &ClassifyConfig) -> ObjectClass {
    let [l1, l2, l3] = profile.eigenvalues;
    let r12 = ratio(l1, l2);
    let r23 = ratio(l2, l3);
    if r12 >= cfg.r_big {
        ObjectClass::OneDimensional
    } else if r12 < cfg.r_sim && r23 >= cfg.r_big {
        ObjectClass::TwoDimensionalFlat
    } else if profile.extents[1] >= cfg.small_fraction * gripper.max_reach() {
        ObjectClass::ThreeDimensionalLarge
    } else {
        ObjectClass::ThreeDimensionalSmall
    }
}

/// How the gripper is oriented relative to the object for each class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    /// Approach radial to `axis`, closing axis perpendicular to it.
    AroundAxis { axis: Vec3 },
    /// Approach radial toward the centroid; closing axis chosen by the pool.
    Radial,
    /// Approach inside the plane normal to `normal`, fingers straddling it.
    FromRim { normal: Vec3 },
    /// Fingertip pinch from a fixed distance, approach radial.
    Fingertip,
}

pub fn alignment_frame(class: ObjectClass, profile: &ShapeProfile) -> Alignment {
    match class {
        ObjectClass::OneDimensional => Alignment::AroundAxis { axis: profile.axes[0] },
        ObjectClass::ThreeDimensionalLarge => Alignment::Radial,
        ObjectClass::TwoDimensionalFlat => Alignment::FromRim { normal: profile.axes[2] },
        ObjectClass::ThreeDimensionalSmall => Alignment::Fingertip,
    }
}

impl Alignment {
    /// Approach direction for a palm at `position`: always toward `center`,
    /// flattened into the rim plane or made perpendicular to the axis where
    /// the alignment requires it.
    pub fn approach_at(&self, position: &Point, center: &Point) -> Vec3 {
        let r = center - position;
        let r = match self {
            Alignment::AroundAxis { axis } => r - axis * axis.dot(&r),
            Alignment::FromRim { normal } => r - normal * normal.dot(&r),
            _ => r,
        };
        r.normalize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn line_is_rank_one() {
        let pts: Vec<Point> = (0..20).map(|i| Point::new(i as f64, 2.0 * i as f64, -1.0 * i as f64)).collect();
        let p = pca_of(&pts).unwrap();
        assert!(p.eigenvalues[0] > 0.0);
        assert_eq!(p.eigenvalues[1], 0.0);
        assert_eq!(p.eigenvalues[2], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(p.axes[i].dot(&p.axes[j]), want, epsilon = 1e-9);
            }
        }
        assert_relative_eq!(p.axes[0].cross(&p.axes[1]), p.axes[2], epsilon = 1e-12);
    }

    #[test]
    fn class_thresholds() {
        let g = GripperParams::default();
        let cfg = ClassifyConfig::default();
        let mk = |ev: [f64; 3], ext: [f64; 3]| ShapeProfile {
            eigenvalues: ev,
            axes: [Vec3::x(), Vec3::y(), Vec3::z()],
            extents: ext,
            spans: [(0.0, 0.0); 3],
            centroid: Point::origin(),
        };
        assert_eq!(classify(&mk([100.0, 1.0, 1.0], [100.0, 10.0, 10.0]), &g, &cfg), ObjectClass::OneDimensional);
        assert_eq!(classify(&mk([400.0, 400.0, 1.0], [100.0, 100.0, 5.0]), &g, &cfg), ObjectClass::TwoDimensionalFlat);
        assert_eq!(classify(&mk([1.0, 1.0, 1.0], [60.0, 60.0, 60.0]), &g, &cfg), ObjectClass::ThreeDimensionalLarge);
        assert_eq!(classify(&mk([1.0, 1.0, 1.0], [10.0, 10.0, 10.0]), &g, &cfg), ObjectClass::ThreeDimensionalSmall);
        // degenerate: a single point
        assert_eq!(classify(&mk([0.0, 0.0, 0.0], [0.0; 3]), &g, &cfg), ObjectClass::ThreeDimensionalSmall);
    }

    #[test]
    fn empty_is_error() {
        assert!(pca_of(&[]).is_err());
    }
}
