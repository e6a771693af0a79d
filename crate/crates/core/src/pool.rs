//! Grasp pool generation by sampling spheres, cylinders and circles around the object.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ObjectStats, Point, Vec3};
use crate::gripper::{GraspCandidate, GraspMode, GripperParams};
use crate::shape::{ObjectClass, ShapeProfile};

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("angular step must lie in (0, 120] degrees, got {0}")]
    BadStep(f64),
    #[error("cylinder sampling needs at least one level")]
    BadLevels,
    #[error("standoff margin must be non-negative, got {0}")]
    BadMargin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    /// Angular step between neighbouring samples (degrees).
    pub step_deg: f64,
    pub cylinder_levels: usize,
    /// Clearance between the enclosing surface and the palm (mm);
    /// `None` uses the gripper's max reach.
    pub standoff_margin: Option<f64>,
    /// Step multiplier used for small objects.
    pub small_rate: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec { step_deg: 30.0, cylinder_levels: 3, standoff_margin: None, small_rate: 2.0 }
    }
}

impl SamplingSpec {
    pub fn margin(&self, gripper: &GripperParams) -> f64 {
        self.standoff_margin.unwrap_or_else(|| gripper.max_reach())
    }
}

fn check_step(step_deg: f64) -> Result<f64, PoolError> {
    if step_deg > 0.0 && step_deg <= 120.0 {
        Ok(step_deg.to_radians())
    } else {
        Err(PoolError::BadStep(step_deg))
    }
}

/// `k * step` for every k ≥ `first` with `k * step < limit`.
fn angle_grid(step_deg: f64, first: usize, limit_deg: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = first;
    while (k as f64) * step_deg < limit_deg - 1e-9 {
        out.push((k as f64 * step_deg).to_radians());
        k += 1;
    }
    out
}

/// Points on the sphere of radius `radius + margin` around `center`, poles
/// along `axes[2]`, each with closing-axis rolls of 0° and 90°.
pub fn sample_sphere(
    center: &Point,
    radius: f64,
    axes: &[Vec3; 3],
    step_deg: f64,
    margin: f64,
    mode: GraspMode,
) -> Result<Vec<GraspCandidate>, PoolError> {
    check_step(step_deg)?;
    if !(margin >= 0.0) {
        return Err(PoolError::BadMargin(margin));
    }
    let r = radius + margin;
    let [e1, e2, e3] = *axes;
    let mut dirs = vec![e3];
    for polar in angle_grid(step_deg, 1, 180.0) {
        for az in angle_grid(step_deg, 0, 360.0) {
            dirs.push(e1 * (polar.sin() * az.cos()) + e2 * (polar.sin() * az.sin()) + e3 * polar.cos());
        }
    }
    dirs.push(-e3);

    let mut out = Vec::with_capacity(dirs.len() * 2);
    for d in dirs {
        let position = center + d * r;
        let approach = -d;
        let reference = if approach.dot(&e3).abs() > 0.99 { e1 } else { e3 };
        let closing0 = (reference - approach * approach.dot(&reference)).normalize();
        let closing90 = approach.cross(&closing0);
        for closing in [closing0, closing90] {
            out.push(GraspCandidate::new(position, approach, closing, mode, out.len()));
        }
    }
    Ok(out)
}

/// Rings around `axes[0]` at `levels` heights over the middle 80 % of
/// `span` (min/max of the points along the axis, relative to `center`).
#[allow(clippy::too_many_arguments)]
pub fn sample_cylinder(
    points: &[Point],
    center: &Point,
    axes: &[Vec3; 3],
    span: (f64, f64),
    step_deg: f64,
    levels: usize,
    margin: f64,
    mode: GraspMode,
) -> Result<Vec<GraspCandidate>, PoolError> {
    check_step(step_deg)?;
    if levels == 0 {
        return Err(PoolError::BadLevels);
    }
    if !(margin >= 0.0) {
        return Err(PoolError::BadMargin(margin));
    }
    let [e1, e2, e3] = *axes;
    let radial = points
        .iter()
        .map(|p| {
            let d = p - center;
            (d - e1 * e1.dot(&d)).norm()
        })
        .fold(0.0, f64::max);
    let r = radial + margin;
    let (lo, hi) = span;
    let ext = hi - lo;
    let heights: Vec<f64> = if levels == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..levels).map(|i| lo + 0.1 * ext + 0.8 * ext * i as f64 / (levels - 1) as f64).collect()
    };
    let mut out = Vec::with_capacity(heights.len() * 8);
    for h in heights {
        for az in angle_grid(step_deg, 0, 360.0) {
            let radial_dir = e2 * az.cos() + e3 * az.sin();
            let position = center + e1 * h + radial_dir * r;
            let approach = -radial_dir;
            let closing = e1.cross(&approach);
            out.push(GraspCandidate::new(position, approach, closing, mode, out.len()));
        }
    }
    Ok(out)
}

/// Ring in the `axes[0]`–`axes[1]` plane through `center`; fingers straddle
/// the plane (closing axis along `axes[2]`).
pub fn sample_circle(
    points: &[Point],
    center: &Point,
    axes: &[Vec3; 3],
    step_deg: f64,
    margin: f64,
) -> Result<Vec<GraspCandidate>, PoolError> {
    check_step(step_deg)?;
    if !(margin >= 0.0) {
        return Err(PoolError::BadMargin(margin));
    }
    let [e1, e2, e3] = *axes;
    let in_plane = points
        .iter()
        .map(|p| {
            let d = p - center;
            (d - e3 * e3.dot(&d)).norm()
        })
        .fold(0.0, f64::max);
    let r = in_plane + margin;
    let mut out = Vec::new();
    for az in angle_grid(step_deg, 0, 360.0) {
        let radial_dir = e1 * az.cos() + e2 * az.sin();
        out.push(GraspCandidate::new(center + radial_dir * r, -radial_dir, e3, GraspMode::Envelope, out.len()));
    }
    Ok(out)
}

/// Builds the class-specific pool and numbers it sequentially.
pub fn generate_pool(
    class: ObjectClass,
    profile: &ShapeProfile,
    stats: &ObjectStats,
    points: &[Point],
    spec: &SamplingSpec,
    gripper: &GripperParams,
) -> Result<Vec<GraspCandidate>, PoolError> {
    check_step(spec.step_deg)?;
    let margin = spec.margin(gripper);
    let center = stats.centroid;
    let axes = profile.axes;
    let mut pool = match class {
        ObjectClass::OneDimensional => sample_cylinder(
            points,
            &center,
            &axes,
            profile.spans[0],
            spec.step_deg,
            spec.cylinder_levels,
            margin,
            GraspMode::Envelope,
        )?,
        ObjectClass::TwoDimensionalFlat => sample_circle(points, &center, &axes, spec.step_deg, margin)?,
        ObjectClass::ThreeDimensionalLarge => {
            sample_sphere(&center, stats.radius, &axes, spec.step_deg, margin, GraspMode::Envelope)?
        }
        ObjectClass::ThreeDimensionalSmall => {
            let step = (spec.step_deg * spec.small_rate).min(120.0);
            let mut p = sample_sphere(&center, stats.radius, &axes, step, margin, GraspMode::Fingertip)?;
            p.extend(sample_cylinder(
                points,
                &center,
                &axes,
                profile.spans[0],
                step,
                spec.cylinder_levels,
                margin,
                GraspMode::Fingertip,
            )?);
            p
        }
    };
    for (i, c) in pool.iter_mut().enumerate() {
        c.pool_index = i;
    }
    Ok(pool)
}
