//! Friction cones, contact wrenches, hull-based quality and pool ranking.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Vec3};
use crate::gripper::GraspCandidate;
use crate::hull::{self, HullError};
use crate::slice::{Contact, ContactSet};

pub type Wrench = [f64; 6];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("friction coefficient must be finite and non-negative, got {0}")]
    BadFriction(f64),
    #[error("friction cone needs at least 3 sides, got {0}")]
    BadConeSides(usize),
    #[error(transparent)]
    Hull(#[from] HullError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorqueScale {
    /// λ = 1 / max contact radius about the CG.
    InverseMaxRadius,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullMeasure {
    Epsilon,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    pub mu: f64,
    pub cone_sides: usize,
    pub torque_scale: TorqueScale,
    pub measure: HullMeasure,
    pub max_facets: usize,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            mu: 0.5,
            cone_sides: 8,
            torque_scale: TorqueScale::InverseMaxRadius,
            measure: HullMeasure::Epsilon,
            max_facets: hull::DEFAULT_MAX_FACETS,
        }
    }
}

impl QualityConfig {
    pub fn validate(&self) -> Result<(), QualityError> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(QualityError::BadFriction(self.mu));
        }
        if self.cone_sides < 3 {
            return Err(QualityError::BadConeSides(self.cone_sides));
        }
        Ok(())
    }
}

/// `m` unit edges at half-angle `atan(mu)` around `normal`. The first edge
/// lies in the plane of `normal` and the coordinate axis least aligned with it.
pub fn friction_cone(normal: &Vec3, mu: f64, m: usize) -> Vec<Vec3> {
    let n = normal.normalize();
    let axes = [Vec3::x(), Vec3::y(), Vec3::z()];
    let mut axis = axes[0];
    for a in &axes[1..] {
        if n.dot(a).abs() < n.dot(&axis).abs() {
            axis = *a;
        }
    }
    friction_cone_about(&n, &axis, mu, m)
}

/// Like [`friction_cone`] with the first edge in the plane of `normal` and
/// `reference`, which must not be parallel to the normal.
pub fn friction_cone_about(normal: &Vec3, reference: &Vec3, mu: f64, m: usize) -> Vec<Vec3> {
    let n = normal.normalize();
    let first = (reference - n * n.dot(reference)).normalize();
    let second = n.cross(&first);
    let half = mu.atan();
    let (s, c) = half.sin_cos();
    (0..m)
        .map(|j| {
            let phi = TAU * j as f64 / m as f64;
            (n * c + (first * phi.cos() + second * phi.sin()) * s).normalize()
        })
        .collect()
}

/// Cone phase reference in a grasp frame: the finger-width axis, or the
/// closing axis when the normal is nearly parallel to it.
pub fn cone_reference(normal: &Vec3, frame: &Matrix3<f64>) -> Vec3 {
    let width: Vec3 = frame.column(1).into();
    if normal.normalize().dot(&width).abs() > 0.9 {
        frame.column(0).into()
    } else {
        width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactWrenches {
    pub wrenches: Vec<Wrench>,
    pub lambda: f64,
    /// Set when every contact sits on the CG and λ fell back to 1.
    pub lambda_fallback: bool,
}

/// One wrench per cone edge per contact. Forces push into the object
/// (against the outward normal); torques are taken about `cg`. With a grasp
/// `frame` the cone phase follows the frame, otherwise the coordinate axes.
pub fn contact_wrenches(contacts: &[Contact], cg: &Point, frame: Option<&Matrix3<f64>>, cfg: &QualityConfig) -> ContactWrenches {
    let max_r = contacts.iter().map(|c| (c.position - cg).norm()).fold(0.0, f64::max);
    let (lambda, lambda_fallback) = match cfg.torque_scale {
        TorqueScale::Unit => (1.0, false),
        TorqueScale::InverseMaxRadius if max_r > 0.0 => (1.0 / max_r, false),
        TorqueScale::InverseMaxRadius => (1.0, true),
    };
    let mut wrenches = Vec::with_capacity(contacts.len() * cfg.cone_sides);
    for c in contacts {
        let d = c.position - cg;
        let n = -c.normal;
        let edges = match frame {
            Some(r) => friction_cone_about(&n, &cone_reference(&n, r), cfg.mu, cfg.cone_sides),
            None => friction_cone(&n, cfg.mu, cfg.cone_sides),
        };
        for f in edges {
            let t = d.cross(&f) * lambda;
            wrenches.push([f.x, f.y, f.z, t.x, t.y, t.z]);
        }
    }
    ContactWrenches { wrenches, lambda, lambda_fallback }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspQuality {
    pub epsilon: f64,
    /// Raw hull volume.
    pub volume: f64,
    /// Volume over the pool maximum.
    pub v: f64,
    pub d: f64,
    pub q: f64,
    pub contacts: usize,
}

/// Combined score: centring term plus hull measure.
pub fn score(x: f64, d: f64) -> f64 {
    1.0 / (1.0 + d) + x
}

fn mean_position(contacts: &[Contact]) -> Option<Point> {
    if contacts.is_empty() {
        return None;
    }
    let sum = contacts.iter().fold(Vec3::zeros(), |acc, c| acc + c.position.coords);
    Some(Point::from(sum / contacts.len() as f64))
}

/// Hull quality of a contact set. `radius` is the object's bounding-sphere
/// radius, used to normalise the centring distance. With the volume measure
/// `q` is provisional until [`normalize_volumes`] runs over the whole pool.
pub fn grasp_quality(
    contacts: &[Contact],
    cg: &Point,
    radius: f64,
    frame: Option<&Matrix3<f64>>,
    cfg: &QualityConfig,
) -> Result<GraspQuality, QualityError> {
    cfg.validate()?;
    let d = match mean_position(contacts) {
        Some(m) if radius > 0.0 => (m - cg).norm() / radius,
        Some(m) => (m - cg).norm(),
        None => 0.0,
    };
    let (epsilon, volume) = if contacts.is_empty() {
        (0.0, 0.0)
    } else {
        let w = contact_wrenches(contacts, cg, frame, cfg);
        match hull::hull_with_limit(&w.wrenches, 6, cfg.max_facets) {
            Ok(h) => (h.min_facet_offset(), h.volume),
            Err(HullError::RankDeficient { .. }) | Err(HullError::TooFewPoints { .. }) => (0.0, 0.0),
            Err(e) => return Err(e.into()),
        }
    };
    let mut q = GraspQuality { epsilon, volume, v: 0.0, d, q: 0.0, contacts: contacts.len() };
    q.q = score(selected(&q, cfg.measure), d);
    Ok(q)
}

fn selected(q: &GraspQuality, measure: HullMeasure) -> f64 {
    match measure {
        HullMeasure::Epsilon => q.epsilon,
        HullMeasure::Volume => q.v,
    }
}

/// Sets `v` relative to the largest volume in the pool and recomputes `q`.
pub fn normalize_volumes<'a>(qualities: impl IntoIterator<Item = &'a mut GraspQuality>, measure: HullMeasure) {
    let mut all: Vec<&mut GraspQuality> = qualities.into_iter().collect();
    let max = all.iter().map(|q| q.volume).fold(0.0, f64::max);
    for q in all.iter_mut() {
        q.v = if max > 0.0 { q.volume / max } else { 0.0 };
        q.q = score(selected(q, measure), q.d);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedGrasp {
    pub candidate: GraspCandidate,
    pub contacts: ContactSet,
    pub quality: GraspQuality,
}

impl EvaluatedGrasp {
    /// Force closure with both fingers touching.
    pub fn is_found(&self) -> bool {
        self.quality.epsilon > 0.0 && self.contacts.both_fingers()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    /// Positions into the input, best first.
    pub order: Vec<usize>,
    /// The subset of `order` that counts as found, in rank order.
    pub found: Vec<usize>,
}

/// Orders by descending `q`, then ascending pool index.
pub fn rank_pool(results: &[EvaluatedGrasp]) -> Ranking {
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        rb.quality
            .q
            .total_cmp(&ra.quality.q)
            .then(ra.candidate.pool_index.cmp(&rb.candidate.pool_index))
    });
    let found = order.iter().copied().filter(|&i| results[i].is_found()).collect();
    Ranking { order, found }
}
