//! JSON output schema.

use serde::{Deserialize, Serialize};

use crate::geometry::{ObjectStats, PointSet, PointSource, Vec3};
use crate::gripper::{FingerState, GraspMode};
use crate::quality::{EvaluatedGrasp, GraspQuality, HullMeasure, QualityConfig, TorqueScale};
use crate::refine::RefinedGrasp;
use crate::shape::{ObjectClass, ShapeProfile};
use crate::slice::{Contact, LinkId, Outcome};

pub const SCHEMA: &str = "slicegrasp.plan/1";

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub name: String,
    pub points: usize,
    pub source: PointSource,
    pub centroid: [f64; 3],
    pub radius: f64,
    pub extents: [f64; 3],
}

impl ObjectInfo {
    pub fn new(name: &str, points: &PointSet, stats: &ObjectStats) -> Self {
        ObjectInfo {
            name: name.to_string(),
            points: points.len(),
            source: points.source,
            centroid: arr(&stats.centroid.coords),
            radius: stats.radius,
            extents: arr(&stats.extents()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaInfo {
    pub eigenvalues: [f64; 3],
    pub axes: [[f64; 3]; 3],
    pub extents: [f64; 3],
}

impl PcaInfo {
    pub fn new(p: &ShapeProfile) -> Self {
        PcaInfo { eigenvalues: p.eigenvalues, axes: p.axes.map(|a| arr(&a)), extents: p.extents }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolInfo {
    pub size: usize,
    pub step_deg: f64,
    pub cylinder_levels: usize,
    pub standoff_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mu: f64,
    pub cone_sides: usize,
    pub torque_scale: TorqueScale,
    pub metric: HullMeasure,
}

impl ConfigEcho {
    pub fn new(q: &QualityConfig) -> Self {
        ConfigEcho { mu: q.mu, cone_sides: q.cone_sides, torque_scale: q.torque_scale, metric: q.measure }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEntry {
    pub position: [f64; 3],
    pub normal: [f64; 3],
    pub link: LinkId,
    pub source: u32,
}

impl From<&Contact> for ContactEntry {
    fn from(c: &Contact) -> Self {
        ContactEntry { position: arr(&c.position.coords), normal: arr(&c.normal), link: c.link, source: c.source }
    }
}

/// One ranked grasp. Joint angles are in radians, left finger first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspEntry {
    pub rank: usize,
    pub pool_index: usize,
    pub mode: GraspMode,
    pub outcome: Outcome,
    pub found: bool,
    /// Row-major wrist rotation (columns: closing, plane normal, approach).
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub joints: [FingerState; 2],
    pub contacts: Vec<ContactEntry>,
    pub quality: GraspQuality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull_error: Option<String>,
}

impl GraspEntry {
    pub fn new(rank: usize, g: &EvaluatedGrasp, found: bool, hull_error: Option<String>) -> Self {
        let pose = &g.contacts.pose;
        let r = pose.rotation;
        GraspEntry {
            rank,
            pool_index: g.candidate.pool_index,
            mode: g.candidate.mode,
            outcome: g.contacts.outcome,
            found,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: arr(&pose.translation),
            joints: g.contacts.states,
            contacts: g.contacts.contacts.iter().map(ContactEntry::from).collect(),
            quality: g.quality,
            hull_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demotion {
    pub pool_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestGrasp {
    pub pool_index: usize,
    pub rank: usize,
    pub refined: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_error: Option<String>,
    /// Refined joint angles when `refined`, else the slicing ones.
    pub joints: [FingerState; 2],
    /// Mesh-contact witnesses when `refined`, else the slicing contacts.
    pub contacts: Vec<ContactEntry>,
    pub link_thickness: Option<f64>,
    pub quality: GraspQuality,
    pub demoted: Vec<Demotion>,
}

impl BestGrasp {
    pub fn new(g: &EvaluatedGrasp, rank: usize, refined: Option<&RefinedGrasp>, refine_error: Option<String>, demoted: Vec<Demotion>) -> Self {
        let (joints, contacts, link_thickness) = match refined {
            Some(r) => (r.states, r.contacts.iter().map(ContactEntry::from).collect(), Some(r.thickness)),
            None => (g.contacts.states, g.contacts.contacts.iter().map(ContactEntry::from).collect(), None),
        };
        BestGrasp {
            pool_index: g.candidate.pool_index,
            rank,
            refined: refined.is_some(),
            refine_error,
            joints,
            contacts,
            link_thickness,
            quality: g.quality,
            demoted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub threads: usize,
    pub parallel_feature: bool,
}

/// Table-style summary of one planning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub object: String,
    pub tested: usize,
    pub found: usize,
    pub total_time_s: f64,
    /// Total time over found grasps; absent when nothing was found.
    pub time_per_grasp_s: Option<f64>,
    pub machine: Machine,
}

impl PlanReport {
    /// e.g. `Sphere: 124 tested, 80 found, 1.23 s total, 0.0154 s/grasp`
    pub fn table_row(&self) -> String {
        let per = self.time_per_grasp_s.map_or("n/a".to_string(), |t| format!("{t:.4} s/grasp"));
        format!("{}: {} tested, {} found, {:.2} s total, {}", self.object, self.tested, self.found, self.total_time_s, per)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutput {
    pub schema: String,
    pub object: ObjectInfo,
    pub class: ObjectClass,
    pub pca: PcaInfo,
    pub pool: PoolInfo,
    pub config: ConfigEcho,
    pub grasps: Vec<GraspEntry>,
    pub best: Option<BestGrasp>,
    pub report: PlanReport,
}

impl PlanOutput {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises")
    }

    /// The output without timing and machine details; stable across runs
    /// and thread counts.
    pub fn ranked_json(&self) -> String {
        #[derive(Serialize)]
        struct Ranked<'a> {
            schema: &'a str,
            object: &'a ObjectInfo,
            class: ObjectClass,
            pca: &'a PcaInfo,
            pool: &'a PoolInfo,
            config: &'a ConfigEcho,
            grasps: &'a [GraspEntry],
            best: &'a Option<BestGrasp>,
            tested: usize,
            found: usize,
        }
        serde_json::to_string_pretty(&Ranked {
            schema: &self.schema,
            object: &self.object,
            class: self.class,
            pca: &self.pca,
            pool: &self.pool,
            config: &self.config,
            grasps: &self.grasps,
            best: &self.best,
            tested: self.report.tested,
            found: self.report.found,
        })
        .expect("plain data serialises")
    }
}
