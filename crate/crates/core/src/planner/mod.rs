//! End-to-end planning: load, index, classify, sample, evaluate, rank,
//! refine, report.

mod bench;
mod config;
pub mod corpus;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use bench::{benchmark, write_benchmark_csv, BenchRow};
pub use config::{
    gripper_config_text, load_gripper, parse_gripper, AngleUnit, ContactSection, GripperFile, InputSection, LengthUnit,
    OctreeSection, PlannerConfig, RefineSection, Units, DEFAULT_PLANNER_TOML,
};
pub use output::{
    BestGrasp, ConfigEcho, ContactEntry, Demotion, GraspEntry, Machine, ObjectInfo, PcaInfo, PlanOutput, PlanReport, PoolInfo,
    SCHEMA,
};

use crate::geometry::{
    load_geometry, object_stats, upsample_surface, Geometry, GeometryError, ObjectStats, PointSet, Projected, SceneLinks, TriMesh,
};
use crate::gripper::{link_meshes, FingerState, GraspCandidate, GripperError, GripperParams};
use crate::octree::{Octree, OctreeError};
use crate::parallel::{self, Execution};
use crate::pool::{generate_pool, PoolError};
use crate::quality::{grasp_quality, normalize_volumes, rank_pool, EvaluatedGrasp, GraspQuality, QualityConfig, QualityError};
use crate::refine::{refine_grasp, RefineError, RefinedGrasp};
use crate::shape::{classify, pca, ObjectClass, ShapeProfile};
use crate::slice::{evaluate_candidate_traced, ContactConfig, ContactSet, Outcome, Slicer};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("load: {0}")]
    Load(#[from] GeometryError),
    #[error("config: {0}")]
    Config(String),
    #[error("gripper: {0}")]
    Gripper(#[from] GripperError),
    #[error("octree: {0}")]
    Octree(#[from] OctreeError),
    #[error("pool: {0}")]
    Pool(#[from] PoolError),
    #[error("quality: {0}")]
    Quality(#[from] QualityError),
    #[error("evaluate: {0}")]
    Parallel(String),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("input: {0}")]
    Input(String),
}

/// Object geometry handed to the planner.
#[derive(Debug, Clone)]
pub struct PlanInput {
    pub name: String,
    /// Surface mesh; needed for refinement and scene export.
    pub mesh: Option<TriMesh>,
    /// Point cloud used for slicing instead of the mesh surface.
    pub cloud: Option<PointSet>,
}

impl PlanInput {
    pub fn from_mesh(name: impl Into<String>, mesh: TriMesh) -> Self {
        PlanInput { name: name.into(), mesh: Some(mesh), cloud: None }
    }

    /// Reads a mesh and/or cloud from disk. A mesh file without faces is
    /// treated as a cloud.
    pub fn load(mesh: Option<&Path>, cloud: Option<&Path>, weld_tol: f64) -> Result<Self, PlanError> {
        let name_of = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mut input = PlanInput {
            name: mesh.or(cloud).map(name_of).unwrap_or_default(),
            mesh: None,
            cloud: None,
        };
        if let Some(p) = mesh {
            match load_geometry(p, None, weld_tol)? {
                Geometry::Mesh(m) => input.mesh = Some(m),
                Geometry::Points(ps) => input.cloud = Some(ps),
            }
        }
        if let Some(p) = cloud {
            input.cloud = Some(match load_geometry(p, None, weld_tol)? {
                Geometry::Mesh(m) => PointSet::from_mesh(&m)?,
                Geometry::Points(ps) => ps,
            });
        }
        if input.mesh.is_none() && input.cloud.is_none() {
            return Err(PlanError::Input("no mesh or point cloud given".into()));
        }
        Ok(input)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanOptions {
    pub exec: Execution,
    /// Keep every candidate's projected slice and closure traces.
    pub keep_slices: bool,
}

/// Per-candidate slice data kept for debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDump {
    pub pool_index: usize,
    /// Palm-relative (closing, approach) coordinates.
    pub points: Vec<Projected>,
    pub traces: [Vec<FingerState>; 2],
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub output: PlanOutput,
    pub points: PointSet,
    pub stats: ObjectStats,
    pub profile: ShapeProfile,
    pub octree: Octree,
    /// Pool-ordered evaluations.
    pub evaluated: Vec<EvaluatedGrasp>,
    pub refined: Option<RefinedGrasp>,
    pub slices: Vec<SliceDump>,
}

impl PlanResult {
    /// Posed gripper meshes of the best grasp (refined angles when present)
    /// and its contact points.
    pub fn best_scene(&self, gripper: &GripperParams) -> Option<(SceneLinks, Vec<crate::geometry::Point>)> {
        let best = self.output.best.as_ref()?;
        let eval = self.evaluated.iter().find(|e| e.candidate.pool_index == best.pool_index)?;
        let (states, contacts, thickness) = match &self.refined {
            Some(r) => (r.states, r.contacts.iter().map(|c| c.position).collect(), r.thickness),
            None => (eval.contacts.states, eval.contacts.contacts.iter().map(|c| c.position).collect(), gripper.link_thickness),
        };
        let links = link_meshes(gripper, &eval.contacts.pose, &states, thickness).ok()?;
        Some((links, contacts))
    }
}

/// The object points used for slicing.
pub fn planning_points(input: &PlanInput, gripper: &GripperParams, cfg: &PlannerConfig) -> Result<PointSet, PlanError> {
    if let Some(c) = &input.cloud {
        return Ok(c.clone());
    }
    let mesh = input.mesh.as_ref().ok_or_else(|| PlanError::Input("no geometry".into()))?;
    let spacing = cfg.input.upsample_spacing.unwrap_or(0.25 * gripper.finger_width);
    if spacing > 0.0 {
        Ok(upsample_surface(mesh, spacing)?)
    } else {
        Ok(PointSet::from_mesh(mesh)?)
    }
}

/// Slices and scores every candidate, in pool order.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_pool(
    object: &PointSet,
    slicer: Slicer<'_>,
    pool: &[GraspCandidate],
    gripper: &GripperParams,
    stats: &ObjectStats,
    contact: &ContactConfig,
    quality: &QualityConfig,
    exec: Execution,
    keep_slices: bool,
) -> Result<Vec<(EvaluatedGrasp, Option<String>, Option<Vec<Projected>>)>, PlanError> {
    quality.validate()?;
    let results = parallel::map(pool, exec, |cand| {
        let eval = evaluate_candidate_traced(object, slicer, cand, gripper, stats, contact);
        let (q, err) = match grasp_quality(&eval.contacts.contacts, &stats.centroid, stats.radius, Some(&cand.pose.rotation), quality) {
            Ok(q) => (q, None),
            Err(e) => (
                GraspQuality { epsilon: 0.0, volume: 0.0, v: 0.0, d: 0.0, q: 0.0, contacts: eval.contacts.contacts.len() },
                Some(e.to_string()),
            ),
        };
        let grasp = EvaluatedGrasp { candidate: *cand, contacts: eval.contacts, quality: q };
        (grasp, err, keep_slices.then_some(eval.sliced))
    })
    .map_err(PlanError::Parallel)?;
    Ok(results)
}

fn machine(exec: Execution) -> Machine {
    Machine {
        os: std::env::consts::OS.to_string(),
        arch: std::env::consts::ARCH.to_string(),
        cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        threads: exec.workers(),
        parallel_feature: cfg!(feature = "parallel"),
    }
}

pub fn plan(input: &PlanInput, gripper: &GripperParams, cfg: &PlannerConfig, opts: &PlanOptions) -> Result<PlanResult, PlanError> {
    gripper.validate()?;
    cfg.validate()?;
    let points = planning_points(input, gripper, cfg)?;
    let started = Instant::now();

    let stats = object_stats(&points)?;
    let octree = Octree::build(&points.points, cfg.octree.to_params(gripper))?;
    let profile = pca(&points)?;
    let class = classify(&profile, gripper, &cfg.pca);
    let pool = generate_pool(class, &profile, &stats, &points.points, &cfg.sampling, gripper)?;

    let contact = cfg.contact.to_config();
    let raw = evaluate_pool(&points, Slicer::Octree(&octree), &pool, gripper, &stats, &contact, &cfg.quality, opts.exec, opts.keep_slices)?;
    let mut evaluated = Vec::with_capacity(raw.len());
    let mut hull_errors = Vec::with_capacity(raw.len());
    let mut slices = Vec::new();
    for (g, err, sliced) in raw {
        if let Some(points) = sliced {
            slices.push(SliceDump { pool_index: g.candidate.pool_index, points, traces: g.contacts.traces.clone() });
        }
        hull_errors.push(err);
        evaluated.push(g);
    }
    normalize_volumes(evaluated.iter_mut().map(|g| &mut g.quality), cfg.quality.measure);
    let ranking = rank_pool(&evaluated);

    // refine the best found grasp, demoting on pose conflicts
    let mut demoted = Vec::new();
    let mut best = None;
    let mut refined = None;
    for &i in &ranking.found {
        let g = &evaluated[i];
        let mesh = match (&input.mesh, cfg.refine.enabled) {
            (Some(m), true) => m,
            _ => {
                best = Some((i, None));
                break;
            }
        };
        match refine_grasp(mesh, &g.contacts, gripper, &cfg.refine.to_config(contact.max_contacts_per_link)) {
            Ok(r) => {
                best = Some((i, None));
                refined = Some(r);
                break;
            }
            Err(e @ RefineError::PoseConflict(_)) => demoted.push(Demotion { pool_index: g.candidate.pool_index, reason: e.to_string() }),
            Err(e) => {
                best = Some((i, Some(e.to_string())));
                break;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();

    let entries: Vec<GraspEntry> = ranking
        .order
        .iter()
        .enumerate()
        .map(|(rank, &i)| GraspEntry::new(rank, &evaluated[i], evaluated[i].is_found(), hull_errors[i].clone()))
        .collect();
    let rank_of = |i: usize| ranking.order.iter().position(|&k| k == i).expect("ranked");
    let best = best.map(|(i, err)| BestGrasp::new(&evaluated[i], rank_of(i), refined.as_ref(), err, demoted.clone()));
    let best = match best {
        Some(b) => Some(b),
        None if !demoted.is_empty() => {
            // every found grasp conflicted; report the top one unrefined
            let i = ranking.found[0];
            Some(BestGrasp::new(&evaluated[i], rank_of(i), None, Some("all found grasps conflict in the open pose".into()), demoted))
        }
        None => None,
    };

    let tested = evaluated.len();
    let found = ranking.found.len();
    let report = PlanReport {
        object: input.name.clone(),
        tested,
        found,
        total_time_s: elapsed,
        time_per_grasp_s: (found > 0).then(|| elapsed / found as f64),
        machine: machine(opts.exec),
    };
    let output = PlanOutput {
        schema: SCHEMA.to_string(),
        object: ObjectInfo::new(&input.name, &points, &stats),
        class,
        pca: PcaInfo::new(&profile),
        pool: PoolInfo {
            size: pool.len(),
            step_deg: match class {
                ObjectClass::ThreeDimensionalSmall => (cfg.sampling.step_deg * cfg.sampling.small_rate).min(120.0),
                _ => cfg.sampling.step_deg,
            },
            cylinder_levels: cfg.sampling.cylinder_levels,
            standoff_margin: cfg.sampling.margin(gripper),
        },
        config: ConfigEcho::new(&cfg.quality),
        grasps: entries,
        best,
        report,
    };
    Ok(PlanResult { output, points, stats, profile, octree, evaluated, refined, slices })
}

/// Whether a grasp's outcome is one of the successful closures.
pub fn is_closed(set: &ContactSet) -> bool {
    matches!(set.outcome, Outcome::Wrapped | Outcome::Fingertip)
}

/// Writes the per-candidate slices and traces as CSV.
pub fn write_slices_csv(slices: &[SliceDump], path: &Path) -> Result<(), PlanError> {
    let io = |e: std::io::Error| PlanError::Io { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["pool_index", "record", "finger", "a", "b", "source"]).map_err(|e| io(e.into()))?;
    for s in slices {
        for p in &s.points {
            w.write_record([
                s.pool_index.to_string(),
                "point".into(),
                String::new(),
                p.coords.x.to_string(),
                p.coords.y.to_string(),
                p.source.to_string(),
            ])
            .map_err(|e| io(e.into()))?;
        }
        for (f, trace) in s.traces.iter().enumerate() {
            for st in trace {
                w.write_record([
                    s.pool_index.to_string(),
                    "trace".into(),
                    if f == 0 { "L".into() } else { "R".into() },
                    st.proximal.to_string(),
                    st.distal.to_string(),
                    String::new(),
                ])
                .map_err(|e| io(e.into()))?;
            }
        }
    }
    w.flush().map_err(io)
}
