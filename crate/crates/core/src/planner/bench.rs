//! Corpus benchmark producing one summary row per object.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{plan, PlanError, PlanInput, PlanOptions, PlannerConfig};
use crate::geometry::Format;
use crate::gripper::GripperParams;
use crate::shape::ObjectClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub object: String,
    pub class: Option<ObjectClass>,
    pub points: usize,
    pub tested: usize,
    pub found: usize,
    pub total_time_s: f64,
    pub time_per_grasp_s: Option<f64>,
    pub error: Option<String>,
}

/// Plans every mesh or cloud file in `dir` (sorted by name). Per-object
/// failures are recorded in the row and the run continues.
pub fn benchmark(dir: &Path, gripper: &GripperParams, cfg: &PlannerConfig, opts: &PlanOptions) -> Result<Vec<BenchRow>, PlanError> {
    let entries = std::fs::read_dir(dir).map_err(|e| PlanError::Io { path: dir.to_path_buf(), source: e })?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && Format::from_path(p).is_ok())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(PlanError::Input(format!("no mesh or cloud files in {}", dir.display())));
    }
    let mut rows = Vec::with_capacity(files.len());
    for path in files {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let result = PlanInput::load(Some(&path), None, cfg.input.weld_tol).and_then(|input| plan(&input, gripper, cfg, opts));
        rows.push(match result {
            Ok(r) => BenchRow {
                object: name,
                class: Some(r.output.class),
                points: r.output.object.points,
                tested: r.output.report.tested,
                found: r.output.report.found,
                total_time_s: r.output.report.total_time_s,
                time_per_grasp_s: r.output.report.time_per_grasp_s,
                error: None,
            },
            Err(e) => BenchRow {
                object: name,
                class: None,
                points: 0,
                tested: 0,
                found: 0,
                total_time_s: 0.0,
                time_per_grasp_s: None,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(rows)
}

pub fn write_benchmark_csv(rows: &[BenchRow], path: &Path) -> Result<(), PlanError> {
    let io = |e: std::io::Error| PlanError::Io { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}
