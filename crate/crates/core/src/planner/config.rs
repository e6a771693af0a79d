//! Planner and gripper configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::geometry::DEFAULT_WELD_TOL;
use crate::gripper::GripperParams;
use crate::octree::OctreeParams;
use crate::pool::SamplingSpec;
use crate::quality::QualityConfig;
use crate::refine::RefineConfig;
use crate::shape::ClassifyConfig;
use crate::slice::ContactConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Mm,
    Cm,
    M,
}

impl LengthUnit {
    fn to_mm(self) -> f64 {
        match self {
            LengthUnit::Mm => 1.0,
            LengthUnit::Cm => 10.0,
            LengthUnit::M => 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Deg,
    Rad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: LengthUnit,
    pub angle: AngleUnit,
}

/// On-disk gripper description. Units must be declared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperFile {
    pub units: Units,
    pub proximal_length: f64,
    pub distal_length: f64,
    pub palm_span: f64,
    pub finger_width: f64,
    pub link_thickness: f64,
    pub proximal_limit: f64,
    pub distal_limit: f64,
    pub palm_depth: Option<f64>,
    pub fingertip_standoff: Option<f64>,
}

impl GripperFile {
    pub fn to_params(&self) -> GripperParams {
        let l = self.units.length.to_mm();
        let a = |v: f64| match self.units.angle {
            AngleUnit::Deg => v.to_radians(),
            AngleUnit::Rad => v,
        };
        let d = GripperParams::default();
        GripperParams {
            proximal_length: self.proximal_length * l,
            distal_length: self.distal_length * l,
            palm_span: self.palm_span * l,
            finger_width: self.finger_width * l,
            link_thickness: self.link_thickness * l,
            proximal_limit: a(self.proximal_limit),
            distal_limit: a(self.distal_limit),
            palm_depth: self.palm_depth.map_or(d.palm_depth, |v| v * l),
            fingertip_standoff: self.fingertip_standoff.unwrap_or(d.fingertip_standoff),
        }
    }
}

/// Gripper config text in millimetres and degrees.
pub fn gripper_config_text(p: &GripperParams) -> String {
    format!(
        "# two-finger underactuated gripper\n\
         units = {{ length = \"mm\", angle = \"deg\" }}\n\
         proximal_length = {}\ndistal_length = {}\npalm_span = {}\nfinger_width = {}\nlink_thickness = {}\n\
         proximal_limit = {}\ndistal_limit = {}\npalm_depth = {}\n\
         # palm-to-centroid distance for fingertip grasps, fraction of the finger reach\n\
         fingertip_standoff = {}\n",
        p.proximal_length,
        p.distal_length,
        p.palm_span,
        p.finger_width,
        p.link_thickness,
        p.proximal_limit.to_degrees(),
        p.distal_limit.to_degrees(),
        p.palm_depth,
        p.fingertip_standoff,
    )
}

pub fn parse_gripper(text: &str) -> Result<GripperParams, PlanError> {
    let file: GripperFile = toml::from_str(text).map_err(|e| PlanError::Config(format!("gripper config: {e}")))?;
    let params = file.to_params();
    params.validate()?;
    Ok(params)
}

pub fn load_gripper(path: &Path) -> Result<GripperParams, PlanError> {
    let text = std::fs::read_to_string(path).map_err(|e| PlanError::Io { path: path.to_path_buf(), source: e })?;
    parse_gripper(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactSection {
    pub angular_tol_deg: f64,
    pub contact_tol: f64,
    pub slab_half_thickness: Option<f64>,
    pub max_contacts_per_link: usize,
}

impl Default for ContactSection {
    fn default() -> Self {
        let c = ContactConfig::default();
        ContactSection {
            angular_tol_deg: c.angular_tol.to_degrees(),
            contact_tol: c.contact_tol,
            slab_half_thickness: c.slab_half_thickness,
            max_contacts_per_link: c.max_contacts_per_link,
        }
    }
}

impl ContactSection {
    pub fn to_config(&self) -> ContactConfig {
        ContactConfig {
            angular_tol: self.angular_tol_deg.to_radians(),
            contact_tol: self.contact_tol,
            slab_half_thickness: self.slab_half_thickness,
            max_contacts_per_link: self.max_contacts_per_link,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OctreeSection {
    pub max_leaf_points: usize,
    pub max_depth: usize,
    /// Smallest leaf edge; `None` is a quarter of the finger width.
    pub min_leaf_edge: Option<f64>,
    /// Largest leaf edge; `None` is the finger width.
    pub max_leaf_edge: Option<f64>,
}

impl Default for OctreeSection {
    fn default() -> Self {
        let d = OctreeParams::default();
        OctreeSection { max_leaf_points: d.max_leaf_points, max_depth: d.max_depth, min_leaf_edge: None, max_leaf_edge: None }
    }
}

impl OctreeSection {
    pub fn to_params(&self, gripper: &GripperParams) -> OctreeParams {
        let base = OctreeParams::for_finger_width(gripper.finger_width);
        OctreeParams {
            max_leaf_points: self.max_leaf_points,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf_edge.map_or(base.min_leaf, |e| 0.5 * e),
            max_leaf_edge: Some(self.max_leaf_edge.unwrap_or(gripper.finger_width)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    /// Surface resampling spacing for meshes (mm); `None` is a quarter of
    /// the finger width, 0 uses the raw vertices.
    pub upsample_spacing: Option<f64>,
    pub weld_tol: f64,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection { upsample_spacing: None, weld_tol: DEFAULT_WELD_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    pub enabled: bool,
    pub iterations: usize,
    pub overshoot_deg: f64,
    pub scan_step_deg: f64,
    pub thickness: Option<f64>,
}

impl Default for RefineSection {
    fn default() -> Self {
        let r = RefineConfig::default();
        RefineSection {
            enabled: true,
            iterations: r.iterations,
            overshoot_deg: r.overshoot_deg,
            scan_step_deg: r.scan_step_deg,
            thickness: r.thickness,
        }
    }
}

impl RefineSection {
    pub fn to_config(&self, max_contacts_per_link: usize) -> RefineConfig {
        RefineConfig {
            iterations: self.iterations,
            overshoot_deg: self.overshoot_deg,
            scan_step_deg: self.scan_step_deg,
            thickness: self.thickness,
            max_contacts_per_link,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Gripper config path, relative to this file.
    pub gripper: Option<PathBuf>,
    pub input: InputSection,
    pub octree: OctreeSection,
    pub pca: ClassifyConfig,
    pub sampling: SamplingSpec,
    pub contact: ContactSection,
    pub quality: QualityConfig,
    pub refine: RefineSection,
}

impl PlannerConfig {
    pub fn parse(text: &str) -> Result<Self, PlanError> {
        toml::from_str(text).map_err(|e| PlanError::Config(format!("planner config: {e}")))
    }

    /// Loads a planner config; a relative `gripper` path is resolved
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlanError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(g), Some(dir)) = (&cfg.gripper, path.parent()) {
            if g.is_relative() {
                cfg.gripper = Some(dir.join(g));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        self.quality.validate()?;
        let s = &self.sampling;
        if !(s.step_deg > 0.0 && s.step_deg <= 120.0) {
            return Err(PlanError::Config(format!("sampling.step_deg must lie in (0, 120], got {}", s.step_deg)));
        }
        if s.cylinder_levels == 0 {
            return Err(PlanError::Config("sampling.cylinder_levels must be at least 1".into()));
        }
        if let Some(m) = s.standoff_margin {
            if !(m >= 0.0) {
                return Err(PlanError::Config(format!("sampling.standoff_margin must be non-negative, got {m}")));
            }
        }
        let p = &self.pca;
        if !(p.r_big > 0.0 && p.r_sim > 0.0 && p.small_fraction >= 0.0) {
            return Err(PlanError::Config("pca ratios must be positive".into()));
        }
        Ok(())
    }
}

/// Documented planner config holding every default.
pub const DEFAULT_PLANNER_TOML: &str = r#"# Planner configuration. Lengths in mm, angles in degrees unless noted.

# gripper = "gripper.toml"

[input]
# surface resampling spacing for meshes; omit for finger_width / 4, 0 = raw vertices
# upsample_spacing = 4.0
weld_tol = 1e-6

[octree]
max_leaf_points = 32
max_depth = 10
# leaf edge bounds; omit for finger_width / 4 and finger_width
# min_leaf_edge = 4.0
# max_leaf_edge = 16.0

[pca]
r_big = 9.0            # eigenvalue ratio read as "much larger"
r_sim = 4.0            # eigenvalue ratio read as "similar"
small_fraction = 0.5   # small/large cut as a fraction of the finger reach

[sampling]
step_deg = 30.0
cylinder_levels = 3
# clearance between enclosing surface and palm; omit for the finger reach
# standoff_margin = 90.0
small_rate = 2.0       # step multiplier for small objects

[contact]
angular_tol_deg = 0.5
contact_tol = 0.5
# slab half thickness; omit for finger_width / 2
# slab_half_thickness = 8.0
max_contacts_per_link = 4

[quality]
mu = 0.5
cone_sides = 8
torque_scale = "inverse-max-radius"   # or "unit"
measure = "epsilon"                   # or "volume"
max_facets = 2000000

[refine]
enabled = true
iterations = 24
overshoot_deg = 5.0
scan_step_deg = 0.5
# link thickness; omit to use the gripper's
# thickness = 10.0
"#;
