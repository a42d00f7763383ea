//! Scenario configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use bubblesim::{
    CgSettings, CsgOp, GeometryPrimitive, GridSpec, Motion, MotionSegment, OpenSides,
    Preconditioner, Scene, Shape, SimSettings,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },
}

fn invalid(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenSidesConfig {
    #[serde(default)]
    pub left: bool,
    #[serde(default)]
    pub right: bool,
    #[serde(default)]
    pub bottom: bool,
    #[serde(default)]
    pub top: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    #[serde(default)]
    pub origin: [f64; 2],
    #[serde(default)]
    pub open_sides: OpenSidesConfig,
}

fn default_rho() -> f64 {
    1000.0
}
fn default_gravity() -> [f64; 2] {
    [0.0, -9.81]
}
fn default_cfl() -> f64 {
    1.0
}
fn default_max_substeps() -> usize {
    5
}
fn default_frame_rate() -> f64 {
    30.0
}
fn default_n_frames() -> usize {
    100
}
fn default_volume_gain() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_stride() -> usize {
    1
}
fn default_tolerance() -> f64 {
    1e-5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 2],
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_max_substeps")]
    pub max_substeps: usize,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default = "default_n_frames")]
    pub n_frames: usize,
    #[serde(default = "default_volume_gain")]
    pub volume_gain: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            rho: default_rho(),
            gravity: default_gravity(),
            sigma: 0.0,
            cfl: default_cfl(),
            max_substeps: default_max_substeps(),
            frame_rate: default_frame_rate(),
            n_frames: default_n_frames(),
            volume_gain: default_volume_gain(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Defaults to ten times the system size.
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iterations: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpConfig {
    #[default]
    Union,
    Subtract,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub start: f64,
    pub velocity: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveConfig {
    Box {
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default)]
        op: OpConfig,
        #[serde(default)]
        motion: Vec<MotionConfig>,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        op: OpConfig,
        #[serde(default)]
        motion: Vec<MotionConfig>,
    },
    HalfPlane {
        point: [f64; 2],
        normal: [f64; 2],
        #[serde(default)]
        op: OpConfig,
        #[serde(default)]
        motion: Vec<MotionConfig>,
    },
}

impl PrimitiveConfig {
    pub fn boxed(min: [f64; 2], max: [f64; 2]) -> Self {
        Self::Box {
            min,
            max,
            op: OpConfig::Union,
            motion: Vec::new(),
        }
    }

    pub fn cut_box(min: [f64; 2], max: [f64; 2]) -> Self {
        Self::Box {
            min,
            max,
            op: OpConfig::Subtract,
            motion: Vec::new(),
        }
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self::Circle {
            center,
            radius,
            op: OpConfig::Union,
            motion: Vec::new(),
        }
    }

    pub fn with_motion(mut self, segments: Vec<MotionConfig>) -> Self {
        match &mut self {
            Self::Box { motion, .. }
            | Self::Circle { motion, .. }
            | Self::HalfPlane { motion, .. } => *motion = segments,
        }
        self
    }

    fn parts(&self) -> (Shape, OpConfig, &[MotionConfig]) {
        match self {
            Self::Box {
                min,
                max,
                op,
                motion,
            } => (
                Shape::Box {
                    min: *min,
                    max: *max,
                },
                *op,
                motion,
            ),
            Self::Circle {
                center,
                radius,
                op,
                motion,
            } => (
                Shape::Circle {
                    center: *center,
                    radius: *radius,
                },
                *op,
                motion,
            ),
            Self::HalfPlane {
                point,
                normal,
                op,
                motion,
            } => (
                Shape::HalfPlane {
                    point: *point,
                    normal: *normal,
                },
                *op,
                motion,
            ),
        }
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::Box { min, max, .. } => {
                if !finite(min) || !finite(max) || min[0] >= max[0] || min[1] >= max[1] {
                    return Err(invalid(
                        format!("{field}.min/max"),
                        "box needs finite min < max",
                    ));
                }
            }
            Self::Circle { center, radius, .. } => {
                if !finite(center) || !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid(
                        format!("{field}.radius"),
                        "circle needs a positive radius",
                    ));
                }
            }
            Self::HalfPlane { point, normal, .. } => {
                if !finite(point) || !finite(normal) || normal[0].hypot(normal[1]) == 0.0 {
                    return Err(invalid(
                        format!("{field}.normal"),
                        "half plane needs a non-zero normal",
                    ));
                }
            }
        }
        for (k, m) in self.parts().2.iter().enumerate() {
            if !m.start.is_finite() || !finite(&m.velocity) {
                return Err(invalid(
                    format!("{field}.motion[{k}]"),
                    "motion must be finite",
                ));
            }
        }
        Ok(())
    }

    pub fn to_primitive(&self) -> GeometryPrimitive {
        let (shape, op, motion) = self.parts();
        let op = match op {
            OpConfig::Union => CsgOp::Union,
            OpConfig::Subtract => CsgOp::Subtract,
        };
        GeometryPrimitive::new(shape, op).with_motion(Motion::new(
            motion
                .iter()
                .map(|m| MotionSegment {
                    start: m.start,
                    velocity: m.velocity,
                })
                .collect(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    /// Write an image every this many frames; zero disables images.
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
    #[serde(default)]
    pub dump_matrix: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            frame_stride: default_stride(),
            dump_matrix: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub solids: Vec<PrimitiveConfig>,
    pub liquid: Vec<PrimitiveConfig>,
    #[serde(default)]
    pub freesurface_seeds: Vec<[f64; 2]>,
    #[serde(default = "default_true")]
    pub bubbles_enabled: bool,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Amplitude of a random initial velocity, zero for a fluid at rest.
    #[serde(default)]
    pub perturbation: f64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.nx < 3 || g.ny < 3 {
            return Err(invalid(
                "grid.nx/ny",
                format!("need at least 3x3 cells, got {}x{}", g.nx, g.ny),
            ));
        }
        if !(g.dx > 0.0 && g.dx.is_finite()) {
            return Err(invalid(
                "grid.dx",
                format!("must be positive, got {}", g.dx),
            ));
        }
        if !g.origin.iter().all(|o| o.is_finite()) {
            return Err(invalid("grid.origin", "must be finite"));
        }
        let p = &self.physics;
        if !(p.rho > 0.0 && p.rho.is_finite()) {
            return Err(invalid(
                "physics.rho",
                format!("must be positive, got {}", p.rho),
            ));
        }
        if !p.gravity.iter().all(|v| v.is_finite()) {
            return Err(invalid("physics.gravity", "must be finite"));
        }
        if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
            return Err(invalid(
                "physics.sigma",
                format!("must be non-negative, got {}", p.sigma),
            ));
        }
        if !(p.cfl > 0.0 && p.cfl.is_finite()) {
            return Err(invalid(
                "physics.cfl",
                format!("must be positive, got {}", p.cfl),
            ));
        }
        if p.max_substeps == 0 {
            return Err(invalid("physics.max_substeps", "must be at least 1"));
        }
        if !(p.frame_rate > 0.0 && p.frame_rate.is_finite()) {
            return Err(invalid(
                "physics.frame_rate",
                format!("must be positive, got {}", p.frame_rate),
            ));
        }
        if !(p.volume_gain >= 0.0 && p.volume_gain.is_finite()) {
            return Err(invalid(
                "physics.volume_gain",
                format!("must be non-negative, got {}", p.volume_gain),
            ));
        }
        if !(self.solver.tolerance > 0.0 && self.solver.tolerance < 1.0) {
            return Err(invalid(
                "solver.tolerance",
                format!("must lie in (0, 1), got {}", self.solver.tolerance),
            ));
        }
        if self.solver.max_iterations == Some(0) {
            return Err(invalid("solver.max_iterations", "must be at least 1"));
        }
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err(invalid(
                "perturbation",
                format!("must be non-negative, got {}", self.perturbation),
            ));
        }
        if self.liquid.is_empty() {
            return Err(invalid("liquid", "at least one primitive is required"));
        }
        for (k, s) in self.solids.iter().enumerate() {
            s.validate(&format!("solids[{k}]"))?;
        }
        for (k, s) in self.liquid.iter().enumerate() {
            s.validate(&format!("liquid[{k}]"))?;
        }
        let spec = self.grid_spec()?;
        for (k, seed) in self.freesurface_seeds.iter().enumerate() {
            if !seed.iter().all(|v| v.is_finite()) || !spec.contains(*seed) {
                return Err(invalid(
                    format!("freesurface_seeds[{k}]"),
                    format!("point {seed:?} lies outside the domain"),
                ));
            }
        }
        for (list, prims) in [("solids", &self.solids), ("liquid", &self.liquid)] {
            for (k, prim) in prims.iter().enumerate() {
                if let PrimitiveConfig::Circle { center, .. } = prim {
                    if !spec.contains(*center) {
                        return Err(invalid(
                            format!("{list}[{k}].center"),
                            format!("point {center:?} lies outside the domain"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.grid.nx, self.grid.ny, self.grid.dx, self.grid.origin)
            .map_err(|e| invalid("grid", e))
    }

    pub fn open_sides(&self) -> OpenSides {
        let o = &self.grid.open_sides;
        OpenSides {
            left: o.left,
            right: o.right,
            bottom: o.bottom,
            top: o.top,
        }
    }

    pub fn settings(&self) -> Result<SimSettings, ConfigError> {
        let mut s = SimSettings::new(self.grid_spec()?);
        s.open = self.open_sides();
        s.rho = self.physics.rho;
        s.gravity = self.physics.gravity;
        s.sigma = self.physics.sigma;
        s.cfl = self.physics.cfl;
        s.max_substeps = self.physics.max_substeps;
        s.frame_rate = self.physics.frame_rate;
        s.volume_gain = self.physics.volume_gain;
        s.solver = CgSettings {
            tolerance: self.solver.tolerance,
            max_iterations: self.solver.max_iterations,
            preconditioner: Preconditioner::Jacobi,
        };
        s.bubbles_enabled = self.bubbles_enabled;
        s.freesurface_seeds = self.freesurface_seeds.clone();
        Ok(s)
    }

    pub fn solid_scene(&self) -> Scene {
        Scene::new(
            self.solids
                .iter()
                .map(PrimitiveConfig::to_primitive)
                .collect(),
        )
    }

    pub fn liquid_scene(&self) -> Scene {
        Scene::new(
            self.liquid
                .iter()
                .map(PrimitiveConfig::to_primitive)
                .collect(),
        )
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_json(&text, &path.display().to_string())
}
