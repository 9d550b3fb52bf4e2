//! JSON simulation configuration.
//!
//! ```json
//! {
//!   "version": 1,
//!   "mesh": "robot.node",
//!   "chamberSurface": "chamber.obj",
//!   "obstacles": [{ "path": "box.obj", "translation": [0, 0, -1], "rotation": { "axis": [0, 0, 1], "degrees": 30 } }],
//!   "fixed": { "box": { "min": [-1, -1, -0.01], "max": [1, 1, 0.01] } },
//!   "material": "ecoflex-00-30",
//!   "totalRatio": 2.0,
//!   "solver": { "iMax": 300, "alphaMax": 4.0 },
//!   "output": { "directory": "out", "frameFormat": "obj" },
//!   "tessellator": { "program": "tetgen", "args": ["-pYq", "{input}"] }
//! }
//! ```
//! Relative paths are resolved against the directory of the config file.
//! Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::collision::Obstacle;
use crate::geometry::{rotation_about, Vec3};
use crate::material::{preset, StiffnessCurve};
use crate::mesh::TetMesh;
use crate::remesh::ExternalTessellator;
use crate::solver::SolverConfig;

use super::{classify_regions, load_obstacle_surface, load_tet_mesh, obj, read_text, IoError};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SimulationConfig {
    pub version: u32,
    /// `.node`, `.ele`, their common prefix, or `.vtk`.
    pub mesh: PathBuf,
    /// Used to tag regions when the mesh file has no region field.
    #[serde(default)]
    pub chamber_surface: Option<PathBuf>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub fixed: FixedSelector,
    #[serde(default)]
    pub material: MaterialSpec,
    pub total_ratio: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tessellator: Option<TessellatorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ObstacleSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: Option<AxisAngle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub degrees: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub enum FixedSelector {
    /// Keep whatever the mesh file provides (nothing, for the formats here).
    None,
    Ids(Vec<usize>),
    Box { min: [f64; 3], max: [f64; 3] },
}

impl Default for FixedSelector {
    fn default() -> Self {
        FixedSelector::None
    }
}

impl FixedSelector {
    pub fn select(&self, mesh: &TetMesh) -> Result<BTreeSet<usize>, IoError> {
        match self {
            FixedSelector::None => Ok(BTreeSet::new()),
            FixedSelector::Ids(ids) => {
                if let Some(&v) = ids.iter().find(|&&v| v >= mesh.num_vertices()) {
                    return Err(IoError::Config(format!("fixed vertex {v} out of range ({} vertices)", mesh.num_vertices())));
                }
                Ok(ids.iter().copied().collect())
            }
            FixedSelector::Box { min, max } => Ok(mesh
                .rest_positions
                .iter()
                .enumerate()
                .filter(|(_, p)| (0..3).all(|k| p[k] >= min[k] && p[k] <= max[k]))
                .map(|(i, _)| i)
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialSpec {
    Preset(String),
    Inline { curve: StiffnessCurve },
}

impl Default for MaterialSpec {
    fn default() -> Self {
        MaterialSpec::Preset("default".into())
    }
}

impl MaterialSpec {
    pub fn curve(&self) -> Result<StiffnessCurve, IoError> {
        match self {
            MaterialSpec::Preset(name) => Ok(preset(name)?.curve),
            MaterialSpec::Inline { curve } => Ok(curve.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameFormat {
    /// Boundary surface per frame.
    #[default]
    Obj,
    /// Boundary surface plus the full volume mesh.
    ObjVtk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub frame_format: FrameFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: PathBuf::from("out"), frame_format: FrameFormat::Obj }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TessellatorSpec {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl From<&TessellatorSpec> for ExternalTessellator {
    fn from(t: &TessellatorSpec) -> Self {
        ExternalTessellator { program: t.program.clone(), args: t.args.clone() }
    }
}

/// Everything a simulation needs, loaded from disk.
#[derive(Debug)]
pub struct Scene {
    pub mesh: TetMesh,
    pub obstacles: Vec<Obstacle>,
    pub curve: StiffnessCurve,
    pub orientation_fixes: usize,
}

/// Sets `key` (dot separated) in a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, value: &str) -> Result<(), IoError> {
    let parsed: Value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(IoError::Config(format!("bad override key {key:?}")));
    }
    let mut node = doc;
    for p in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(IoError::Config(format!("override {key:?}: {p:?} is not inside an object")));
        }
        node = node.as_object_mut().unwrap().entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(parts[parts.len() - 1].to_string(), parsed);
            Ok(())
        }
        None => Err(IoError::Config(format!("override {key:?} does not address an object field"))),
    }
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), IoError> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(IoError::Config(format!("override {s:?} is not key=value"))),
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str, overrides: &[(String, String)]) -> Result<Self, IoError> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        let config: SimulationConfig = serde_json::from_value(doc).map_err(|e| IoError::Config(e.to_string()))?;
        config.check_values()?;
        Ok(config)
    }

    /// Reads the file, applies overrides and resolves relative paths.
    pub fn from_path(path: &Path, overrides: &[(String, String)]) -> Result<Self, IoError> {
        let mut c = Self::from_json(&read_text(path)?, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.resolve_paths(base);
        c.check_files()?;
        Ok(c)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.mesh);
        if let Some(s) = &mut self.chamber_surface {
            fix(s);
        }
        for o in &mut self.obstacles {
            fix(&mut o.path);
        }
        fix(&mut self.output.directory);
    }

    fn check_values(&self) -> Result<(), IoError> {
        if self.version != CONFIG_VERSION {
            return Err(IoError::Config(format!("version {} is not supported (expected {CONFIG_VERSION})", self.version)));
        }
        if !(self.total_ratio >= 1.0) || !self.total_ratio.is_finite() {
            return Err(IoError::Config(format!("totalRatio must be at least 1, got {}", self.total_ratio)));
        }
        self.solver.validate().map_err(|e| IoError::Config(e.to_string()))?;
        self.material.curve()?;
        Ok(())
    }

    fn check_files(&self) -> Result<(), IoError> {
        let mesh_files: Vec<PathBuf> = match self.mesh.extension().and_then(|e| e.to_str()) {
            Some("vtk") => vec![self.mesh.clone()],
            Some("node") | Some("ele") => vec![self.mesh.with_extension("node"), self.mesh.with_extension("ele")],
            _ => vec![PathBuf::from(format!("{}.node", self.mesh.display())), PathBuf::from(format!("{}.ele", self.mesh.display()))],
        };
        let surfaces = self.chamber_surface.iter().cloned().chain(self.obstacles.iter().map(|o| o.path.clone()));
        for p in mesh_files.into_iter().chain(surfaces) {
            if !p.is_file() {
                return Err(IoError::Io {
                    path: p.display().to_string(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist"),
                });
            }
        }
        Ok(())
    }

    pub fn load_scene(&self) -> Result<Scene, IoError> {
        let loaded = load_tet_mesh(&self.mesh)?;
        let mut mesh = loaded.mesh;
        if !loaded.has_regions {
            if let Some(s) = &self.chamber_surface {
                let surface = obj::read_obj(s)?;
                classify_regions(&mut mesh, surface).map_err(|source| IoError::Obstacle { path: s.display().to_string(), source })?;
            }
        }
        mesh.fixed = self.fixed.select(&mesh)?;
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for spec in &self.obstacles {
            let surface = load_obstacle_surface(&spec.path)?;
            let r = match &spec.rotation {
                Some(aa) => rotation_about(&Vec3::from(aa.axis), aa.degrees.to_radians()),
                None => nalgebra::Matrix3::identity(),
            };
            let placed = surface.transformed(&r, &Vec3::from(spec.translation));
            obstacles.push(Obstacle::new(placed).map_err(|source| IoError::Obstacle { path: spec.path.display().to_string(), source })?);
        }
        Ok(Scene { mesh, obstacles, curve: self.material.curve()?, orientation_fixes: loaded.orientation_fixes })
    }
}
