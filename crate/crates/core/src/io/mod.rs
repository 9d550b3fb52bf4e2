//! File formats: OBJ surfaces, TetGen and legacy VTK tet meshes, JSON
//! configuration, frames and CSV metrics.

pub mod config;
pub mod frames;
pub mod metrics;
pub mod obj;
pub mod tetgen;
pub mod vtk;

use std::path::Path;

use thiserror::Error;

use crate::collision::{CollisionError, Obstacle};
use crate::geometry::Vec3;
use crate::material::MaterialError;
use crate::mesh::{Region, SurfaceMesh, TetMesh};

pub use config::{FixedSelector, FrameFormat, MaterialSpec, ObstacleSpec, Scene, SimulationConfig};
pub use frames::{write_frame, write_surface};
pub use metrics::{read_metrics, write_metrics, METRICS_HEADER};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: check {check} failed: {message}")]
    Validation { path: String, check: &'static str, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("metrics: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("obstacle {path}: {source}")]
    Obstacle {
        path: String,
        #[source]
        source: CollisionError,
    },
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// A tet mesh read from disk with what the loader had to repair.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMesh {
    pub mesh: TetMesh,
    /// Tets whose orientation was flipped to make them positive.
    pub orientation_fixes: usize,
    /// Whether the file carried region tags.
    pub has_regions: bool,
}

/// Loads `.node`/`.ele` (given either file or the common prefix) or `.vtk`.
pub fn load_tet_mesh(path: &Path) -> Result<LoadedMesh, IoError> {
    let (mesh, has_regions) = read_tet_mesh_raw(path)?;
    finish_mesh(path, mesh, has_regions)
}

/// Like [`load_tet_mesh`] but without orientation fixes or validation.
/// Returns the mesh and whether the file carried region tags.
pub fn read_tet_mesh_raw(path: &Path) -> Result<(TetMesh, bool), IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("vtk") => vtk::parse_vtk(&read_text(path)?, &path.display().to_string()),
        Some("node") | Some("ele") => tetgen::read_tetgen_raw(&path.with_extension("node"), &path.with_extension("ele")),
        _ => {
            let base = path.to_string_lossy();
            tetgen::read_tetgen_raw(Path::new(&format!("{base}.node")), Path::new(&format!("{base}.ele")))
        }
    }
}

/// Swaps two vertices of every negatively oriented tet and refreshes the
/// rest shapes. Returns the number of flipped tets.
pub fn fix_orientation(mesh: &mut TetMesh) -> usize {
    let mut fixes = 0;
    for tet in &mut mesh.tets {
        let [a, b, c, d] = tet.map(|i| mesh.rest_positions.get(i).copied().unwrap_or_else(Vec3::zeros));
        if crate::geometry::tet_volume_points(&a, &b, &c, &d) < 0.0 {
            tet.swap(2, 3);
            fixes += 1;
        }
    }
    mesh.reset_rest_shapes();
    fixes
}

/// Flips negative tets, then runs every mesh check and reports the first
/// failure by name.
pub(crate) fn finish_mesh(path: &Path, mut mesh: TetMesh, has_regions: bool) -> Result<LoadedMesh, IoError> {
    let fixes = fix_orientation(&mut mesh);
    if fixes > 0 {
        log::warn!("{}: fixed the orientation of {fixes} tets", path.display());
    }
    for check in mesh.checks() {
        if let Err(e) = check.result {
            return Err(IoError::Validation { path: path.display().to_string(), check: check.name, message: e.to_string() });
        }
    }
    Ok(LoadedMesh { mesh, orientation_fixes: fixes, has_regions })
}

/// Tags a tet as chamber iff its rest centroid is inside `chamber_surface`.
pub fn classify_regions(mesh: &mut TetMesh, chamber_surface: SurfaceMesh) -> Result<(), CollisionError> {
    let inside = Obstacle::new(chamber_surface)?;
    for (t, tet) in mesh.tets.iter().enumerate() {
        let c = tet.iter().map(|&v| mesh.rest_positions[v]).sum::<Vec3>() / 4.0;
        mesh.regions[t] = if inside.contains(&c) { Region::Chamber } else { Region::Body };
    }
    Ok(())
}

/// Reads an obstacle surface, flipping it if it encloses negative volume.
pub fn load_obstacle_surface(path: &Path) -> Result<SurfaceMesh, IoError> {
    let mut s = obj::read_obj(path)?;
    if s.enclosed_volume() < 0.0 {
        log::warn!("{}: surface is inward facing, flipped", path.display());
        for t in &mut s.triangles {
            t.swap(1, 2);
        }
        s.recompute_normals();
    }
    Ok(s)
}
