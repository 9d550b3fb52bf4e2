//! Distortion-triggered chamber remeshing: trigger scan, the built-in
//! subdivision fallback and the pluggable tessellator path.

mod subdivide;
mod tessellator;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{measure_distortion, tet_volume, Vec3};
use crate::mesh::{MeshError, Region, RegionFilter, TetMesh};

pub use subdivide::builtin_subdivide;
pub use tessellator::{remesh_with_tessellator, ExternalTessellator, Tessellator};

#[derive(Debug, Error)]
pub enum RemeshError {
    #[error("tessellator boundary vertex {position:?} matches no chamber interface vertex")]
    InterfaceMismatch { position: [f64; 3] },
    #[error("tessellator produced a non-positive tet {tet} (volume {volume:e})")]
    InvertedTet { tet: usize, volume: f64 },
    #[error("chamber tet {tet} is inverted in the current shape (volume {volume:e}) and cannot be reborn")]
    InvertedChamber { tet: usize, volume: f64 },
    #[error("tessellator failed: {0}")]
    Tessellator(String),
    #[error("remeshed mesh is invalid: {0}")]
    Invalid(#[from] MeshError),
    #[error("i/o error during tessellation: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriggerReason {
    VolumeRatio,
    Distortion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemeshTrigger {
    pub tet_id: usize,
    pub reason: TriggerReason,
    /// The measured ratio or distortion norm that exceeded its threshold.
    pub value: f64,
}

/// Volumes of the element rest shapes, the reference for the volume trigger.
pub fn reference_volumes(mesh: &TetMesh) -> Vec<f64> {
    mesh.rest_shapes.iter().map(tet_volume).collect()
}

/// At most one trigger per chamber tet; the volume ratio takes precedence
/// over distortion. Body tets never trigger.
pub fn scan_triggers(mesh: &TetMesh, reference_volumes: &[f64], alpha_max: f64, d_max: f64) -> Vec<RemeshTrigger> {
    let mut out = Vec::new();
    for t in mesh.tets_in(RegionFilter::Only(Region::Chamber)) {
        let deformed = mesh.deformed_shape(t);
        let ratio = tet_volume(&deformed) / reference_volumes[t];
        if ratio > alpha_max {
            out.push(RemeshTrigger { tet_id: t, reason: TriggerReason::VolumeRatio, value: ratio });
            continue;
        }
        let sigma = measure_distortion(t, &mesh.rest_shapes[t], &deformed).map_or(f64::INFINITY, |d| d.sigma_norm);
        if sigma > d_max {
            out.push(RemeshTrigger { tet_id: t, reason: TriggerReason::Distortion, value: sigma });
        }
    }
    out
}

/// Something that replaces the chamber region of a mesh.
pub trait Remesher {
    fn remesh(&mut self, mesh: &TetMesh, triggers: &[RemeshTrigger]) -> Result<TetMesh, RemeshError>;
}

/// Red-green subdivision of the triggered chamber tets.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinRemesher;

impl Remesher for BuiltinRemesher {
    fn remesh(&mut self, mesh: &TetMesh, triggers: &[RemeshTrigger]) -> Result<TetMesh, RemeshError> {
        for t in mesh.tets_in(RegionFilter::Only(Region::Chamber)) {
            let volume = tet_volume(&mesh.deformed_shape(t));
            if volume <= 0.0 {
                return Err(RemeshError::InvertedChamber { tet: t, volume });
            }
        }
        let out = builtin_subdivide(mesh, triggers);
        out.validate()?;
        Ok(out)
    }
}

/// Rebuilds the chamber from its current boundary with a tessellator.
pub struct TessellatorRemesher<T: Tessellator>(pub T);

impl<T: Tessellator> Remesher for TessellatorRemesher<T> {
    fn remesh(&mut self, mesh: &TetMesh, _triggers: &[RemeshTrigger]) -> Result<TetMesh, RemeshError> {
        remesh_with_tessellator(mesh, &mut self.0)
    }
}

/// Makes the current shape of every chamber tet its rest shape.
pub fn rebirth_chamber(mesh: &mut TetMesh) {
    for t in 0..mesh.num_tets() {
        if mesh.regions[t] == Region::Chamber {
            mesh.rest_shapes[t] = mesh.deformed_shape(t);
        }
    }
}

pub(crate) fn orient_positive(tet: &mut [usize; 4], positions: &[Vec3]) {
    let [a, b, c, d] = tet.map(|i| positions[i]);
    if crate::geometry::tet_volume_points(&a, &b, &c, &d) < 0.0 {
        tet.swap(2, 3);
    }
}
