//! Collision-aware quasi-static simulation of volumetrically actuated soft
//! robots on tetrahedral meshes.

pub mod collision;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod material;
pub mod mesh;
pub mod projection;
pub mod remesh;
pub mod solver;

pub use geometry::Vec3;
pub use mesh::{Region, RegionFilter, SurfaceMesh, TetMesh};
pub use solver::{run_simulation, SimulationResult, SolverConfig, SolverError};

/// Any error of the crate, prefixed with the module it came from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(#[from] mesh::MeshError),
    #[error("geometry: {0}")]
    Geometry(#[from] geometry::GeometryError),
    #[error("collision: {0}")]
    Collision(#[from] collision::CollisionError),
    #[error("material: {0}")]
    Material(#[from] material::MaterialError),
    #[error("solver: {0}")]
    Solver(#[from] solver::SolverError),
    #[error("remesh: {0}")]
    Remesh(#[from] remesh::RemeshError),
    #[error("io: {0}")]
    Io(#[from] io::IoError),
}
