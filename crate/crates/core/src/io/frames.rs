use std::path::{Path, PathBuf};

use crate::mesh::{extract_boundary, Configuration, RegionFilter, SurfaceMesh, TetMesh};

use super::config::FrameFormat;
use super::{obj, vtk, IoError};

/// Writes `frame_%04d.obj` (the boundary of the whole mesh) and, for
/// [`FrameFormat::ObjVtk`], `frame_%04d.vtk`. Returns the written paths.
pub fn write_frame(dir: &Path, index: usize, mesh: &TetMesh, format: FrameFormat) -> Result<Vec<PathBuf>, IoError> {
    let stem = format!("frame_{index:04}");
    let mut out = vec![write_surface(dir, &stem, &extract_boundary(mesh, RegionFilter::All))?];
    if format == FrameFormat::ObjVtk {
        let p = dir.join(format!("{stem}.vtk"));
        vtk::write_vtk(&p, mesh, Configuration::Deformed)?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_surface(dir: &Path, stem: &str, surface: &SurfaceMesh) -> Result<PathBuf, IoError> {
    let p = dir.join(format!("{stem}.obj"));
    obj::write_obj(&p, surface)?;
    Ok(p)
}
