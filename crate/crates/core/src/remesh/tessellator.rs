use std::collections::{BTreeSet, HashMap};
use std::process::Command;

use crate::geometry::{tet_volume, Vec3};
use crate::io::{obj, tetgen};
use crate::mesh::{extract_boundary, extract_boundary_in, Configuration, Region, RegionFilter, SurfaceMesh, TetMesh};

use super::RemeshError;

/// Turns a closed chamber surface into a tet mesh whose boundary vertices
/// coincide with the surface vertices.
pub trait Tessellator {
    fn tessellate(&mut self, surface: &SurfaceMesh) -> Result<TetMesh, RemeshError>;
}

impl<F: FnMut(&SurfaceMesh) -> Result<TetMesh, RemeshError>> Tessellator for F {
    fn tessellate(&mut self, surface: &SurfaceMesh) -> Result<TetMesh, RemeshError> {
        self(surface)
    }
}

/// Runs an external program through files. In `args`, `{input}` is replaced
/// by the path of the surface OBJ and `{output}` by a path prefix; the
/// program must write `{output}.node` and `{output}.ele`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalTessellator {
    pub program: String,
    pub args: Vec<String>,
}

impl Tessellator for ExternalTessellator {
    fn tessellate(&mut self, surface: &SurfaceMesh) -> Result<TetMesh, RemeshError> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("chamber.obj");
        let output = dir.path().join("chamber_out");
        obj::write_obj(&input, surface).map_err(|e| RemeshError::Tessellator(e.to_string()))?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{input}", &input.to_string_lossy()).replace("{output}", &output.to_string_lossy()))
            .collect();
        let status = Command::new(&self.program).args(&args).status()?;
        if !status.success() {
            return Err(RemeshError::Tessellator(format!("{} exited with {status}", self.program)));
        }
        let node = output.with_extension("node");
        let ele = output.with_extension("ele");
        let loaded = tetgen::read_tetgen(&node, &ele).map_err(|e| RemeshError::Tessellator(e.to_string()))?;
        Ok(loaded.mesh)
    }
}

/// Replaces the chamber with the tessellation of its current deformed
/// boundary. Body tets, their rest shapes and the positions of kept
/// vertices are copied unchanged; interior chamber vertices that are no
/// longer used are dropped and ids compacted in order.
pub fn remesh_with_tessellator(mesh: &TetMesh, tess: &mut dyn Tessellator) -> Result<TetMesh, RemeshError> {
    let surface = extract_boundary(mesh, RegionFilter::Only(Region::Chamber));
    let chamber = tess.tessellate(&surface)?;
    for (t, tet) in chamber.tets.iter().enumerate() {
        let v = tet_volume(&crate::mesh::shape_of(&chamber.positions, tet));
        if !(v > 0.0) {
            return Err(RemeshError::InvertedTet { tet: t, volume: v });
        }
    }

    // Map tessellator boundary vertices onto interface vertices.
    let diag = mesh.bbox_diagonal();
    let tol = 1e-9 * diag;
    let exact: HashMap<[u64; 3], usize> =
        surface.source_vertices.iter().map(|&v| (key(&mesh.positions[v]), v)).collect();
    let out_boundary = extract_boundary_in(&chamber, RegionFilter::All, Configuration::Deformed);
    let mut to_global: HashMap<usize, usize> = HashMap::new();
    for &cv in &out_boundary.source_vertices {
        let p = chamber.positions[cv];
        let hit = exact.get(&key(&p)).copied().or_else(|| {
            surface
                .source_vertices
                .iter()
                .map(|&v| (v, (mesh.positions[v] - p).norm()))
                .filter(|&(_, d)| d <= tol)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(v, _)| v)
        });
        match hit {
            Some(v) => {
                to_global.insert(cv, v);
            }
            None => return Err(RemeshError::InterfaceMismatch { position: [p.x, p.y, p.z] }),
        }
    }

    // Keep body vertices and interface vertices, compacted in id order.
    let mut keep: BTreeSet<usize> = surface.source_vertices.iter().copied().collect();
    for t in mesh.tets_in(RegionFilter::Only(Region::Body)) {
        keep.extend(mesh.tets[t]);
    }
    let mut new_id = vec![usize::MAX; mesh.num_vertices()];
    let mut out = TetMesh::new(Vec::new(), Vec::new(), Vec::new());
    for &v in &keep {
        new_id[v] = out.positions.len();
        out.positions.push(mesh.positions[v]);
        out.rest_positions.push(mesh.rest_positions[v]);
    }
    out.fixed = mesh.fixed.iter().filter(|&&v| new_id[v] != usize::MAX).map(|&v| new_id[v]).collect();
    for t in mesh.tets_in(RegionFilter::Only(Region::Body)) {
        out.tets.push(mesh.tets[t].map(|v| new_id[v]));
        out.regions.push(Region::Body);
        out.rest_shapes.push(mesh.rest_shapes[t]);
    }
    let mut chamber_id: HashMap<usize, usize> = HashMap::new();
    for (cv, p) in chamber.positions.iter().enumerate() {
        let id = match to_global.get(&cv) {
            Some(&g) => new_id[g],
            None => {
                out.positions.push(*p);
                out.rest_positions.push(*p);
                out.positions.len() - 1
            }
        };
        chamber_id.insert(cv, id);
    }
    for tet in &chamber.tets {
        let t = tet.map(|v| chamber_id[&v]);
        out.rest_shapes.push(crate::mesh::shape_of(&out.positions, &t));
        out.tets.push(t);
        out.regions.push(Region::Chamber);
    }
    out.validate()?;
    Ok(out)
}

fn key(p: &Vec3) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::region_volume;
    use approx::assert_relative_eq;

    fn chamber_of(mesh: &TetMesh) -> TetMesh {
        let used: BTreeSet<usize> = mesh.tets_in(RegionFilter::Only(Region::Chamber)).flat_map(|t| mesh.tets[t]).collect();
        let ids: HashMap<usize, usize> = used.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let pos: Vec<Vec3> = used.iter().map(|&v| mesh.positions[v]).collect();
        let tets = mesh.tets_in(RegionFilter::Only(Region::Chamber)).map(|t| mesh.tets[t].map(|v| ids[&v])).collect::<Vec<_>>();
        let n = tets.len();
        TetMesh::new(pos, tets, vec![Region::Chamber; n])
    }

    #[test]
    fn pass_through_keeps_the_mesh() {
        let mut mesh = fixtures::inflated_cube(4);
        fixtures::perturb(&mut mesh, 0.05, 4);
        let old_chamber = chamber_of(&mesh);
        let mut tess = |_: &SurfaceMesh| Ok(old_chamber.clone());
        let out = remesh_with_tessellator(&mesh, &mut tess).unwrap();
        assert_eq!(out.num_tets(), mesh.num_tets());
        let all = |m: &TetMesh| region_volume(m, RegionFilter::All, Configuration::Deformed);
        assert_relative_eq!(all(&out), all(&mesh), max_relative = 1e-12);
        let body = |m: &TetMesh| m.tets_in(RegionFilter::Only(Region::Body)).map(|t| m.rest_shapes[t]).collect::<Vec<_>>();
        assert_eq!(body(&out), body(&mesh));
    }

    #[test]
    fn displaced_boundary_is_rejected() {
        let mesh = fixtures::inflated_cube(4);
        let mut moved = chamber_of(&mesh);
        let b = extract_boundary(&moved, RegionFilter::All).source_vertices[0];
        moved.positions[b].x += 1e-3;
        let mut tess = |_: &SurfaceMesh| Ok(moved.clone());
        assert!(matches!(remesh_with_tessellator(&mesh, &mut tess), Err(RemeshError::InterfaceMismatch { .. })));
    }
}
