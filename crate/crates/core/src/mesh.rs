//! Tetrahedral and triangle surface meshes.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::geometry::{tet_volume, ElementShape, Vec3, VOLUME_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Body,
    Chamber,
}

impl Region {
    /// Integer tag used by the mesh file formats (0 = body, 1 = chamber).
    pub fn tag(self) -> i64 {
        match self {
            Region::Body => 0,
            Region::Chamber => 1,
        }
    }

    pub fn from_tag(tag: i64) -> Option<Region> {
        match tag {
            0 => Some(Region::Body),
            1 => Some(Region::Chamber),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFilter {
    All,
    Only(Region),
}

impl RegionFilter {
    #[inline]
    pub fn accepts(self, r: Region) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::Only(x) => x == r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Configuration {
    Rest,
    Deformed,
}

/// Outward-facing faces of a positively oriented tet, as local indices.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("tet {tet} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange { tet: usize, vertex: usize, count: usize },
    #[error("length mismatch: {what}")]
    LengthMismatch { what: String },
    #[error("tet {tet} is degenerate (rest volume {volume:e})")]
    DegenerateTet { tet: usize, volume: f64 },
    #[error("tets {first} and {second} use the same vertices")]
    DuplicateTet { first: usize, second: usize },
    #[error("face {face:?} is shared by more than two tets")]
    NonManifoldFace { face: [usize; 3] },
    #[error("chamber component containing tet {tet} is not connected to the body")]
    DisconnectedChamber { tet: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("fixed vertex {vertex} is out of range")]
    FixedOutOfRange { vertex: usize },
}

/// Tetrahedral mesh with a rest and a deformed configuration.
///
/// `rest_shapes` holds the per-element rest configuration. It is built from
/// `rest_positions`, except for chamber elements created by remeshing, which
/// are born at their deformed shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    pub rest_positions: Vec<Vec3>,
    pub positions: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub regions: Vec<Region>,
    pub fixed: BTreeSet<usize>,
    pub rest_shapes: Vec<ElementShape>,
}

impl TetMesh {
    /// Mesh with deformed = rest. Panics if a tet index is out of range.
    pub fn new(rest: Vec<Vec3>, tets: Vec<[usize; 4]>, regions: Vec<Region>) -> Self {
        let rest_shapes = tets.iter().map(|t| shape_of(&rest, t)).collect();
        TetMesh {
            positions: rest.clone(),
            rest_positions: rest,
            tets,
            regions,
            fixed: BTreeSet::new(),
            rest_shapes,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    #[inline]
    pub fn deformed_shape(&self, t: usize) -> ElementShape {
        shape_of(&self.positions, &self.tets[t])
    }

    #[inline]
    pub fn rest_shape(&self, t: usize) -> ElementShape {
        self.rest_shapes[t]
    }

    pub fn shape_in(&self, t: usize, config: Configuration) -> ElementShape {
        match config {
            Configuration::Rest => self.rest_shape(t),
            Configuration::Deformed => self.deformed_shape(t),
        }
    }

    pub fn rest_volume(&self, t: usize) -> f64 {
        tet_volume(&self.rest_shapes[t])
    }

    /// Rebuilds every element rest shape from `rest_positions`.
    pub fn reset_rest_shapes(&mut self) {
        self.rest_shapes = self.tets.iter().map(|t| shape_of(&self.rest_positions, t)).collect();
    }

    pub fn tets_in(&self, filter: RegionFilter) -> impl Iterator<Item = usize> + '_ {
        (0..self.tets.len()).filter(move |&t| filter.accepts(self.regions[t]))
    }

    pub fn bounding_box(&self, config: Configuration) -> (Vec3, Vec3) {
        let pts = match config {
            Configuration::Rest => &self.rest_positions,
            Configuration::Deformed => &self.positions,
        };
        bounding_box(pts)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box(Configuration::Deformed);
        (hi - lo).norm()
    }

    /// Checks every structural invariant, failing on the first violation.
    pub fn validate(&self) -> Result<(), MeshError> {
        for check in self.checks() {
            check.result?;
        }
        Ok(())
    }

    /// Runs each named invariant check independently.
    pub fn checks(&self) -> Vec<MeshCheck> {
        let mut out = Vec::new();
        let lengths = self.check_lengths();
        let indices = lengths.clone().and_then(|_| self.check_indices());
        out.push(MeshCheck { name: "lengths", result: lengths });
        out.push(MeshCheck { name: "index-range", result: indices.clone() });
        out.push(MeshCheck { name: "finite-coordinates", result: self.check_finite() });
        if indices.is_ok() {
            out.push(MeshCheck { name: "positive-volume", result: self.check_volumes() });
            out.push(MeshCheck { name: "conformity", result: self.check_conformity() });
            out.push(MeshCheck { name: "region-connectivity", result: self.check_chamber_attached() });
        }
        out
    }

    fn check_lengths(&self) -> Result<(), MeshError> {
        if self.rest_positions.len() != self.positions.len() {
            return Err(MeshError::LengthMismatch {
                what: format!("{} rest vs {} deformed positions", self.rest_positions.len(), self.positions.len()),
            });
        }
        if self.regions.len() != self.tets.len() {
            return Err(MeshError::LengthMismatch {
                what: format!("{} region tags for {} tets", self.regions.len(), self.tets.len()),
            });
        }
        if self.rest_shapes.len() != self.tets.len() {
            return Err(MeshError::LengthMismatch {
                what: format!("{} rest shapes for {} tets", self.rest_shapes.len(), self.tets.len()),
            });
        }
        Ok(())
    }

    fn check_indices(&self) -> Result<(), MeshError> {
        let n = self.positions.len();
        for (t, tet) in self.tets.iter().enumerate() {
            for &v in tet {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange { tet: t, vertex: v, count: n });
                }
            }
        }
        if let Some(&v) = self.fixed.iter().find(|&&v| v >= n) {
            return Err(MeshError::FixedOutOfRange { vertex: v });
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<(), MeshError> {
        for (i, (a, b)) in self.rest_positions.iter().zip(&self.positions).enumerate() {
            if !(a.iter().all(|x| x.is_finite()) && b.iter().all(|x| x.is_finite())) {
                return Err(MeshError::NonFinite { vertex: i });
            }
        }
        Ok(())
    }

    fn check_volumes(&self) -> Result<(), MeshError> {
        for t in 0..self.tets.len() {
            let shape = self.rest_shapes[t];
            let scale = crate::geometry::max_edge_length(&shape).powi(3);
            let vol = tet_volume(&shape);
            if !(vol > VOLUME_EPSILON * scale) {
                return Err(MeshError::DegenerateTet { tet: t, volume: vol });
            }
        }
        Ok(())
    }

    fn check_conformity(&self) -> Result<(), MeshError> {
        let mut seen: HashMap<[usize; 4], usize> = HashMap::with_capacity(self.tets.len());
        for (t, tet) in self.tets.iter().enumerate() {
            let mut key = *tet;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateTet { first, second: t });
            }
            seen.insert(key, t);
        }
        let mut faces: HashMap<[usize; 3], u32> = HashMap::with_capacity(self.tets.len() * 4);
        for tet in &self.tets {
            for f in TET_FACES {
                *faces.entry(sorted_face(tet, f)).or_insert(0) += 1;
            }
        }
        let mut bad: Vec<_> = faces.into_iter().filter(|(_, c)| *c > 2).map(|(f, _)| f).collect();
        bad.sort_unstable();
        match bad.first() {
            Some(&face) => Err(MeshError::NonManifoldFace { face }),
            None => Ok(()),
        }
    }

    fn check_chamber_attached(&self) -> Result<(), MeshError> {
        let has_chamber = self.regions.iter().any(|r| *r == Region::Chamber);
        let has_body = self.regions.iter().any(|r| *r == Region::Body);
        if !has_chamber || !has_body {
            return Ok(());
        }
        // Component labels over vertices; every chamber component must reach a body tet.
        let topo = Topology::build(self);
        let comp = topo.vertex_components();
        let mut body_comps = BTreeSet::new();
        for t in self.tets_in(RegionFilter::Only(Region::Body)) {
            body_comps.insert(comp[self.tets[t][0]]);
        }
        for t in self.tets_in(RegionFilter::Only(Region::Chamber)) {
            if !body_comps.contains(&comp[self.tets[t][0]]) {
                return Err(MeshError::DisconnectedChamber { tet: t });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MeshCheck {
    pub name: &'static str,
    pub result: Result<(), MeshError>,
}

#[inline]
pub fn shape_of(positions: &[Vec3], tet: &[usize; 4]) -> ElementShape {
    ElementShape::from_vertices([positions[tet[0]], positions[tet[1]], positions[tet[2]], positions[tet[3]]])
}

#[inline]
pub fn sorted_face(tet: &[usize; 4], f: [usize; 3]) -> [usize; 3] {
    let mut k = [tet[f[0]], tet[f[1]], tet[f[2]]];
    k.sort_unstable();
    k
}

pub fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Sum of signed tet volumes over a region.
pub fn region_volume(mesh: &TetMesh, filter: RegionFilter, config: Configuration) -> f64 {
    mesh.tets_in(filter).map(|t| tet_volume(&mesh.shape_in(t, config))).sum()
}

/// Vertex/tet adjacency in compressed form.
#[derive(Debug, Clone)]
pub struct Topology {
    vertex_tet_offsets: Vec<usize>,
    vertex_tets: Vec<usize>,
    neighbor_offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Topology {
    pub fn build(mesh: &TetMesh) -> Self {
        let n = mesh.num_vertices();
        let mut counts = vec![0usize; n + 1];
        for tet in &mesh.tets {
            for &v in tet {
                counts[v + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let vertex_tet_offsets = counts.clone();
        let mut cursor = counts;
        let mut vertex_tets = vec![0; vertex_tet_offsets[n]];
        for (t, tet) in mesh.tets.iter().enumerate() {
            for &v in tet {
                vertex_tets[cursor[v]] = t;
                cursor[v] += 1;
            }
        }

        let mut neighbor_offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        neighbor_offsets.push(0);
        let mut scratch: Vec<usize> = Vec::new();
        for v in 0..n {
            scratch.clear();
            for &t in &vertex_tets[vertex_tet_offsets[v]..vertex_tet_offsets[v + 1]] {
                scratch.extend(mesh.tets[t].iter().copied().filter(|&w| w != v));
            }
            scratch.sort_unstable();
            scratch.dedup();
            neighbors.extend_from_slice(&scratch);
            neighbor_offsets.push(neighbors.len());
        }
        Topology { vertex_tet_offsets, vertex_tets, neighbor_offsets, neighbors }
    }

    #[inline]
    pub fn tets_of(&self, v: usize) -> &[usize] {
        &self.vertex_tets[self.vertex_tet_offsets[v]..self.vertex_tet_offsets[v + 1]]
    }

    #[inline]
    pub fn neighbors_of(&self, v: usize) -> &[usize] {
        &self.neighbors[self.neighbor_offsets[v]..self.neighbor_offsets[v + 1]]
    }

    pub fn num_vertices(&self) -> usize {
        self.neighbor_offsets.len() - 1
    }

    /// Vertices within `hops` edge hops of `v`, sorted.
    pub fn vertices_within(&self, v: usize, hops: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut frontier = vec![v];
        for _ in 0..hops {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.neighbors_of(u) {
                    if !out.contains(&w) && !next.contains(&w) {
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out.sort_unstable();
        out
    }

    pub fn vertex_components(&self) -> Vec<usize> {
        let n = self.num_vertices();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors_of(u) {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Triangle surface with outward orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Area-weighted unit vertex normals.
    pub normals: Vec<Vec3>,
    /// For extracted boundaries, the tet-mesh vertex each surface vertex came from.
    pub source_vertices: Vec<usize>,
}

impl SurfaceMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        let source_vertices = (0..positions.len()).collect();
        let mut s = SurfaceMesh { positions, triangles, normals: Vec::new(), source_vertices };
        s.recompute_normals();
        s
    }

    pub fn recompute_normals(&mut self) {
        let mut normals = vec![Vec3::zeros(); self.positions.len()];
        for tri in &self.triangles {
            let n = self.area_vector(tri);
            for &v in tri {
                normals[v] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        self.normals = normals;
    }

    #[inline]
    fn area_vector(&self, tri: &[usize; 3]) -> Vec3 {
        let [a, b, c] = tri.map(|i| self.positions[i]);
        (b - a).cross(&(c - a)) * 0.5
    }

    /// Unit normal of triangle `t` (zero for degenerate triangles).
    pub fn face_normal(&self, t: usize) -> Vec3 {
        let n = self.area_vector(&self.triangles[t]);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.positions[i])
    }

    /// Every undirected edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        !self.triangles.is_empty() && edges.values().all(|&c| c == 2)
    }

    /// Every directed edge appears once and is matched by its reverse.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        directed.iter().all(|(&(a, b), &c)| c == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Signed enclosed volume (positive for outward orientation).
    pub fn enclosed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.positions[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn transformed(&self, rotation: &nalgebra::Matrix3<f64>, translation: &Vec3) -> SurfaceMesh {
        let positions = self.positions.iter().map(|p| rotation * p + translation).collect();
        let mut s = SurfaceMesh {
            positions,
            triangles: self.triangles.clone(),
            normals: Vec::new(),
            source_vertices: self.source_vertices.clone(),
        };
        s.recompute_normals();
        s
    }
}

/// Faces that occur exactly once among the filtered tets, oriented outward.
///
/// Surface vertices are numbered in ascending order of their tet-mesh ids and
/// triangles are emitted in (tet, face) order, so the output is deterministic.
pub fn extract_boundary(mesh: &TetMesh, filter: RegionFilter) -> SurfaceMesh {
    extract_boundary_in(mesh, filter, Configuration::Deformed)
}

pub fn extract_boundary_in(mesh: &TetMesh, filter: RegionFilter, config: Configuration) -> SurfaceMesh {
    let faces = boundary_faces(mesh, filter);
    let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut local = HashMap::with_capacity(used.len());
    for (i, &v) in used.iter().enumerate() {
        local.insert(v, i);
    }
    let src = match config {
        Configuration::Rest => &mesh.rest_positions,
        Configuration::Deformed => &mesh.positions,
    };
    let positions = used.iter().map(|&v| src[v]).collect();
    let triangles = faces.iter().map(|f| f.map(|v| local[&v])).collect();
    let mut s = SurfaceMesh { positions, triangles, normals: Vec::new(), source_vertices: used };
    s.recompute_normals();
    s
}

/// Boundary faces of the filtered tets as oriented global vertex triples.
pub fn boundary_faces(mesh: &TetMesh, filter: RegionFilter) -> Vec<[usize; 3]> {
    let mut count: HashMap<[usize; 3], u32> = HashMap::new();
    for t in mesh.tets_in(filter) {
        for f in TET_FACES {
            *count.entry(sorted_face(&mesh.tets[t], f)).or_insert(0) += 1;
        }
    }
    let mut out = Vec::new();
    for t in mesh.tets_in(filter) {
        let tet = &mesh.tets[t];
        for f in TET_FACES {
            if count[&sorted_face(tet, f)] == 1 {
                out.push([tet[f[0]], tet[f[1]], tet[f[2]]]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    fn single_tet() -> TetMesh {
        TetMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
            vec![Region::Body],
        )
    }

    #[test]
    fn single_tet_boundary() {
        let s = extract_boundary(&single_tet(), RegionFilter::All);
        assert_eq!(s.triangles.len(), 4);
        assert!(s.is_watertight());
        assert!(s.is_consistently_oriented());
        assert_relative_eq!(s.enclosed_volume(), 1.0 / 6.0, epsilon = 1e-15);
        for n in &s.normals {
            assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shared_face_is_interior() {
        let mut rest = single_tet().rest_positions;
        rest.push(Vec3::new(1.0, 1.0, 1.0));
        let mesh = TetMesh::new(rest, vec![[0, 1, 2, 3], [1, 2, 3, 4].map(|x| x)], vec![Region::Body; 2]);
        // Second tet must be positively oriented for the outward convention.
        let mut mesh = mesh;
        if tet_volume(&mesh.rest_shape(1)) < 0.0 {
            mesh.tets[1].swap(0, 1);
            mesh.reset_rest_shapes();
        }
        let s = extract_boundary(&mesh, RegionFilter::All);
        assert_eq!(s.triangles.len(), 6);
        let shared = [1, 2, 3];
        for tri in &s.triangles {
            let mut g = tri.map(|i| s.source_vertices[i]);
            g.sort_unstable();
            assert_ne!(g, shared);
        }
        assert!(s.is_watertight());
    }

    #[test]
    fn grid_boundary_matches_face_hash_oracle() {
        let mesh = fixtures::box_grid([5, 5, 5], Vec3::repeat(1.0), Vec3::zeros());
        assert_eq!(mesh.num_tets(), 750);
        // Oracle: count every face and keep singletons.
        let mut all: Vec<[usize; 3]> = Vec::new();
        for tet in &mesh.tets {
            for f in TET_FACES {
                all.push(sorted_face(tet, f));
            }
        }
        all.sort_unstable();
        let mut singles = 0;
        let mut i = 0;
        while i < all.len() {
            let mut j = i;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            if j - i == 1 {
                singles += 1;
            }
            i = j;
        }
        let s = extract_boundary(&mesh, RegionFilter::All);
        assert_eq!(s.triangles.len(), singles);
        assert_eq!(singles, 6 * 25 * 2);
        assert!(s.is_watertight());
        assert!(s.is_consistently_oriented());
        assert_relative_eq!(s.enclosed_volume(), 125.0, epsilon = 1e-9);
    }

    #[test]
    fn region_volumes() {
        let mut mesh = fixtures::box_grid([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        mesh.regions = vec![Region::Chamber; 6];
        assert_relative_eq!(region_volume(&mesh, RegionFilter::Only(Region::Chamber), Configuration::Rest), 1.0, epsilon = 1e-14);
        assert_eq!(region_volume(&mesh, RegionFilter::Only(Region::Body), Configuration::Rest), 0.0);
    }

    #[test]
    fn region_volume_matches_naive_sum() {
        let mut mesh = fixtures::inflated_cube(4);
        for (i, p) in mesh.positions.iter_mut().enumerate() {
            *p += Vec3::new(0.01 * (i as f64).sin(), 0.02 * (i as f64 * 0.7).cos(), 0.0);
        }
        for config in [Configuration::Rest, Configuration::Deformed] {
            let mut naive = 0.0;
            for t in 0..mesh.num_tets() {
                if mesh.regions[t] == Region::Chamber {
                    naive += tet_volume(&mesh.shape_in(t, config));
                }
            }
            let v = region_volume(&mesh, RegionFilter::Only(Region::Chamber), config);
            assert!((v - naive).abs() <= 1e-12 * naive.abs());
            let total = region_volume(&mesh, RegionFilter::All, config);
            let parts = v + region_volume(&mesh, RegionFilter::Only(Region::Body), config);
            assert_relative_eq!(total, parts, max_relative = 1e-12);
        }
    }

    #[test]
    fn validation_catches_violations() {
        let mut mesh = single_tet();
        assert!(mesh.validate().is_ok());
        mesh.tets.push([0, 1, 2, 7]);
        mesh.regions.push(Region::Body);
        mesh.rest_shapes.push(mesh.rest_shapes[0]);
        assert!(matches!(mesh.validate(), Err(MeshError::IndexOutOfRange { .. })));

        let mut dup = single_tet();
        dup.tets.push([1, 0, 3, 2]);
        dup.regions.push(Region::Body);
        dup.reset_rest_shapes();
        assert!(dup.checks().iter().any(|c| matches!(c.result, Err(MeshError::DuplicateTet { .. }))));

        let mut flat = single_tet();
        flat.rest_positions[3] = Vec3::new(0.2, 0.2, 0.0);
        flat.reset_rest_shapes();
        assert!(matches!(flat.validate(), Err(MeshError::DegenerateTet { .. })));
    }

    #[test]
    fn detached_chamber_is_rejected() {
        let a = fixtures::box_grid([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        let b = fixtures::box_grid([1, 1, 1], Vec3::repeat(1.0), Vec3::new(5.0, 0.0, 0.0));
        let mut mesh = fixtures::merge(&a, &b);
        for t in 6..12 {
            mesh.regions[t] = Region::Chamber;
        }
        assert!(matches!(mesh.validate(), Err(MeshError::DisconnectedChamber { .. })));
    }

    #[test]
    fn ring_neighborhoods() {
        let mesh = fixtures::box_grid([3, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        let topo = Topology::build(&mesh);
        assert_eq!(topo.vertices_within(0, 0), vec![0]);
        let one = topo.vertices_within(0, 1);
        assert!(one.len() > 1);
        for &w in topo.neighbors_of(0) {
            assert!(one.contains(&w));
        }
        assert!(topo.vertices_within(0, 2).len() >= one.len());
    }
}
