//! Collision detection and response: AABB trees, vertex-in-tet self
//! collision, obstacle containment, correspondence points and the virtual
//! spring lifecycle.

pub mod bench;
pub mod bvh;
pub mod obstacle;
pub mod queries;
pub mod springs;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::mesh::{boundary_faces, Region, RegionFilter, TetMesh, Topology};

pub use bench::{bench_bvh, BenchRow};
pub use bvh::{Aabb, AabbTree, Node, NodeKind, PrimitiveKind};
pub use obstacle::{ClosestPoint, Obstacle};
pub use queries::{closest_point_on_triangle, point_strictly_in_tet, ray_triangle, triangle_winding};
pub use springs::{update_springs, SpringElement, SpringSet, SpringUpdate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("cannot build a tree over zero primitives")]
    EmptyInput,
    #[error("refit expected {expected} primitives, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("obstacle surface is not watertight and consistently oriented")]
    NonWatertightObstacle,
    #[error("no correspondence surface available for vertex {vertex}")]
    NoIntersection { vertex: usize },
}

/// Which boundary vertices are tested for collisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceSet {
    /// Outer boundary of the whole mesh plus the chamber interface.
    #[default]
    AllBoundary,
    ChamberOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionConfig {
    pub contact_offset: f64,
    pub exclusion_rings: usize,
    pub surface_set: SurfaceSet,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        CollisionConfig { contact_offset: 1e-3, exclusion_rings: 2, surface_set: SurfaceSet::AllBoundary }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CollisionKind {
    SelfCollision,
    ObstacleContact(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Collision {
    pub vertex: usize,
    pub kind: CollisionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrespondenceMethod {
    Ray,
    ClosestPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionRecord {
    pub vertex: usize,
    pub kind: CollisionKind,
    pub correspondence: Vec3,
    pub normal: Vec3,
    pub method: CorrespondenceMethod,
}

impl CollisionRecord {
    pub fn obstacle_id(&self) -> Option<usize> {
        match self.kind {
            CollisionKind::ObstacleContact(i) => Some(i),
            CollisionKind::SelfCollision => None,
        }
    }

    /// Signed clearance of `p` past the correspondence along the contact normal.
    pub fn clearance(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.correspondence))
    }
}

/// Per-vertex results of one detection pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Detection {
    pub collisions: Vec<Collision>,
    pub node_visits: usize,
}

impl Detection {
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.collisions.iter().map(|c| c.vertex).collect();
        v.dedup();
        v
    }
}

/// Everything detection and correspondence need, kept in sync with the mesh
/// by [`CollisionWorld::refit`] and [`CollisionWorld::rebuild`].
#[derive(Debug, Clone)]
pub struct CollisionWorld {
    pub config: CollisionConfig,
    pub topology: Topology,
    pub tet_tree: AabbTree,
    /// Collidable surface triangles as global vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub triangle_tree: Option<AabbTree>,
    /// Vertices tested for penetration, ascending.
    pub surface_vertices: Vec<usize>,
    /// Unit outward normals, zero for non-surface vertices.
    pub vertex_normals: Vec<Vec3>,
    pub obstacles: Vec<Obstacle>,
}

impl CollisionWorld {
    pub fn new(mesh: &TetMesh, obstacles: Vec<Obstacle>, config: CollisionConfig) -> Result<Self, CollisionError> {
        let pad = 0.5 * config.contact_offset;
        let tet_tree = AabbTree::build(&tet_boxes(mesh), PrimitiveKind::Tet, pad)?;
        let (triangles, surface_vertices) = collidable_surface(mesh, config.surface_set);
        let triangle_tree = if triangles.is_empty() {
            None
        } else {
            Some(AabbTree::build(&triangle_boxes(mesh, &triangles), PrimitiveKind::Triangle, pad)?)
        };
        let mut world = CollisionWorld {
            config,
            topology: Topology::build(mesh),
            tet_tree,
            triangles,
            triangle_tree,
            surface_vertices,
            vertex_normals: Vec::new(),
            obstacles,
        };
        world.vertex_normals = world.compute_normals(mesh);
        Ok(world)
    }

    /// Box update after vertices moved; tree topology is kept.
    pub fn refit(&mut self, mesh: &TetMesh) -> Result<(), CollisionError> {
        self.tet_tree.refit(&tet_boxes(mesh))?;
        if let Some(tree) = &mut self.triangle_tree {
            tree.refit(&triangle_boxes(mesh, &self.triangles))?;
        }
        self.vertex_normals = self.compute_normals(mesh);
        Ok(())
    }

    /// Full reconstruction, needed after the mesh connectivity changed.
    pub fn rebuild(&mut self, mesh: &TetMesh) -> Result<(), CollisionError> {
        let obstacles = std::mem::take(&mut self.obstacles);
        *self = CollisionWorld::new(mesh, obstacles, self.config)?;
        Ok(())
    }

    fn compute_normals(&self, mesh: &TetMesh) -> Vec<Vec3> {
        let mut normals = vec![Vec3::zeros(); mesh.num_vertices()];
        accumulate_normals(&mut normals, mesh, &boundary_faces(mesh, RegionFilter::All));
        let mut chamber = vec![Vec3::zeros(); mesh.num_vertices()];
        accumulate_normals(&mut chamber, mesh, &boundary_faces(mesh, RegionFilter::Only(Region::Chamber)));
        for (n, c) in normals.iter_mut().zip(&chamber) {
            if n.norm_squared() == 0.0 {
                *n = *c;
            }
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Vertices within `exclusion_rings - 1` hops of `v`; tets touching any
    /// of them are exempt from the self-collision test for `v`.
    pub fn exclusion_set(&self, v: usize) -> HashSet<usize> {
        match self.config.exclusion_rings {
            0 => HashSet::new(),
            r => self.topology.vertices_within(v, r - 1).into_iter().collect(),
        }
    }

    fn tet_excluded(&self, tet: &[usize; 4], excl: &HashSet<usize>) -> bool {
        tet.iter().any(|w| excl.contains(w))
    }

    /// Surface vertices strictly inside a non-excluded tet.
    pub fn detect_self(&self, mesh: &TetMesh) -> Detection {
        let per_vertex: Vec<(Option<usize>, usize)> = self
            .surface_vertices
            .par_iter()
            .map(|&v| {
                let p = mesh.positions[v];
                let mut excl: Option<HashSet<usize>> = None;
                let mut hit = false;
                let visits = self.tet_tree.for_each_containing(&p, |t| {
                    if hit {
                        return;
                    }
                    let tet = &mesh.tets[t];
                    if tet.contains(&v) {
                        return;
                    }
                    let [a, b, c, d] = tet.map(|i| mesh.positions[i]);
                    if point_strictly_in_tet(&p, &a, &b, &c, &d) {
                        let excl = excl.get_or_insert_with(|| self.exclusion_set(v));
                        if !self.tet_excluded(tet, excl) {
                            hit = true;
                        }
                    }
                });
                (hit.then_some(v), visits)
            })
            .collect();
        let node_visits = per_vertex.iter().map(|x| x.1).sum();
        let collisions = per_vertex.into_iter().filter_map(|(v, _)| v).map(|vertex| Collision { vertex, kind: CollisionKind::SelfCollision }).collect();
        Detection { collisions, node_visits }
    }

    /// Surface vertices inside any obstacle.
    pub fn detect_obstacles(&self, mesh: &TetMesh) -> Detection {
        if self.obstacles.is_empty() {
            return Detection::default();
        }
        let collisions: Vec<Vec<Collision>> = self
            .surface_vertices
            .par_iter()
            .map(|&v| {
                let p = mesh.positions[v];
                self.obstacles
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| o.contains(&p))
                    .map(|(i, _)| Collision { vertex: v, kind: CollisionKind::ObstacleContact(i) })
                    .collect()
            })
            .collect();
        Detection { collisions: collisions.into_iter().flatten().collect(), node_visits: 0 }
    }

    /// Self and obstacle collisions, sorted by vertex then kind.
    pub fn detect(&self, mesh: &TetMesh) -> Detection {
        let s = self.detect_self(mesh);
        let o = self.detect_obstacles(mesh);
        let mut collisions = s.collisions;
        collisions.extend(o.collisions);
        collisions.sort_unstable();
        Detection { collisions, node_visits: s.node_visits + o.node_visits }
    }

    /// One correspondence record per colliding vertex, ascending. A vertex
    /// inside an obstacle and inside the body is resolved against the
    /// obstacle; among obstacles the lowest id wins.
    pub fn records(&self, mesh: &TetMesh, collisions: &[Collision]) -> Result<Vec<CollisionRecord>, CollisionError> {
        let mut current: BTreeMap<usize, CollisionKind> = BTreeMap::new();
        for c in collisions {
            current
                .entry(c.vertex)
                .and_modify(|k| {
                    if rank(c.kind) < rank(*k) {
                        *k = c.kind;
                    }
                })
                .or_insert(c.kind);
        }
        let colliding: Vec<(usize, CollisionKind)> = current.into_iter().collect();
        colliding
            .par_iter()
            .map(|&(v, kind)| match kind {
                CollisionKind::SelfCollision => self.self_correspondence(mesh, v),
                CollisionKind::ObstacleContact(o) => Ok(self.obstacle_correspondence(mesh, v, o)),
            })
            .collect()
    }

    /// Correspondence for a penetrating self-collision vertex: ray along the
    /// inverse vertex normal to the first opposing surface triangle, with a
    /// closest-point fallback when the ray misses.
    pub fn self_correspondence(&self, mesh: &TetMesh, v: usize) -> Result<CollisionRecord, CollisionError> {
        let excl = self.exclusion_set(v);
        let n = self.vertex_normals[v];
        let p = mesh.positions[v];
        let tree = self.triangle_tree.as_ref().ok_or(CollisionError::NoIntersection { vertex: v })?;
        let usable = |t: usize, facing: bool| {
            let tri = &self.triangles[t];
            if tri.iter().any(|w| excl.contains(w)) {
                return None;
            }
            let nt = triangle_normal(mesh, tri);
            (!facing || nt.dot(&n) < 0.0).then_some(nt)
        };
        if n.norm_squared() > 0.0 {
            let dir = -n;
            let hit = tree.raycast(&p, &dir, f64::INFINITY, |t| {
                usable(t, true)?;
                ray_triangle(&p, &dir, &self.triangle_points(mesh, t))
            });
            if let Some((t, s)) = hit {
                let nt = triangle_normal(mesh, &self.triangles[t]);
                return Ok(CollisionRecord {
                    vertex: v,
                    kind: CollisionKind::SelfCollision,
                    correspondence: p + dir * s + nt * self.config.contact_offset,
                    normal: nt,
                    method: CorrespondenceMethod::Ray,
                });
            }
        }
        self.closest_self_record(mesh, v, &usable)
    }

    /// Closest-point correspondence on the opposing surface, used for ray
    /// misses and for retargeting vertices that are no longer inside.
    pub fn self_closest_correspondence(&self, mesh: &TetMesh, v: usize) -> Result<CollisionRecord, CollisionError> {
        let excl = self.exclusion_set(v);
        let n = self.vertex_normals[v];
        let usable = |t: usize, facing: bool| {
            let tri = &self.triangles[t];
            if tri.iter().any(|w| excl.contains(w)) {
                return None;
            }
            let nt = triangle_normal(mesh, tri);
            (!facing || nt.dot(&n) < 0.0).then_some(nt)
        };
        self.closest_self_record(mesh, v, &usable)
    }

    fn closest_self_record(&self, mesh: &TetMesh, v: usize, usable: &dyn Fn(usize, bool) -> Option<Vec3>) -> Result<CollisionRecord, CollisionError> {
        let tree = self.triangle_tree.as_ref().ok_or(CollisionError::NoIntersection { vertex: v })?;
        let p = mesh.positions[v];
        for facing in [true, false] {
            let best = tree.nearest(&p, |t| {
                usable(t, facing)?;
                Some((closest_point_on_triangle(&p, &self.triangle_points(mesh, t)) - p).norm_squared())
            });
            if let Some((t, _)) = best {
                let c = closest_point_on_triangle(&p, &self.triangle_points(mesh, t));
                let nt = triangle_normal(mesh, &self.triangles[t]);
                return Ok(CollisionRecord {
                    vertex: v,
                    kind: CollisionKind::SelfCollision,
                    correspondence: c + nt * self.config.contact_offset,
                    normal: nt,
                    method: CorrespondenceMethod::ClosestPoint,
                });
            }
        }
        Err(CollisionError::NoIntersection { vertex: v })
    }

    /// Closest obstacle surface point pushed out by the contact offset.
    pub fn obstacle_correspondence(&self, mesh: &TetMesh, v: usize, obstacle: usize) -> CollisionRecord {
        let o = &self.obstacles[obstacle];
        let c = o.closest_point(&mesh.positions[v]);
        let nt = o.surface.face_normal(c.triangle);
        CollisionRecord {
            vertex: v,
            kind: CollisionKind::ObstacleContact(obstacle),
            correspondence: c.point + nt * self.config.contact_offset,
            normal: nt,
            method: CorrespondenceMethod::ClosestPoint,
        }
    }

    pub fn triangle_points(&self, mesh: &TetMesh, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| mesh.positions[i])
    }
}

fn triangle_normal(mesh: &TetMesh, tri: &[usize; 3]) -> Vec3 {
    let [a, b, c] = tri.map(|i| mesh.positions[i]);
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vec3::zeros()
    }
}

fn accumulate_normals(normals: &mut [Vec3], mesh: &TetMesh, faces: &[[usize; 3]]) {
    for f in faces {
        let [a, b, c] = f.map(|i| mesh.positions[i]);
        let n = (b - a).cross(&(c - a));
        for &v in f {
            normals[v] += n;
        }
    }
}

fn collidable_surface(mesh: &TetMesh, set: SurfaceSet) -> (Vec<[usize; 3]>, Vec<usize>) {
    let chamber = boundary_faces(mesh, RegionFilter::Only(Region::Chamber));
    let mut triangles = match set {
        SurfaceSet::AllBoundary => boundary_faces(mesh, RegionFilter::All),
        SurfaceSet::ChamberOnly => Vec::new(),
    };
    triangles.extend(chamber);
    let mut vertices: Vec<usize> = triangles.iter().flatten().copied().collect();
    vertices.sort_unstable();
    vertices.dedup();
    (triangles, vertices)
}

fn rank(kind: CollisionKind) -> (u8, usize) {
    match kind {
        CollisionKind::ObstacleContact(i) => (0, i),
        CollisionKind::SelfCollision => (1, 0),
    }
}

pub fn tet_boxes(mesh: &TetMesh) -> Vec<Aabb> {
    mesh.tets.iter().map(|t| Aabb::from_points(t.iter().map(|&v| &mesh.positions[v]))).collect()
}

fn triangle_boxes(mesh: &TetMesh, triangles: &[[usize; 3]]) -> Vec<Aabb> {
    triangles.iter().map(|t| Aabb::from_points(t.iter().map(|&v| &mesh.positions[v]))).collect()
}
