//! Static obstacles: inside test by generalized winding number and closest
//! point queries, both accelerated by a triangle tree.

use std::collections::HashSet;

use crate::geometry::Vec3;
use crate::mesh::SurfaceMesh;

use super::bvh::{Aabb, AabbTree, NodeKind, PrimitiveKind};
use super::queries::{closest_point_on_triangle, triangle_winding};
use super::CollisionError;

/// Closing fan of a node's triangle patch. Patch and cap together form a
/// closed surface inside the node box, so for query points outside the box
/// the patch contributes exactly minus the cap's winding number.
#[derive(Debug, Clone)]
struct Cap {
    apex: Vec3,
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Obstacle {
    pub surface: SurfaceMesh,
    pub tree: AabbTree,
    caps: Vec<Option<Cap>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub triangle: usize,
    pub point: Vec3,
    pub distance: f64,
}

impl Obstacle {
    pub fn new(surface: SurfaceMesh) -> Result<Self, CollisionError> {
        if surface.triangles.is_empty() {
            return Err(CollisionError::EmptyInput);
        }
        if !surface.is_watertight() || !surface.is_consistently_oriented() {
            return Err(CollisionError::NonWatertightObstacle);
        }
        let boxes: Vec<Aabb> = surface.triangles.iter().map(|t| Aabb::from_points(t.iter().map(|&i| &surface.positions[i]))).collect();
        let tree = AabbTree::build(&boxes, PrimitiveKind::Triangle, 0.0)?;
        let caps = build_caps(&surface, &tree);
        Ok(Obstacle { surface, tree, caps })
    }

    /// Generalized winding number of the surface at `q`.
    pub fn winding_number(&self, q: &Vec3) -> f64 {
        self.winding_number_counted(q).0
    }

    /// Winding number plus the number of tree nodes visited.
    pub fn winding_number_counted(&self, q: &Vec3) -> (f64, usize) {
        let nodes = self.tree.nodes();
        let mut w = 0.0;
        let mut visits = 0;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            visits += 1;
            let node = &nodes[i];
            match node.kind {
                NodeKind::Leaf { primitive } => {
                    let [a, b, c] = self.surface.triangles[primitive];
                    let p = &self.surface.positions;
                    w += triangle_winding(q, &p[a], &p[b], &p[c]);
                }
                NodeKind::Internal { left, right } => {
                    if !node.aabb.contains_point(q) {
                        if let Some(cap) = &self.caps[i] {
                            let p = &self.surface.positions;
                            for &(a, b) in &cap.edges {
                                w -= triangle_winding(q, &cap.apex, &p[b], &p[a]);
                            }
                            continue;
                        }
                    }
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        (w, visits)
    }

    pub fn contains(&self, q: &Vec3) -> bool {
        self.tree.root().aabb.contains_point(q) && self.winding_number(q) >= 0.5
    }

    /// Closest surface point; ties go to the lower triangle index.
    pub fn closest_point(&self, q: &Vec3) -> ClosestPoint {
        let (triangle, d2) = self
            .tree
            .nearest(q, |t| Some((closest_point_on_triangle(q, &self.surface.triangle(t)) - q).norm_squared()))
            .expect("obstacle has at least one triangle");
        ClosestPoint { triangle, point: closest_point_on_triangle(q, &self.surface.triangle(triangle)), distance: d2.sqrt() }
    }
}

fn build_caps(surface: &SurfaceMesh, tree: &AabbTree) -> Vec<Option<Cap>> {
    let order = tree.primitive_order();
    tree.nodes()
        .iter()
        .map(|node| {
            if matches!(node.kind, NodeKind::Leaf { .. }) {
                return None;
            }
            let tris = &order[node.first..node.first + node.count];
            let mut directed = HashSet::with_capacity(3 * tris.len());
            for &t in tris {
                let [a, b, c] = surface.triangles[t];
                directed.insert((a, b));
                directed.insert((b, c));
                directed.insert((c, a));
            }
            let mut edges: Vec<(usize, usize)> = directed.iter().copied().filter(|&(a, b)| !directed.contains(&(b, a))).collect();
            if edges.len() >= tris.len() {
                return None;
            }
            edges.sort_unstable();
            let apex = surface.positions[surface.triangles[tris[0]][0]];
            Some(Cap { apex, edges })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    fn brute_winding(s: &SurfaceMesh, q: &Vec3) -> f64 {
        s.triangles.iter().map(|t| triangle_winding(q, &s.positions[t[0]], &s.positions[t[1]], &s.positions[t[2]])).sum()
    }

    #[test]
    fn sphere_center_and_far_point() {
        let o = Obstacle::new(fixtures::icosphere(Vec3::zeros(), 1.0, 2)).unwrap();
        assert!(o.contains(&Vec3::zeros()));
        assert!(!o.contains(&Vec3::new(5.0, 0.0, 0.0)));
        assert_relative_eq!(o.winding_number(&Vec3::zeros()), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn hierarchical_winding_matches_direct_sum() {
        let s = fixtures::icosphere(Vec3::new(0.1, 0.2, 0.3), 1.0, 3);
        let o = Obstacle::new(s.clone()).unwrap();
        for q in [Vec3::new(0.3, 0.1, 0.2), Vec3::new(1.5, 0.0, 0.0), Vec3::new(0.9, 0.5, 0.4), Vec3::new(-3.0, 2.0, 1.0)] {
            assert_relative_eq!(o.winding_number(&q), brute_winding(&s, &q), epsilon = 1e-9);
        }
    }

    #[test]
    fn caps_reduce_work_far_away() {
        let o = Obstacle::new(fixtures::icosphere(Vec3::zeros(), 1.0, 4)).unwrap();
        let (_, visits) = o.winding_number_counted(&Vec3::new(10.0, 0.0, 0.0));
        assert!(visits < o.surface.triangles.len() / 4, "visits {visits}");
    }

    #[test]
    fn open_surface_rejected() {
        let mut s = fixtures::box_surface(Vec3::zeros(), Vec3::repeat(1.0));
        s.triangles.pop();
        assert!(matches!(Obstacle::new(s), Err(CollisionError::NonWatertightObstacle)));
    }

    #[test]
    fn closest_point_on_box_top() {
        let o = Obstacle::new(fixtures::box_surface(Vec3::zeros(), Vec3::repeat(1.0))).unwrap();
        let c = o.closest_point(&Vec3::new(0.4, 0.5, 0.9));
        assert_relative_eq!(c.point, Vec3::new(0.4, 0.5, 1.0), epsilon = 1e-15);
        assert_relative_eq!(c.distance, 0.1, epsilon = 1e-15);
    }
}
