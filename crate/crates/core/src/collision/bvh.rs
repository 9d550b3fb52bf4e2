//! Binary AABB tree with persistent topology and bottom-up refitting.

use crate::geometry::Vec3;

use super::CollisionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    #[inline]
    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&o.min), max: self.max.sup(&o.max) }
    }

    #[inline]
    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb { min: self.min.add_scalar(-pad), max: self.max.add_scalar(pad) }
    }

    #[inline]
    pub fn contains_point(&self, p: &Vec3) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y && p.z >= self.min.z && p.z <= self.max.z
    }

    pub fn contains(&self, o: &Aabb, slack: f64) -> bool {
        (0..3).all(|k| o.min[k] >= self.min[k] - slack && o.max[k] <= self.max[k] + slack)
    }

    #[inline]
    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.max - self.min;
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    /// Entry parameter of the ray `origin + t * dir` for `t` in `[0, t_max]`.
    pub fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the ray lies in the slab plane; keep it.
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf { primitive: usize },
    Internal { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub aabb: Aabb,
    pub kind: NodeKind,
    pub parent: Option<usize>,
    /// Range of this subtree's primitives within [`AabbTree::primitive_order`].
    pub first: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    Tet,
    Triangle,
}

/// Nodes are stored in pre-order: every child index is larger than its
/// parent's, so a reverse sweep refits bottom-up.
#[derive(Debug, Clone)]
pub struct AabbTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
    padding: f64,
    kind: PrimitiveKind,
}

const STACK: usize = 128;

impl AabbTree {
    /// Top-down median split on the longest axis until each leaf holds one
    /// primitive.
    pub fn build(boxes: &[Aabb], kind: PrimitiveKind, padding: f64) -> Result<Self, CollisionError> {
        if boxes.is_empty() {
            return Err(CollisionError::EmptyInput);
        }
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let centers: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() - 1);
        build_range(&mut nodes, &mut order, 0, boxes.len(), None, boxes, &centers, padding);
        Ok(AabbTree { nodes, order, padding, kind })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn primitive_order(&self) -> &[usize] {
        &self.order
    }

    pub fn primitive_kind(&self) -> PrimitiveKind {
        self.kind
    }

    pub fn num_primitives(&self) -> usize {
        self.order.len()
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut h = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                depth[i] = depth[p] + 1;
            }
            h = h.max(depth[i]);
        }
        h + 1
    }

    /// Recomputes every box bottom-up from new primitive boxes; topology is
    /// left untouched.
    pub fn refit(&mut self, boxes: &[Aabb]) -> Result<(), CollisionError> {
        if boxes.len() != self.order.len() {
            return Err(CollisionError::SizeMismatch { expected: self.order.len(), got: boxes.len() });
        }
        for i in (0..self.nodes.len()).rev() {
            let aabb = match self.nodes[i].kind {
                NodeKind::Leaf { primitive } => boxes[primitive].padded(self.padding),
                NodeKind::Internal { left, right } => self.nodes[left].aabb.union(&self.nodes[right].aabb),
            };
            self.nodes[i].aabb = aabb;
        }
        Ok(())
    }

    /// Calls `f` for every primitive whose box contains `p`; returns the
    /// number of nodes visited.
    pub fn for_each_containing(&self, p: &Vec3, mut f: impl FnMut(usize)) -> usize {
        let mut stack = [0usize; STACK];
        let mut top = 1;
        let mut visits = 0;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top]];
            visits += 1;
            if !node.aabb.contains_point(p) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { primitive } => f(primitive),
                NodeKind::Internal { left, right } => {
                    stack[top] = right;
                    stack[top + 1] = left;
                    top += 2;
                }
            }
        }
        visits
    }

    /// Branch-and-bound nearest search. `dist2(prim)` returns the squared
    /// distance of a primitive, or `None` to skip it. Ties go to the lower
    /// primitive index.
    pub fn nearest(&self, p: &Vec3, mut dist2: impl FnMut(usize) -> Option<f64>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut stack = [0usize; STACK];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top]];
            let bound = (node.aabb.distance_squared(p) - self.padding * self.padding).max(0.0);
            if let Some((_, bd)) = best {
                if node.aabb.distance_squared(p) > bd && bound > bd {
                    continue;
                }
            }
            match node.kind {
                NodeKind::Leaf { primitive } => {
                    if let Some(d) = dist2(primitive) {
                        let better = match best {
                            None => true,
                            Some((bp, bd)) => d < bd || (d == bd && primitive < bp),
                        };
                        if better {
                            best = Some((primitive, d));
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    let dl = self.nodes[left].aabb.distance_squared(p);
                    let dr = self.nodes[right].aabb.distance_squared(p);
                    // Push the farther child first so the nearer one is popped next.
                    let (near, far) = if dl <= dr { (left, right) } else { (right, left) };
                    stack[top] = far;
                    stack[top + 1] = near;
                    top += 2;
                }
            }
        }
        best
    }

    /// Closest ray hit. `hit(prim)` returns the ray parameter of an
    /// intersection, or `None`.
    pub fn raycast(&self, origin: &Vec3, dir: &Vec3, t_max: f64, mut hit: impl FnMut(usize) -> Option<f64>) -> Option<(usize, f64)> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<(usize, f64)> = None;
        let mut stack = [0usize; STACK];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top]];
            let limit = best.map_or(t_max, |(_, t)| t);
            if node.aabb.ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { primitive } => {
                    if let Some(t) = hit(primitive) {
                        let better = match best {
                            None => t <= t_max,
                            Some((bp, bt)) => t < bt || (t == bt && primitive < bp),
                        };
                        if better {
                            best = Some((primitive, t));
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    stack[top] = right;
                    stack[top + 1] = left;
                    top += 2;
                }
            }
        }
        best
    }

    /// Parent/child structure only, used to check that refits keep topology.
    pub fn topology_signature(&self) -> Vec<(Option<usize>, NodeKind)> {
        self.nodes.iter().map(|n| (n.parent, n.kind)).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn build_range(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    parent: Option<usize>,
    boxes: &[Aabb],
    centers: &[Vec3],
    padding: f64,
) -> usize {
    let id = nodes.len();
    if end - start == 1 {
        let prim = order[start];
        nodes.push(Node {
            aabb: boxes[prim].padded(padding),
            kind: NodeKind::Leaf { primitive: prim },
            parent,
            first: start,
            count: 1,
        });
        return id;
    }
    let mut bounds = Aabb::empty();
    for &i in &order[start..end] {
        bounds = bounds.union(&boxes[i]);
    }
    let axis = bounds.longest_axis();
    let mid = start + (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centers[a][axis].total_cmp(&centers[b][axis]).then(a.cmp(&b))
    });
    nodes.push(Node {
        aabb: bounds.padded(padding),
        kind: NodeKind::Internal { left: 0, right: 0 },
        parent,
        first: start,
        count: end - start,
    });
    let left = build_range(nodes, order, start, mid, Some(id), boxes, centers, padding);
    let right = build_range(nodes, order, mid, end, Some(id), boxes, centers, padding);
    nodes[id].kind = NodeKind::Internal { left, right };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tet_boxes(mesh: &crate::mesh::TetMesh) -> Vec<Aabb> {
        mesh.tets.iter().map(|t| Aabb::from_points(t.iter().map(|&v| &mesh.positions[v]))).collect()
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(AabbTree::build(&[], PrimitiveKind::Tet, 0.0), Err(CollisionError::EmptyInput)));
    }

    #[test]
    fn single_primitive() {
        let b = Aabb { min: Vec3::zeros(), max: Vec3::repeat(1.0) };
        let tree = AabbTree::build(&[b], PrimitiveKind::Tet, 0.0).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.root().aabb, b);
    }

    #[test]
    fn two_primitives_union_root() {
        let a = Aabb { min: Vec3::zeros(), max: Vec3::repeat(1.0) };
        let b = Aabb { min: Vec3::repeat(5.0), max: Vec3::repeat(6.0) };
        let tree = AabbTree::build(&[a, b], PrimitiveKind::Tet, 0.0).unwrap();
        assert_eq!(tree.nodes().len(), 3);
        assert_eq!(tree.root().aabb, a.union(&b));
    }

    #[test]
    fn containment_chain_and_height() {
        let mesh = fixtures::random_tet_soup(500, 1);
        let boxes = tet_boxes(&mesh);
        let tree = AabbTree::build(&boxes, PrimitiveKind::Tet, 0.0).unwrap();
        let mut leaf_count = 0;
        let mut seen = vec![false; 500];
        for (i, node) in tree.nodes().iter().enumerate() {
            if let NodeKind::Leaf { primitive } = node.kind {
                leaf_count += 1;
                assert!(!seen[primitive]);
                seen[primitive] = true;
                // Walk to the root: every ancestor box contains the primitive box.
                let mut cur = Some(i);
                while let Some(c) = cur {
                    assert!(tree.nodes()[c].aabb.contains(&boxes[primitive], 1e-12));
                    cur = tree.nodes()[c].parent;
                }
            }
        }
        assert_eq!(leaf_count, 500);
        assert!(tree.height() <= 2 * 9 + 2);
    }

    #[test]
    fn refit_keeps_topology_and_tracks_motion() {
        let mut mesh = fixtures::random_tet_soup(200, 2);
        let mut tree = AabbTree::build(&tet_boxes(&mesh), PrimitiveKind::Tet, 0.1).unwrap();
        let before: Vec<Aabb> = tree.nodes().iter().map(|n| n.aabb).collect();
        let sig = tree.topology_signature();

        tree.refit(&tet_boxes(&mesh)).unwrap();
        let same: Vec<Aabb> = tree.nodes().iter().map(|n| n.aabb).collect();
        assert_eq!(before, same);

        let t = Vec3::new(0.5, -1.25, 2.0);
        for p in &mut mesh.positions {
            *p += t;
        }
        tree.refit(&tet_boxes(&mesh)).unwrap();
        for (a, b) in before.iter().zip(tree.nodes()) {
            assert!((a.min + t - b.aabb.min).norm() < 1e-12);
            assert!((a.max + t - b.aabb.max).norm() < 1e-12);
        }
        assert_eq!(sig, tree.topology_signature());
        assert!(matches!(tree.refit(&[]), Err(CollisionError::SizeMismatch { .. })));
    }

    #[test]
    fn nearest_and_ray_match_linear_scan() {
        let mesh = fixtures::random_tet_soup(300, 3);
        let boxes = tet_boxes(&mesh);
        let tree = AabbTree::build(&boxes, PrimitiveKind::Tet, 0.0).unwrap();
        let centers: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        let q = Vec3::new(1.0, 2.0, 3.0);
        let (best, d) = tree.nearest(&q, |i| Some((centers[i] - q).norm_squared())).unwrap();
        let brute = (0..300).min_by(|&a, &b| (centers[a] - q).norm_squared().total_cmp(&(centers[b] - q).norm_squared())).unwrap();
        assert_eq!(best, brute);
        assert_eq!(d, (centers[brute] - q).norm_squared());
    }
}
