//! Brute-force reference implementations shared by the integration tests.
//! Nothing here goes through the crate's trees, topology or queries.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use softsim::{Region, SurfaceMesh, TetMesh, Vec3};

const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

fn det(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a)))
}

/// All four sub-determinants share the sign of the whole tet.
pub fn inside_tet(p: &Vec3, t: [Vec3; 4]) -> bool {
    let [a, b, c, d] = t;
    let s = det(&a, &b, &c, &d);
    if s == 0.0 {
        return false;
    }
    [det(p, &b, &c, &d), det(&a, p, &c, &d), det(&a, &b, p, &d), det(&a, &b, &c, p)].iter().all(|x| x * s > 0.0)
}

/// Faces counted over all tets, keyed by their sorted vertex triple.
pub fn face_counts(mesh: &TetMesh) -> HashMap<[usize; 3], Vec<usize>> {
    let mut out: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
    for (t, tet) in mesh.tets.iter().enumerate() {
        for f in FACES {
            let mut k = f.map(|i| tet[i]);
            k.sort_unstable();
            out.entry(k).or_default().push(t);
        }
    }
    out
}

/// Vertices on the outer boundary or on a body/chamber interface face.
pub fn collidable_vertices(mesh: &TetMesh) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (face, tets) in face_counts(mesh) {
        let interface = tets.len() == 2 && mesh.regions[tets[0]] != mesh.regions[tets[1]];
        if tets.len() == 1 || interface {
            out.extend(face);
        }
    }
    out
}

/// Vertices within `hops` edges of `v`, by breadth-first search over tet edges.
pub fn within_hops(mesh: &TetMesh, v: usize, hops: usize) -> HashSet<usize> {
    let mut adj: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for tet in &mesh.tets {
        for &a in tet {
            for &b in tet {
                if a != b {
                    adj.entry(a).or_default().insert(b);
                }
            }
        }
    }
    let mut seen: HashSet<usize> = [v].into();
    let mut frontier = vec![v];
    for _ in 0..hops {
        let mut next = Vec::new();
        for u in frontier {
            for &w in adj.get(&u).into_iter().flatten() {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Collidable vertices strictly inside a tet that touches none of the
/// vertices within `rings - 1` hops. O(V * T).
pub fn self_penetrations(mesh: &TetMesh, rings: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for v in collidable_vertices(mesh) {
        let p = mesh.positions[v];
        let excl = if rings == 0 { HashSet::new() } else { within_hops(mesh, v, rings - 1) };
        for tet in &mesh.tets {
            if tet.contains(&v) || tet.iter().any(|w| excl.contains(w)) {
                continue;
            }
            if inside_tet(&p, tet.map(|i| mesh.positions[i])) {
                out.insert(v);
                break;
            }
        }
    }
    out
}

/// Generalized winding number by summing every triangle's solid angle.
pub fn winding(surface: &SurfaceMesh, q: &Vec3) -> f64 {
    let mut w = 0.0;
    for t in &surface.triangles {
        let [a, b, c] = t.map(|i| surface.positions[i] - q);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        w += 2.0 * num.atan2(den);
    }
    w / (4.0 * std::f64::consts::PI)
}

fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest point on a triangle: the plane projection when it falls inside,
/// otherwise the best of the three edges.
pub fn closest_on_triangle(p: &Vec3, [a, b, c]: [Vec3; 3]) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let q = p - n * ((p - a).dot(&n) / n.norm_squared());
    let inside = [(a, b), (b, c), (c, a)].iter().all(|(u, v)| (v - u).cross(&(q - u)).dot(&n) >= 0.0);
    if inside {
        return q;
    }
    [closest_on_segment(p, &a, &b), closest_on_segment(p, &b, &c), closest_on_segment(p, &c, &a)]
        .into_iter()
        .min_by(|x, y| (x - p).norm_squared().total_cmp(&(y - p).norm_squared()))
        .unwrap()
}

pub fn surface_distance(surface: &SurfaceMesh, p: &Vec3) -> f64 {
    surface
        .triangles
        .iter()
        .map(|t| (closest_on_triangle(p, t.map(|i| surface.positions[i])) - p).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Collidable vertices inside each obstacle, as (vertex, obstacle) pairs.
pub fn obstacle_penetrations(mesh: &TetMesh, obstacles: &[SurfaceMesh]) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for v in collidable_vertices(mesh) {
        for (o, s) in obstacles.iter().enumerate() {
            if winding(s, &mesh.positions[v]) >= 0.5 {
                out.insert((v, o));
            }
        }
    }
    out
}

/// Signed volume of a tet list over given positions.
pub fn volume_of(mesh: &TetMesh, region: Region) -> f64 {
    mesh.tets
        .iter()
        .zip(&mesh.regions)
        .filter(|(_, r)| **r == region)
        .map(|(t, _)| {
            let [a, b, c, d] = t.map(|i| mesh.positions[i]);
            det(&a, &b, &c, &d) / 6.0
        })
        .sum()
}

/// Body tets as sorted lists of their vertex coordinates, independent of
/// vertex and tet numbering.
pub fn body_fingerprint(mesh: &TetMesh) -> Vec<[[u64; 3]; 4]> {
    let mut out: Vec<[[u64; 3]; 4]> = mesh
        .tets
        .iter()
        .zip(&mesh.regions)
        .filter(|(_, r)| **r == Region::Body)
        .map(|(t, _)| t.map(|i| [0, 1, 2].map(|k| mesh.positions[i][k].to_bits())))
        .collect();
    out.sort_unstable();
    out
}

/// Conformity audit: every face is shared by at most two tets and no face
/// of the whole mesh is hidden inside it. A hanging node shows up as a
/// single-owner face whose centroid lies inside another tet.
pub fn is_conforming(mesh: &TetMesh) -> bool {
    let faces = face_counts(mesh);
    if faces.values().any(|t| t.len() > 2) {
        return false;
    }
    let owners: BTreeMap<[usize; 3], usize> = faces.into_iter().filter(|(_, t)| t.len() == 1).map(|(f, t)| (f, t[0])).collect();
    for (f, &owner) in &owners {
        let [a, b, c] = f.map(|i| mesh.positions[i]);
        let n = (b - a).cross(&(c - a));
        let centroid = (a + b + c) / 3.0;
        // Probe just outside the owner across the face.
        let own = mesh.tets[owner].map(|i| mesh.positions[i]);
        let inward = own.iter().fold(Vec3::zeros(), |s, p| s + p) / 4.0 - centroid;
        let out = if n.dot(&inward) > 0.0 { -n } else { n };
        let probe = centroid + out.normalize() * 1e-7 * (b - a).norm();
        if mesh.tets.iter().enumerate().any(|(t, tet)| t != owner && inside_tet(&probe, tet.map(|i| mesh.positions[i]))) {
            return false;
        }
    }
    true
}
