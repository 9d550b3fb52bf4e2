use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::geometry::Vec3;
use crate::mesh::{Region, RegionFilter, TetMesh, TET_EDGES, TET_FACES};

use super::{orient_positive, RemeshTrigger};

type Edge = (usize, usize);

fn edge(a: usize, b: usize) -> Edge {
    (a.min(b), a.max(b))
}

/// Splits triggered chamber tets 1 to 8 at their edge midpoints. Edges that
/// also belong to a body tet are never split, so the body and the chamber
/// interface are untouched. Chamber tets left with some split edges get
/// conforming face splits joined to a new centroid vertex.
///
/// New vertices are appended; existing ids are unchanged. Split tets are
/// born at their current shape, like every chamber tet after a remesh.
pub fn builtin_subdivide(mesh: &TetMesh, triggers: &[RemeshTrigger]) -> TetMesh {
    if triggers.is_empty() {
        return mesh.clone();
    }
    let mut frozen: BTreeSet<Edge> = BTreeSet::new();
    for t in mesh.tets_in(RegionFilter::Only(Region::Body)) {
        let tet = mesh.tets[t];
        for [a, b] in TET_EDGES {
            frozen.insert(edge(tet[a], tet[b]));
        }
    }
    let mut marked: BTreeSet<Edge> = BTreeSet::new();
    for trig in triggers {
        if mesh.regions[trig.tet_id] != Region::Chamber {
            continue;
        }
        let tet = mesh.tets[trig.tet_id];
        for [a, b] in TET_EDGES {
            let e = edge(tet[a], tet[b]);
            if !frozen.contains(&e) {
                marked.insert(e);
            }
        }
    }

    let mut out = mesh.clone();
    let mut midpoint: BTreeMap<Edge, usize> = BTreeMap::new();
    for &(a, b) in &marked {
        midpoint.insert((a, b), push_vertex(&mut out, &[a, b]));
    }

    let mut tets = Vec::with_capacity(mesh.num_tets());
    let mut regions = Vec::with_capacity(mesh.num_tets());
    let mut parents = Vec::with_capacity(mesh.num_tets());
    for (t, tet) in mesh.tets.iter().enumerate() {
        let mids: Vec<Option<usize>> = TET_EDGES.iter().map(|&[a, b]| midpoint.get(&edge(tet[a], tet[b])).copied()).collect();
        let n_marked = mids.iter().flatten().count();
        let children = if n_marked == 0 {
            vec![*tet]
        } else if n_marked == 6 {
            red_split(tet, &mids, &out.positions)
        } else {
            cone_split(tet, &midpoint, &mut out)
        };
        for mut c in children {
            orient_positive(&mut c, &out.positions);
            tets.push(c);
            regions.push(mesh.regions[t]);
            parents.push(t);
        }
    }
    out.rest_shapes = tets
        .iter()
        .zip(&parents)
        .map(|(c, &p)| if c == &mesh.tets[p] { mesh.rest_shapes[p] } else { crate::mesh::shape_of(&out.positions, c) })
        .collect();
    out.tets = tets;
    out.regions = regions;
    out
}

fn push_vertex(mesh: &mut TetMesh, of: &[usize]) -> usize {
    let k = of.len() as f64;
    let p: Vec3 = of.iter().map(|&v| mesh.positions[v]).sum::<Vec3>() / k;
    let r: Vec3 = of.iter().map(|&v| mesh.rest_positions[v]).sum::<Vec3>() / k;
    mesh.positions.push(p);
    mesh.rest_positions.push(r);
    mesh.positions.len() - 1
}

/// Four corner tets plus the inner octahedron cut along its shortest
/// diagonal.
fn red_split(tet: &[usize; 4], mids: &[Option<usize>], positions: &[Vec3]) -> Vec<[usize; 4]> {
    let m = |i: usize| mids[i].expect("all edges marked");
    // TET_EDGES order: 01, 02, 03, 12, 13, 23
    let (m01, m02, m03, m12, m13, m23) = (m(0), m(1), m(2), m(3), m(4), m(5));
    let [v0, v1, v2, v3] = *tet;
    let mut out = vec![[v0, m01, m02, m03], [m01, v1, m12, m13], [m02, m12, v2, m23], [m03, m13, m23, v3]];
    let len = |a: usize, b: usize| (positions[a] - positions[b]).norm_squared();
    let options = [
        (len(m01, m23), (m01, m23), [m02, m12, m13, m03]),
        (len(m02, m13), (m02, m13), [m01, m12, m23, m03]),
        (len(m03, m12), (m03, m12), [m01, m13, m23, m02]),
    ];
    let mut best = 0;
    for i in 1..3 {
        if options[i].0 < options[best].0 {
            best = i;
        }
    }
    let (_, (a, b), ring) = options[best];
    for i in 0..4 {
        out.push([a, b, ring[i], ring[(i + 1) % 4]]);
    }
    out
}

/// Splits each face according to its marked edges and cones the pieces to
/// a new centroid vertex.
fn cone_split(tet: &[usize; 4], midpoint: &BTreeMap<Edge, usize>, out: &mut TetMesh) -> Vec<[usize; 4]> {
    let c = push_vertex(out, tet);
    let mut children = Vec::new();
    for f in TET_FACES {
        let face = [tet[f[0]], tet[f[1]], tet[f[2]]];
        for tri in split_face(face, midpoint) {
            children.push([tri[0], tri[2], tri[1], c]);
        }
    }
    children
}

/// Triangulates an oriented face given the midpoints of its marked edges.
/// The result depends only on the face's global vertex ids, so both tets
/// sharing the face split it the same way.
fn split_face(face: [usize; 3], midpoint: &BTreeMap<Edge, usize>) -> Vec<[usize; 3]> {
    let mid = |i: usize, j: usize| midpoint.get(&edge(face[i], face[j])).copied();
    // Edge k is opposite corner k.
    let m = [mid(1, 2), mid(2, 0), mid(0, 1)];
    let count = m.iter().flatten().count();
    match count {
        0 => vec![face],
        3 => {
            let (ma, mb, mc) = (m[0].unwrap(), m[1].unwrap(), m[2].unwrap());
            let [a, b, c] = face;
            vec![[a, mc, mb], [mc, b, ma], [mb, ma, c], [ma, mb, mc]]
        }
        1 => {
            let k = (0..3).find(|&k| m[k].is_some()).unwrap();
            let mk = m[k].unwrap();
            // Rotate so the marked edge runs from r[1] to r[2].
            let r = [face[k], face[(k + 1) % 3], face[(k + 2) % 3]];
            vec![[r[0], r[1], mk], [r[0], mk, r[2]]]
        }
        _ => {
            // The unmarked edge is opposite corner k.
            let k = (0..3).find(|&k| m[k].is_none()).unwrap();
            let r = [face[k], face[(k + 1) % 3], face[(k + 2) % 3]];
            let m_near = m[(k + 2) % 3].unwrap(); // on edge r0-r1
            let m_far = m[(k + 1) % 3].unwrap(); // on edge r2-r0
            let mut out = vec![[r[0], m_near, m_far]];
            // Quad m_near, r1, r2, m_far: the diagonal starts at the midpoint
            // of the edge with the smaller sorted key.
            if edge(r[0], r[1]) < edge(r[2], r[0]) {
                out.push([m_near, r[1], r[2]]);
                out.push([m_near, r[2], m_far]);
            } else {
                out.push([m_near, r[1], m_far]);
                out.push([m_far, r[1], r[2]]);
            }
            out
        }
    }
}

#[allow(dead_code)]
fn face_hash(mesh: &TetMesh) -> HashMap<[usize; 3], u32> {
    let mut faces = HashMap::new();
    for tet in &mesh.tets {
        for f in TET_FACES {
            *faces.entry(crate::mesh::sorted_face(tet, f)).or_insert(0) += 1;
        }
    }
    faces
}
