//! Procedural meshes and obstacles used by tests, benchmarks and the CLI.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{tet_volume, Vec3};
use crate::mesh::{Region, SurfaceMesh, TetMesh};

/// Kuhn subdivision of a unit cube into six tets sharing the main diagonal.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Structured grid of `cells` boxes, six positively oriented tets each, all
/// tagged as body.
pub fn box_grid(cells: [usize; 3], cell_size: Vec3, origin: Vec3) -> TetMesh {
    grid_with(cells, cell_size, origin, |_| Some(Region::Body))
}

/// Structured grid where `tag(cell)` chooses the region of each cell, or
/// drops it with `None`. Unused grid vertices are removed.
pub fn grid_with(
    cells: [usize; 3],
    cell_size: Vec3,
    origin: Vec3,
    mut tag: impl FnMut([usize; 3]) -> Option<Region>,
) -> TetMesh {
    let [nx, ny, nz] = cells;
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                positions.push(origin + Vec3::new(i as f64 * cell_size.x, j as f64 * cell_size.y, k as f64 * cell_size.z));
            }
        }
    }
    let mut tets = Vec::new();
    let mut regions = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let Some(region) = tag([i, j, k]) else { continue };
                let corner = |c: usize| vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                for t in KUHN {
                    let mut tet = t.map(corner);
                    let vol = crate::geometry::tet_volume_points(
                        &positions[tet[0]],
                        &positions[tet[1]],
                        &positions[tet[2]],
                        &positions[tet[3]],
                    );
                    if vol < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                    regions.push(region);
                }
            }
        }
    }
    compact(positions, tets, regions)
}

fn compact(positions: Vec<Vec3>, tets: Vec<[usize; 4]>, regions: Vec<Region>) -> TetMesh {
    let mut map = vec![usize::MAX; positions.len()];
    let mut used = Vec::new();
    for tet in &tets {
        for &v in tet {
            if map[v] == usize::MAX {
                map[v] = 0;
            }
        }
    }
    for (v, m) in map.iter_mut().enumerate() {
        if *m != usize::MAX {
            *m = used.len();
            used.push(positions[v]);
        }
    }
    let tets = tets.into_iter().map(|t| t.map(|v| map[v])).collect();
    TetMesh::new(used, tets, regions)
}

/// Disjoint union of two meshes.
pub fn merge(a: &TetMesh, b: &TetMesh) -> TetMesh {
    let off = a.num_vertices();
    let mut rest = a.rest_positions.clone();
    rest.extend_from_slice(&b.rest_positions);
    let mut tets = a.tets.clone();
    tets.extend(b.tets.iter().map(|t| t.map(|v| v + off)));
    let mut regions = a.regions.clone();
    regions.extend_from_slice(&b.regions);
    let mut m = TetMesh::new(rest, tets, regions);
    let mut positions = a.positions.clone();
    positions.extend_from_slice(&b.positions);
    m.positions = positions;
    m.fixed = a.fixed.iter().copied().chain(b.fixed.iter().map(|v| v + off)).collect();
    m
}

/// Fixes every vertex whose rest position lies inside the closed box.
pub fn anchor_box(mesh: &mut TetMesh, lo: Vec3, hi: Vec3) {
    let fixed: BTreeSet<usize> = mesh
        .rest_positions
        .iter()
        .enumerate()
        .filter(|(_, p)| (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k]))
        .map(|(i, _)| i)
        .collect();
    mesh.fixed.extend(fixed);
}

/// `n^3` unit cells with a one-cell body shell around a cubic chamber,
/// anchored at z = 0. `n = 6` gives 1296 tets.
pub fn inflated_cube(n: usize) -> TetMesh {
    let mut mesh = grid_with([n, n, n], Vec3::repeat(1.0), Vec3::zeros(), |[i, j, k]| {
        let inner = |x: usize| x >= 1 && x + 1 < n;
        Some(if inner(i) && inner(j) && inner(k) { Region::Chamber } else { Region::Body })
    });
    anchor_box(&mut mesh, Vec3::repeat(-1e-9), Vec3::new(n as f64 + 1.0, n as f64 + 1.0, 1e-9));
    mesh
}

/// Box-shaped beam of `cells` unit cells with a chamber along its interior,
/// anchored at z = 0. `chamber(cell)` decides which interior cells inflate.
pub fn beam(cells: [usize; 3], origin: Vec3, chamber: impl Fn([usize; 3]) -> bool) -> TetMesh {
    let mut mesh = grid_with(cells, Vec3::repeat(1.0), origin, |c| {
        Some(if chamber(c) { Region::Chamber } else { Region::Body })
    });
    anchor_box(
        &mut mesh,
        origin - Vec3::repeat(1e-9),
        origin + Vec3::new(cells[0] as f64 + 1.0, cells[1] as f64 + 1.0, 1e-9),
    );
    mesh
}

/// Two upright 3x3x6 beams with enclosed 1x1x4 chambers separated by `gap`
/// along x, both anchored at z = 0. Inflating them pushes the facing walls
/// into each other.
pub fn two_beams(gap: f64) -> TetMesh {
    let chamber = |[i, j, k]: [usize; 3]| i == 1 && j == 1 && (1..5).contains(&k);
    let a = beam([3, 3, 6], Vec3::zeros(), chamber);
    let b = beam([3, 3, 6], Vec3::new(3.0 + gap, 0.0, 0.0), chamber);
    merge(&a, &b)
}

/// Upright 3x3x6 beam with an enclosed chamber, anchored at z = 0.
pub fn single_beam() -> TetMesh {
    beam([3, 3, 6], Vec3::zeros(), |[i, j, k]| i == 1 && j == 1 && (1..5).contains(&k))
}

/// Single beam next to a box obstacle `gap` away from its x = 3 face.
pub fn beam_and_box(gap: f64) -> (TetMesh, SurfaceMesh) {
    let wall = box_surface(Vec3::new(3.0 + gap, -1.0, 0.0), Vec3::new(5.0 + gap, 4.0, 7.0));
    (single_beam(), wall)
}

/// Horizontal 8x2x2 bending finger at half-unit resolution (1536 tets),
/// clamped at x = 0, with its chamber under a thin top wall so that
/// inflation curls it downwards onto a cylinder of radius 1 lying along y
/// `gap` below its underside.
pub fn finger_and_cylinder(gap: f64) -> (TetMesh, SurfaceMesh) {
    let mut mesh = grid_with([16, 4, 4], Vec3::repeat(0.5), Vec3::zeros(), |[i, j, k]| {
        Some(if (1..15).contains(&i) && (1..3).contains(&j) && k == 2 { Region::Chamber } else { Region::Body })
    });
    anchor_box(&mut mesh, Vec3::repeat(-1e-9), Vec3::new(1e-9, 3.0, 3.0));
    let cylinder = cylinder_surface(Vec3::new(5.0, 1.0, -1.0 - gap), Vec3::y(), 1.0, 4.0, 48);
    (mesh, cylinder)
}

/// Closed, outward-oriented box surface (12 triangles).
pub fn box_surface(lo: Vec3, hi: Vec3) -> SurfaceMesh {
    let p = |b: usize| Vec3::new(if b & 1 == 0 { lo.x } else { hi.x }, if b & 2 == 0 { lo.y } else { hi.y }, if b & 4 == 0 { lo.z } else { hi.z });
    let positions = (0..8).map(p).collect();
    let triangles = vec![
        [0, 2, 3], [0, 3, 1], // z = lo
        [4, 5, 7], [4, 7, 6], // z = hi
        [0, 1, 5], [0, 5, 4], // y = lo
        [2, 6, 7], [2, 7, 3], // y = hi
        [0, 4, 6], [0, 6, 2], // x = lo
        [1, 3, 7], [1, 7, 5], // x = hi
    ];
    SurfaceMesh::new(positions, triangles)
}

/// Icosphere of the given radius, subdivided `levels` times.
pub fn icosphere(center: Vec3, radius: f64, levels: usize) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<Vec3> = [
        [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
        [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
        [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Vec3::new(c[0], c[1], c[2]).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<Vec3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                pts.push(((pts[a] + pts[b]) * 0.5).normalize());
                pts.len() - 1
            })
        };
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let positions = pts.into_iter().map(|p| center + p * radius).collect();
    SurfaceMesh::new(positions, tris)
}

/// Closed cylinder along `axis` (unit) through `center`.
pub fn cylinder_surface(center: Vec3, axis: Vec3, radius: f64, length: f64, segments: usize) -> SurfaceMesh {
    let axis = axis.normalize();
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    let half = axis * (length * 0.5);
    let mut positions = Vec::with_capacity(2 * segments + 2);
    for end in [-1.0, 1.0] {
        for s in 0..segments {
            let a = s as f64 / segments as f64 * std::f64::consts::TAU;
            positions.push(center + half * end + (u * a.cos() + v * a.sin()) * radius);
        }
    }
    let bottom = positions.len();
    positions.push(center - half);
    let top = positions.len();
    positions.push(center + half);
    let mut tris = Vec::new();
    for s in 0..segments {
        let n = (s + 1) % segments;
        let (a0, a1, b0, b1) = (s, n, s + segments, n + segments);
        tris.push([a0, a1, b1]);
        tris.push([a0, b1, b0]);
        tris.push([bottom, a1, a0]);
        tris.push([top, b0, b1]);
    }
    SurfaceMesh::new(positions, tris)
}

/// `n` small random tets scattered with constant density in a cube whose
/// side grows as `n^(1/3)`. Used for BVH benchmarks.
pub fn random_tet_soup(n: usize, seed: u64) -> TetMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = (n as f64).cbrt() * 2.0;
    let mut rest = Vec::with_capacity(4 * n);
    let mut tets = Vec::with_capacity(n);
    for t in 0..n {
        let c = Vec3::new(rng.random_range(0.0..side), rng.random_range(0.0..side), rng.random_range(0.0..side));
        let mut pts = [Vec3::zeros(); 4];
        loop {
            for p in &mut pts {
                *p = c + Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            if tet_volume(&crate::geometry::ElementShape::from_vertices(pts)).abs() > 0.05 {
                break;
            }
        }
        if tet_volume(&crate::geometry::ElementShape::from_vertices(pts)) < 0.0 {
            pts.swap(2, 3);
        }
        rest.extend_from_slice(&pts);
        tets.push([4 * t, 4 * t + 1, 4 * t + 2, 4 * t + 3]);
    }
    TetMesh::new(rest, tets, vec![Region::Body; n])
}

/// Unit-cell grid whose rest vertices are jittered by up to `jitter` in each
/// coordinate, so element shapes differ. Deformed equals rest.
pub fn random_mesh(cells: [usize; 3], jitter: f64, seed: u64) -> TetMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = box_grid(cells, Vec3::repeat(1.0), Vec3::zeros());
    let rest: Vec<Vec3> = grid
        .rest_positions
        .iter()
        .map(|p| p + Vec3::new(rng.random_range(-jitter..jitter), rng.random_range(-jitter..jitter), rng.random_range(-jitter..jitter)))
        .collect();
    TetMesh::new(rest, grid.tets, grid.regions)
}

/// Smooth pseudo-random displacement field applied to every deformed
/// position, scaled by `amplitude`.
pub fn perturb(mesh: &mut TetMesh, amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k: Vec<f64> = (0..9).map(|_| rng.random_range(0.2..1.2)).collect();
    let ph: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..6.3)).collect();
    for p in &mut mesh.positions {
        let d = Vec3::new(
            (k[0] * p.x + ph[0]).sin() + (k[1] * p.y + ph[1]).sin() + (k[2] * p.z + ph[2]).sin(),
            (k[3] * p.x + ph[3]).sin() + (k[4] * p.y + ph[4]).sin() + (k[5] * p.z + ph[5]).sin(),
            (k[6] * p.x + ph[6]).sin() + (k[7] * p.y + ph[7]).sin() + (k[8] * p.z + ph[8]).sin(),
        );
        *p += d * (amplitude / 3.0);
    }
}
