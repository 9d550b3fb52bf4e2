//! Global step: the sparse least-squares blend of all element and spring
//! targets, factored once per spring set.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::collision::SpringSet;
use crate::geometry::Vec3;
use crate::mesh::{TetMesh, Topology};
use crate::projection::LocalTargets;

use super::SolverError;

const FIXED: usize = usize::MAX;

pub struct GlobalSystem {
    /// Free-variable index per mesh vertex, `FIXED` for pinned vertices.
    free_index: Vec<usize>,
    free_vertices: Vec<usize>,
    /// Element part of the matrix, merged and sorted by (col, row).
    element_entries: Vec<(usize, usize, f64)>,
    /// Spring stiffness per free variable.
    spring_diagonal: Vec<(usize, f64)>,
    llt: Llt<usize, f64>,
    spring_stamp: u64,
    weights: Vec<f64>,
    tets: Vec<[usize; 4]>,
}

impl std::fmt::Debug for GlobalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GlobalSystem")
            .field("free", &self.free_vertices.len())
            .field("nonzeros", &self.element_entries.len())
            .field("spring_stamp", &self.spring_stamp)
            .finish()
    }
}

impl GlobalSystem {
    /// Builds and factors the normal-equations matrix. Vertices in
    /// `mesh.fixed` and vertices referenced by no tet are eliminated.
    pub fn assemble(mesh: &TetMesh, weights: &[f64], springs: &SpringSet) -> Result<Self, SolverError> {
        let n = mesh.num_vertices();
        let mut referenced = vec![false; n];
        for t in &mesh.tets {
            for &v in t {
                referenced[v] = true;
            }
        }
        let mut free_index = vec![FIXED; n];
        let mut free_vertices = Vec::new();
        for v in 0..n {
            if referenced[v] && !mesh.fixed.contains(&v) {
                free_index[v] = free_vertices.len();
                free_vertices.push(v);
            }
        }
        check_pinned(mesh, &free_index, springs)?;

        let mut entries = Vec::with_capacity(16 * mesh.num_tets());
        for (t, tet) in mesh.tets.iter().enumerate() {
            let w = weights[t];
            for a in 0..4 {
                let ia = free_index[tet[a]];
                if ia == FIXED {
                    continue;
                }
                for b in 0..4 {
                    let ib = free_index[tet[b]];
                    if ib == FIXED {
                        continue;
                    }
                    let n_ab = if a == b { 0.75 } else { -0.25 };
                    entries.push((ib, ia, w * n_ab));
                }
            }
        }
        entries.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len() / 2);
        for (c, r, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c && last.1 == r => last.2 += v,
                _ => merged.push((c, r, v)),
            }
        }
        let spring_diagonal = spring_entries(springs, &free_index);
        let llt = factor(free_vertices.len(), &merged, &spring_diagonal)?;
        Ok(GlobalSystem {
            free_index,
            free_vertices,
            element_entries: merged,
            spring_diagonal,
            llt,
            spring_stamp: springs.stamp(),
            weights: weights.to_vec(),
            tets: mesh.tets.clone(),
        })
    }

    pub fn num_free(&self) -> usize {
        self.free_vertices.len()
    }

    pub fn spring_stamp(&self) -> u64 {
        self.spring_stamp
    }

    /// Refactors when the spring set changed since the last factorization.
    /// Returns whether a refactorization happened.
    pub fn sync_springs(&mut self, mesh: &TetMesh, springs: &SpringSet) -> Result<bool, SolverError> {
        if springs.stamp() == self.spring_stamp {
            return Ok(false);
        }
        check_pinned(mesh, &self.free_index, springs)?;
        self.spring_diagonal = spring_entries(springs, &self.free_index);
        self.llt = factor(self.free_vertices.len(), &self.element_entries, &self.spring_diagonal)?;
        self.spring_stamp = springs.stamp();
        Ok(true)
    }

    /// Exact minimizer of the quadratic for fixed targets. Pinned vertices
    /// keep their entries in `positions`.
    pub fn solve(&self, positions: &[Vec3], targets: &LocalTargets) -> Vec<Vec3> {
        let nf = self.free_vertices.len();
        let mut rhs = Mat::<f64>::zeros(nf, 3);
        for (t, tet) in self.tets.iter().enumerate() {
            let w = self.weights[t];
            let p = &targets.projected[t];
            for a in 0..4 {
                let ia = self.free_index[tet[a]];
                if ia == FIXED {
                    continue;
                }
                let mut acc = p.column(a).into_owned() * w;
                for b in 0..4 {
                    if self.free_index[tet[b]] == FIXED {
                        let n_ab = if a == b { 0.75 } else { -0.25 };
                        acc -= positions[tet[b]] * (w * n_ab);
                    }
                }
                for c in 0..3 {
                    rhs[(ia, c)] += acc[c];
                }
            }
        }
        for &(v, target, k) in &targets.springs {
            let i = self.free_index[v];
            if i != FIXED {
                for c in 0..3 {
                    rhs[(i, c)] += k * target[c];
                }
            }
        }
        let x = if nf > 0 { self.llt.solve(&rhs) } else { rhs };
        let mut out = positions.to_vec();
        for (i, &v) in self.free_vertices.iter().enumerate() {
            out[v] = Vec3::new(x[(i, 0)], x[(i, 1)], x[(i, 2)]);
        }
        out
    }

    /// Dense copy of the current matrix, for diagnostics and tests.
    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        let nf = self.free_vertices.len();
        let mut m = vec![vec![0.0; nf]; nf];
        for &(c, r, v) in &self.element_entries {
            m[r][c] += v;
        }
        for &(i, k) in &self.spring_diagonal {
            m[i][i] += k;
        }
        m
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free_vertices
    }
}

fn spring_entries(springs: &SpringSet, free_index: &[usize]) -> Vec<(usize, f64)> {
    springs
        .iter()
        .filter(|(_, s)| s.active)
        .filter_map(|(&v, s)| {
            let i = free_index[v];
            (i != FIXED).then_some((i, s.stiffness))
        })
        .collect()
}

fn factor(n: usize, entries: &[(usize, usize, f64)], springs: &[(usize, f64)]) -> Result<Llt<usize, f64>, SolverError> {
    let mut lower: Vec<(usize, usize, f64)> = entries.iter().copied().filter(|e| e.1 >= e.0).collect();
    for &(i, k) in springs {
        // Every free variable has a diagonal entry from its elements.
        let at = lower.binary_search_by(|e| (e.0, e.1).cmp(&(i, i))).map_err(|_| SolverError::FactorizationFailure(format!("missing diagonal {i}")))?;
        lower[at].2 += k;
    }
    let trips: Vec<Triplet<usize, usize, f64>> = lower.iter().map(|&(c, r, v)| Triplet::new(r, c, v)).collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips).map_err(|e| SolverError::FactorizationFailure(format!("{e:?}")))?;
    a.sp_cholesky(Side::Lower).map_err(|e| SolverError::FactorizationFailure(format!("{e:?}")))
}

/// Every connected component of free vertices needs a pinned vertex or a
/// spring, otherwise translations are in the null space.
fn check_pinned(mesh: &TetMesh, free_index: &[usize], springs: &SpringSet) -> Result<(), SolverError> {
    let topo = Topology::build(mesh);
    let comp = topo.vertex_components();
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut has_free = vec![false; ncomp];
    let mut pinned = vec![false; ncomp];
    for v in 0..mesh.num_vertices() {
        if topo.tets_of(v).is_empty() {
            continue;
        }
        if free_index[v] == FIXED {
            pinned[comp[v]] = true;
        } else {
            has_free[comp[v]] = true;
        }
    }
    for (&v, s) in springs.iter() {
        if s.active {
            pinned[comp[v]] = true;
        }
    }
    match (0..ncomp).find(|&c| has_free[c] && !pinned[c]) {
        Some(c) => Err(SolverError::SingularSystem { component: c }),
        None => Ok(()),
    }
}
