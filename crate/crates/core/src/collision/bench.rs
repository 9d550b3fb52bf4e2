//! Timing and traversal counters for the tet tree on random soups.

use std::time::Instant;

use super::{CollisionConfig, CollisionError, CollisionWorld};
use crate::fixtures;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub tets: usize,
    pub build_seconds: f64,
    pub refit_seconds: f64,
    pub query_seconds: f64,
    /// Tree nodes visited by one full self-collision query.
    pub node_visits: usize,
    pub collisions: usize,
}

/// Builds the world over a random soup of `tets` tets, perturbs it, refits
/// and runs one self-collision query.
pub fn bench_bvh(tets: usize, seed: u64) -> Result<BenchRow, CollisionError> {
    if tets == 0 {
        return Err(CollisionError::EmptyInput);
    }
    let mut mesh = fixtures::random_tet_soup(tets, seed);
    let config = CollisionConfig { exclusion_rings: 1, ..CollisionConfig::default() };
    let t0 = Instant::now();
    let mut world = CollisionWorld::new(&mesh, Vec::new(), config)?;
    let build_seconds = t0.elapsed().as_secs_f64();
    fixtures::perturb(&mut mesh, 0.05, seed ^ 0x9e37_79b9);
    let t1 = Instant::now();
    world.refit(&mesh)?;
    let refit_seconds = t1.elapsed().as_secs_f64();
    let t2 = Instant::now();
    let detection = world.detect_self(&mesh);
    let query_seconds = t2.elapsed().as_secs_f64();
    Ok(BenchRow {
        tets,
        build_seconds,
        refit_seconds,
        query_seconds,
        node_visits: detection.node_visits,
        collisions: detection.vertices().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_size_is_rejected() {
        assert_eq!(bench_bvh(0, 1), Err(CollisionError::EmptyInput));
    }

    #[test]
    fn one_row_with_counters() {
        let row = bench_bvh(1000, 7).unwrap();
        assert_eq!(row.tets, 1000);
        assert!(row.node_visits > 0);
    }
}
