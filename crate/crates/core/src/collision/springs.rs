//! Virtual springs: zero-rest-length penalties pulling collided vertices to
//! their correspondence points.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::geometry::Vec3;
use crate::mesh::TetMesh;

use super::{Collision, CollisionError, CollisionKind, CollisionRecord, CollisionWorld};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringElement {
    pub record: CollisionRecord,
    pub stiffness: f64,
    pub active: bool,
}

impl SpringElement {
    /// The local-step target of a spring is its correspondence point.
    pub fn target(&self) -> Vec3 {
        self.record.correspondence
    }

    pub fn energy(&self, p: &Vec3) -> f64 {
        if self.active {
            self.stiffness * (p - self.record.correspondence).norm_squared()
        } else {
            0.0
        }
    }
}

/// One spring per vertex. The stamp changes whenever membership or a
/// stiffness changes, which is exactly when the global matrix changes.
#[derive(Debug, Clone, Default)]
pub struct SpringSet {
    springs: BTreeMap<usize, SpringElement>,
    stamp: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpringUpdate {
    pub created: Vec<usize>,
    pub released: Vec<usize>,
    pub retargeted: usize,
    /// Springs whose vertex was still colliding and got stiffer.
    pub stiffened: usize,
}

/// Stiffness factor applied to a spring whose vertex is still inside after
/// an iteration, and the cap relative to the base stiffness.
pub const STIFFNESS_GROWTH: f64 = 2.0;
pub const MAX_STIFFNESS_FACTOR: f64 = 1024.0;

impl SpringSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.springs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.springs.is_empty()
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn get(&self, v: usize) -> Option<&SpringElement> {
        self.springs.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &SpringElement)> {
        self.springs.iter()
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.springs.keys().copied().collect()
    }

    pub fn insert(&mut self, spring: SpringElement) {
        if self.springs.insert(spring.record.vertex, spring).is_none() {
            self.stamp += 1;
        }
    }

    pub fn remove(&mut self, v: usize) -> Option<SpringElement> {
        let s = self.springs.remove(&v);
        if s.is_some() {
            self.stamp += 1;
        }
        s
    }

    pub fn clear(&mut self) {
        if !self.springs.is_empty() {
            self.springs.clear();
            self.stamp += 1;
        }
    }

    pub fn energy(&self, positions: &[Vec3]) -> f64 {
        self.springs.values().map(|s| s.energy(&positions[s.record.vertex])).sum::<f64>() + 0.0
    }
}

/// Creates springs for new collisions, retargets the rest from the current
/// geometry and releases those whose vertex is outside the collided region
/// with normal clearance beyond the contact offset. A spring whose vertex is
/// still colliding is stiffened by [`STIFFNESS_GROWTH`], up to
/// [`MAX_STIFFNESS_FACTOR`] times `stiffness`.
pub fn update_springs(
    springs: &mut SpringSet,
    collisions: &[Collision],
    world: &CollisionWorld,
    mesh: &TetMesh,
    stiffness: f64,
) -> Result<SpringUpdate, CollisionError> {
    let fresh = world.records(mesh, collisions)?;
    let current: BTreeSet<usize> = fresh.iter().map(|r| r.vertex).collect();

    let lingering: Vec<(usize, CollisionKind)> =
        springs.springs.iter().filter(|(v, _)| !current.contains(v)).map(|(&v, s)| (v, s.record.kind)).collect();
    let retargeted: Vec<CollisionRecord> = lingering
        .par_iter()
        .map(|&(v, kind)| match kind {
            CollisionKind::SelfCollision => world.self_closest_correspondence(mesh, v),
            CollisionKind::ObstacleContact(o) => Ok(world.obstacle_correspondence(mesh, v, o)),
        })
        .collect::<Result<_, _>>()?;

    let mut update = SpringUpdate::default();
    let cap = stiffness * MAX_STIFFNESS_FACTOR;
    for record in fresh {
        match springs.springs.get_mut(&record.vertex) {
            Some(s) => {
                s.record = record;
                let grown = (s.stiffness * STIFFNESS_GROWTH).min(cap);
                if grown != s.stiffness {
                    s.stiffness = grown;
                    update.stiffened += 1;
                }
                update.retargeted += 1;
            }
            None => {
                springs.insert(SpringElement { record, stiffness, active: true });
                update.created.push(record.vertex);
            }
        }
    }
    let eps = world.config.contact_offset;
    let mut release = BTreeSet::new();
    for record in retargeted {
        let v = record.vertex;
        if record.clearance(&mesh.positions[v]).abs() > eps {
            release.insert(v);
        } else if let Some(s) = springs.springs.get_mut(&v) {
            s.record = record;
            update.retargeted += 1;
        }
    }
    if update.stiffened > 0 {
        springs.stamp += 1;
    }
    for v in release {
        springs.remove(v);
        update.released.push(v);
    }
    Ok(update)
}
