//! Collision-aware local/global solver and the progressive actuation loop.

pub mod anderson;
pub mod global;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{update_springs, CollisionConfig, CollisionError, CollisionWorld, Obstacle, SpringSet, SurfaceSet};
use crate::geometry::{tet_volume, Vec3};
use crate::material::StiffnessCurve;
use crate::mesh::{extract_boundary, region_volume, Configuration, MeshError, Region, RegionFilter, SurfaceMesh, TetMesh};
use crate::projection::{element_weights, local_step, total_energy, LocalTargets};
use crate::remesh::{rebirth_chamber, reference_volumes, scan_triggers, Remesher};

pub use anderson::{anderson_extrapolate, Anderson};
pub use global::GlobalSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("global system is singular: vertex component {component} has no fixed vertex and no spring")]
    SingularSystem { component: usize },
    #[error("sparse factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("anderson history is rank deficient")]
    RankDeficientHistory,
    #[error("stage {stage} did not converge within {iterations} iterations")]
    NotConverged { stage: usize, iterations: usize },
    #[error("total actuation ratio must be finite and at least 1, got {0}")]
    InvalidRatio(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error("remeshing failed in stage {stage}: {message}")]
    RemeshFailure { stage: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct SolverConfig {
    /// Inner iteration cap per actuation round.
    pub i_max: usize,
    /// Max vertex displacement per iteration, relative to the bbox diagonal.
    pub convergence_tol: f64,
    /// Anderson history depth; 0 disables acceleration.
    pub anderson_depth: usize,
    pub contact_offset: f64,
    /// Per-stage actuation ratio and remesh volume threshold.
    pub alpha_max: f64,
    pub d_max: f64,
    /// Spring stiffness relative to the mean body element weight.
    pub spring_scale: f64,
    pub exclusion_rings: usize,
    pub surface_set: SurfaceSet,
    /// Relative chamber-volume error accepted at the end of a stage.
    pub actuation_tolerance: f64,
    pub max_actuation_rounds: usize,
    pub remesh: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            i_max: 1000,
            convergence_tol: 1e-5,
            anderson_depth: 5,
            contact_offset: 1e-3,
            alpha_max: 4.0,
            d_max: 4.0,
            spring_scale: 10.0,
            exclusion_rings: 2,
            surface_set: SurfaceSet::AllBoundary,
            actuation_tolerance: 1e-3,
            max_actuation_rounds: 30,
            remesh: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::InvalidConfig(what.to_string()));
        if self.i_max < 1 {
            return bad("iMax must be at least 1");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergenceTol must be positive");
        }
        if !(self.contact_offset > 0.0) {
            return bad("contactOffset must be positive");
        }
        if !(self.alpha_max > 1.0) {
            return bad("alphaMax must exceed 1");
        }
        if !(self.d_max > 1.0) {
            return bad("dMax must exceed 1");
        }
        if !(self.spring_scale > 0.0) || !self.spring_scale.is_finite() {
            return bad("springScale must be positive");
        }
        if !(self.actuation_tolerance > 0.0) {
            return bad("actuationTolerance must be positive");
        }
        if self.max_actuation_rounds < 1 {
            return bad("maxActuationRounds must be at least 1");
        }
        Ok(())
    }

    pub fn collision(&self) -> CollisionConfig {
        CollisionConfig { contact_offset: self.contact_offset, exclusion_rings: self.exclusion_rings, surface_set: self.surface_set }
    }
}

/// One inner iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub stage: usize,
    pub round: usize,
    pub iteration: usize,
    pub elastic_energy: f64,
    pub spring_energy: f64,
    pub active_springs: usize,
    pub max_displacement: f64,
    pub collisions: usize,
    pub anderson_accepted: bool,
    /// The spring set changed or the extrapolation was rejected, so the
    /// energy sequence restarts here.
    pub restart: bool,
    pub detect_seconds: f64,
    pub response_seconds: f64,
    pub solve_seconds: f64,
}

impl IterationReport {
    pub fn energy(&self) -> f64 {
        self.elastic_energy + self.spring_energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub stage: usize,
    pub target_ratio: f64,
    pub achieved_ratio: f64,
    pub rounds: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Chamber tets over a remesh threshold after the stage.
    pub triggers: usize,
    pub remeshed: bool,
    pub residual_springs: usize,
}

/// Cumulative stage targets `min(alpha, k * alpha_max)`.
pub fn stage_schedule(total_ratio: f64, alpha_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1.0;
    loop {
        let a = total_ratio.min(k * alpha_max);
        out.push(a);
        if a >= total_ratio {
            return out;
        }
        k += 1.0;
    }
}

/// Solver state for one mesh.
pub struct Solver {
    pub mesh: TetMesh,
    pub config: SolverConfig,
    pub curve: StiffnessCurve,
    pub world: CollisionWorld,
    pub springs: SpringSet,
    system: GlobalSystem,
    weights: Vec<f64>,
    stiffness: f64,
    anderson: Anderson,
    /// Chamber rest volume of the original mesh.
    chamber_rest_volume: f64,
    /// Chamber volume ratio at which each tet's rest shape was taken.
    birth_ratio: Vec<f64>,
    pub reports: Vec<IterationReport>,
    stage: usize,
    round: usize,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver").field("tets", &self.mesh.num_tets()).field("springs", &self.springs.len()).finish()
    }
}

impl Solver {
    pub fn new(mesh: TetMesh, obstacles: Vec<Obstacle>, curve: StiffnessCurve, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        mesh.validate()?;
        let world = CollisionWorld::new(&mesh, obstacles, config.collision())?;
        let weights = element_weights(&mesh);
        let springs = SpringSet::new();
        let system = GlobalSystem::assemble(&mesh, &weights, &springs)?;
        let stiffness = spring_stiffness(&mesh, &weights, config.spring_scale);
        let chamber_rest_volume = region_volume(&mesh, RegionFilter::Only(Region::Chamber), Configuration::Rest);
        let birth_ratio = vec![1.0; mesh.num_tets()];
        Ok(Solver {
            anderson: Anderson::new(config.anderson_depth),
            mesh,
            config,
            curve,
            world,
            springs,
            system,
            weights,
            stiffness,
            chamber_rest_volume,
            birth_ratio,
            reports: Vec::new(),
            stage: 0,
            round: 0,
        })
    }

    pub fn spring_stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn system(&self) -> &GlobalSystem {
        &self.system
    }

    /// Current chamber volume over the original chamber rest volume.
    pub fn chamber_ratio(&self) -> f64 {
        if self.chamber_rest_volume > 0.0 {
            region_volume(&self.mesh, RegionFilter::Only(Region::Chamber), Configuration::Deformed) / self.chamber_rest_volume
        } else {
            1.0
        }
    }

    /// Per-tet ratios that drive the chamber toward cumulative ratio `alpha`.
    pub fn chamber_ratios(&self, alpha: f64) -> Vec<f64> {
        self.birth_ratio.iter().map(|b| alpha / b).collect()
    }

    fn targets(&self, positions: &[Vec3], ratios: &[f64]) -> LocalTargets {
        if positions.as_ptr() == self.mesh.positions.as_ptr() {
            return local_step(&self.mesh, &self.weights, ratios, &self.curve, &self.springs);
        }
        let mut probe = self.mesh.clone();
        probe.positions = positions.to_vec();
        local_step(&probe, &self.weights, ratios, &self.curve, &self.springs)
    }

    /// Iterates local step, spring update and global step at fixed chamber
    /// ratios until no vertex is colliding and the largest vertex move is
    /// below tolerance. Springs still active at that point are released.
    pub fn inner_loop(&mut self, ratios: &[f64]) -> Result<InnerOutcome, SolverError> {
        let diag = self.mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
        let tol = self.config.convergence_tol;
        self.anderson.reset();
        let mut cached: Option<LocalTargets> = None;
        // Energy of the current iterate; infinite after a restart.
        let mut current_energy = f64::INFINITY;
        for it in 0..self.config.i_max {
            let t0 = Instant::now();
            self.world.refit(&self.mesh)?;
            let detection = self.world.detect(&self.mesh);
            let t1 = Instant::now();
            update_springs(&mut self.springs, &detection.collisions, &self.world, &self.mesh, self.stiffness)?;
            let mut restart = false;
            if self.system.sync_springs(&self.mesh, &self.springs)? {
                self.anderson.reset();
                restart = true;
                current_energy = f64::INFINITY;
            }
            let t2 = Instant::now();

            let mut targets = match cached.take() {
                Some(mut t) => {
                    t.springs = spring_targets(&self.springs);
                    t
                }
                None => self.targets(&self.mesh.positions, ratios),
            };
            targets.springs = spring_targets(&self.springs);
            let g = self.system.solve(&self.mesh.positions, &targets);
            let x_vec = flatten(&self.mesh.positions);
            let g_vec = flatten(&g);
            let g_targets = self.targets(&g, ratios);
            let g_energy = total_energy(&self.mesh, &g, &g_targets);
            let mut next = g;
            let mut next_targets = g_targets;
            let mut next_energy = g_energy;
            let mut accepted = false;
            if let Some(c) = self.anderson.step(&x_vec, &g_vec) {
                let c = unflatten(&c);
                let c_targets = self.targets(&c, ratios);
                let c_energy = total_energy(&self.mesh, &c, &c_targets);
                // The extrapolation must beat the plain update and must not
                // raise the energy of the current iterate.
                if c_energy <= g_energy && c_energy <= current_energy {
                    next = c;
                    next_targets = c_targets;
                    next_energy = c_energy;
                    accepted = true;
                } else {
                    self.anderson.restart_from(&x_vec, &g_vec);
                    restart = true;
                }
            }
            let t3 = Instant::now();

            let disp = self.mesh.positions.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / diag;
            self.mesh.positions = next;
            let spring_e = crate::projection::spring_energy(&self.mesh.positions, &next_targets);
            self.reports.push(IterationReport {
                stage: self.stage,
                round: self.round,
                iteration: it,
                elastic_energy: next_energy - spring_e,
                spring_energy: spring_e,
                active_springs: self.springs.len(),
                max_displacement: disp,
                collisions: detection.vertices().len(),
                anderson_accepted: accepted,
                restart,
                detect_seconds: (t1 - t0).as_secs_f64(),
                response_seconds: (t2 - t1).as_secs_f64(),
                solve_seconds: (t3 - t2).as_secs_f64(),
            });
            cached = Some(next_targets);
            current_energy = next_energy;

            if disp < tol {
                self.world.refit(&self.mesh)?;
                if self.world.detect(&self.mesh).collisions.is_empty() {
                    self.release_springs()?;
                    return Ok(InnerOutcome { iterations: it + 1, converged: true });
                }
            }
        }
        log::warn!("stage {} round {}: no convergence in {} iterations", self.stage, self.round, self.config.i_max);
        Ok(InnerOutcome { iterations: self.config.i_max, converged: false })
    }

    fn release_springs(&mut self) -> Result<(), SolverError> {
        if !self.springs.is_empty() {
            self.springs.clear();
            self.system.sync_springs(&self.mesh, &self.springs)?;
        }
        Ok(())
    }

    /// Runs inner loops until the chamber reaches `alpha` times its original
    /// rest volume within the actuation tolerance. The element target ratio
    /// is corrected between rounds because the body resists the chamber.
    /// Returns the summary and the correction factor reached.
    pub fn actuate(&mut self, alpha: f64, correction: f64) -> Result<(StageSummary, f64), SolverError> {
        let has_chamber = self.chamber_rest_volume > 0.0;
        let mut effective = alpha * correction;
        let mut previous: Option<(f64, f64)> = None;
        let mut rounds = 0;
        let mut iterations = 0;
        let mut converged;
        loop {
            self.round = rounds;
            let ratios = self.chamber_ratios(effective);
            let outcome = self.inner_loop(&ratios)?;
            rounds += 1;
            iterations += outcome.iterations;
            converged = outcome.converged;
            if !has_chamber {
                break;
            }
            let rho = self.chamber_ratio();
            if (rho - alpha).abs() / alpha <= self.config.actuation_tolerance || rounds >= self.config.max_actuation_rounds {
                break;
            }
            // Secant step on log(rho) against log(effective).
            let multiplicative = effective * alpha / rho;
            let mut next = multiplicative;
            if let Some((e0, r0)) = previous {
                let slope = (rho.ln() - r0.ln()) / (effective.ln() - e0.ln());
                if slope.is_finite() && slope > 0.05 {
                    let candidate = (effective.ln() + (alpha.ln() - rho.ln()) / slope).exp();
                    if candidate.is_finite() && candidate > 0.0 {
                        next = candidate;
                    }
                }
            }
            previous = Some((effective, rho));
            effective = next.clamp(effective / 4.0, effective * 4.0);
        }
        let achieved = self.chamber_ratio();
        let summary = StageSummary {
            stage: self.stage,
            target_ratio: alpha,
            achieved_ratio: achieved,
            rounds,
            iterations,
            converged,
            triggers: 0,
            remeshed: false,
            residual_springs: self.springs.len(),
        };
        Ok((summary, effective / alpha))
    }

    /// Replaces the chamber after remeshing. All chamber tets are reborn at
    /// their current shape; collision structures and the global system are
    /// rebuilt.
    pub fn replace_mesh(&mut self, mut mesh: TetMesh) -> Result<(), SolverError> {
        let rho = self.chamber_ratio_of(&mesh);
        rebirth_chamber(&mut mesh);
        self.birth_ratio = mesh.regions.iter().map(|r| if *r == Region::Chamber { rho } else { 1.0 }).collect();
        self.weights = element_weights(&mesh);
        self.stiffness = spring_stiffness(&mesh, &self.weights, self.config.spring_scale);
        self.springs.clear();
        self.world.rebuild(&mesh)?;
        self.system = GlobalSystem::assemble(&mesh, &self.weights, &self.springs)?;
        self.anderson.reset();
        self.mesh = mesh;
        Ok(())
    }

    fn chamber_ratio_of(&self, mesh: &TetMesh) -> f64 {
        if self.chamber_rest_volume > 0.0 {
            region_volume(mesh, RegionFilter::Only(Region::Chamber), Configuration::Deformed) / self.chamber_rest_volume
        } else {
            1.0
        }
    }

    /// Remesh triggers against the current per-tet reference volumes.
    pub fn triggers(&self) -> Vec<crate::remesh::RemeshTrigger> {
        scan_triggers(&self.mesh, &reference_volumes(&self.mesh), self.config.alpha_max, self.config.d_max)
    }
}

fn spring_targets(springs: &SpringSet) -> Vec<(usize, Vec3, f64)> {
    springs.iter().filter(|(_, s)| s.active).map(|(&v, s)| (v, s.target(), s.stiffness)).collect()
}

/// `spring_scale` times the mean body element weight, or the mean of all
/// weights when there is no body.
fn spring_stiffness(mesh: &TetMesh, weights: &[f64], scale: f64) -> f64 {
    let body: Vec<f64> = mesh.tets_in(RegionFilter::Only(Region::Body)).map(|t| weights[t]).collect();
    let pool: &[f64] = if body.is_empty() { weights } else { &body };
    if pool.is_empty() {
        return scale;
    }
    scale * pool.iter().sum::<f64>() / pool.len() as f64
}

pub(crate) fn flatten(p: &[Vec3]) -> DVector<f64> {
    DVector::from_iterator(3 * p.len(), p.iter().flat_map(|v| [v.x, v.y, v.z]))
}

pub(crate) fn unflatten(x: &DVector<f64>) -> Vec<Vec3> {
    x.as_slice().chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub mesh: TetMesh,
    /// Mesh state after each stage.
    pub frames: Vec<TetMesh>,
    /// Body boundary at the end.
    pub final_surface: SurfaceMesh,
    pub reports: Vec<IterationReport>,
    pub stages: Vec<StageSummary>,
    pub converged: bool,
    /// Set when remeshing failed; the frames up to that stage are kept.
    pub failure: Option<SolverError>,
}

impl SimulationResult {
    pub fn final_ratio(&self) -> f64 {
        self.stages.last().map_or(1.0, |s| s.achieved_ratio)
    }

    pub fn residual_springs(&self) -> usize {
        self.stages.last().map_or(0, |s| s.residual_springs)
    }

    /// `Err(NotConverged)` for the first stage that hit the iteration cap.
    pub fn check_converged(&self) -> Result<(), SolverError> {
        match self.stages.iter().find(|s| !s.converged) {
            Some(s) => Err(SolverError::NotConverged { stage: s.stage, iterations: s.iterations }),
            None => Ok(()),
        }
    }
}

/// Progressive actuation to `total_ratio` in stages of at most `alpha_max`,
/// remeshing the chamber between stages where elements are over-stretched.
pub fn run_simulation(
    mesh: TetMesh,
    obstacles: Vec<Obstacle>,
    total_ratio: f64,
    curve: StiffnessCurve,
    config: SolverConfig,
    remesher: &mut dyn Remesher,
) -> Result<SimulationResult, SolverError> {
    if !(total_ratio >= 1.0) || !total_ratio.is_finite() {
        return Err(SolverError::InvalidRatio(total_ratio));
    }
    let mut solver = Solver::new(mesh, obstacles, curve, config)?;
    let mut frames = Vec::new();
    let mut stages = Vec::new();
    let mut correction = 1.0;
    let mut failure = None;
    for (k, alpha) in stage_schedule(total_ratio, solver.config.alpha_max).into_iter().enumerate() {
        solver.stage = k;
        let (mut summary, c) = solver.actuate(alpha, correction)?;
        correction = c;
        frames.push(solver.mesh.clone());
        let triggers = solver.triggers();
        summary.triggers = triggers.len();
        let last = alpha >= total_ratio;
        if !triggers.is_empty() && solver.config.remesh && !last {
            match remesher.remesh(&solver.mesh, &triggers) {
                Ok(m) => {
                    solver.replace_mesh(m)?;
                    summary.remeshed = true;
                }
                Err(e) => {
                    failure = Some(SolverError::RemeshFailure { stage: k, message: e.to_string() });
                    stages.push(summary);
                    break;
                }
            }
        }
        log::info!(
            "stage {k}: target {:.4} reached {:.4} in {} rounds, {} iterations",
            summary.target_ratio,
            summary.achieved_ratio,
            summary.rounds,
            summary.iterations
        );
        stages.push(summary);
    }
    let converged = failure.is_none() && stages.iter().all(|s| s.converged);
    Ok(SimulationResult {
        final_surface: extract_boundary(&solver.mesh, RegionFilter::Only(Region::Body)),
        mesh: solver.mesh,
        frames,
        reports: solver.reports,
        stages,
        converged,
        failure,
    })
}

/// Smallest and largest chamber tet volume ratio against the rest shapes.
pub fn chamber_ratio_spread(mesh: &TetMesh) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for t in mesh.tets_in(RegionFilter::Only(Region::Chamber)) {
        let r = tet_volume(&mesh.deformed_shape(t)) / tet_volume(&mesh.rest_shapes[t]);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::remesh::BuiltinRemesher;

    #[test]
    fn schedule_arithmetic() {
        assert_eq!(stage_schedule(1.0, 4.0), vec![1.0]);
        assert_eq!(stage_schedule(10.0, 4.0), vec![4.0, 8.0, 10.0]);
        assert_eq!(stage_schedule(8.0, 4.0), vec![4.0, 8.0]);
        assert_eq!(stage_schedule(2.0, 4.0), vec![2.0]);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = SolverConfig::default();
        c.validate().unwrap();
        assert_eq!(c.alpha_max, 4.0);
        assert_eq!(c.d_max, 4.0);
        let bad = SolverConfig { alpha_max: 1.0, ..c.clone() };
        assert!(matches!(bad.validate(), Err(SolverError::InvalidConfig(_))));
        let bad = SolverConfig { i_max: 0, ..c.clone() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { convergence_tol: 0.0, ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok: SolverConfig = serde_json::from_str(r#"{"iMax": 10, "alphaMax": 3.5}"#).unwrap();
        assert_eq!(ok.i_max, 10);
        assert_eq!(ok.alpha_max, 3.5);
        assert_eq!(ok.anderson_depth, 5);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"alphaMaks": 3.5}"#).is_err());
    }

    #[test]
    fn no_actuation_terminates_in_one_iteration() {
        let mesh = fixtures::inflated_cube(3);
        let mut s = Solver::new(mesh.clone(), vec![], StiffnessCurve::default(), SolverConfig::default()).unwrap();
        let ratios = s.chamber_ratios(1.0);
        let out = s.inner_loop(&ratios).unwrap();
        assert_eq!(out, InnerOutcome { iterations: 1, converged: true });
        assert!(s.reports[0].max_displacement < 1e-12);
        for (a, b) in s.mesh.positions.iter().zip(&mesh.positions) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_ratio_returns_the_input() {
        let mesh = fixtures::inflated_cube(3);
        let r = run_simulation(mesh.clone(), vec![], 1.0, StiffnessCurve::default(), SolverConfig::default(), &mut BuiltinRemesher).unwrap();
        assert!(r.converged);
        assert_eq!(r.frames.len(), 1);
        let input = extract_boundary(&mesh, RegionFilter::All);
        let frame = extract_boundary(&r.frames[0], RegionFilter::All);
        assert_eq!(frame.triangles, input.triangles);
        for (a, b) in frame.positions.iter().zip(&input.positions) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn invalid_ratio_is_rejected() {
        let mesh = fixtures::inflated_cube(2);
        let r = run_simulation(mesh, vec![], 0.5, StiffnessCurve::default(), SolverConfig::default(), &mut BuiltinRemesher);
        assert_eq!(r.unwrap_err(), SolverError::InvalidRatio(0.5));
    }

    #[test]
    fn iteration_cap_sets_the_flag() {
        let mesh = fixtures::inflated_cube(3);
        let config = SolverConfig { i_max: 1, max_actuation_rounds: 1, ..SolverConfig::default() };
        let r = run_simulation(mesh, vec![], 2.0, StiffnessCurve::default(), config, &mut BuiltinRemesher).unwrap();
        assert!(!r.converged);
        assert!(matches!(r.check_converged(), Err(SolverError::NotConverged { stage: 0, .. })));
    }

    #[test]
    fn inflation_reaches_the_target_ratio() {
        let mesh = fixtures::inflated_cube(4);
        let r = run_simulation(mesh, vec![], 1.5, StiffnessCurve::default(), SolverConfig::default(), &mut BuiltinRemesher).unwrap();
        assert!(r.converged);
        assert!((r.final_ratio() - 1.5).abs() / 1.5 <= 1e-3, "ratio {}", r.final_ratio());
    }
}
