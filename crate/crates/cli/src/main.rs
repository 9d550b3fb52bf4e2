use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use softsim::collision::{bench_bvh, CollisionConfig, CollisionKind, CollisionWorld, Obstacle};
use softsim::io::config::parse_override;
use softsim::io::{self, IoError, SimulationConfig};
use softsim::mesh::{extract_boundary, region_volume, Configuration};
use softsim::remesh::{BuiltinRemesher, ExternalTessellator, Remesher, TessellatorRemesher};
use softsim::{Error, Region, RegionFilter, SolverError};

#[derive(Debug, Parser)]
#[command(name = "softsim", version, about = "Collision-aware soft robot simulation on tet meshes")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Worker threads; defaults to the available parallelism. Use 1 for
    /// reproducible timings.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log per-stage progress (repeat for per-iteration detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation and write frames, metrics.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Config override as dot.path=value, e.g. solver.iMax=50.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory, replacing output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a tet mesh (.node/.ele/.vtk) or a closed surface (.obj).
    Validate {
        path: PathBuf,
    },
    /// One-shot collision detection on a tet mesh.
    Detect {
        mesh: PathBuf,
        #[arg(long = "obstacle")]
        obstacles: Vec<PathBuf>,
        #[arg(long, default_value_t = CollisionConfig::default().contact_offset)]
        contact_offset: f64,
        #[arg(long, default_value_t = CollisionConfig::default().exclusion_rings)]
        exclusion_rings: usize,
    },
    /// Time tree build, refit and query on random tet soups.
    BenchBvh {
        #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
        sizes: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Simulate { config, overrides, out } => simulate(&config, &overrides, out),
        Command::Validate { path } => validate(&path),
        Command::Detect { mesh, obstacles, contact_offset, exclusion_rings } => {
            detect(&mesh, &obstacles, CollisionConfig { contact_offset, exclusion_rings, ..Default::default() })
        }
        Command::BenchBvh { sizes, seed } => bench(&sizes, seed),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn simulate(config_path: &Path, overrides: &[String], out: Option<PathBuf>) -> Result<u8, Error> {
    let overrides = overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let mut config = SimulationConfig::from_path(config_path, &overrides)?;
    if let Some(dir) = out {
        config.output.directory = dir;
    }
    let scene = config.load_scene()?;
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir).map_err(|source| IoError::Io { path: dir.display().to_string(), source })?;

    let mut remesher: Box<dyn Remesher> = match &config.tessellator {
        Some(t) => Box::new(TessellatorRemesher(ExternalTessellator::from(t))),
        None => Box::new(BuiltinRemesher),
    };
    let start = Instant::now();
    let result =
        softsim::run_simulation(scene.mesh, scene.obstacles, config.total_ratio, scene.curve, config.solver.clone(), remesher.as_mut())?;
    let seconds = start.elapsed().as_secs_f64();

    for (k, frame) in result.frames.iter().enumerate() {
        io::write_frame(&dir, k, frame, config.output.frame_format)?;
    }
    io::write_surface(&dir, "final_body", &result.final_surface)?;
    io::write_metrics(&dir.join("metrics.csv"), &result.reports)?;

    let not_converged = result.check_converged().err();
    let stages: Vec<_> = result
        .stages
        .iter()
        .map(|s| {
            json!({
                "stage": s.stage,
                "targetRatio": s.target_ratio,
                "achievedRatio": s.achieved_ratio,
                "rounds": s.rounds,
                "iterations": s.iterations,
                "converged": s.converged,
                "triggers": s.triggers,
                "remeshed": s.remeshed,
                "residualSprings": s.residual_springs,
            })
        })
        .collect();
    let summary = json!({
        "finalRatio": result.final_ratio(),
        "targetRatio": config.total_ratio,
        "residualSprings": result.residual_springs(),
        "converged": result.converged,
        "frames": result.frames.len(),
        "iterations": result.reports.len(),
        "tets": result.mesh.num_tets(),
        "seconds": seconds,
        "failure": result.failure.as_ref().map(|e| e.to_string()),
        "stages": stages,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let path = dir.join("summary.json");
    std::fs::write(&path, format!("{text}\n")).map_err(|source| IoError::Io { path: path.display().to_string(), source })?;

    println!("final chamber ratio {:.6} (target {})", result.final_ratio(), config.total_ratio);
    println!("residual springs {}", result.residual_springs());
    for s in &result.stages {
        println!(
            "stage {}: ratio {:.6}/{:.6}, {} rounds, {} iterations, converged {}, remeshed {}",
            s.stage, s.achieved_ratio, s.target_ratio, s.rounds, s.iterations, s.converged, s.remeshed
        );
    }
    println!("wrote {} frames to {}", result.frames.len(), dir.display());

    if let Some(e) = result.failure {
        return Err(Error::Solver(e));
    }
    match not_converged {
        Some(e @ SolverError::NotConverged { .. }) => {
            eprintln!("warning: solver: {e}");
            Ok(2)
        }
        _ => Ok(0),
    }
}

fn report(pass: bool, name: &str, detail: &str) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    if detail.is_empty() {
        println!("{tag} {name}");
    } else {
        println!("{tag} {name}: {detail}");
    }
    pass
}

fn validate(path: &Path) -> Result<u8, Error> {
    if path.extension().and_then(|e| e.to_str()) == Some("obj") {
        let surface = match io::obj::read_obj(path) {
            Ok(s) => s,
            Err(e) => {
                report(false, "parse", &e.to_string());
                return Ok(1);
            }
        };
        let mut ok = report(surface.is_watertight(), "watertight", "");
        ok &= report(surface.is_consistently_oriented(), "oriented", "");
        let volume = surface.enclosed_volume();
        ok &= report(volume != 0.0, "enclosed-volume", &format!("{volume:.6e}"));
        println!("{} vertices, {} triangles", surface.positions.len(), surface.triangles.len());
        return Ok(if ok { 0 } else { 1 });
    }

    let (mut mesh, has_regions) = match io::read_tet_mesh_raw(path) {
        Ok(m) => m,
        Err(e) => {
            report(false, "parse", &e.to_string());
            return Ok(1);
        }
    };
    let flipped = io::fix_orientation(&mut mesh);
    if flipped > 0 {
        println!("note: {flipped} tets were negatively oriented and are flipped on load");
    }
    let mut ok = true;
    for check in mesh.checks() {
        ok &= match check.result {
            Ok(()) => report(true, check.name, ""),
            Err(e) => report(false, check.name, &e.to_string()),
        };
    }
    if ok {
        let boundary = extract_boundary(&mesh, RegionFilter::All);
        ok &= report(boundary.is_watertight(), "watertight", &format!("{} boundary triangles", boundary.triangles.len()));
        for region in [Region::Body, Region::Chamber] {
            let filter = RegionFilter::Only(region);
            println!(
                "{:?}: {} tets, rest volume {:.6e}",
                region,
                mesh.tets_in(filter).count(),
                region_volume(&mesh, filter, Configuration::Rest)
            );
        }
    }
    println!(
        "{} vertices, {} tets, region tags {}",
        mesh.num_vertices(),
        mesh.num_tets(),
        if has_regions { "from file" } else { "absent (all body)" }
    );
    Ok(if ok { 0 } else { 1 })
}

fn detect(mesh_path: &Path, obstacle_paths: &[PathBuf], config: CollisionConfig) -> Result<u8, Error> {
    let mesh = io::load_tet_mesh(mesh_path)?.mesh;
    let mut obstacles = Vec::with_capacity(obstacle_paths.len());
    for p in obstacle_paths {
        let surface = io::load_obstacle_surface(p)?;
        obstacles.push(Obstacle::new(surface).map_err(|source| IoError::Obstacle { path: p.display().to_string(), source })?);
    }
    let t0 = Instant::now();
    let world = CollisionWorld::new(&mesh, obstacles, config)?;
    let build = t0.elapsed();
    let t1 = Instant::now();
    let detection = world.detect(&mesh);
    let elapsed = t1.elapsed();
    let records = world.records(&mesh, &detection.collisions)?;
    for r in &records {
        let kind = match r.kind {
            CollisionKind::SelfCollision => "self".to_string(),
            CollisionKind::ObstacleContact(o) => format!("obstacle {o}"),
        };
        let c = r.correspondence;
        println!(
            "vertex {} {kind}: correspondence [{:.6}, {:.6}, {:.6}] depth {:.6e}",
            r.vertex,
            c.x,
            c.y,
            c.z,
            -r.clearance(&mesh.positions[r.vertex])
        );
    }
    println!("{} colliding vertices among {} tets", records.len(), mesh.num_tets());
    println!("tree build {:.3} ms", build.as_secs_f64() * 1e3);
    println!("detection {:.3} ms", elapsed.as_secs_f64() * 1e3);
    Ok(0)
}

fn bench(sizes: &[u64], seed: u64) -> Result<u8, Error> {
    println!("{:>9} {:>10} {:>10} {:>10} {:>12} {:>7} {:>10}", "tets", "build_ms", "refit_ms", "query_ms", "node_visits", "growth", "colliding");
    let mut previous: Option<(u64, usize)> = None;
    for &n in sizes {
        let row = bench_bvh(n as usize, seed)?;
        // Node-visit growth normalised to one size doubling.
        let growth = match previous {
            Some((m, v)) if m != n => format!("{:.3}", (row.node_visits as f64 / v as f64).powf(1.0 / (n as f64 / m as f64).log2())),
            _ => "-".to_string(),
        };
        println!(
            "{:>9} {:>10.3} {:>10.3} {:>10.3} {:>12} {:>7} {:>10}",
            row.tets,
            row.build_seconds * 1e3,
            row.refit_seconds * 1e3,
            row.query_seconds * 1e3,
            row.node_visits,
            growth,
            row.collisions
        );
        previous = Some((n, row.node_visits));
    }
    Ok(0)
}
