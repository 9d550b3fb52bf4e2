use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use softsim::fixtures;
use softsim::io::{obj, tetgen};
use softsim::mesh::{extract_boundary, Configuration};
use softsim::{RegionFilter, TetMesh, Vec3};

fn softsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softsim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_mesh(dir: &Path, name: &str, mesh: &TetMesh) -> PathBuf {
    tetgen::write_tetgen(&dir.join(format!("{name}.node")), &dir.join(format!("{name}.ele")), mesh, Configuration::Rest).unwrap();
    dir.join(format!("{name}.node"))
}

fn write_config(dir: &Path, mesh: &str, ratio: f64) -> PathBuf {
    let config = json!({
        "version": 1,
        "mesh": mesh,
        "fixed": { "box": { "min": [-0.01, -0.01, -0.01], "max": [100.0, 100.0, 0.01] } },
        "totalRatio": ratio,
        "output": { "directory": "out" }
    });
    let p = dir.join("config.json");
    std::fs::write(&p, config.to_string()).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unit_ratio_writes_the_input_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixtures::inflated_cube(4);
    write_mesh(dir.path(), "cube", &mesh);
    let config = write_config(dir.path(), "cube.node", 1.0);
    let out = dir.path().join("run");
    let o = softsim(&["simulate", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let frames: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("frame_"))
        .collect();
    assert_eq!(frames.len(), 1);
    let frame = obj::read_obj(&out.join("frame_0000.obj")).unwrap();
    let want = extract_boundary(&mesh, RegionFilter::All);
    assert_eq!(frame.triangles, want.triangles);
    let err = frame.positions.iter().zip(&want.positions).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    assert!(out.join("metrics.csv").exists());
    assert_eq!(summary(&out)["converged"], json!(true));
}

#[test]
fn missing_mesh_is_an_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "absent.node", 2.0);
    let o = softsim(&["simulate", "--config", s(&config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.node"), "{}", stderr(&o));
}

#[test]
fn two_beams_scenario_leaves_no_springs() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(dir.path(), "beams", &fixtures::two_beams(0.3));
    let config = write_config(dir.path(), "beams.node", 3.0);
    let out = dir.path().join("run");
    let o = softsim(&["simulate", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sum = summary(&out);
    assert_eq!(sum["residualSprings"], json!(0));
    assert!((sum["finalRatio"].as_f64().unwrap() - 3.0).abs() < 0.03);
    assert!(stdout(&o).contains("residual springs 0"));
}

#[test]
fn iteration_cap_exits_with_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(dir.path(), "cube", &fixtures::inflated_cube(4));
    let config = write_config(dir.path(), "cube.node", 2.0);
    let out = dir.path().join("run");
    let o = softsim(&["simulate", "--config", s(&config), "--out", s(&out), "--set", "solver.iMax=2", "--set", "solver.maxActuationRounds=1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(summary(&out)["converged"], json!(false));
}

#[test]
fn every_solver_field_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(dir.path(), "cube", &fixtures::inflated_cube(3));
    let config = write_config(dir.path(), "cube.node", 1.5);
    let sets = [
        "solver.iMax=400",
        "solver.convergenceTol=1e-6",
        "solver.andersonDepth=3",
        "solver.contactOffset=0.005",
        "solver.alphaMax=2.0",
        "solver.dMax=3.5",
        "solver.springScale=2.0",
        "solver.exclusionRings=1",
        "solver.surfaceSet=chamber-only",
        "solver.actuationTolerance=0.02",
        "solver.maxActuationRounds=4",
        "solver.remesh=false",
    ];
    let mut args = vec!["simulate", "--config", s(&config)];
    let out = dir.path().join("run");
    args.extend(["--out", s(&out)]);
    for kv in &sets {
        args.extend(["--set", kv]);
    }
    let o = softsim(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = softsim(&["simulate", "--config", s(&config), "--set", "solver.iMaks=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("iMaks"), "{}", stderr(&o));
}

#[test]
fn single_thread_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(dir.path(), "beams", &fixtures::two_beams(0.3));
    let config = write_config(dir.path(), "beams.node", 2.5);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = softsim(&["--threads", "1", "simulate", "--config", s(&config), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut names: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.retain(|n| n.to_string_lossy().ends_with(".obj"));
        names.sort();
        names.iter().map(|n| std::fs::read(out.join(n)).unwrap()).collect::<Vec<_>>()
    };
    let (a, b) = (run("a"), run("b"));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn validate_reports_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_mesh(dir.path(), "good", &fixtures::inflated_cube(3));
    let o = softsim(&["validate", s(&good)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS watertight"));

    let mut dup = fixtures::inflated_cube(3);
    dup.tets.push(dup.tets[0]);
    dup.regions.push(dup.regions[0]);
    let bad = write_mesh(dir.path(), "dup", &dup);
    let o = softsim(&["validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL conform")), "{}", stdout(&o));

    let mut open = fixtures::box_surface(Vec3::zeros(), Vec3::repeat(1.0));
    open.triangles.pop();
    let p = dir.path().join("open.obj");
    obj::write_obj(&p, &open).unwrap();
    let o = softsim(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL watertight"), "{}", stdout(&o));
}

fn colliding_count(o: &Output) -> usize {
    let line = stdout(o).lines().find(|l| l.contains("colliding vertices")).unwrap().to_string();
    line.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn detect_counts_collisions() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_mesh(dir.path(), "clean", &fixtures::two_beams(0.3));
    let o = softsim(&["detect", s(&clean)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(colliding_count(&o), 0);

    // Beam poking into a box: every surface vertex strictly inside the box
    // collides.
    let (mut beam, wall) = fixtures::beam_and_box(0.0);
    for p in &mut beam.rest_positions {
        p.x += 0.4 * p.z / 6.0;
    }
    beam.positions = beam.rest_positions.clone();
    let inside = {
        let (lo, hi) = wall.positions.iter().fold((Vec3::repeat(f64::MAX), Vec3::repeat(f64::MIN)), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let surface = extract_boundary(&beam, RegionFilter::All);
        let mut used: Vec<usize> = surface.triangles.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        used.iter().map(|&i| surface.positions[i]).filter(|p| (0..3).all(|k| p[k] > lo[k] && p[k] < hi[k])).count()
    };
    assert!(inside > 0);
    let m = write_mesh(dir.path(), "poke", &beam);
    let w = dir.path().join("wall.obj");
    obj::write_obj(&w, &wall).unwrap();
    let o = softsim(&["detect", s(&m), "--obstacle", s(&w)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(colliding_count(&o), inside);
}

#[test]
fn bench_prints_one_row_per_size() {
    let o = softsim(&["bench-bvh", "--sizes", "1000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<_> = stdout(&o).lines().skip(1).filter(|l| !l.trim().is_empty()).map(String::from).collect();
    assert_eq!(rows.len(), 1, "{rows:?}");
    assert!(rows[0].split_whitespace().next().unwrap().parse::<usize>().unwrap() >= 1000);

    let o = softsim(&["bench-bvh", "--sizes", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
