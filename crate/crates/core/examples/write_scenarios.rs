//! Writes the procedural scenarios under `scenarios/` as TetGen meshes, OBJ
//! obstacles and JSON configs runnable with `softsim simulate`.
//!
//! cargo run -p softsim --example write_scenarios -- scenarios

use std::path::Path;

use serde_json::json;
use softsim::fixtures;
use softsim::io::{obj, tetgen};
use softsim::mesh::{Configuration, SurfaceMesh, TetMesh};

fn write(dir: &Path, name: &str, mesh: &TetMesh, obstacle: Option<&SurfaceMesh>, config: serde_json::Value) {
    let d = dir.join(name);
    std::fs::create_dir_all(&d).unwrap();
    tetgen::write_tetgen(&d.join("mesh.node"), &d.join("mesh.ele"), mesh, Configuration::Rest).unwrap();
    if let Some(s) = obstacle {
        obj::write_obj(&d.join("obstacle.obj"), s).unwrap();
    }
    let text = serde_json::to_string_pretty(&config).unwrap();
    std::fs::write(d.join("config.json"), format!("{text}\n")).unwrap();
    println!("{}: {} tets", d.display(), mesh.num_tets());
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "scenarios".into());
    let dir = Path::new(&dir);
    let base = json!({ "box": { "min": [-0.01, -0.01, -0.01], "max": [100.0, 100.0, 0.01] } });

    write(
        dir,
        "two_beams",
        &fixtures::two_beams(0.3),
        None,
        json!({ "version": 1, "mesh": "mesh.node", "fixed": base, "totalRatio": 3.0, "output": { "directory": "out" } }),
    );

    let (beam, wall) = fixtures::beam_and_box(0.3);
    write(
        dir,
        "beam_box",
        &beam,
        Some(&wall),
        json!({
            "version": 1, "mesh": "mesh.node", "obstacles": [{ "path": "obstacle.obj" }],
            "fixed": base, "totalRatio": 3.0, "output": { "directory": "out" }
        }),
    );

    let (finger, cylinder) = fixtures::finger_and_cylinder(0.1);
    write(
        dir,
        "finger_cylinder",
        &finger,
        Some(&cylinder),
        json!({
            "version": 1, "mesh": "mesh.node", "obstacles": [{ "path": "obstacle.obj" }],
            "fixed": { "box": { "min": [-0.01, -0.01, -0.01], "max": [0.01, 3.0, 3.0] } },
            "material": { "curve": { "knots": [[0.0, 0.1]] } },
            "totalRatio": 3.0, "output": { "directory": "out" }
        }),
    );

    let mut cube = fixtures::inflated_cube(6);
    cube.fixed.clear();
    write(
        dir,
        "inflated_cube",
        &cube,
        None,
        json!({ "version": 1, "mesh": "mesh.node", "fixed": base, "totalRatio": 2.0, "output": { "directory": "out" } }),
    );
}
