use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::Vec3;
use crate::mesh::SurfaceMesh;

use super::{read_text, write_text, IoError};

/// ASCII OBJ with shortest round-trip number formatting.
pub fn obj_string(surface: &SurfaceMesh) -> String {
    let mut out = String::with_capacity(40 * surface.positions.len() + 24 * surface.triangles.len());
    for p in &surface.positions {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for t in &surface.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn write_obj(path: &Path, surface: &SurfaceMesh) -> Result<(), IoError> {
    write_text(path, &obj_string(surface))
}

pub fn read_obj(path: &Path) -> Result<SurfaceMesh, IoError> {
    parse_obj(&read_text(path)?, &path.display().to_string())
}

/// Reads `v` and `f` records. Polygons are fan-triangulated; texture and
/// normal indices (`f 1/2/3`) and negative indices are accepted.
pub fn parse_obj(text: &str, path: &str) -> Result<SurfaceMesh, IoError> {
    let err = |line: usize, message: String| IoError::Parse { path: path.to_string(), line, message };
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.split('#').next().unwrap_or("");
        let mut tok = raw.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|e| err(line, format!("bad coordinate {s:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(err(line, "vertex needs 3 coordinates".into()));
                }
                positions.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for s in tok {
                    let head = s.split('/').next().unwrap_or("");
                    let k: i64 = head.parse().map_err(|e| err(line, format!("bad index {s:?}: {e}")))?;
                    let v = if k > 0 { k - 1 } else { positions.len() as i64 + k };
                    if k == 0 || v < 0 || v as usize >= positions.len() {
                        return Err(err(line, format!("index {k} out of range")));
                    }
                    idx.push(v as usize);
                }
                if idx.len() < 3 {
                    return Err(err(line, "face needs at least 3 vertices".into()));
                }
                for j in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(SurfaceMesh::new(positions, triangles))
}
