//! Legacy ASCII VTK unstructured grids of tets (cell type 10) with an
//! integer `region` cell field.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::Vec3;
use crate::mesh::{Configuration, Region, TetMesh};

use super::{finish_mesh, read_text, write_text, IoError, LoadedMesh};

const VTK_TETRA: i64 = 10;

pub fn vtk_string(mesh: &TetMesh, config: Configuration) -> String {
    let pts = match config {
        Configuration::Rest => &mesh.rest_positions,
        Configuration::Deformed => &mesh.positions,
    };
    let mut out = String::from("# vtk DataFile Version 3.0\nsoftsim tet mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", pts.len());
    for p in pts {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.tets.len(), 5 * mesh.tets.len());
    for t in &mesh.tets {
        let _ = writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.tets.len());
    for _ in &mesh.tets {
        let _ = writeln!(out, "{VTK_TETRA}");
    }
    let _ = writeln!(out, "CELL_DATA {}\nSCALARS region int 1\nLOOKUP_TABLE default", mesh.tets.len());
    for r in &mesh.regions {
        let _ = writeln!(out, "{}", r.tag());
    }
    out
}

pub fn write_vtk(path: &Path, mesh: &TetMesh, config: Configuration) -> Result<(), IoError> {
    write_text(path, &vtk_string(mesh, config))
}

pub fn read_vtk(path: &Path) -> Result<LoadedMesh, IoError> {
    let (mesh, has_regions) = parse_vtk(&read_text(path)?, &path.display().to_string())?;
    finish_mesh(path, mesh, has_regions)
}

struct Tokens<'a> {
    path: &'a str,
    toks: Vec<(usize, &'a str)>,
    at: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), IoError> {
        let t = self.toks.get(self.at).copied().ok_or_else(|| IoError::Parse {
            path: self.path.to_string(),
            line: self.toks.last().map_or(0, |t| t.0),
            message: "unexpected end of file".into(),
        })?;
        self.at += 1;
        Ok(t)
    }

    fn done(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T, IoError>
    where
        T::Err: std::fmt::Display,
    {
        let (line, s) = self.next()?;
        s.parse().map_err(|e| self.err(line, format!("bad number {s:?}: {e}")))
    }

    fn err(&self, line: usize, message: String) -> IoError {
        IoError::Parse { path: self.path.to_string(), line, message }
    }
}

/// Parses the grid; the mesh is not validated yet.
pub fn parse_vtk(text: &str, path: &str) -> Result<(TetMesh, bool), IoError> {
    let err = |line: usize, message: String| IoError::Parse { path: path.to_string(), line, message };
    let mut lines = text.lines();
    let head = lines.next().unwrap_or("");
    if !head.starts_with("# vtk DataFile") {
        return Err(err(1, "missing '# vtk DataFile' header".into()));
    }
    lines.next();
    let format = lines.next().unwrap_or("").trim();
    if !format.eq_ignore_ascii_case("ASCII") {
        return Err(err(3, format!("format {format:?}, only ASCII is supported")));
    }
    let toks: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .skip(3)
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut tk = Tokens { path, toks, at: 0 };

    let mut points: Vec<Vec3> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut types: Vec<i64> = Vec::new();
    let mut regions: Option<Vec<i64>> = None;
    let mut in_cell_data = false;
    while !tk.done() {
        let (line, key) = tk.next()?;
        match key.to_ascii_uppercase().as_str() {
            "DATASET" => {
                let (l, kind) = tk.next()?;
                if !kind.eq_ignore_ascii_case("UNSTRUCTURED_GRID") {
                    return Err(err(l, format!("dataset {kind}, expected UNSTRUCTURED_GRID")));
                }
            }
            "POINTS" => {
                let n: usize = tk.num()?;
                tk.next()?;
                points = (0..n).map(|_| Ok(Vec3::new(tk.num()?, tk.num()?, tk.num()?))).collect::<Result<_, IoError>>()?;
            }
            "CELLS" => {
                let n: usize = tk.num()?;
                let _size: usize = tk.num()?;
                for _ in 0..n {
                    let k: usize = tk.num()?;
                    cells.push((0..k).map(|_| tk.num()).collect::<Result<_, _>>()?);
                }
            }
            "CELL_TYPES" => {
                let n: usize = tk.num()?;
                types = (0..n).map(|_| tk.num()).collect::<Result<_, _>>()?;
            }
            "CELL_DATA" => {
                let _n: usize = tk.num()?;
                in_cell_data = true;
            }
            "POINT_DATA" => {
                in_cell_data = false;
                let _n: usize = tk.num()?;
            }
            "SCALARS" => {
                let (_, name) = tk.next()?;
                let _ty = tk.next()?;
                // Optional component count before LOOKUP_TABLE.
                let (l, mut next) = tk.next()?;
                if next.parse::<usize>().is_ok() {
                    next = tk.next()?.1;
                }
                if !next.eq_ignore_ascii_case("LOOKUP_TABLE") {
                    return Err(err(l, "expected LOOKUP_TABLE".into()));
                }
                tk.next()?;
                let count = if in_cell_data { cells.len() } else { points.len() };
                let values: Vec<f64> = (0..count).map(|_| tk.num()).collect::<Result<_, _>>()?;
                if in_cell_data && name.eq_ignore_ascii_case("region") {
                    regions = Some(values.iter().map(|v| *v as i64).collect());
                }
            }
            "FIELD" => {
                let _name = tk.next()?;
                let arrays: usize = tk.num()?;
                for _ in 0..arrays {
                    let (_, name) = tk.next()?;
                    let comps: usize = tk.num()?;
                    let tuples: usize = tk.num()?;
                    tk.next()?;
                    let values: Vec<f64> = (0..comps * tuples).map(|_| tk.num()).collect::<Result<_, _>>()?;
                    if in_cell_data && name.eq_ignore_ascii_case("region") && comps == 1 {
                        regions = Some(values.iter().map(|v| *v as i64).collect());
                    }
                }
            }
            other => return Err(err(line, format!("unsupported section {other}"))),
        }
    }
    if types.len() != cells.len() {
        return Err(err(0, format!("{} cells but {} cell types", cells.len(), types.len())));
    }
    let mut tets = Vec::with_capacity(cells.len());
    for (i, (c, &ty)) in cells.iter().zip(&types).enumerate() {
        if ty != VTK_TETRA || c.len() != 4 {
            return Err(err(0, format!("cell {i} has type {ty}, only tetrahedra (10) are supported")));
        }
        if let Some(&v) = c.iter().find(|&&v| v >= points.len()) {
            return Err(err(0, format!("cell {i} references point {v} of {}", points.len())));
        }
        tets.push([c[0], c[1], c[2], c[3]]);
    }
    let has_regions = regions.is_some();
    let regions = match regions {
        Some(tags) => tags
            .iter()
            .enumerate()
            .map(|(i, &t)| Region::from_tag(t).ok_or_else(|| err(0, format!("cell {i} has region tag {t}, expected 0 or 1"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![Region::Body; tets.len()],
    };
    Ok((TetMesh::new(points, tets, regions), has_regions))
}
