//! TetGen `.node`/`.ele` pairs. Numbering starts at the first node id in
//! the `.node` file (0 or 1); the first element attribute is the region tag.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::Vec3;
use crate::mesh::{Configuration, Region, TetMesh};

use super::{finish_mesh, read_text, write_text, IoError, LoadedMesh};

struct Lines<'a> {
    path: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &'a str) -> Self {
        Lines { path, inner: text.lines().enumerate() }
    }

    /// Next non-empty line with comments stripped, as (line number, tokens).
    fn next_record(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn require(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), IoError> {
        self.next_record().ok_or_else(|| IoError::Parse { path: self.path.to_string(), line: 0, message: format!("unexpected end of file, expected {what}") })
    }

    fn err(&self, line: usize, message: String) -> IoError {
        IoError::Parse { path: self.path.to_string(), line, message }
    }

    fn num<T: std::str::FromStr>(&self, line: usize, toks: &[&str], k: usize) -> Result<T, IoError>
    where
        T::Err: std::fmt::Display,
    {
        let s = toks.get(k).ok_or_else(|| self.err(line, format!("missing field {}", k + 1)))?;
        s.parse().map_err(|e| self.err(line, format!("bad number {s:?}: {e}")))
    }
}

/// Node coordinates and the first node id.
pub fn parse_node(text: &str, path: &str) -> Result<(Vec<Vec3>, usize), IoError> {
    let mut lines = Lines::new(text, path);
    let (hl, header) = lines.require("header")?;
    let n: usize = lines.num(hl, &header, 0)?;
    let dim: usize = header.get(1).map_or(Ok(3), |_| lines.num(hl, &header, 1))?;
    if dim != 3 {
        return Err(lines.err(hl, format!("dimension {dim}, expected 3")));
    }
    let mut points = Vec::with_capacity(n);
    let mut base = 0;
    for i in 0..n {
        let (l, toks) = lines.require("node")?;
        let id: usize = lines.num(l, &toks, 0)?;
        if i == 0 {
            if id > 1 {
                return Err(lines.err(l, format!("first node id {id}, expected 0 or 1")));
            }
            base = id;
        } else if id != base + i {
            return Err(lines.err(l, format!("node id {id} out of sequence, expected {}", base + i)));
        }
        points.push(Vec3::new(lines.num(l, &toks, 1)?, lines.num(l, &toks, 2)?, lines.num(l, &toks, 3)?));
    }
    Ok((points, base))
}

/// Tets (converted to 0-based with `base`) and their optional region tags.
pub fn parse_ele(text: &str, path: &str, base: usize, num_nodes: usize) -> Result<(Vec<[usize; 4]>, Option<Vec<Region>>), IoError> {
    let mut lines = Lines::new(text, path);
    let (hl, header) = lines.require("header")?;
    let n: usize = lines.num(hl, &header, 0)?;
    let per: usize = header.get(1).map_or(Ok(4), |_| lines.num(hl, &header, 1))?;
    if per != 4 && per != 10 {
        return Err(lines.err(hl, format!("{per} nodes per tet, expected 4 or 10")));
    }
    let attrs: usize = header.get(2).map_or(Ok(0), |_| lines.num(hl, &header, 2))?;
    let mut tets = Vec::with_capacity(n);
    let mut regions = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, toks) = lines.require("element")?;
        let mut tet = [0usize; 4];
        for (k, slot) in tet.iter_mut().enumerate() {
            let raw: usize = lines.num(l, &toks, 1 + k)?;
            if raw < base || raw - base >= num_nodes {
                return Err(lines.err(l, format!("node {raw} out of range")));
            }
            *slot = raw - base;
        }
        if attrs > 0 {
            let tag: f64 = lines.num(l, &toks, 1 + per)?;
            let region = Region::from_tag(tag as i64).filter(|_| tag.fract() == 0.0).ok_or_else(|| lines.err(l, format!("region tag {tag}, expected 0 or 1")))?;
            regions.push(region);
        }
        tets.push(tet);
    }
    Ok((tets, (attrs > 0).then_some(regions)))
}

pub fn read_tetgen(node: &Path, ele: &Path) -> Result<LoadedMesh, IoError> {
    let (mesh, has_regions) = read_tetgen_raw(node, ele)?;
    finish_mesh(ele, mesh, has_regions)
}

/// Parses both files without orienting or validating the mesh.
pub fn read_tetgen_raw(node: &Path, ele: &Path) -> Result<(TetMesh, bool), IoError> {
    let (points, base) = parse_node(&read_text(node)?, &node.display().to_string())?;
    let (tets, regions) = parse_ele(&read_text(ele)?, &ele.display().to_string(), base, points.len())?;
    let has_regions = regions.is_some();
    let regions = regions.unwrap_or_else(|| vec![Region::Body; tets.len()]);
    Ok((TetMesh::new(points, tets, regions), has_regions))
}

pub fn node_string(mesh: &TetMesh, config: Configuration) -> String {
    let pts = match config {
        Configuration::Rest => &mesh.rest_positions,
        Configuration::Deformed => &mesh.positions,
    };
    let mut out = format!("{} 3 0 0\n", pts.len());
    for (i, p) in pts.iter().enumerate() {
        let _ = writeln!(out, "{i} {} {} {}", p.x, p.y, p.z);
    }
    out
}

pub fn ele_string(mesh: &TetMesh) -> String {
    let mut out = format!("{} 4 1\n", mesh.tets.len());
    for (i, (t, r)) in mesh.tets.iter().zip(&mesh.regions).enumerate() {
        let _ = writeln!(out, "{i} {} {} {} {} {}", t[0], t[1], t[2], t[3], r.tag());
    }
    out
}

/// Writes 0-based files with the region tag as the only attribute.
pub fn write_tetgen(node: &Path, ele: &Path, mesh: &TetMesh, config: Configuration) -> Result<(), IoError> {
    write_text(node, &node_string(mesh, config))?;
    write_text(ele, &ele_string(mesh))
}
