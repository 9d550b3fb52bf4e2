use std::path::Path;

use crate::solver::IterationReport;

use super::IoError;

pub const METRICS_HEADER: [&str; 9] = [
    "stage",
    "iteration",
    "elasticEnergy",
    "springEnergy",
    "activeSprings",
    "maxDisplacement",
    "detectSeconds",
    "responseSeconds",
    "solveSeconds",
];

/// One row per inner iteration under a fixed header.
pub fn write_metrics_to<W: std::io::Write>(writer: W, reports: &[IterationReport]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in reports {
        w.write_record([
            r.stage.to_string(),
            r.iteration.to_string(),
            r.elastic_energy.to_string(),
            r.spring_energy.to_string(),
            r.active_springs.to_string(),
            r.max_displacement.to_string(),
            r.detect_seconds.to_string(),
            r.response_seconds.to_string(),
            r.solve_seconds.to_string(),
        ])?;
    }
    w.flush().map_err(|source| IoError::Io { path: "metrics".into(), source })?;
    Ok(())
}

pub fn write_metrics(path: &Path, reports: &[IterationReport]) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })?;
    write_metrics_to(std::io::BufWriter::new(file), reports)
}

/// Metrics rows as written. Columns missing from the file format (round,
/// collision count, acceleration flags) come back as zero or false.
pub fn read_metrics(path: &Path) -> Result<Vec<IterationReport>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(IoError::Parse { path: path.display().to_string(), line: 1, message: format!("unexpected header {header:?}") });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| -> Result<f64, IoError> {
            rec[k].parse().map_err(|e| IoError::Parse { path: path.display().to_string(), line, message: format!("column {}: {e}", METRICS_HEADER[k]) })
        };
        let u = |k: usize| -> Result<usize, IoError> {
            rec[k].parse().map_err(|e| IoError::Parse { path: path.display().to_string(), line, message: format!("column {}: {e}", METRICS_HEADER[k]) })
        };
        out.push(IterationReport {
            stage: u(0)?,
            round: 0,
            iteration: u(1)?,
            elastic_energy: f(2)?,
            spring_energy: f(3)?,
            active_springs: u(4)?,
            max_displacement: f(5)?,
            collisions: 0,
            anderson_accepted: false,
            restart: false,
            detect_seconds: f(6)?,
            response_seconds: f(7)?,
            solve_seconds: f(8)?,
        });
    }
    Ok(out)
}
