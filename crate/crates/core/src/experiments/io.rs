//! CSV output. Numbers are written in scientific notation with 17
//! significant digits, which round-trips every `f64` exactly.

use crate::diagnostics::{DiagnosticsReport, StepRecord};
use crate::grid::{Grid, ScalarField};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {reason}", path.display())]
    Format { path: PathBuf, line: usize, reason: String },
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Snapshot CSV text: header `x,z,S`, one row per cell, rows ordered with
/// `z` outer and `x` inner.
pub fn snapshot_csv(s: &ScalarField) -> String {
    let g = s.grid();
    let mut out = String::with_capacity(g.len() * 72 + 8);
    out.push_str("x,z,S\n");
    for j in 0..g.nz() {
        for i in 0..g.nx() {
            let _ = writeln!(out, "{},{},{}", sci(g.x(i)), sci(g.z(j)), sci(s[(i, j)]));
        }
    }
    out
}

pub fn write_snapshot(s: &ScalarField, path: &Path) -> Result<(), IoError> {
    write_text(path, &snapshot_csv(s))
}

/// File name used for the `k`-th snapshot at time `t`.
pub fn snapshot_file_name(k: usize, t: f64) -> String {
    format!("snapshot_{k:03}_t{t:.6}.csv")
}

/// Reads a snapshot written by [`write_snapshot`]; the grid is recovered
/// from the number of rows sharing the first `z` value.
pub fn read_snapshot(path: &Path) -> Result<ScalarField, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.into(), source })?;
    let bad = |line: usize, reason: &str| IoError::Format { path: path.into(), line, reason: reason.into() };
    let mut lines = text.lines();
    if lines.next() != Some("x,z,S") {
        return Err(bad(1, "expected header `x,z,S`"));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let parsed: Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 3 => rows.push((v[0], v[1], v[2])),
            _ => return Err(bad(k + 2, "expected three numbers")),
        }
    }
    let z0 = rows.first().ok_or_else(|| bad(2, "no data rows"))?.1;
    let nx = rows.iter().take_while(|r| r.1 == z0).count();
    if nx == 0 || rows.len() % nx != 0 {
        return Err(bad(rows.len() + 1, "row count is not a multiple of the row length"));
    }
    let nz = rows.len() / nx;
    let grid = Grid::new(nx, nz).map_err(|e| bad(1, &e.to_string()))?;
    let mut field = ScalarField::zeros(grid);
    for (k, &(_, _, v)) in rows.iter().enumerate() {
        field[(k % nx, k / nx)] = v;
    }
    Ok(field)
}

pub const REPORT_HEADER: &str = "step,t,dt,total_mass,energy,gradient_norm_sq,increment,overshoot_max,\
front_position,front_width,incompressibility_residual,cg_iterations,boundary_outflow";

fn report_row(r: &StepRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.step,
        sci(r.t),
        sci(r.dt),
        sci(r.total_mass),
        sci(r.energy),
        sci(r.gradient_norm_sq),
        sci(r.increment),
        sci(r.overshoot_max),
        sci(r.front_position),
        r.front_width.map(sci).unwrap_or_default(),
        sci(r.incompressibility_residual),
        r.cg_iterations,
        sci(r.boundary_outflow),
    )
}

/// Report CSV text: the initial state as step 0, then one row per step. A
/// missing front width is an empty field.
pub fn report_csv(report: &DiagnosticsReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in report.initial.iter().chain(&report.steps) {
        out.push_str(&report_row(r));
        out.push('\n');
    }
    out
}

pub fn write_report(report: &DiagnosticsReport, path: &Path) -> Result<(), IoError> {
    write_text(path, &report_csv(report))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.into(), source })?;
    }
    fs::write(path, text).map_err(|source| IoError::Io { path: path.into(), source })
}
