//! CSV tables, legacy VTK files and the JSON run manifest.
//!
//! Reals are written with 12 significant digits in scientific notation so
//! that identical runs produce identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{ConvergenceRow, ConvergenceTable};
use crate::error::{invalid, Result};
use crate::mesh::Mesh;

pub const CSV_HEADER: &str = "level,n,h,rho,dofs,err_l2,err_h1,eoc_l2,eoc_h1,newton_iters,wall_ms";

/// `x` with 12 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

pub fn csv_row(r: &ConvergenceRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.level,
        r.n,
        real(r.h),
        real(r.rho),
        r.dofs,
        real(r.err_l2),
        real(r.err_h1),
        real(r.eoc_l2),
        real(r.eoc_h1),
        r.newton_iters,
        r.wall_ms
    )
}

pub fn write_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

pub fn table_csv(table: &ConvergenceTable) -> String {
    let mut buf = Vec::new();
    write_csv(&table.rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Where a VTK scalar lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Point,
    Cell,
}

/// Legacy ASCII unstructured grid of triangles carrying one scalar field.
pub fn write_vtk<W: Write>(mesh: &Mesh, name: &str, values: &[f64], at: Location, mut w: W) -> Result<()> {
    let expected = match at {
        Location::Point => mesh.num_nodes(),
        Location::Cell => mesh.num_elements(),
    };
    if values.len() != expected {
        return Err(invalid(format!(
            "field '{name}' has {} values, mesh needs {expected}",
            values.len()
        )));
    }
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(invalid(format!("invalid VTK field name '{name}'")));
    }
    let ne = mesh.num_elements();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "eocp {name}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_nodes())?;
    for p in mesh.nodes() {
        writeln!(w, "{} {} {}", real(p[0]), real(p[1]), real(0.0))?;
    }
    writeln!(w, "CELLS {ne} {}", 4 * ne)?;
    for t in mesh.elements() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "5")?;
    }
    match at {
        Location::Point => writeln!(w, "POINT_DATA {}", mesh.num_nodes())?,
        Location::Cell => writeln!(w, "CELL_DATA {ne}")?,
    }
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{}", real(*v))?;
    }
    Ok(())
}

/// Write `<dir>/<run_id>_<name>.vtk` and return its path.
pub fn write_vtk_file(
    dir: &Path,
    run_id: &str,
    mesh: &Mesh,
    name: &str,
    values: &[f64],
    at: Location,
) -> Result<PathBuf> {
    let path = dir.join(format!("{run_id}_{name}.vtk"));
    let mut buf = Vec::new();
    write_vtk(mesh, name, values, at, &mut buf)?;
    fs::write(&path, buf)?;
    Ok(path)
}

/// Minimal reader for files produced by [`write_vtk`]: returns the node
/// count, element count and the scalar values.
pub fn read_vtk(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let bad = |m: &str| invalid(format!("malformed VTK: {m}"));
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(bad("missing header"));
    }
    lines.next();
    if lines.next() != Some("ASCII") || lines.next() != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(bad("not an ASCII unstructured grid"));
    }
    let count = |line: Option<&str>, key: &str| -> Result<usize> {
        let line = line.ok_or_else(|| bad("truncated"))?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(&format!("expected {key}")));
        }
        it.next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(&format!("bad {key} count")))
    };
    let np = count(lines.next(), "POINTS")?;
    for _ in 0..np {
        let l = lines.next().ok_or_else(|| bad("truncated points"))?;
        if l.split_whitespace().filter_map(|s| s.parse::<f64>().ok()).count() != 3 {
            return Err(bad("bad point"));
        }
    }
    let ne = count(lines.next(), "CELLS")?;
    for _ in 0..ne {
        let ids: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("truncated cells"))?
            .split_whitespace()
            .filter_map(|s| s.parse().ok())
            .collect();
        if ids.len() != 4 || ids[0] != 3 || ids[1..].iter().any(|&i| i >= np) {
            return Err(bad("bad cell"));
        }
    }
    if count(lines.next(), "CELL_TYPES")? != ne {
        return Err(bad("cell type count"));
    }
    for _ in 0..ne {
        if lines.next() != Some("5") {
            return Err(bad("non-triangle cell"));
        }
    }
    let data = lines.next().ok_or_else(|| bad("missing data section"))?;
    let nv = if data.starts_with("POINT_DATA") {
        count(Some(data), "POINT_DATA")?
    } else {
        count(Some(data), "CELL_DATA")?
    };
    if nv != if data.starts_with("POINT_DATA") { np } else { ne } {
        return Err(bad("data count"));
    }
    if !lines.next().is_some_and(|l| l.starts_with("SCALARS")) || lines.next() != Some("LOOKUP_TABLE default") {
        return Err(bad("scalar header"));
    }
    let values = lines
        .take(nv)
        .map(|l| l.trim().parse::<f64>().map_err(|_| bad("bad value")))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != nv {
        return Err(bad("truncated values"));
    }
    Ok((np, ne, values))
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub run_id: String,
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_manifest.json", self.run_id));
        let mut text = serde_json::to_string_pretty(self).map_err(|e| invalid(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(level: usize, n: usize) -> ConvergenceRow {
        ConvergenceRow {
            level,
            n,
            h: 1.0 / n as f64,
            rho: 1.0 / (n * n) as f64,
            dofs: (n - 1) * (n - 1),
            err_l2: 0.1 / (n * n) as f64,
            err_h1: f64::NAN,
            eoc_l2: 2.0,
            eoc_h1: f64::NAN,
            newton_iters: 0,
            wall_ms: 0,
            converged: true,
            control_err: None,
            eoc_control: None,
            failure: None,
        }
    }

    #[test]
    fn real_formatting() {
        assert_eq!(real(0.125), "1.25000000000e-1");
        assert_eq!(real(-3.0), "-3.00000000000e0");
        assert_eq!(real(f64::NAN), "nan");
        assert_eq!(real(f64::NEG_INFINITY), "-inf");
        assert_eq!(
            real(1.0 / 3.0).split('e').next().unwrap().replace(['.', '-'], "").len(),
            12
        );
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&[row(0, 8), row(1, 16)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "");
        assert!(!text.contains('\r'));
        for l in &lines[1..3] {
            assert_eq!(l.split(',').count(), 11);
        }
        assert!(lines[1].starts_with("0,8,1.25000000000e-1,"));
    }

    #[test]
    fn vtk_roundtrip() {
        let mesh = Mesh::structured(3).unwrap();
        let vals: Vec<f64> = (0..mesh.num_nodes()).map(|i| i as f64 * 0.5).collect();
        let mut buf = Vec::new();
        write_vtk(&mesh, "state", &vals, Location::Point, &mut buf).unwrap();
        let (np, ne, back) = read_vtk(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!((np, ne), (16, 18));
        assert_eq!(back, vals);

        let cells = vec![1.0; mesh.num_elements()];
        let mut buf = Vec::new();
        write_vtk(&mesh, "control", &cells, Location::Cell, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("CELL_DATA 18"));
        assert_eq!(read_vtk(&text).unwrap().2, cells);
    }

    #[test]
    fn vtk_rejects_mismatch() {
        let mesh = Mesh::structured(2).unwrap();
        assert!(write_vtk(&mesh, "state", &[0.0; 3], Location::Point, Vec::new()).is_err());
        assert!(write_vtk(&mesh, "bad name", &[0.0; 9], Location::Point, Vec::new()).is_err());
        assert!(read_vtk("garbage").is_err());
    }
}
