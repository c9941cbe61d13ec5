//! CSV and summary writers.
//!
//! Floating-point fields use Rust's `{:e}` formatting: the shortest
//! scientific-notation string that parses back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{DeterminingWindow, SweepRow};
use crate::error::{Error, Result};
use crate::trajectory::{Snapshot, TrajectoryRecord};

pub const TRAJECTORY_HEADER: &str = "t,tau,l2_A,h1_A,l2_phi,h1_phi,energy,max_abs_A";
pub const SWEEP_HEADER: &str = "epsilon,t_blow,steps,final_max_abs";
pub const SNAPSHOT_HEADER: &str = "x,re_A,im_A,phi";
pub const DETERMINING_HEADER: &str = "t_start,t_end,mode_integral,full_integral,full_distance";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn trajectory_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for r in records {
        let fields = [r.t, r.tau, r.l2_a, r.h1_a, r.l2_phi, r.h1_phi, r.energy, r.max_abs_a];
        row(&mut out, &fields.map(fmt_f64));
    }
    out
}

/// Writes `records` as a trajectory CSV. Refuses to write an empty table.
pub fn emit_plot_data(records: &[TrajectoryRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Domain(format!("no records to write to {}", path.display())));
    }
    write_file(path, &trajectory_csv(records))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in &sorted {
        row(&mut out, &[fmt_f64(r.eps), fmt_f64(r.t_blow), r.steps.to_string(), fmt_f64(r.final_max_abs)]);
    }
    out
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Domain(format!("no sweep rows to write to {}", path.display())));
    }
    write_file(path, &sweep_csv(rows))
}

/// One row per node in storage order; only the `x` coordinate is written.
pub fn snapshot_csv(snapshot: &Snapshot) -> String {
    let grid = snapshot.a.grid();
    let mut out = format!("{SNAPSHOT_HEADER}\n");
    for (i, ((x, _), z)) in grid.node_coords().into_iter().zip(snapshot.a.values()).enumerate() {
        let phi = snapshot.phi.as_ref().map_or(0.0, |p| p.values()[i]);
        row(&mut out, &[fmt_f64(x), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(phi)]);
    }
    out
}

pub fn write_snapshot_csv(snapshot: &Snapshot, path: &Path) -> Result<()> {
    write_file(path, &snapshot_csv(snapshot))
}

pub fn determining_csv(windows: &[DeterminingWindow]) -> String {
    let mut out = format!("{DETERMINING_HEADER}\n");
    for w in windows {
        let fields = [w.t_start, w.t_end, w.mode_integral, w.full_integral, w.full_distance];
        row(&mut out, &fields.map(fmt_f64));
    }
    out
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let mut text = contents.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    write_file(path, &text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub x: f64,
    pub re_a: f64,
    pub im_a: f64,
    pub phi: f64,
}

pub fn parse_snapshot_csv(text: &str) -> Result<Vec<SnapshotRow>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim();
    if header != SNAPSHOT_HEADER {
        return Err(Error::Domain(format!("expected header `{SNAPSHOT_HEADER}`, got `{header}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Domain(format!("snapshot line {}: {e}", i + 2)))?;
        if vals.len() != 4 {
            return Err(Error::Domain(format!("snapshot line {}: expected 4 fields, got {}", i + 2, vals.len())));
        }
        rows.push(SnapshotRow { x: vals[0], re_a: vals[1], im_a: vals[2], phi: vals[3] });
    }
    Ok(rows)
}

pub fn read_snapshot_csv(path: &Path) -> Result<Vec<SnapshotRow>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_snapshot_csv(&text)
}

/// Ordered `key = value` lines.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, fmt_f64(value))
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backward::Termination;
    use crate::spectral::{ComplexField, Grid, Grid1D};
    use num_complex::Complex64;

    fn rec(t: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            tau: 0.1,
            l2_a: 1.0 / 3.0,
            h1_a: 2.0,
            l2_phi: 0.0,
            h1_phi: 0.0,
            energy: -1e-300,
            max_abs_a: 1e300,
        }
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 5e-324, 1.7976931348623157e308, -2.5, 0.0, 9.013_040_0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            assert!(!s.contains(','));
        }
    }

    #[test]
    fn three_records_give_four_lines() {
        let csv = trajectory_csv(&[rec(0.0), rec(1.0), rec(2.0)]);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.ends_with('\n'));
        assert_eq!(csv.lines().next().unwrap(), TRAJECTORY_HEADER);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 8));
    }

    #[test]
    fn empty_records_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        assert!(emit_plot_data(&[], &path).is_err());
        assert!(!path.exists());
        emit_plot_data(&[rec(0.0)], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), trajectory_csv(&[rec(0.0)]));
    }

    #[test]
    fn sweep_rows_sorted_with_exact_header() {
        let r = |eps: f64| SweepRow {
            eps,
            t_blow: eps.sqrt(),
            steps: 40,
            final_max_abs: 1e8,
            terminated_by: Termination::BlowUp,
        };
        let csv = sweep_csv(&[r(0.5), r(0.001), r(0.1)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,t_blow,steps,final_max_abs");
        assert!(lines[1].starts_with("1e-3,"));
        assert!(lines[3].starts_with("5e-1,"));
        assert!(lines[1].ends_with(",40,1e8"));
    }

    #[test]
    fn snapshot_round_trip() {
        let g: Grid = Grid1D::new(10.0, 9).unwrap().into();
        let a = ComplexField::from_fn(g, |x, _| Complex64::new(x.sin(), x.cos() / 7.0));
        let snap = Snapshot { step: 3, t: 0.5, a: a.clone(), phi: None };
        let rows = parse_snapshot_csv(&snapshot_csv(&snap)).unwrap();
        assert_eq!(rows.len(), 9);
        for (r, (z, (x, _))) in rows.iter().zip(a.values().iter().zip(g.node_coords())) {
            assert_eq!((r.x, r.re_a, r.im_a, r.phi), (x, z.re, z.im, 0.0));
        }
        assert!(parse_snapshot_csv("x,a\n1,2\n").is_err());
        assert!(parse_snapshot_csv("x,re_A,im_A,phi\n1,2,3\n").is_err());
    }
}
