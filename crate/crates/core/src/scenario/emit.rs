//! Output writers: the plain-text report, CSV density dumps and
//! PPM/PGM renderings of `ρ_s`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::scenario::config::ScenarioConfig;
use crate::scenario::runner::{DensitySnapshot, RunReport};

pub const REPORT_FILE: &str = "report.txt";

/// Formats the report as `key = value` lines. Wall time is left out so
/// that reruns with the same configuration produce identical files.
pub fn format_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {}", report.scenario);
    for (key, v) in report.numbers() {
        let _ = writeln!(out, "{key} = {v:.11e}");
    }
    for (key, v) in &report.notes {
        let _ = writeln!(out, "{key} = {v}");
    }
    if !report.files.is_empty() {
        let _ = writeln!(out, "files = {}", report.files.join(" "));
    }
    out
}

/// Writes snapshots (as configured) and the report into the output
/// directory, recording every file name in `report.files`.
pub fn emit_outputs(report: &mut RunReport, snapshots: &[DensitySnapshot], cfg: &ScenarioConfig) -> Result<()> {
    let dir = &cfg.run.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    if cfg.run.emit_csv {
        for (j, snap) in snapshots.iter().enumerate() {
            let name = format!("rho_{j:03}.csv");
            write_file(&dir.join(&name), density_csv(&snap.density).as_bytes())?;
            files.push(name);
        }
    }
    if cfg.run.emit_images && !snapshots.is_empty() {
        let fields: Vec<&ComplexField> = snapshots.iter().map(|s| &s.density).collect();
        let re_max = channel_max(&fields, |z| z.re.abs());
        let im_max = channel_max(&fields, |z| z.im.abs());
        let abs_max = channel_max(&fields, |z| z.norm());
        for (j, field) in fields.iter().enumerate() {
            for (suffix, bytes) in [
                ("re.ppm", diverging_ppm(field, |z| z.re, re_max)),
                ("im.ppm", diverging_ppm(field, |z| z.im, im_max)),
                ("abs.pgm", grayscale_pgm(field, abs_max)),
            ] {
                let name = format!("rho_{j:03}_{suffix}");
                write_file(&dir.join(&name), &bytes)?;
                files.push(name);
            }
        }
    }
    files.push(REPORT_FILE.to_string());
    report.files = files;
    write_file(&dir.join(REPORT_FILE), format_report(report).as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `x,y,re_rho,im_rho` rows in grid order; `y` is 0 for 1D grids.
pub fn density_csv(field: &ComplexField) -> String {
    let grid = field.grid();
    let mut out = String::with_capacity(field.values().len() * 64);
    out.push_str("x,y,re_rho,im_rho\n");
    for (k, v) in field.values().iter().enumerate() {
        let (x, y) = grid.node(k);
        let _ = writeln!(out, "{x:.8e},{y:.8e},{:.8e},{:.8e}", v.re, v.im);
    }
    out
}

fn channel_max(fields: &[&ComplexField], f: impl Fn(num_complex::Complex64) -> f64) -> f64 {
    fields
        .iter()
        .flat_map(|fd| fd.values().iter())
        .map(|z| f(*z))
        .fold(0.0, f64::max)
}

/// Image rows from top (largest y) to bottom; 1D fields become one row.
fn rows(field: &ComplexField) -> impl Iterator<Item = usize> + '_ {
    let (nx, ny) = (field.grid().nx(), field.grid().ny());
    (0..ny)
        .rev()
        .flat_map(move |j| (0..nx).map(move |i| field.grid().index(i, j)))
}

fn header(magic: &str, field: &ComplexField) -> Vec<u8> {
    format!("{magic}\n{} {}\n255\n", field.grid().nx(), field.grid().ny()).into_bytes()
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Blue (negative) – white (zero) – red (positive), scaled by `max`.
pub fn diverging_ppm(field: &ComplexField, f: impl Fn(num_complex::Complex64) -> f64, max: f64) -> Vec<u8> {
    let mut out = header("P6", field);
    for k in rows(field) {
        let u = if max > 0.0 {
            (f(field.values()[k]) / max).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let (r, g, b) = if u >= 0.0 {
            (1.0, 1.0 - u, 1.0 - u)
        } else {
            (1.0 + u, 1.0 + u, 1.0)
        };
        out.extend([to_byte(r), to_byte(g), to_byte(b)]);
    }
    out
}

/// Linear grayscale of `|ρ|`, scaled by `max`.
pub fn grayscale_pgm(field: &ComplexField, max: f64) -> Vec<u8> {
    let mut out = header("P5", field);
    for k in rows(field) {
        let u = if max > 0.0 { field.values()[k].norm() / max } else { 0.0 };
        out.push(to_byte(u));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use num_complex::Complex64;

    #[test]
    fn ppm_has_header_and_pixels() {
        let grid = Grid::new_2d(0.0, 1.0, 4, 0.0, 1.0, 3).unwrap();
        let f = ComplexField::from_fn(grid, |x, y| Complex64::new(x - 0.5, y));
        let bytes = diverging_ppm(&f, |z| z.re, 0.5);
        let head = b"P6\n4 3\n255\n";
        assert_eq!(&bytes[..head.len()], head);
        assert_eq!(bytes.len(), head.len() + 4 * 3 * 3);
        let pgm = grayscale_pgm(&f, f.max_abs());
        assert_eq!(pgm.len(), b"P5\n4 3\n255\n".len() + 12);
        assert!(pgm.iter().skip(11).any(|&b| b == 255));
    }

    #[test]
    fn top_row_is_largest_y() {
        let grid = Grid::new_2d(0.0, 1.0, 2, 0.0, 1.0, 2).unwrap();
        let f = ComplexField::from_fn(grid, |_, y| Complex64::new(y, 0.0));
        let pgm = grayscale_pgm(&f, 1.0);
        let px = &pgm[pgm.len() - 4..];
        assert!(px[0] > px[2]);
    }

    #[test]
    fn csv_rows_match_nodes() {
        let grid = Grid::new_1d(0.0, 1.0, 4).unwrap();
        let f = ComplexField::constant(grid, Complex64::new(1.0, -2.0));
        let csv = density_csv(&f);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().ends_with("1.00000000e0,-2.00000000e0"));
    }

    #[test]
    fn report_format_is_stable() {
        let r = RunReport {
            scenario: "x".into(),
            probability: Some(0.25),
            notes: vec![("path".into(), "S -> D".into())],
            wall_time: 3.0,
            ..RunReport::default()
        };
        let text = format_report(&r);
        assert_eq!(text, "scenario = x\nprobability = 2.50000000000e-1\npath = S -> D\n");
    }
}
