//! CSV and SVG emission for reports, trajectories, and fields.
//!
//! Numbers are written with 17 significant digits so a re-parsed CSV
//! reproduces every f64 bit for bit.

use crate::error::{Error, Result};
use crate::experiment::ConvergenceReport;
use crate::model::Trajectory;
use std::fmt::Write as _;
use std::path::Path;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let p = path.as_ref();
    if let Some(parent) = p.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(p, contents).map_err(|e| Error::io(p, e))
}

// ---- convergence report ---------------------------------------------------

/// Columns: scheme, h, mse, slope. Diverged step sizes appear with an empty
/// mse field; the slope column repeats the series fit (empty when no fit).
pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("scheme,h,mse,slope\n");
    for s in &report.series {
        let slope = s.slope.map(fmt_f64).unwrap_or_default();
        for &(h, mse) in &s.points {
            let _ = writeln!(out, "{},{},{},{slope}", s.scheme, fmt_f64(h), fmt_f64(mse));
        }
        for &h in &s.diverged {
            let _ = writeln!(out, "{},{},,{slope}", s.scheme, fmt_f64(h));
        }
    }
    out
}

pub fn write_report_csv(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    write_file(path, &report_csv(report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: String,
    pub h: f64,
    /// `None` marks a diverged run.
    pub mse: Option<f64>,
    pub slope: Option<f64>,
}

/// Parse a report CSV back into rows (inverse of [`report_csv`]).
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("scheme,h,mse,slope") => {}
        Some(other) => {
            return Err(Error::Parse(format!("unexpected header `{other}`")));
        }
        None => return Err(Error::Parse("empty report".into())),
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "line {}: expected 4 fields, got {}",
                ln + 2,
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad {what} `{s}`", ln + 2)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("line {}: non-finite {what}", ln + 2)));
            }
            Ok(v)
        };
        let opt = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        rows.push(ReportRow {
            scheme: fields[0].to_string(),
            h: num(fields[1], "step size")?,
            mse: opt(fields[2], "mse")?,
            slope: opt(fields[3], "slope")?,
        });
    }
    Ok(rows)
}

const SCHEME_COLORS: [(&str, &str); 4] = [
    ("em", "#d62728"),
    ("milstein", "#1f77b4"),
    ("mem", "#ff7f0e"),
    ("mm", "#2ca02c"),
];

fn scheme_color(name: &str) -> &'static str {
    SCHEME_COLORS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
        .unwrap_or("#7f7f7f")
}

/// Log-log error plot: one polyline per scheme plus dashed reference lines of
/// slope 1/2 and 1.
pub fn report_svg(report: &ConvergenceReport) -> String {
    let (w, h) = (640.0, 480.0);
    let margin = 60.0;
    let pts: Vec<(f64, f64)> = report
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|&(h, e)| h > 0.0 && e > 0.0)
        .map(|(h, e)| (h.log2(), e.log10()))
        .collect();
    let (x_lo, x_hi) = bounds(pts.iter().map(|p| p.0), -10.0, 0.0);
    let (y_lo, y_hi) = bounds(pts.iter().map(|p| p.1), -4.0, 0.0);
    let sx = move |x: f64| margin + (x - x_lo) / (x_hi - x_lo) * (w - 2.0 * margin);
    let sy = move |y: f64| h - margin - (y - y_lo) / (y_hi - y_lo) * (h - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">strong error vs step size ({}, {} trials)</text>"#,
        w / 2.0,
        report.preset,
        report.trials
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        margin,
        h - margin,
        w - margin,
        h - margin
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        margin,
        margin,
        margin,
        h - margin
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">log2 h</text>"#,
        w / 2.0,
        h - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {})">log10 mse</text>"#,
        h / 2.0,
        h / 2.0
    );

    // reference slopes 1/2 and 1 through the data midpoint (log10 e = q log10 h + c)
    let mid_x = (x_lo + x_hi) / 2.0;
    let mid_y = (y_lo + y_hi) / 2.0;
    let log10_2 = 2f64.log10();
    for (order, dash) in [(0.5, "6 3"), (1.0, "2 3")] {
        let yl = mid_y + order * (x_lo - mid_x) * log10_2;
        let yr = mid_y + order * (x_hi - mid_x) * log10_2;
        let _ = writeln!(
            svg,
            r##"<polyline class="reference" points="{:.2},{:.2} {:.2},{:.2}" fill="none" stroke="#999" stroke-dasharray="{dash}"/>"##,
            sx(x_lo),
            sy(yl),
            sx(x_hi),
            sy(yr)
        );
    }

    for s in &report.series {
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|&&(h, e)| h > 0.0 && e > 0.0)
            .map(|&(h, e)| format!("{:.2},{:.2}", sx(h.log2()), sy(e.log10())))
            .collect();
        if coords.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            r#"<polyline class="series" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            coords.join(" "),
            scheme_color(s.scheme.name())
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{}">{}</text>"#,
            w - margin + 4.0,
            sy(s.points.last().map(|&(_, e)| e.log10()).unwrap_or(y_lo)),
            scheme_color(s.scheme.name()),
            s.scheme
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(vals: impl Iterator<Item = f64>, def_lo: f64, def_hi: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (def_lo, def_hi)
    } else if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

pub fn write_report_svg(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    write_file(path, &report_svg(report))
}

// ---- trajectories ----------------------------------------------------------

/// Columns: t, y1..yd over the stored range (history included).
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj
        .iter()
        .next()
        .map(|(_, v)| v.len())
        .unwrap_or(0);
    let mut out = String::from("t");
    for i in 1..=dim {
        let _ = write!(out, ",y{i}");
    }
    out.push('\n');
    for (t, v) in traj.iter() {
        let _ = write!(out, "{}", fmt_f64(t));
        for x in v.iter() {
            let _ = write!(out, ",{}", fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_file(path, &trajectory_csv(traj))
}

// ---- fields ----------------------------------------------------------------

/// Rows = time points, columns = grid points, header row carries the
/// x-coordinates.
pub fn field_csv(grid: &[f64], times: &[f64], rows: &[Vec<f64>]) -> String {
    let mut out = String::from("t");
    for x in grid {
        let _ = write!(out, ",{}", fmt_f64(*x));
    }
    out.push('\n');
    for (t, row) in times.iter().zip(rows) {
        let _ = write!(out, "{}", fmt_f64(*t));
        for v in row {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_field_csv(
    grid: &[f64],
    times: &[f64],
    rows: &[Vec<f64>],
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path, &field_csv(grid, times, rows))
}

/// Heat-map of the field: one rect per (time, grid) cell, blue-white-red by
/// value. Large fields are strided down to at most ~400 rows.
pub fn field_svg(grid: &[f64], times: &[f64], rows: &[Vec<f64>]) -> String {
    let (w, h) = (640.0, 480.0);
    let margin = 50.0;
    let stride = (times.len() / 400).max(1);
    let kept: Vec<usize> = (0..times.len()).step_by(stride).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in &kept {
        for &v in &rows[i] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        (lo, hi) = (0.0, 1.0);
    }
    let amp = lo.abs().max(hi.abs()).max(1e-300);
    let cw = (w - 2.0 * margin) / kept.len() as f64;
    let ch = (h - 2.0 * margin) / grid.len() as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (col, &i) in kept.iter().enumerate() {
        for (row, &v) in rows[i].iter().enumerate() {
            let t = (v / amp).clamp(-1.0, 1.0);
            let (r, g, b) = if t >= 0.0 {
                (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
            } else {
                (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
            };
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({},{},{})"/>"#,
                margin + col as f64 * cw,
                h - margin - (row + 1) as f64 * ch,
                cw + 0.5,
                ch + 0.5,
                r as u8,
                g as u8,
                b as u8
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">t</text>"#,
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">x</text>"#,
        h / 2.0,
        h / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn write_field_svg(
    grid: &[f64],
    times: &[f64],
    rows: &[Vec<f64>],
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path, &field_svg(grid, times, rows))
}
