//! Report emission: versioned JSON, CSV tables and SVG energy plots.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::diffops::least_squares_slope;
use crate::error::{Error, Result};
use crate::quadrature::EnergyTrace;

pub const SCHEMA_VERSION: u32 = 1;

/// One named pass/fail check with its measured value and threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }

    /// Passes when `value` lies in `[lo, hi]`; the threshold recorded is `hi`.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: hi,
            passed: (lo..=hi).contains(&value),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: impl Into<String>, checks: Vec<Check>, data: serde_json::Value) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            schema: SCHEMA_VERSION,
            command: command.into(),
            passed,
            checks,
            data,
        }
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes `contents` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Writes a header row and numeric rows as CSV.
pub fn write_csv<W: Write>(writer: W, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} entries, expected {}",
                row.len(),
                headers.len()
            )));
        }
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_csv(std::fs::File::create(path)?, headers, rows)
}

/// `(t, energy, flux)` rows.
pub fn energy_trace_rows(trace: &EnergyTrace) -> Vec<Vec<f64>> {
    (0..trace.len())
        .map(|i| vec![trace.times[i], trace.energy[i], trace.flux[i]])
        .collect()
}

/// Energies below `FLOOR_RATIO × max energy` are drawn on the floor.
pub const FLOOR_RATIO: f64 = 1e-16;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// Least-squares slope of `ln energy` against `t` over samples above the floor.
pub fn log_energy_slope(trace: &EnergyTrace) -> Option<f64> {
    let max = trace.energy.iter().cloned().fold(0.0f64, f64::max);
    let floor = max * FLOOR_RATIO;
    let (ts, ls): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.energy)
        .filter(|(_, e)| **e > floor)
        .map(|(t, e)| (*t, e.ln()))
        .unzip();
    (ts.len() >= 2).then(|| least_squares_slope(&ts, &ls))
}

/// Self-contained SVG plot of `log10 energy` against `t`, annotated with the
/// fitted slope of `ln energy`.
pub fn render_svg(trace: &EnergyTrace) -> Result<String> {
    if trace.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "energy plot needs at least 2 samples, got {}",
            trace.len()
        )));
    }
    if trace.energy.iter().chain(&trace.times).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("trace contains non-finite values".into()));
    }
    let max = trace.energy.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(Error::InvalidInput("trace has no positive energy".into()));
    }
    let floor = (max * FLOOR_RATIO).log10();
    let logs: Vec<f64> = trace
        .energy
        .iter()
        .map(|&e| if e > 0.0 { e.log10().max(floor) } else { floor })
        .collect();
    let (t0, t1) = (trace.times[0], *trace.times.last().unwrap());
    let y_lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let y_hi = logs
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil()
        .max(y_lo + 1.0);
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let px = |t: f64| MARGIN + (t - t0) / t_span * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let mut y = y_lo;
    let step = ((y_hi - y_lo) / 8.0).ceil().max(1.0);
    while y <= y_hi + 1e-9 {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">1e{}</text>"#,
            MARGIN - 6.0,
            py(y) + 4.0,
            y as i64
        );
        y += step;
    }
    for (t, anchor) in [(t0, "start"), (t1, "end")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="{anchor}">t = {t}</text>"#,
            px(t),
            HEIGHT - MARGIN + 16.0
        );
    }
    let points: Vec<String> = trace
        .times
        .iter()
        .zip(&logs)
        .map(|(t, l)| format!("{:.2},{:.2}", px(*t), py(*l)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.join(" ")
    );
    let label = match log_energy_slope(trace) {
        Some(s) => format!("fitted slope of ln E: {s:.6}"),
        None => "fitted slope of ln E: n/a".to_string(),
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="13">{label}</text>"#,
        MARGIN,
        MARGIN - 12.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg(trace: &EnergyTrace, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(trace)?)?;
    Ok(())
}
