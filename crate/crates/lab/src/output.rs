//! CSV, SVG and metadata artifacts of a run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::run::{CurveTable, RunMetadata, RunOutput};

/// Writes `t` and one column per curve at full precision.
pub fn emit_csv(table: &CurveTable, path: &Path) -> Result<()> {
    if table.times.is_empty() {
        return Err(LabError::Config(format!("panel {:?} has an empty time grid", table.panel)));
    }
    if table.columns.is_empty() {
        return Err(LabError::Config(format!("panel {:?} has no curves", table.panel)));
    }
    let io = |e: csv::Error| LabError::io(path, std::io::Error::other(e));
    let mut writer = csv::Writer::from_path(path).map_err(io)?;
    let header = std::iter::once("t").chain(table.columns.iter().map(|c| c.label.as_str()));
    writer.write_record(header).map_err(io)?;
    for (k, t) in table.times.iter().enumerate() {
        let row = std::iter::once(t.to_string()).chain(table.columns.iter().map(|c| c.values[k].to_string()));
        writer.write_record(row).map_err(io)?;
    }
    writer.flush().map_err(|e| LabError::io(path, e))
}

/// Header and rows of a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let bad = |e: String| LabError::Config(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        rows.push(record.iter().map(|v| v.parse::<f64>().map_err(|e| bad(e.to_string()))).collect::<Result<_>>()?);
    }
    Ok((header, rows))
}

#[derive(Clone, Debug)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub palette: Vec<&'static str>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 720.0,
            height: 450.0,
            margin: 60.0,
            palette: vec!["#000000", "#c2185b", "#1565c0", "#2e7d32", "#ef6c00", "#6a1b9a", "#00838f"],
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders a table as a self-contained SVG line plot.
pub fn render_svg(table: &CurveTable, style: &SvgStyle) -> Result<String> {
    if table.columns.is_empty() || table.times.is_empty() {
        return Err(LabError::Config(format!("panel {:?} has nothing to plot", table.panel)));
    }
    let (t0, t1) = (table.times[0], *table.times.last().expect("nonempty"));
    let (mut lo, mut hi) = table
        .columns
        .iter()
        .flat_map(|c| c.values.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    lo = lo.min(0.0);
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let (w, h, m) = (style.width, style.height, style.margin);
    let x = |t: f64| m + (t - t0) / span_t * (w - 2.0 * m);
    let y = |v: f64| h - m - (v - lo) / (hi - lo) * (h - 2.0 * m);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        m / 2.0,
        escape(&table.panel)
    );
    let _ = writeln!(svg, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(svg, r#"<line x1="{m}" y1="{}" x2="{}" y2="{}"/>"#, h - m, w - m, h - m);
    let _ = writeln!(svg, r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}"/>"#, h - m);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g font-family="sans-serif" font-size="11">"#);
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let (tv, vv) = (t0 + f * span_t, lo + f * (hi - lo));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, x(tv), h - m + 16.0, tick(tv));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, m - 6.0, y(vv) + 4.0, tick(vv));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#, w / 2.0, h - m / 4.0);
    let _ = writeln!(svg, "</g>");
    for (k, column) in table.columns.iter().enumerate() {
        let color = style.palette[k % style.palette.len()];
        let points: Vec<String> =
            table.times.iter().zip(&column.values).map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }
    let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (k, column) in table.columns.iter().enumerate() {
        let color = style.palette[k % style.palette.len()];
        let ly = m + 10.0 + 18.0 * k as f64;
        let lx = w - m - 170.0;
        let _ = writeln!(
            svg,
            r#"<g class="entry"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&column.label)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn emit_svg(table: &CurveTable, path: &Path, style: &SvgStyle) -> Result<()> {
    let svg = render_svg(table, style)?;
    fs::write(path, svg).map_err(|e| LabError::io(path, e))
}

pub fn emit_metadata(metadata: &RunMetadata, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(metadata).expect("metadata serializes");
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn file_stem(text: &str) -> String {
    text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Writes one CSV (and optionally SVG) per panel plus the metadata sidecar.
pub fn write_outputs(run: &RunOutput, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let preset = file_stem(&run.metadata.preset);
    let mut written = Vec::new();
    for table in &run.tables {
        let stem = format!("{preset}-{}", file_stem(&table.panel));
        let csv_path = dir.join(format!("{stem}.csv"));
        emit_csv(table, &csv_path)?;
        written.push(csv_path);
        if svg {
            let svg_path = dir.join(format!("{stem}.svg"));
            emit_svg(table, &svg_path, &SvgStyle::default())?;
            written.push(svg_path);
        }
    }
    let meta = dir.join(format!("{preset}.meta.json"));
    emit_metadata(&run.metadata, &meta)?;
    written.push(meta);
    Ok(written)
}
