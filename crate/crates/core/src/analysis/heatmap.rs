//! Labelled matrices written as CSV (raw values) and SVG (capped colours).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Default colour cap for relative-precision heatmaps.
pub const DEFAULT_CAP: f64 = 3.0;

const MISSING_FILL: &str = "#bfbfbf";
const CELL: usize = 36;
const LABEL_WIDTH: usize = 140;
const HEADER_HEIGHT: usize = 90;

#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `values[row][col]`; `None` marks missing data.
    pub values: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    pub fn new(corner: &str, row_labels: Vec<String>, col_labels: Vec<String>) -> Self {
        let values = vec![vec![None; col_labels.len()]; row_labels.len()];
        Self {
            corner: corner.to_string(),
            row_labels,
            col_labels,
            values,
        }
    }

    /// Appends a `Total` column holding the median of each row's defined cells.
    pub fn with_total_column(mut self) -> Self {
        self.col_labels.push("Total".to_string());
        for row in &mut self.values {
            let defined: Vec<f64> = row.iter().flatten().copied().collect();
            row.push(super::percentile(&defined, 0.5).ok());
        }
        self
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![self.corner.clone()];
        header.extend(self.col_labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.row_labels.iter().zip(&self.values) {
            let mut fields = vec![label.clone()];
            fields.extend(row.iter().map(|v| v.map_or(String::new(), super::format_real)));
            w.write_record(&fields)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        let corner = header.get(0).unwrap_or_default().to_string();
        let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            row_labels.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>()
                            .map(Some)
                            .map_err(|e| Error::contract(format!("bad heatmap cell '{f}': {e}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Ok(Self {
            corner,
            row_labels,
            col_labels,
            values,
        })
    }

    /// Values as coloured: capped at `cap` from above.
    pub fn capped(&self, cap: f64) -> Vec<Vec<Option<f64>>> {
        self.values
            .iter()
            .map(|row| row.iter().map(|v| v.map(|x| x.min(cap))).collect())
            .collect()
    }

    pub fn to_svg(&self, title: &str, cap: f64) -> String {
        let capped = self.capped(cap);
        let finite = capped.iter().flatten().flatten().copied().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        let width = LABEL_WIDTH + CELL * self.col_labels.len() + 10;
        let height = HEADER_HEIGHT + CELL * self.row_labels.len() + 10;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
        );
        let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
        let _ = writeln!(s, r#"<text x="4" y="14" font-size="12">{}</text>"#, escape(title));
        for (j, label) in self.col_labels.iter().enumerate() {
            let x = LABEL_WIDTH + CELL * j + CELL / 2;
            let y = HEADER_HEIGHT - 6;
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{y}" transform="rotate(-60 {x} {y})">{}</text>"#,
                escape(label)
            );
        }
        for (i, (label, row)) in self.row_labels.iter().zip(&capped).enumerate() {
            let y = HEADER_HEIGHT + CELL * i;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LABEL_WIDTH - 6,
                y + CELL / 2 + 4,
                escape(label)
            );
            for (j, cell) in row.iter().enumerate() {
                let x = LABEL_WIDTH + CELL * j;
                match cell {
                    Some(v) if v.is_finite() => {
                        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                        let _ = writeln!(
                            s,
                            r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="white" data-value="{}"/>"#,
                            colour(t),
                            super::format_real(*v)
                        );
                        let _ = writeln!(
                            s,
                            r#"<text x="{}" y="{}" text-anchor="middle" fill="{}">{}</text>"#,
                            x + CELL / 2,
                            y + CELL / 2 + 4,
                            if t > 0.55 { "white" } else { "black" },
                            short(*v)
                        );
                    }
                    _ => {
                        let _ = writeln!(
                            s,
                            r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{MISSING_FILL}" stroke="white" data-missing="true"/>"#
                        );
                    }
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Writes `<stem>.csv` (uncapped) and `<stem>.svg` (capped at `cap`) into `dir`.
pub fn emit_heatmap(hm: &Heatmap, title: &str, cap: f64, dir: &Path, stem: &str) -> Result<()> {
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, hm.to_csv()?).map_err(|e| Error::at_path(&csv_path, e))?;
    let svg_path = dir.join(format!("{stem}.svg"));
    std::fs::write(&svg_path, hm.to_svg(title, cap)).map_err(|e| Error::at_path(&svg_path, e))
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e3 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Light-to-dark blue ramp for `t` in [0, 1].
fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
