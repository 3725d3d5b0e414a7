//! Deterministic CSV and SVG emission. No timestamps or machine state go
//! into the artifacts; identical inputs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Fixed-width scientific formatting used for every numeric CSV field.
pub fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // integers (including counts) print exactly
        format!("{v}")
    } else {
        format!("{v:.12e}")
    }
}

/// A CSV table; every row automatically carries the config hash.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    config_hash: String,
}

impl Csv {
    pub fn new(config_hash: &str, columns: &[&str]) -> Self {
        let mut header: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        header.push("config_hash".to_string());
        Csv {
            header,
            rows: Vec::new(),
            config_hash: config_hash.to_string(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len() + 1, self.header.len(), "column count mismatch");
        let mut r = fields.to_vec();
        r.push(self.config_hash.clone());
        self.rows.push(r);
    }

    pub fn to_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, String> {
        std::fs::create_dir_all(dir).map_err(|e| format!("mkdir {}: {e}", dir.display()))?;
        let path = dir.join(name);
        std::fs::write(&path, self.to_string())
            .map_err(|e| format!("write {}: {e}", path.display()))?;
        Ok(path)
    }
}

/// One polyline series for an SVG plot.
pub struct Series<'a> {
    pub points: &'a [(f64, f64)],
    pub color: &'a str,
}

/// Minimal line plot: axes box plus polylines, viewport 640x480.
pub fn svg_plot(series: &[Series]) -> String {
    let (w, h) = (640.0, 480.0);
    let margin = 40.0;
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in s.points {
            lo.0 = lo.0.min(x);
            lo.1 = lo.1.min(y);
            hi.0 = hi.0.max(x);
            hi.1 = hi.1.max(y);
        }
    }
    if !lo.0.is_finite() {
        lo = (0.0, 0.0);
        hi = (1.0, 1.0);
    }
    let span = ((hi.0 - lo.0).max(1e-12), (hi.1 - lo.1).max(1e-12));
    let map = |x: f64, y: f64| {
        (
            margin + (x - lo.0) / span.0 * (w - 2.0 * margin),
            h - margin - (y - lo.1) / span.1 * (h - 2.0 * margin),
        )
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - 2.0 * margin,
        h - 2.0 * margin
    );
    let _ = writeln!(
        out,
        "<text x=\"{margin}\" y=\"{}\" font-size=\"12\">({:.4}, {:.4}) .. ({:.4}, {:.4})</text>",
        h - margin / 2.0,
        lo.0,
        lo.1,
        hi.0,
        hi.1
    );
    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            pts.join(" "),
            s.color
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(dir: &Path, name: &str, content: &str) -> Result<PathBuf, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("mkdir {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("write {}: {e}", path.display()))?;
    Ok(path)
}

/// Least-squares slope of ln(y) against ln(x) over positive points.
pub fn loglog_order(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}
