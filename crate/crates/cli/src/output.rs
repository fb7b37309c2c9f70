//! Output files: CSV traces, footers, SVG plots and run manifests. Every
//! file is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// 17 significant digits, enough for an exact `f64` round trip.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// A CSV table with optional `# key = value` footer lines.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn footer(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    pub fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let mut bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
        for (k, v) in &self.footer {
            writeln!(bytes, "# {k} = {v}")?;
        }
        Ok(bytes)
    }
}

/// Polyline plot of `(x, y)` in a fixed 800x600 view box.
pub fn svg_polyline(points: &[(f64, f64)], x_label: &str, y_label: &str, y_range: (f64, f64)) -> String {
    const W: f64 = 800.0;
    const H: f64 = 600.0;
    const M: f64 = 60.0;
    let (x_lo, x_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 1.0, x_lo + 1.0) };
    let (y_lo, y_hi) = y_range;
    let sx = |x: f64| M + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);
    let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y))).collect();
    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n");
    s.push_str("<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - 2.0 * M,
        H - 2.0 * M
    ));
    if x_lo < 0.0 && x_hi > 0.0 {
        s.push_str(&format!(
            "<line x1=\"{0:.3}\" y1=\"{M}\" x2=\"{0:.3}\" y2=\"{1}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
            sx(0.0),
            H - M
        ));
    }
    if y_lo < 0.0 && y_hi > 0.0 {
        s.push_str(&format!(
            "<line x1=\"{M}\" y1=\"{0:.3}\" x2=\"{1}\" y2=\"{0:.3}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
            sy(0.0),
            W - M
        ));
    }
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    ));
    let label = |x: f64, y: f64, anchor: &str, text: &str| {
        format!("<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"{anchor}\">{text}</text>\n")
    };
    s.push_str(&label(W / 2.0, H - 15.0, "middle", x_label));
    s.push_str(&label(15.0, H / 2.0, "start", y_label));
    s.push_str(&label(M, H - M + 20.0, "middle", &format!("{x_lo}")));
    s.push_str(&label(W - M, H - M + 20.0, "middle", &format!("{x_hi}")));
    s.push_str(&label(M - 5.0, H - M, "end", &format!("{y_lo}")));
    s.push_str(&label(M - 5.0, M + 5.0, "end", &format!("{y_hi}")));
    s.push_str("</svg>\n");
    s
}

/// Everything needed to rerun a command and reproduce its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: std::collections::BTreeMap<String, String>,
    pub seed: u64,
    pub calibration_version: u32,
    pub artifact_version: String,
    pub duration_seconds: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    }
}

/// Files produced by one command, collected before the manifest is written.
pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Outputs { dir, written: Vec::new() }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -2.0 / 3.0, 39.47841760435743, 1e-17, -0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn table_with_footer() {
        let mut t = Table::new(&["a", "b"]);
        t.row(vec!["1".into(), num(0.5)]);
        t.footer("loop_area", 2.5);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1,5.0000000000000000e-1\n# loop_area = 2.5\n");
    }

    #[test]
    fn svg_is_deterministic_and_boxed() {
        let pts = [(-1.0, -0.3), (0.0, 0.0), (1.0, 0.3)];
        let a = svg_polyline(&pts, "V0", "x/a", (-0.5, 0.5));
        assert_eq!(a, svg_polyline(&pts, "V0", "x/a", (-0.5, 0.5)));
        assert!(a.contains("viewBox=\"0 0 800 600\""));
        assert!(a.contains("<polyline"));
        assert!(!a.contains("<script"));
    }
}
