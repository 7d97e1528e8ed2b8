//! Deterministic emitters. Floats are written with 17 significant digits so
//! identical runs give identical bytes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// `x` with 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Header line plus rows, `\n` terminated.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::write(dir.join(name), contents)
}

/// Finite values as numbers, everything else as `null`.
pub fn json_num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

/// Band diagram on a fixed 800 × 600 canvas. The plot area is
/// `x ∈ [70, 780]` for `φ ∈ [0, 2π]` and `y ∈ [560, 30]` for
/// `λ ∈ [0, λ_max]`; samples above the window are clipped, not dropped.
pub struct BandDiagram<'a> {
    pub title: String,
    pub phis: &'a [f64],
    /// `samples[j]` holds the eigenvalues at `phis[j]`.
    pub samples: &'a [Vec<f64>],
    pub lambda_max: f64,
    /// `(label, λ)` horizontal reference lines.
    pub references: Vec<(&'a str, f64)>,
}

const X0: f64 = 70.0;
const X1: f64 = 780.0;
const Y0: f64 = 560.0;
const Y1: f64 = 30.0;

impl BandDiagram<'_> {
    fn x(&self, phi: f64) -> f64 {
        X0 + (X1 - X0) * phi / (2.0 * PI)
    }

    fn y(&self, lambda: f64) -> f64 {
        Y0 + (Y1 - Y0) * lambda / self.lambda_max
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600">"#
        );
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot"><rect x="{X0}" y="{Y1}" width="{}" height="{}"/></clipPath></defs>"#,
            X1 - X0,
            Y0 - Y1
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="{X0}" y="{Y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            X1 - X0,
            Y0 - Y1
        );
        let _ = writeln!(
            s,
            r#"<text x="400" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            self.title
        );
        for (label, phi) in [("0", 0.0), ("π", PI), ("2π", 2.0 * PI)] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="580" text-anchor="middle" font-size="12">{label}</text>"#,
                self.x(phi)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="400" y="596" text-anchor="middle" font-size="12">φ</text>"#
        );
        for i in 0..=4 {
            let l = self.lambda_max * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="12">{l:.3}</text>"#,
                X0 - 6.0,
                self.y(l) + 4.0
            );
        }
        let _ = writeln!(s, r#"<text x="14" y="300" font-size="12">λ</text>"#);
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for (label, l) in &self.references {
            let y = self.y(*l);
            let _ = writeln!(
                s,
                r#"<line class="reference" x1="{X0}" y1="{y:.2}" x2="{X1}" y2="{y:.2}" stroke="red" stroke-dasharray="6 4"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" font-size="12" fill="red">{label}</text>"#,
                X1 - 30.0,
                y - 4.0
            );
        }
        for (phi, values) in self.phis.iter().zip(self.samples) {
            for &l in values {
                let _ = writeln!(
                    s,
                    r#"<circle class="sample" cx="{:.2}" cy="{:.2}" r="2.5" fill="navy"/>"#,
                    self.x(*phi),
                    self.y(l)
                );
            }
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}
