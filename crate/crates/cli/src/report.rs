use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use logdecay::decay::DecayFit;

/// One named pass/fail check. `anchor` says which result it exercises.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub anchor: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, anchor: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), anchor, pass, detail: detail.into() }
    }
}

/// Checks and files produced by one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn check(&mut self, name: impl Into<String>, anchor: &'static str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, anchor, pass, detail));
    }

    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// CSV with columns `check,anchor,pass,detail`.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from("check,anchor,pass,detail\n");
        for c in &self.checks {
            let detail = c.detail.replace('"', "'");
            let _ = writeln!(out, "{},\"{}\",{},\"{detail}\"", c.name, c.anchor, c.pass);
        }
        out
    }

    /// Writes every file plus `<command>_checks.csv` into `dir`, sequentially and in order.
    pub fn write(&self, dir: &Path, command: &str) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let summary = (format!("{command}_checks.csv"), self.checks_csv());
        for (name, contents) in self.files.iter().chain(std::iter::once(&summary)) {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Self-contained SVG of a decay curve with the fitted envelopes overlaid.
pub fn decay_svg(times: &[f64], values: &[f64], fits: &[(&str, &DecayFit)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let t0 = times.first().copied().unwrap_or(0.0);
    let t1 = times.last().copied().unwrap_or(1.0).max(t0 + 1e-12);
    let samples = 200;
    let curves: Vec<Vec<(f64, f64)>> = fits
        .iter()
        .map(|(_, fit)| {
            (0..=samples)
                .map(|k| {
                    let t = t0 + (t1 - t0) * k as f64 / samples as f64;
                    (t, fit.eval(t))
                })
                .collect()
        })
        .collect();
    let vmax = values
        .iter()
        .copied()
        .chain(curves.iter().flatten().map(|p| p.1))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-300);
    let x = |t: f64| PAD + (t - t0) / (t1 - t0) * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - (v / vmax).clamp(0.0, 1.0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{b} H{r}" stroke="black" fill="none"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">t</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{t0:.3}</text>"#, PAD, H - PAD + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{t1:.3}</text>"#, W - PAD, H - PAD + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{vmax:.3e}</text>"#, PAD - 4.0, PAD + 4.0);
    for (&t, &v) in times.iter().zip(values) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#, x(t), y(v));
    }
    let colors = ["#c0392b", "#2471a3", "#1e8449"];
    for (k, (curve, (label, fit))) in curves.iter().zip(fits).enumerate() {
        let color = colors[k % colors.len()];
        let mut d = String::new();
        for (i, &(t, v)) in curve.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, x(t), y(v));
        }
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.trim_end());
        let ly = PAD + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{color}">{label}: {:.4e}, {:.4} (r2 {:.4})</text>"#,
            W - PAD - 260.0,
            fit.params[0],
            fit.params[1],
            fit.r2
        );
    }
    s.push_str("</svg>\n");
    s
}
