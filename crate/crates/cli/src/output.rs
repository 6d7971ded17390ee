//! CSV, manifest and SVG writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mpemba_core::{CrossingReport, TimeSeries};

use crate::CliError;

pub const SERIES_HEADER: &str = "depth,mean,stderr,n_realizations,label";
pub const CROSSINGS_HEADER: &str = "label_a,label_b,crossing_depth,significant,margin";

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // exponent after rounding to 12 significant digits
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn check_label(label: &str) -> Result<(), CliError> {
    if label.contains([',', '\n', '\r', '"']) {
        return Err(CliError::Runtime(format!("series label `{label}` cannot be written to CSV")));
    }
    Ok(())
}

pub fn series_csv(series: &TimeSeries) -> Result<String, CliError> {
    check_label(&series.label)?;
    let mut out = format!("{SERIES_HEADER}\n");
    for i in 0..series.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            series.depths[i],
            format_g12(series.mean[i]),
            format_g12(series.stderr[i]),
            series.n_realizations,
            series.label
        )
        .expect("write to string");
    }
    Ok(out)
}

pub fn write_series_csv(series: &TimeSeries, path: &Path) -> Result<(), CliError> {
    write_file(path, &series_csv(series)?)
}

/// Reads a file written by [`write_series_csv`].
pub fn read_series_csv(path: &Path) -> Result<TimeSeries, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let bad = |line: usize, what: &str| CliError::Runtime(format!("{}:{line}: {what}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some(SERIES_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let (mut depths, mut mean, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    let (mut label, mut n_realizations) = (String::new(), 0);
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(i + 2, "expected 5 fields"));
        }
        depths.push(fields[0].parse().map_err(|_| bad(i + 2, "depth"))?);
        mean.push(fields[1].parse().map_err(|_| bad(i + 2, "mean"))?);
        stderr.push(fields[2].parse().map_err(|_| bad(i + 2, "stderr"))?);
        n_realizations = fields[3].parse().map_err(|_| bad(i + 2, "n_realizations"))?;
        label = fields[4].to_string();
    }
    TimeSeries::new(label, depths, mean, stderr, n_realizations.max(1)).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn crossings_csv(reports: &[CrossingReport]) -> Result<String, CliError> {
    let mut out = format!("{CROSSINGS_HEADER}\n");
    for r in reports {
        check_label(&r.pair.0)?;
        check_label(&r.pair.1)?;
        let depth = r.crossing_depth.map(format_g12).unwrap_or_default();
        writeln!(out, "{},{},{depth},{},{}", r.pair.0, r.pair.1, r.significant, format_g12(r.margin))
            .expect("write to string");
    }
    Ok(out)
}

/// File-name-safe form of a series label.
pub fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-') { c } else { '_' })
        .collect()
}

pub fn series_file_name(label: &str) -> String {
    format!("series_{}.csv", sanitize_label(label))
}

/// Reproducibility record written as `manifest.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_echo: String,
    pub master_seed: Option<u64>,
    pub code_version: String,
    pub threads: Option<usize>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "subcommand: {}", self.subcommand);
        let _ = writeln!(out, "code_version: {}", self.code_version);
        match self.master_seed {
            Some(s) => writeln!(out, "master_seed: {s}"),
            None => writeln!(out, "master_seed: none"),
        }
        .expect("write to string");
        match self.threads {
            Some(t) => writeln!(out, "threads: {t}"),
            None => writeln!(out, "threads: default"),
        }
        .expect("write to string");
        let _ = writeln!(out, "wall_time_seconds: {:.3}", self.wall_time_seconds);
        let _ = writeln!(out, "outputs:");
        for p in &self.outputs {
            let _ = writeln!(out, "  {}", p.display());
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out, "notes:");
            for n in &self.notes {
                let _ = writeln!(out, "  {n}");
            }
        }
        let _ = writeln!(out, "config:");
        for line in self.config_echo.lines() {
            let _ = writeln!(out, "  {line}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.render())
    }
}

/// Line plot of several series with error-free polylines; no axes library.
pub fn series_svg(series: &[TimeSeries], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 48.0;
    const COLOURS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
    let points = series.iter().flat_map(|s| s.depths.iter().zip(&s.mean));
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, 0.0f64, f64::MIN);
    for (&d, &m) in points {
        x_max = x_max.max(d as f64);
        y_min = y_min.min(m);
        y_max = y_max.max(m);
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let sx = |d: f64| PAD + d / x_max * (W - 2.0 * PAD);
    let sy = |m: f64| H - PAD - (m - y_min) / (y_max - y_min) * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">depth</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" text-anchor="middle" font-size="10">0</text>"#, H - PAD + 14.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{x_max}</text>"#, W - PAD, H - PAD + 14.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#, PAD - 4.0, sy(y_max) + 4.0, format_g12(y_max));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#, PAD - 4.0, sy(y_min) + 4.0, format_g12(y_min));
    for (k, s) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let pts: Vec<String> =
            s.depths.iter().zip(&s.mean).map(|(&d, &m)| format!("{:.2},{:.2}", sx(d as f64), sy(m))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{colour}">{}</text>"#,
            W - PAD - 90.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
