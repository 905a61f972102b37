use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
    fs::write(&tmp, bytes).map_err(|e| io(e, &tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e, path)
    })
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// In-memory CSV with LF line endings.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).map_err(csv_err)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        self.writer.write_record(fields).map_err(csv_err)
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| CliError::Io(format!("csv: {}", e.error())))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

/// Trailing moving average; the first `window - 1` points average what is
/// available so far.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line plot with optional log-scaled y axis. Non-finite or (on a log axis)
/// non-positive points are skipped. `stamp` becomes an XML comment.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool, stamp: Option<&str>) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 150.0, 30.0, 50.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied().filter(usable))
        .map(|(x, y)| (x, ty(y)))
        .collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    if let Some(stamp) = stamp {
        s.push_str(&format!("<!-- {stamp} -->\n"));
    }
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        (w - right + left) / 2.0,
        escape(title)
    ));
    s.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - bottom,
        w - right
    ));
    s.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - bottom
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let ylab = if log_y { format!("1e{yv:.1}") } else { format!("{yv:.3}") };
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            px(xv),
            h - bottom + 15.0,
            trim_num(xv)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{ylab}</text>\n",
            left - 5.0,
            py(yv) + 3.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        (w - right + left) / 2.0,
        h - 12.0,
        escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{0}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0})\">{1}</text>\n",
        (h - bottom + top) / 2.0,
        escape(y_label)
    ));
    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .copied()
            .filter(usable)
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(ty(y))))
            .collect();
        if !pts.is_empty() {
            // the plotted data, formatted exactly as in the CSV outputs
            let values: Vec<String> = series
                .points
                .iter()
                .copied()
                .filter(usable)
                .map(|(x, y)| format!("{},{}", fmt_x(x), fmt_f64(y)))
                .collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" data-values=\"{}\" points=\"{}\"/>\n",
                values.join(" "),
                pts.join(" ")
            ));
        }
        let ly = top + 15.0 * i as f64 + 10.0;
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{ly}\" x2=\"{1}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            w - right + 10.0,
            w - right + 30.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
            w - right + 35.0,
            ly + 4.0,
            escape(series.label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Integral x values (steps, sweep values) are written as integers, as in the
/// CSV columns they come from.
fn fmt_x(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        format!("{v:.0}")
    } else {
        fmt_f64(v)
    }
}

fn trim_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
