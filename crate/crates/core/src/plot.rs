//! Standalone SVG figures rendered from result files.
//!
//! Rendering only reads what the harness wrote; it never simulates. For every
//! directory below the root:
//!
//! * `trajectories.csv` gives `trajectories.svg` (reference, outputs, input)
//!   and `stage_cost.svg`;
//! * `envelope.csv` gives `envelope.svg` (mean and one-standard-deviation band
//!   of output and input);
//! * `comparison.csv` gives one box plot per metric, `box_<metric>.svg`.
//!
//! Output is byte-deterministic: directories are visited in sorted order and
//! every coordinate is printed with fixed precision.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 250.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 36.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Columns of a CSV file by header name; empty or unparsable fields are NaN.
struct Table {
    columns: BTreeMap<String, Vec<f64>>,
    text: BTreeMap<String, Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns: BTreeMap<String, Vec<f64>> = headers.iter().map(|h| (h.clone(), Vec::new())).collect();
        let mut text: BTreeMap<String, Vec<String>> = headers.iter().map(|h| (h.clone(), Vec::new())).collect();
        for rec in rdr.records() {
            let rec = rec?;
            for (h, field) in headers.iter().zip(rec.iter()) {
                columns
                    .get_mut(h)
                    .expect("header")
                    .push(field.trim().parse().unwrap_or(f64::NAN));
                text.get_mut(h).expect("header").push(field.to_string());
            }
        }
        Ok(Self { columns, text })
    }

    fn col(&self, name: &str) -> Result<&[f64]> {
        self.columns.get(name).map(Vec::as_slice).ok_or_else(|| Error::Config {
            path: name.into(),
            message: "column missing from result file".into(),
        })
    }

    fn has(&self, name: &str) -> bool {
        self.columns.get(name).is_some_and(|c| c.iter().any(|v| v.is_finite()))
    }
}

struct Series<'a> {
    name: &'a str,
    ys: &'a [f64],
    color: &'a str,
    dashed: bool,
}

struct Band<'a> {
    lo: Vec<f64>,
    hi: Vec<f64>,
    color: &'a str,
}

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    xs: &'a [f64],
    series: Vec<Series<'a>>,
    bands: Vec<Band<'a>>,
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { 0.1 * lo.abs() } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }
}

fn axes(svg: &mut String, f: &Frame, title: &str, y_label: &str, x_ticks: bool) {
    let _ = writeln!(
        svg,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        f.x0, f.y0, f.w, f.h
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        f.x0 + f.w / 2.0,
        f.y0 - 12.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        f.x0 - 52.0,
        f.y0 + f.h / 2.0,
        f.x0 - 52.0,
        f.y0 + f.h / 2.0,
        escape(y_label)
    );
    for t in ticks(f.yr.0, f.yr.1) {
        let y = f.y(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
            f.x0,
            f.x0 + f.w,
            f.x0 - 4.0,
            y + 3.5,
            fmt_tick(t)
        );
    }
    if x_ticks {
        for t in ticks(f.xr.0, f.xr.1) {
            let x = f.x(t);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                f.y0 + f.h + 14.0,
                fmt_tick(t)
            );
        }
    }
}

fn polyline(svg: &mut String, f: &Frame, xs: &[f64], ys: &[f64], color: &str, dashed: bool) {
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let mut pts = String::new();
    let flush = |pts: &mut String, svg: &mut String| {
        if !pts.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                pts.trim_end()
            );
            pts.clear();
        }
    };
    for (&x, &y) in xs.iter().zip(ys) {
        if x.is_finite() && y.is_finite() {
            let _ = write!(pts, "{:.2},{:.2} ", f.x(x), f.y(y));
        } else {
            flush(&mut pts, svg);
        }
    }
    flush(&mut pts, svg);
}

fn band(svg: &mut String, f: &Frame, xs: &[f64], b: &Band<'_>) {
    let mut pts = String::new();
    let idx: Vec<usize> = (0..xs.len())
        .filter(|&i| xs[i].is_finite() && b.lo[i].is_finite() && b.hi[i].is_finite())
        .collect();
    if idx.is_empty() {
        return;
    }
    for &i in &idx {
        let _ = write!(pts, "{:.2},{:.2} ", f.x(xs[i]), f.y(b.hi[i]));
    }
    for &i in idx.iter().rev() {
        let _ = write!(pts, "{:.2},{:.2} ", f.x(xs[i]), f.y(b.lo[i]));
    }
    let _ = writeln!(
        svg,
        r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
        pts.trim_end(),
        b.color
    );
}

fn legend(svg: &mut String, x: f64, y: f64, entries: &[(&str, &str, bool)]) {
    for (k, (name, color, dashed)) in entries.iter().enumerate() {
        let yy = y + 14.0 * k as f64;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
            x,
            x + 18.0,
            x + 22.0,
            yy + 3.5,
            escape(name)
        );
    }
}

fn document(height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH:.0} {height:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn line_figure(panels: &[Panel<'_>]) -> String {
    let mut body = String::new();
    let panel_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    for (k, p) in panels.iter().enumerate() {
        let xr = finite_range(p.xs.iter().copied());
        let xr = (
            xr.0.max(p.xs.first().copied().unwrap_or(0.0)),
            xr.1.min(p.xs.last().copied().unwrap_or(1.0)).max(xr.0 + 1.0),
        );
        let yr = finite_range(
            p.series
                .iter()
                .flat_map(|s| s.ys.iter().copied())
                .chain(p.bands.iter().flat_map(|b| b.lo.iter().chain(&b.hi).copied())),
        );
        let f = Frame {
            x0: MARGIN_LEFT,
            y0: k as f64 * PANEL_HEIGHT + MARGIN_TOP,
            w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            h: panel_h,
            xr,
            yr,
        };
        axes(&mut body, &f, p.title, p.y_label, true);
        for b in &p.bands {
            band(&mut body, &f, p.xs, b);
        }
        for s in &p.series {
            polyline(&mut body, &f, p.xs, s.ys, s.color, s.dashed);
        }
        let entries: Vec<(&str, &str, bool)> = p.series.iter().map(|s| (s.name, s.color, s.dashed)).collect();
        legend(&mut body, f.x0 + f.w - 110.0, f.y0 + 12.0, &entries);
    }
    document(PANEL_HEIGHT * panels.len() as f64, &body)
}

fn trajectory_figures(t: &Table) -> Result<(String, String)> {
    let xs = t.col("t")?;
    let mut top = vec![
        Series {
            name: "reference",
            ys: t.col("r")?,
            color: PALETTE[7],
            dashed: true,
        },
        Series {
            name: "y0 (noise-free)",
            ys: t.col("y0")?,
            color: PALETTE[0],
            dashed: false,
        },
    ];
    if t.has("y") {
        top.push(Series {
            name: "y (measured)",
            ys: t.col("y")?,
            color: PALETTE[1],
            dashed: true,
        });
    }
    let panels = [
        Panel {
            title: "Output",
            y_label: "y",
            xs,
            series: top,
            bands: Vec::new(),
        },
        Panel {
            title: "Input",
            y_label: "u",
            xs,
            series: vec![Series {
                name: "u",
                ys: t.col("u")?,
                color: PALETTE[2],
                dashed: false,
            }],
            bands: Vec::new(),
        },
    ];
    let traj = line_figure(&panels);
    let mut cost = vec![Series {
        name: "J_t",
        ys: t.col("J_t")?,
        color: PALETTE[3],
        dashed: false,
    }];
    if t.has("dev") {
        cost.push(Series {
            name: "|y0 - y0_mpc|",
            ys: t.col("dev")?,
            color: PALETTE[4],
            dashed: true,
        });
    }
    let mut panels = vec![Panel {
        title: "Stage cost",
        y_label: "J_t",
        xs,
        series: cost,
        bands: Vec::new(),
    }];
    if t.has("E") {
        panels.push(Panel {
            title: "Linearized vs iterated discrepancy",
            y_label: "E",
            xs,
            series: vec![Series {
                name: "E",
                ys: t.col("E")?,
                color: PALETTE[5],
                dashed: false,
            }],
            bands: Vec::new(),
        });
    }
    Ok((traj, line_figure(&panels)))
}

fn envelope_figure(t: &Table) -> Result<String> {
    let xs = t.col("t")?;
    let spread = |m: &str, s: &str| -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, s) = (t.col(m)?, t.col(s)?);
        Ok((
            m.iter().zip(s).map(|(a, b)| a - b).collect(),
            m.iter().zip(s).map(|(a, b)| a + b).collect(),
        ))
    };
    let (ylo, yhi) = spread("y0_mean", "y0_std")?;
    let (ulo, uhi) = spread("u_mean", "u_std")?;
    let panels = [
        Panel {
            title: "Output, mean and one standard deviation",
            y_label: "y0",
            xs,
            series: vec![
                Series {
                    name: "reference",
                    ys: t.col("r")?,
                    color: PALETTE[7],
                    dashed: true,
                },
                Series {
                    name: "mean y0",
                    ys: t.col("y0_mean")?,
                    color: PALETTE[0],
                    dashed: false,
                },
            ],
            bands: vec![Band {
                lo: ylo,
                hi: yhi,
                color: PALETTE[0],
            }],
        },
        Panel {
            title: "Input, mean and one standard deviation",
            y_label: "u",
            xs,
            series: vec![Series {
                name: "mean u",
                ys: t.col("u_mean")?,
                color: PALETTE[2],
                dashed: false,
            }],
            bands: vec![Band {
                lo: ulo,
                hi: uhi,
                color: PALETTE[2],
            }],
        },
    ];
    Ok(line_figure(&panels))
}

/// Horizontal box plot, one box per row, drawn from stored order statistics.
fn box_figure(title: &str, labels: &[String], stats: &[[f64; 5]]) -> String {
    let label_w = 250.0;
    let row_h = 26.0;
    let h = MARGIN_TOP + row_h * labels.len() as f64 + MARGIN_BOTTOM;
    let xr = finite_range(stats.iter().flatten().copied());
    let f = Frame {
        x0: label_w,
        y0: MARGIN_TOP,
        w: WIDTH - label_w - MARGIN_RIGHT,
        h: row_h * labels.len() as f64,
        xr,
        yr: (0.0, 1.0),
    };
    let mut body = String::new();
    let _ = writeln!(
        body,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        f.x0, f.y0, f.w, f.h
    );
    let _ = writeln!(
        body,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        f.x0 + f.w / 2.0,
        f.y0 - 12.0,
        escape(title)
    );
    for t in ticks(xr.0, xr.1) {
        let x = f.x(t);
        let _ = writeln!(
            body,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
            f.y0,
            f.y0 + f.h,
            f.y0 + f.h + 14.0,
            fmt_tick(t)
        );
    }
    for (k, (label, s)) in labels.iter().zip(stats).enumerate() {
        let yc = f.y0 + row_h * (k as f64 + 0.5);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            label_w - 8.0,
            yc + 3.5,
            escape(label)
        );
        if s.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let [mn, q1, md, q3, mx] = s.map(|v| f.x(v));
        let color = PALETTE[k % PALETTE.len()];
        let half = row_h * 0.3;
        let _ = writeln!(
            body,
            r#"<line x1="{mn:.2}" y1="{yc:.2}" x2="{q1:.2}" y2="{yc:.2}" stroke="{color}"/><line x1="{q3:.2}" y1="{yc:.2}" x2="{mx:.2}" y2="{yc:.2}" stroke="{color}"/>"#
        );
        let _ = writeln!(
            body,
            r#"<rect x="{q1:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.25" stroke="{color}"/><line x1="{md:.2}" y1="{:.2}" x2="{md:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            yc - half,
            (q3 - q1).max(0.5),
            2.0 * half,
            yc - half,
            yc + half
        );
    }
    document(h, &body)
}

fn comparison_figures(t: &Table) -> Vec<(String, String)> {
    let labels = t.text.get("label").cloned().unwrap_or_default();
    let mut out = Vec::new();
    for (metric, title) in [
        ("J_tot", "Total cost J_tot"),
        ("J_tot_u", "Input cost J_tot^u"),
        ("mean_g_norm_sq", "Time-averaged ||g||^2"),
        ("dev", "Mean deviation from the ideal MPC"),
    ] {
        let cols: Vec<Option<&[f64]>> = ["min", "q1", "median", "q3", "max"]
            .iter()
            .map(|s| t.columns.get(&format!("{metric}_{s}")).map(Vec::as_slice))
            .collect();
        if cols.iter().any(Option::is_none) || !t.has(&format!("{metric}_median")) {
            continue;
        }
        let stats: Vec<[f64; 5]> = (0..labels.len())
            .map(|i| std::array::from_fn(|j| cols[j].expect("checked")[i]))
            .collect();
        out.push((format!("box_{metric}.svg"), box_figure(title, &labels, &stats)));
    }
    out
}

fn directories(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = vec![root.to_path_buf()];
    let mut k = 0;
    while k < out.len() {
        let mut children: Vec<PathBuf> = fs::read_dir(&out[k])?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        children.sort();
        out.extend(children);
        k += 1;
    }
    out.sort();
    Ok(out)
}

/// Render every figure under `root`; returns the files written, sorted.
/// Fails when `root` holds no result files.
pub fn plot_dir(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} is not a directory", root.display()),
        )));
    }
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, svg: String| -> Result<()> {
        fs::write(&path, svg)?;
        written.push(path);
        Ok(())
    };
    for dir in directories(root)? {
        let traj = dir.join("trajectories.csv");
        if traj.is_file() {
            let (a, b) = trajectory_figures(&Table::read(&traj)?)?;
            emit(dir.join("trajectories.svg"), a)?;
            emit(dir.join("stage_cost.svg"), b)?;
        }
        let env = dir.join("envelope.csv");
        if env.is_file() {
            emit(dir.join("envelope.svg"), envelope_figure(&Table::read(&env)?)?)?;
        }
        let cmp = dir.join("comparison.csv");
        if cmp.is_file() {
            for (name, svg) in comparison_figures(&Table::read(&cmp)?) {
                emit(dir.join(name), svg)?;
            }
        }
    }
    if written.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "no result files (trajectories.csv, envelope.csv, comparison.csv) under {}",
                root.display()
            ),
        )));
    }
    written.sort();
    Ok(written)
}
