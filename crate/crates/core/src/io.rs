//! Run artifacts: CSV tables, JSON documents and SVG plots. Every file is
//! written to a temporary sibling first and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::controller::TrackingRun;
use crate::error::{Error, Result};
use crate::integrator::{write_matrix_header, write_matrix_row};

pub const RUN_CSV: &str = "run.csv";
pub const STATES_CSV: &str = "states.csv";
pub const META_JSON: &str = "meta.json";
pub const PLAN_JSON: &str = "plan.json";
pub const ERROR_SVG: &str = "error.svg";
pub const CONTROLS_SVG: &str = "controls.svg";

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

/// `t, err, V_Z, u_1..u_m, v_1..v_m`.
pub fn write_run_csv<W: Write>(run: &TrackingRun, mut out: W) -> Result<()> {
    let m = run.m();
    write!(out, "t,err,V_Z")?;
    for k in 1..=m {
        write!(out, ",u_{k}")?;
    }
    for k in 1..=m {
        write!(out, ",v_{k}")?;
    }
    writeln!(out)?;
    for i in 0..run.len() {
        write!(out, "{},{},{}", run.times[i], run.err[i], run.v_z[i])?;
        for x in run.u[i].iter().chain(&run.v[i]) {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `t`, then `X`, `X_r` and `Z` entries, every `stride`-th sample plus the
/// last one.
pub fn write_states_csv<W: Write>(run: &TrackingRun, stride: usize, mut out: W) -> Result<()> {
    let n = run.n();
    write!(out, "t")?;
    for prefix in ["x", "xr", "z"] {
        write_matrix_header(&mut out, prefix, n)?;
    }
    writeln!(out)?;
    let last = run.len().saturating_sub(1);
    for i in (0..run.len()).filter(|&i| i % stride.max(1) == 0 || i == last) {
        write!(out, "{}", run.times[i])?;
        write_matrix_row(&mut out, run.x[i].as_matrix())?;
        write_matrix_row(&mut out, run.xr[i].as_matrix())?;
        write_matrix_row(&mut out, run.z[i].as_matrix())?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_run_files(dir: &Path, run: &TrackingRun, states_stride: usize) -> Result<()> {
    let mut buf = Vec::new();
    write_run_csv(run, &mut buf)?;
    atomic_write(&dir.join(RUN_CSV), &buf)?;
    buf.clear();
    write_states_csv(run, states_stride, &mut buf)?;
    atomic_write(&dir.join(STATES_CSV), &buf)
}

/// A numeric CSV with a header row.
#[derive(Clone, Debug)]
pub struct RunTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RunTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("empty CSV".into()))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(Error::Format(format!(
                    "line {}: {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("CSV has no data rows".into()));
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const MAX_POINTS: usize = 4000;

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    log_y: bool,
    series: Vec<(&'a str, Vec<(f64, f64)>)>,
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

fn decimate(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points;
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let last = points.len() - 1;
    points
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, p)| p)
        .collect()
}

fn render(panels: &[Panel<'_>], x_label: &str) -> String {
    let (w, ph) = (760.0, 300.0);
    let (ml, mr, mt, mb) = (80.0, 20.0, 36.0, 44.0);
    let height = ph * panels.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, panel) in panels.iter().enumerate() {
        let top = ph * p as f64;
        let tf = |y: f64| if panel.log_y { y.max(1e-16).log10() } else { y };
        let all = panel.series.iter().flat_map(|(_, pts)| pts.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(tf(y));
            y1 = y1.max(tf(y));
        }
        if !x0.is_finite() {
            continue;
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
        let py = |y: f64| top + mt + (1.0 - (tf(y) - y0) / (y1 - y0)) * (ph - mt - mb);
        let py_raw = |y: f64| top + mt + (1.0 - (y - y0) / (y1 - y0)) * (ph - mt - mb);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            top + 22.0,
            panel.title
        );
        let _ = writeln!(
            s,
            r#"<rect x="{ml}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            top + mt,
            w - ml - mr,
            ph - mt - mb
        );
        for tx in nice_ticks(x0, x1, 5) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                px(tx),
                top + ph - mb + 16.0,
                format_tick(tx)
            );
        }
        for ty in nice_ticks(y0, y1, 4) {
            let label = if panel.log_y {
                format!("1e{ty:.1}")
            } else {
                format_tick(ty)
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                ml - 6.0,
                py_raw(ty) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            panel.y_label
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
            w / 2.0,
            top + ph - 8.0
        );
        for (k, (label, pts)) in panel.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut d = String::new();
            for &(x, y) in pts {
                let _ = write!(d, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                d.trim_end()
            );
            let ly = top + mt + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
                w - mr - 90.0,
                w - mr - 70.0,
                w - mr - 64.0,
                ly + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Tracking error against time, logarithmic axis.
pub fn error_plot_svg(times: &[f64], err: &[f64]) -> String {
    let pts = times.iter().copied().zip(err.iter().copied()).collect();
    render(
        &[Panel {
            title: "Tracking error |X - X_r|",
            y_label: "error (log10)",
            log_y: true,
            series: vec![("err", decimate(pts))],
        }],
        "t",
    )
}

/// Two panels on `[0, t_max]`: controls `u_k` on top, `v_k` below.
pub fn controls_plot_svg(
    times: &[f64],
    u: &[(&str, Vec<f64>)],
    v: &[(&str, Vec<f64>)],
    t_max: f64,
) -> String {
    let clip = |ys: &Vec<f64>| -> Vec<(f64, f64)> {
        decimate(
            times
                .iter()
                .copied()
                .zip(ys.iter().copied())
                .filter(|(t, _)| *t <= t_max + 1e-12)
                .collect(),
        )
    };
    render(
        &[
            Panel {
                title: "Controls",
                y_label: "u",
                log_y: false,
                series: u.iter().map(|(l, ys)| (*l, clip(ys))).collect(),
            },
            Panel {
                title: "Feedbacks",
                y_label: "v",
                log_y: false,
                series: v.iter().map(|(l, ys)| (*l, clip(ys))).collect(),
            },
        ],
        "t",
    )
}

/// Writes both plots for the `run.csv` in `dir` and returns their paths.
pub fn write_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let path = dir.join(RUN_CSV);
    if !path.is_file() {
        return Err(Error::Format(format!("no {RUN_CSV} in {}", dir.display())));
    }
    let table = RunTable::read(&path)?;
    let t = table.column("t")?;
    let err = table.column("err")?;
    let mut out = Vec::new();
    let p = dir.join(ERROR_SVG);
    atomic_write(&p, error_plot_svg(&t, &err).as_bytes())?;
    out.push(p);
    let u = vec![("u_1", table.column("u_1")?), ("u_2", table.column("u_2")?)];
    let v = vec![("v_1", table.column("v_1")?), ("v_2", table.column("v_2")?)];
    let p = dir.join(CONTROLS_SVG);
    atomic_write(&p, controls_plot_svg(&t, &u, &v, 10.0).as_bytes())?;
    out.push(p);
    Ok(out)
}
