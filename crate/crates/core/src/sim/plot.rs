//! Static SVG figures of a run: position error, velocity, commanded body rate
//! and thrust force.
//!
//! Output is a pure function of the log. Long series are reduced to the
//! per-pixel-column min/max so noise envelopes survive decimation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::telemetry::{LogRecord, RunLog, TelemetryError};

/// File names written by [`plot`], in order.
pub const PLOT_FILES: [&str; 4] = ["position_error.svg", "velocity.svg", "angular_velocity.svg", "thrust.svg"];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("nothing to plot: log is empty")]
    Empty,
}

const W: f64 = 800.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

struct Figure<'a> {
    file: &'a str,
    title: &'a str,
    y_label: &'a str,
    names: &'a [&'a str],
    series: Vec<Vec<f64>>,
}

fn components(log: &RunLog, f: impl Fn(&LogRecord) -> [f64; 3]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(log.len())).collect();
    for r in &log.records {
        for (o, x) in out.iter_mut().zip(f(r)) {
            o.push(x);
        }
    }
    out
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Axis range padded to whole ticks, plus the tick positions.
fn axis(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5);
    let a = (lo / step).floor() * step;
    let b = (hi / step).ceil() * step;
    let n = ((b - a) / step).round() as usize;
    let ticks = (0..=n).map(|i| a + i as f64 * step).collect();
    (a, b, ticks)
}

fn decimals(step: f64) -> usize {
    if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    }
}

fn fmt_tick(x: f64, prec: usize) -> String {
    let s = format!("{x:.prec$}");
    // avoid "-0"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Min/max per horizontal pixel column, in time order.
fn decimate(t: &[f64], y: &[f64], columns: usize) -> Vec<(f64, f64)> {
    if t.len() <= 2 * columns {
        return t.iter().copied().zip(y.iter().copied()).collect();
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let bucket = |x: f64| ((((x - t0) / (t1 - t0)) * columns as f64).floor() as usize).min(columns - 1);
    let mut out = Vec::with_capacity(2 * columns);
    let mut start = 0;
    while start < t.len() {
        let col = bucket(t[start]);
        let mut end = start + 1;
        while end < t.len() && bucket(t[end]) == col {
            end += 1;
        }
        let (mut imin, mut imax) = (start, start);
        for i in start..end {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        let (a, b) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push((t[a], y[a]));
        if b != a {
            out.push((t[b], y[b]));
        }
        start = end;
    }
    out
}

fn render(fig: &Figure<'_>, t: &[f64]) -> String {
    let (t_lo, t_hi) = (t[0], t[t.len() - 1]);
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in &fig.series {
        for &y in s.iter().filter(|y| y.is_finite()) {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 0.0);
    }
    let (xa, xb, xt) = axis(t_lo, t_hi);
    let (ya, yb, yt) = axis(y_lo, y_hi);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - xa) / (xb - xa) * pw;
    let py = |y: f64| TOP + (yb - y) / (yb - ya) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", fig.title);
    let _ = writeln!(
        s,
        r#"<metadata>rows={} t_min={:e} t_max={:e} y_min={:e} y_max={:e}</metadata>"#,
        t.len(),
        t_lo,
        t_hi,
        y_lo,
        y_hi
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);

    let xp = decimals(xt.get(1).map_or(1.0, |b| b - xt[0]));
    for &x in &xt {
        let sx = px(x);
        let _ = writeln!(
            s,
            r##"<line x1="{sx:.2}" y1="{:.2}" x2="{sx:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##,
            TOP,
            TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{sx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            fmt_tick(x, xp)
        );
    }
    let yp = decimals(yt.get(1).map_or(1.0, |b| b - yt[0]));
    for &y in &yt {
        let sy = py(y);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{sy:.2}" x2="{:.2}" y2="{sy:.2}" stroke="#e0e0e0"/>"##,
            LEFT,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy + 4.0,
            fmt_tick(y, yp)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        fig.title
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t (s)</text>"#,
        LEFT + pw / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        fig.y_label
    );

    for (i, (series, name)) in fig.series.iter().zip(fig.names).enumerate() {
        let pts = decimate(t, series, pw as usize);
        let mut d = String::with_capacity(pts.len() * 16);
        for (j, (x, y)) in pts.iter().filter(|(_, y)| y.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, px(*x), py(*y));
        }
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1"><title>{name}</title></path>"#);
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + pw - 90.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{name}</text>"#, lx + 26.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the four figures into `out_dir` (created if needed) and returns
/// their paths.
pub fn plot(log: &RunLog, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    if log.is_empty() {
        return Err(PlotError::Empty);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| PlotError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let t: Vec<f64> = log.records.iter().map(|r| r.t).collect();
    let figs = [
        Figure {
            file: PLOT_FILES[0],
            title: "Position error",
            y_label: "e_p (m)",
            names: &["e_p,x", "e_p,y", "e_p,z"],
            series: components(log, |r| r.e_p.to_array()),
        },
        Figure {
            file: PLOT_FILES[1],
            title: "Velocity",
            y_label: "v (m/s)",
            names: &["v_x", "v_y", "v_z"],
            series: components(log, |r| r.v.to_array()),
        },
        Figure {
            file: PLOT_FILES[2],
            title: "Control effort: angular velocity",
            y_label: "omega (rad/s)",
            names: &["omega_x", "omega_y", "omega_z"],
            series: components(log, |r| r.omega_cmd.to_array()),
        },
        Figure {
            file: PLOT_FILES[3],
            title: "Control effort: thrust T = u_t m_b",
            y_label: "T (N)",
            names: &["T"],
            series: vec![log.records.iter().map(|r| r.thrust_n).collect()],
        },
    ];
    let mut paths = Vec::with_capacity(figs.len());
    for fig in &figs {
        let path = out_dir.join(fig.file);
        std::fs::write(&path, render(fig, &t)).map_err(|source| PlotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

/// [`plot`] from a CSV file.
pub fn plot_csv(csv: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let log = RunLog::load_csv(csv)?;
    plot(&log, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_ticks() {
        assert_eq!(nice_step(60.0, 5), 20.0);
        assert_eq!(nice_step(1.0, 5), 0.2);
        let (a, b, t) = axis(-3.2, 151.0);
        assert!(a <= -3.2 && b >= 151.0);
        assert_eq!(t.first(), Some(&a));
        assert_eq!(t.last(), Some(&b));
        let (a, b, _) = axis(49.05, 49.05);
        assert!(a < 49.05 && b > 49.05);
    }

    #[test]
    fn tick_labels() {
        assert_eq!(fmt_tick(-0.0, 1), "0.0");
        assert_eq!(fmt_tick(20.0, 0), "20");
        assert_eq!(decimals(0.2), 1);
        assert_eq!(decimals(0.05), 2);
    }

    #[test]
    fn decimation_keeps_extremes() {
        let t: Vec<f64> = (0..10_000).map(|i| i as f64 * 1e-3).collect();
        let y: Vec<f64> = (0..10_000).map(|i| if i == 4321 { 7.0 } else { (i as f64 * 0.01).sin() }).collect();
        let d = decimate(&t, &y, 100);
        assert!(d.len() <= 200);
        assert!(d.iter().any(|p| p.1 == 7.0));
        assert!(d.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn empty_log_is_rejected() {
        let dir = std::env::temp_dir();
        assert!(matches!(plot(&RunLog::default(), &dir), Err(PlotError::Empty)));
    }

    #[test]
    fn missing_csv_is_io_error() {
        let err = plot_csv(Path::new("/nonexistent/run.csv"), Path::new("/tmp")).unwrap_err();
        assert!(matches!(err, PlotError::Telemetry(TelemetryError::Io { .. })));
    }
}
