//! `report` subcommand: self-contained SVG plots from a finished run
//! directory.
//!
//! The model is detected from the series header: a profile run yields a
//! log-log plot of the front slope (`B_loglog.svg`); a boundary-layer run
//! yields the reciprocal-flux plot with the extrapolated singular time
//! marked (`invQ.svg`).  Plots are rendered directly (no templating), with
//! every coordinate formatted at fixed precision so repeated invocations
//! are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use filament::diagnostics::{extrapolate_blowup, fit_power_law, TimeSeries};

use crate::csvio::{read_table, Table};
use crate::errors::{CliError, CliResult};

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Affine map from data coordinates to pixel coordinates.
struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        // SVG y grows downward.
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Document shell: background, plot box, and title.
fn open_svg(title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="26" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0,
    );
    svg
}

/// Horizontal tick with label under the axis.
fn x_tick(svg: &mut String, frame: &Frame, x: f64, label: &str) {
    let px = frame.px(x);
    let base = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        svg,
        r##"<line x1="{px:.1}" y1="{base:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333" stroke-width="1"/>"##,
        base + 5.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{label}</text>"#,
        base + 20.0
    );
}

/// Vertical tick with label left of the axis.
fn y_tick(svg: &mut String, frame: &Frame, y: f64, label: &str) {
    let py = frame.py(y);
    let _ = writeln!(
        svg,
        r##"<line x1="{:.1}" y1="{py:.1}" x2="{MARGIN_LEFT}" y2="{py:.1}" stroke="#333" stroke-width="1"/>"##,
        MARGIN_LEFT - 5.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{label}</text>"#,
        MARGIN_LEFT - 9.0,
        py + 4.0
    );
}

/// Polyline through data points.
fn polyline(svg: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str, dashed: bool) {
    let mut path = String::new();
    for &(x, y) in points {
        let _ = write!(path, "{:.2},{:.2} ", frame.px(x), frame.py(y));
    }
    let dash = if dashed {
        r#" stroke-dasharray="8,5""#
    } else {
        ""
    };
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
        path.trim_end()
    );
}

fn axis_label(svg: &mut String, x_text: &str, y_text: &str) {
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">{x_text}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0
    );
    let cy = (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{cy:.1}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {cy:.1})">{y_text}</text>"#,
    );
}

fn legend(svg: &mut String, lines: &[String]) {
    for (i, line) in lines.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13">{line}</text>"#,
            MARGIN_LEFT + 14.0,
            MARGIN_TOP + 22.0 + 18.0 * i as f64
        );
    }
}

/// Rebuild an in-memory series (times plus one numeric column) from a table.
fn table_series(table: &Table, field: &str) -> CliResult<TimeSeries> {
    let times = table.numeric_column("t")?;
    let values = table.numeric_column(field)?;
    let mut series = TimeSeries::new(&[field]);
    for (&t, &v) in times.iter().zip(&values) {
        series
            .push_row(t, &[v])
            .map_err(|e| CliError::Config(format!("series.csv: {e}")))?;
    }
    Ok(series)
}

/// Log-log plot of the front slope with the fitted power law overlaid.
fn profile_plot(table: &Table) -> CliResult<String> {
    let times = table.numeric_column("t")?;
    let slopes = table.numeric_column("B")?;
    let points: Vec<(f64, f64)> = times
        .iter()
        .zip(&slopes)
        .filter(|(&t, &b)| t > 0.0 && b > 0.0)
        .map(|(&t, &b)| (t.log10(), b.log10()))
        .collect();
    if points.len() < 2 {
        return Err(CliError::Config(
            "series.csv has no positive samples to plot".into(),
        ));
    }

    let t_end = *times.last().expect("nonempty");
    let window = (t_end / 100.0, t_end);
    let fit = fit_power_law(&table_series(table, "B")?, "B", window)
        .map_err(|e| CliError::Config(format!("power-law fit: {e}")))?;

    let frame = Frame {
        x_min: points
            .iter()
            .map(|p| p.0)
            .fold(f64::INFINITY, f64::min)
            .floor(),
        x_max: points
            .iter()
            .map(|p| p.0)
            .fold(f64::NEG_INFINITY, f64::max)
            .ceil(),
        y_min: points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
            .floor(),
        y_max: points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
            .ceil(),
    };

    let mut svg = open_svg("Front slope growth (log-log)");
    let decades = |lo: f64, hi: f64| -> Vec<i64> {
        let step = (((hi - lo) / 8.0).ceil() as i64).max(1);
        (lo as i64..=hi as i64).step_by(step as usize).collect()
    };
    for exp in decades(frame.x_min, frame.x_max) {
        x_tick(&mut svg, &frame, exp as f64, &format!("1e{exp}"));
    }
    for exp in decades(frame.y_min, frame.y_max) {
        y_tick(&mut svg, &frame, exp as f64, &format!("1e{exp}"));
    }
    polyline(&mut svg, &frame, &points, "#1f77b4", false);

    // Fitted line in log10 coordinates: log10 B = p log10 t + c/ln 10.
    let line: Vec<(f64, f64)> = [window.0, window.1]
        .iter()
        .map(|&t| {
            (
                t.log10(),
                (fit.slope * t.ln() + fit.intercept) / std::f64::consts::LN_10,
            )
        })
        .collect();
    polyline(&mut svg, &frame, &line, "#d62728", true);

    axis_label(&mut svg, "t", "B");
    legend(
        &mut svg,
        &[
            format!("fitted exponent p = {:.6}", fit.slope),
            format!("r&#178; = {:.6}", fit.r_squared),
        ],
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reciprocal-flux plot over the final growth decade with the extrapolated
/// root marked on the time axis.
fn boundary_plot(table: &Table) -> CliResult<String> {
    let times = table.numeric_column("t")?;
    let fluxes = table.numeric_column("Q")?;
    let q_last = *fluxes
        .last()
        .ok_or_else(|| CliError::Config("series.csv has no rows".into()))?;
    let onset = fluxes
        .iter()
        .position(|&q| q >= q_last / 10.0)
        .ok_or_else(|| CliError::Config("no growth recorded".into()))?;
    let window = (times[onset], *times.last().expect("nonempty"));
    let (t_star, fit) = extrapolate_blowup(&table_series(table, "Q")?, "Q", window)
        .map_err(|e| CliError::Config(format!("blow-up extrapolation: {e}")))?;

    let points: Vec<(f64, f64)> = times
        .iter()
        .zip(&fluxes)
        .skip(onset)
        .map(|(&t, &q)| (t, 1.0 / q))
        .collect();
    let y_top = points.iter().map(|p| p.1).fold(0.0, f64::max) * 1.06;
    let frame = Frame {
        x_min: window.0,
        x_max: t_star.max(window.1) + 0.02 * (t_star.max(window.1) - window.0),
        y_min: 0.0,
        y_max: y_top,
    };

    let mut svg = open_svg("Reciprocal flux and extrapolated singular time");
    for i in 0..=5 {
        let x = frame.x_min + (frame.x_max - frame.x_min) * f64::from(i) / 5.0;
        x_tick(&mut svg, &frame, x, &format!("{x:.5}"));
        let y = frame.y_min + (frame.y_max - frame.y_min) * f64::from(i) / 5.0;
        y_tick(&mut svg, &frame, y, &format!("{y:.2e}"));
    }
    polyline(&mut svg, &frame, &points, "#1f77b4", false);

    // Fitted line extended to its root.
    let line = [
        (window.0, fit.slope * window.0 + fit.intercept),
        (t_star, 0.0),
    ];
    polyline(&mut svg, &frame, &line, "#d62728", true);
    let _ = writeln!(
        svg,
        r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#d62728"/>"##,
        frame.px(t_star),
        frame.py(0.0)
    );

    axis_label(&mut svg, "t", "1/Q");
    legend(
        &mut svg,
        &[
            format!("T* = {t_star:.6}"),
            format!("r&#178; = {:.6}", fit.r_squared),
        ],
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// `report`: write the model-appropriate plot next to the data.
pub fn cmd_report(run_dir: &Path) -> CliResult<i32> {
    let series_path = run_dir.join("series.csv");
    if !series_path.is_file() {
        return Err(CliError::Config(format!(
            "{} not found; is this a run directory?",
            series_path.display()
        )));
    }
    let table = read_table(&series_path)?;
    if table.column_index("B").is_some() {
        let svg = profile_plot(&table)?;
        std::fs::write(run_dir.join("B_loglog.svg"), svg)?;
    } else if table.column_index("Q").is_some() {
        let svg = boundary_plot(&table)?;
        std::fs::write(run_dir.join("invQ.svg"), svg)?;
    } else {
        return Err(CliError::Config(
            "series.csv matches neither model's schema".into(),
        ));
    }
    Ok(0)
}
