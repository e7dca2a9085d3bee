//! `model2` subcommand: the finite-time-blow-up boundary-layer patch.

use std::path::Path;

use serde::Serialize;

use filament::boundary_layer::{
    run, BoundaryError, DtControls, InitialData, RunResult, RunStatus, StopRule,
};
use filament::diagnostics::extrapolate_blowup;

use crate::config::Model2Config;
use crate::csvio::{cell, CsvWriter};
use crate::errors::{CliError, CliResult, EXIT_VIOLATIONS};

/// Series CSV header for the boundary-layer model.
pub const SERIES_HEADER: [&str; 10] = [
    "t",
    "J",
    "D",
    "Q",
    "H",
    "E",
    "max_omega",
    "box_margin",
    "jchain_margin",
    "jchain_applicable",
];

fn numerical(err: BoundaryError) -> CliError {
    match err {
        BoundaryError::Config(e) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

#[derive(Debug, Serialize)]
struct FinalQuantities {
    #[serde(rename = "J")]
    j: f64,
    #[serde(rename = "D")]
    d: f64,
    #[serde(rename = "Q")]
    q: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "E")]
    e: f64,
}

#[derive(Debug, Serialize)]
struct ViolationCounts {
    d_decrease: u64,
    omega_decrease: u64,
    omega_negative: u64,
    u_decrease: u64,
    boundary_row_drift: u64,
    box_bound: u64,
    total: u64,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    points: u64,
    max_rel_err: f64,
}

#[derive(Debug, Serialize, Clone, Copy)]
struct BlowupFit {
    window: [f64; 2],
    t_star: f64,
    slope: f64,
    r_squared: f64,
    n_points: usize,
}

#[derive(Debug, Serialize)]
struct RefinementLevel {
    level: u32,
    nx: usize,
    ny: usize,
    growth_limit: f64,
    status: String,
    t_star: Option<f64>,
    /// `|T*_level - T*_base| / T*_base`, when both fits exist.
    relative_change: Option<f64>,
}

/// Everything `summary.json` records about one boundary-layer run.
#[derive(Debug, Serialize)]
pub struct Model2Summary {
    model: &'static str,
    delta: f64,
    #[serde(rename = "L")]
    width_factor: f64,
    nx: usize,
    ny: usize,
    #[serde(rename = "stop_Q")]
    stop_q: f64,
    t_max: f64,
    growth_limit: f64,
    d_cap: f64,
    dt_init: f64,
    /// `"blowup"` when a growth marker ended the run, `"t_max"` otherwise.
    status: &'static str,
    /// Which rule fired: `q_max`, `t_max`, `d_cap`, or `dt_floor`.
    stopped_by: &'static str,
    t_final: f64,
    steps: u64,
    rejections: u64,
    rows: usize,
    final_state: FinalQuantities,
    violations: ViolationCounts,
    plateau_max_rel_err: f64,
    omega_oracle: OracleReport,
    t_star: Option<BlowupFit>,
    refinement: Vec<RefinementLevel>,
}

/// Map a terminal status to the summary's headline field.
fn status_label(status: RunStatus) -> &'static str {
    match status {
        RunStatus::TMaxReached => "t_max",
        // Hitting the flux target, the compression cap, or the step floor
        // all mean growth outran the horizon: report blow-up.
        _ => "blowup",
    }
}

/// Execute one run and write its `series.csv` into `dir`.
fn run_to_dir(
    config: &Model2Config,
    nx: usize,
    ny: usize,
    growth_limit: f64,
    dir: &Path,
) -> CliResult<(RunResult, Option<BlowupFit>)> {
    std::fs::create_dir_all(dir)?;
    let init = InitialData::new(config.delta, config.width_factor)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let controls = DtControls {
        dt_init: config.dt_init,
        growth_limit,
        d_cap: config.d_cap,
        ..DtControls::default()
    };
    let stop = StopRule {
        q_max: config.stop_q,
        t_max: config.t_max,
    };
    let result = run(&init, nx, ny, &controls, &stop).map_err(numerical)?;

    let mut csv = CsvWriter::create(&dir.join("series.csv"), &SERIES_HEADER)?;
    let times = result.series.times();
    let columns: Vec<&[f64]> = SERIES_HEADER[1..]
        .iter()
        .map(|name| result.series.column(name).expect("fixed schema"))
        .collect();
    for i in 0..times.len() {
        let mut row = Vec::with_capacity(SERIES_HEADER.len());
        row.push(cell(times[i]));
        row.extend(columns.iter().map(|column| cell(column[i])));
        csv.row(&row)?;
    }
    csv.finish()?;

    let fit = fit_blowup(&result);
    Ok((result, fit))
}

/// Fit `1/Q` over the final decade of flux growth.
fn fit_blowup(result: &RunResult) -> Option<BlowupFit> {
    let q = result.series.column("Q").expect("fixed schema");
    let q_last = *q.last()?;
    let onset = q.iter().position(|&v| v >= q_last / 10.0)?;
    let window = (result.series.times()[onset], result.t_final);
    let (t_star, fit) = extrapolate_blowup(&result.series, "Q", window).ok()?;
    Some(BlowupFit {
        window: [window.0, window.1],
        t_star,
        slope: fit.slope,
        r_squared: fit.r_squared,
        n_points: fit.n_points,
    })
}

/// `model2 run`: base run plus optional refinement ladder.
pub fn cmd_run(config: Model2Config) -> CliResult<i32> {
    let (base, base_fit) = run_to_dir(
        &config,
        config.nx,
        config.ny,
        config.growth_limit,
        &config.out,
    )?;

    let mut refinement = Vec::new();
    for level in 1..config.refine {
        let scale = 1usize << level;
        let (nx, ny) = (config.nx * scale, config.ny * scale);
        let growth_limit = config.growth_limit / scale as f64;
        let dir = config.out.join(format!("refine{level}"));
        let (result, fit) = run_to_dir(&config, nx, ny, growth_limit, &dir)?;
        refinement.push(RefinementLevel {
            level,
            nx,
            ny,
            growth_limit,
            status: status_label(result.status).to_string(),
            t_star: fit.map(|f| f.t_star),
            relative_change: match (&base_fit, &fit) {
                (Some(b), Some(f)) => Some((f.t_star - b.t_star).abs() / b.t_star),
                _ => None,
            },
        });
    }

    let violations = ViolationCounts {
        d_decrease: base.violations.d_decrease,
        omega_decrease: base.violations.omega_decrease,
        omega_negative: base.violations.omega_negative,
        u_decrease: base.violations.u_decrease,
        boundary_row_drift: base.violations.boundary_row_drift,
        box_bound: base.violations.box_bound,
        total: base.violations.total(),
    };
    let exit = if violations.total > 0 {
        EXIT_VIOLATIONS
    } else {
        0
    };

    let summary = Model2Summary {
        model: "boundary_layer",
        delta: config.delta,
        width_factor: config.width_factor,
        nx: config.nx,
        ny: config.ny,
        stop_q: config.stop_q,
        t_max: config.t_max,
        growth_limit: config.growth_limit,
        d_cap: config.d_cap,
        dt_init: config.dt_init,
        status: status_label(base.status),
        stopped_by: base.status.as_str(),
        t_final: base.t_final,
        steps: base.steps,
        rejections: base.rejections,
        rows: base.series.len(),
        final_state: FinalQuantities {
            j: base
                .series
                .column("J")
                .expect("fixed schema")
                .last()
                .copied()
                .unwrap_or(0.0),
            d: base.final_state.d,
            q: base.final_state.q,
            h: base.final_state.h(),
            e: base.final_state.e(config.delta),
        },
        violations,
        plateau_max_rel_err: base.plateau_max_rel_err,
        omega_oracle: OracleReport {
            points: base.omega_oracle_points,
            max_rel_err: base.omega_oracle_max_rel_err,
        },
        t_star: base_fit,
        refinement,
    };
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Config(format!("summary serialization: {e}")))?;
    std::fs::write(config.out.join("summary.json"), text + "\n")?;
    Ok(exit)
}
