//! `model1` subcommands: the globally regular front-profile trajectory.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use filament::diagnostics::{boundedness_window, fit_power_law, TimeSeries};
use filament::profile::{
    audit_state, classify_regime, default_audit_exponent, find_transition_time, integrate, CheckId,
    ProfileError, ProfileRun, ProfileState, SampleSchedule,
};

use crate::config::Model1Config;
use crate::csvio::{cell, CsvWriter};
use crate::errors::{CliError, CliResult, EXIT_VIOLATIONS};

/// Series CSV header for the profile model.
pub const SERIES_HEADER: [&str; 10] = [
    "t",
    "A",
    "B",
    "dA",
    "dB",
    "regime",
    "core_margin",
    "ratio_margin",
    "ineq1_margin",
    "ineq2_margin",
];

/// Audit CSV header (one row per check per sampled state).
pub const AUDITS_HEADER: [&str; 4] = ["t", "check", "margin", "violated"];

fn numerical(err: ProfileError) -> CliError {
    CliError::Numerical(err.to_string())
}

#[derive(Debug, Serialize)]
struct FinalState {
    t: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
}

#[derive(Debug, Serialize)]
struct Transition {
    t0: f64,
    #[serde(rename = "B_at_t0")]
    b_at_t0: f64,
}

#[derive(Debug, Serialize)]
struct EarlyRatio {
    t: f64,
    measured: f64,
    expected: f64,
}

#[derive(Debug, Serialize)]
struct ExponentFit {
    window: [f64; 2],
    fitted: f64,
    expected: Option<f64>,
    r_squared: f64,
    n_points: usize,
}

#[derive(Debug, Serialize)]
struct BandReport {
    window: [f64; 2],
    coefficient: f64,
    sup: f64,
    inf: f64,
    max_decade_drift: f64,
}

/// Everything `summary.json` records about one profile run.
#[derive(Debug, Serialize)]
pub struct Model1Summary {
    model: &'static str,
    #[serde(rename = "K")]
    k: f64,
    t_end: f64,
    ode_tol: f64,
    per_decade: u32,
    /// True when `K` lies outside `[1, 1.3]`: the run is then outside the
    /// regime the regularity analysis covers and is reported, not asserted.
    exploratory: bool,
    rows: usize,
    monotonicity_violations: u64,
    audit_violations: u64,
    final_state: FinalState,
    transition: Option<Transition>,
    early_ratio: Option<EarlyRatio>,
    slope_exponent: Option<ExponentFit>,
    band: Option<BandReport>,
}

impl Model1Summary {
    /// Total violations that force a nonzero exit.
    pub fn violations(&self) -> u64 {
        self.monotonicity_violations + self.audit_violations
    }
}

/// Margins extracted from one sampled state for the series CSV.
struct RowMargins {
    core: f64,
    ratio: f64,
    ineq1: f64,
    ineq2: f64,
}

/// Run audits for one sample row, stream them to the audit CSV, and pull
/// out the four margins the series CSV carries.
fn audit_row(
    audits: &mut CsvWriter,
    state: &ProfileState,
    rates: (f64, f64),
    k: f64,
    k_exp: f64,
) -> CliResult<(RowMargins, u64)> {
    let mut margins = RowMargins {
        core: f64::NAN,
        ratio: f64::NAN,
        ineq1: f64::NAN,
        ineq2: f64::NAN,
    };
    let mut violated = 0u64;
    for report in audit_state(state, Some(rates), k, k_exp) {
        match report.check {
            CheckId::FrontAboveDiagonal => margins.core = report.margin,
            CheckId::RatioBound => margins.ratio = report.margin,
            CheckId::LogInequalityMain => margins.ineq1 = report.margin,
            CheckId::LogInequalityAux => margins.ineq2 = report.margin,
            _ => {}
        }
        violated += u64::from(report.violated);
        audits.row(&[
            cell(report.time),
            report.check.as_str().to_string(),
            cell(report.margin),
            report.violated.to_string(),
        ])?;
    }
    Ok((margins, violated))
}

/// Integrate, audit, and export one profile run into `config.out`.
pub fn run_one(config: &Model1Config) -> CliResult<Model1Summary> {
    std::fs::create_dir_all(&config.out)?;
    let schedule = SampleSchedule {
        t_first: 1e-6,
        per_decade: config.per_decade,
    };
    let run = integrate(config.k, config.t_end, config.tol, &schedule).map_err(numerical)?;
    let k_exp = default_audit_exponent(config.k);

    let mut series_csv = CsvWriter::create(&config.out.join("series.csv"), &SERIES_HEADER)?;
    let mut audits_csv = CsvWriter::create(&config.out.join("audits.csv"), &AUDITS_HEADER)?;

    let times = run.series.times();
    let col = |name: &str| run.series.column(name).expect("fixed schema");
    let (a, b) = (col("A"), col("B"));
    let (da, db) = (col("dA"), col("dB"));

    let mut audit_violations = 0u64;
    for i in 0..times.len() {
        let state = ProfileState {
            t: times[i],
            a: a[i],
            b: b[i],
        };
        let (margins, violated) =
            audit_row(&mut audits_csv, &state, (da[i], db[i]), config.k, k_exp)?;
        audit_violations += violated;
        series_csv.row(&[
            cell(times[i]),
            cell(a[i]),
            cell(b[i]),
            cell(da[i]),
            cell(db[i]),
            classify_regime(&state, config.k).as_str().to_string(),
            cell(margins.core),
            cell(margins.ratio),
            cell(margins.ineq1),
            cell(margins.ineq2),
        ])?;
    }
    series_csv.finish()?;
    audits_csv.finish()?;

    let summary = summarize(config, &run, audit_violations)?;
    let file = std::fs::File::create(config.out.join("summary.json"))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &summary)
        .map_err(|e| CliError::Config(format!("summary serialization: {e}")))?;
    use std::io::Write;
    writeln!(writer)?;
    Ok(summary)
}

/// Assemble the summary record from a finished run.
fn summarize(
    config: &Model1Config,
    run: &ProfileRun,
    audit_violations: u64,
) -> CliResult<Model1Summary> {
    let transition = match find_transition_time(config.k, config.tol) {
        Ok((t0, state)) => Some(Transition {
            t0,
            b_at_t0: state.b,
        }),
        Err(ProfileError::TransitionNotReached { .. }) => None,
        Err(err) => return Err(numerical(err)),
    };

    let early_ratio = early_ratio(&run.series, config.k);
    let exponent_window = (config.t_end / 100.0, config.t_end);
    let slope_exponent = fit_power_law(&run.series, "B", exponent_window)
        .ok()
        .map(|fit| ExponentFit {
            window: [exponent_window.0, exponent_window.1],
            fitted: fit.slope,
            // 1/(2-K) describes sub-double-exponential growth only below
            // K = 2; past it there is no power-law target to compare with.
            expected: (config.k < 2.0).then(|| 1.0 / (2.0 - config.k)),
            r_squared: fit.r_squared,
            n_points: fit.n_points,
        });
    let band_window = (config.t_end / 1000.0, config.t_end);
    let coefficient = config.k / 3.0;
    let band = boundedness_window(&run.series, "A", "B", coefficient, band_window)
        .ok()
        .map(|report| BandReport {
            window: [band_window.0, band_window.1],
            coefficient,
            sup: report.sup,
            inf: report.inf,
            max_decade_drift: report.max_decade_drift,
        });

    Ok(Model1Summary {
        model: "profile",
        k: config.k,
        t_end: config.t_end,
        ode_tol: config.tol,
        per_decade: config.per_decade,
        exploratory: config.exploratory(),
        rows: run.series.len(),
        monotonicity_violations: run.monotonicity_violations,
        audit_violations,
        final_state: FinalState {
            t: run.final_state.t,
            a: run.final_state.a,
            b: run.final_state.b,
        },
        transition,
        early_ratio,
        slope_exponent,
        band,
    })
}

/// `A/B` at the earliest positive sample against its `t -> 0` limit.
fn early_ratio(series: &TimeSeries, k: f64) -> Option<EarlyRatio> {
    let times = series.times();
    let a = series.column("A")?;
    let b = series.column("B")?;
    let i = times.iter().position(|&t| t > 0.0)?;
    (b[i] > 0.0).then(|| EarlyRatio {
        t: times[i],
        measured: a[i] / b[i],
        expected: 2.0 * k / (2.0 + std::f64::consts::PI),
    })
}

/// `model1 run`: one trajectory, exit 1 when any violation was recorded.
pub fn cmd_run(config: Model1Config) -> CliResult<i32> {
    let summary = run_one(&config)?;
    Ok(if summary.violations() > 0 {
        EXIT_VIOLATIONS
    } else {
        0
    })
}

/// One line of the sweep index.
#[derive(Debug, Serialize)]
struct SweepEntry {
    #[serde(rename = "K")]
    k: f64,
    dir: String,
    fitted_exponent: Option<f64>,
    expected_exponent: Option<f64>,
    violations: u64,
}

/// `model1 sweep`: one run per depletion constant, concurrent, each in its
/// own subdirectory, plus a `sweep.json` index.
pub fn cmd_sweep(ks: &[f64], base: &Model1Config, out: &Path) -> CliResult<i32> {
    if ks.is_empty() {
        return Err(CliError::Config("sweep needs at least one K".into()));
    }
    std::fs::create_dir_all(out)?;
    let summaries: Vec<CliResult<Model1Summary>> = ks
        .par_iter()
        .map(|&k| {
            let config = Model1Config {
                k,
                out: out.join(format!("K_{k}")),
                ..base.clone()
            };
            // Re-validate: sweep lists bypass the single-run constructor.
            if !(k.is_finite() && k > 0.0) {
                return Err(CliError::Config(format!(
                    "K = {k} must be positive and finite"
                )));
            }
            run_one(&config)
        })
        .collect();

    let mut entries = Vec::with_capacity(ks.len());
    let mut worst_exit = 0;
    for (k, outcome) in ks.iter().zip(summaries) {
        let summary = outcome?;
        worst_exit = worst_exit.max(if summary.violations() > 0 {
            EXIT_VIOLATIONS
        } else {
            0
        });
        entries.push(SweepEntry {
            k: *k,
            dir: format!("K_{k}"),
            fitted_exponent: summary.slope_exponent.as_ref().map(|f| f.fitted),
            expected_exponent: summary.slope_exponent.as_ref().and_then(|f| f.expected),
            violations: summary.violations(),
        });
    }
    let index = serde_json::json!({ "model": "profile", "sweep": entries });
    let text = serde_json::to_string_pretty(&index)
        .map_err(|e| CliError::Config(format!("sweep serialization: {e}")))?;
    std::fs::write(out.join("sweep.json"), text + "\n")?;
    Ok(worst_exit)
}
