//! End-to-end tests of the command-line interface: exit codes, file
//! outputs, determinism, and the summary/CSV round-trip guarantee.

use std::path::Path;
use std::process::Command;

use filament::diagnostics::{boundedness_window, extrapolate_blowup, fit_power_law, TimeSeries};

fn filament() -> Command {
    Command::new(env!("CARGO_BIN_EXE_filament"))
}

fn run_ok(args: &[&str]) {
    let output = filament().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "exit {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn exit_code(args: &[&str]) -> i32 {
    filament()
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Rebuild a one-column series from a written CSV.
fn csv_series(path: &Path, field: &str) -> TimeSeries {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let t_idx = header.iter().position(|&h| h == "t").unwrap();
    let v_idx = header.iter().position(|&h| h == field).unwrap();
    let mut series = TimeSeries::new(&[field]);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        series
            .push_row(
                cells[t_idx].parse().unwrap(),
                &[cells[v_idx].parse().unwrap()],
            )
            .unwrap();
    }
    series
}

#[test]
fn invalid_configurations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(exit_code(&["model1", "run", "--K", "0", "--out", out]), 2);
    assert_eq!(
        exit_code(&["model1", "run", "--K", "1.0"]),
        2,
        "missing --out"
    );
    assert_eq!(
        exit_code(&["model2", "run", "--L", "5", "--delta", "0.3", "--out", out]),
        2
    );
    assert_eq!(exit_code(&["model2", "run", "--nx", "8", "--out", out]), 2);
    assert_eq!(
        exit_code(&["report", dir.path().to_str().unwrap()]),
        2,
        "no series.csv"
    );

    // A typo in a config file must not silently fall back to defaults.
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"K": 1.0, "t_emd": 10.0}"#).unwrap();
    assert_eq!(
        exit_code(&[
            "model1",
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out
        ]),
        2
    );
}

#[test]
fn config_file_fills_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let out = dir.path().join("from_file");
    std::fs::write(
        &config,
        format!(r#"{{"K": 1.3, "t_end": 5.0, "out": "{}"}}"#, out.display()),
    )
    .unwrap();
    // Flag overrides the file's K; out comes from the file.
    run_ok(&[
        "model1",
        "run",
        "--config",
        config.to_str().unwrap(),
        "--K",
        "1.15",
    ]);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["K"], 1.15);
    assert_eq!(summary["t_end"], 5.0);
}

#[test]
fn profile_summary_round_trips_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m1");
    run_ok(&[
        "model1",
        "run",
        "--K",
        "1.0",
        "--t-end",
        "1e3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("summary.json"));
    let series = csv_series(&out.join("series.csv"), "B");

    let window = (
        summary["slope_exponent"]["window"][0].as_f64().unwrap(),
        summary["slope_exponent"]["window"][1].as_f64().unwrap(),
    );
    let fit = fit_power_law(&series, "B", window).unwrap();
    let fitted = summary["slope_exponent"]["fitted"].as_f64().unwrap();
    assert!((fit.slope - fitted).abs() <= 1e-12 * fitted.abs());
    let r2 = summary["slope_exponent"]["r_squared"].as_f64().unwrap();
    assert!((fit.r_squared - r2).abs() <= 1e-12);

    // The boundedness band re-derives too (needs both columns).
    let text = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (ti, ai, bi) = (
        header.iter().position(|&h| h == "t").unwrap(),
        header.iter().position(|&h| h == "A").unwrap(),
        header.iter().position(|&h| h == "B").unwrap(),
    );
    let mut ab = TimeSeries::new(&["A", "B"]);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        ab.push_row(
            cells[ti].parse().unwrap(),
            &[cells[ai].parse().unwrap(), cells[bi].parse().unwrap()],
        )
        .unwrap();
    }
    let band_window = (
        summary["band"]["window"][0].as_f64().unwrap(),
        summary["band"]["window"][1].as_f64().unwrap(),
    );
    let coeff = summary["band"]["coefficient"].as_f64().unwrap();
    let band = boundedness_window(&ab, "A", "B", coeff, band_window).unwrap();
    assert!((band.sup - summary["band"]["sup"].as_f64().unwrap()).abs() <= 1e-12);
    assert!((band.inf - summary["band"]["inf"].as_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn boundary_summary_round_trips_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m2");
    run_ok(&[
        "model2",
        "run",
        "--nx",
        "16",
        "--ny",
        "16",
        "--stop-Q",
        "100",
        "--d-cap",
        "1e15",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["status"], "blowup");
    let series = csv_series(&out.join("series.csv"), "Q");
    let window = (
        summary["t_star"]["window"][0].as_f64().unwrap(),
        summary["t_star"]["window"][1].as_f64().unwrap(),
    );
    let (t_star, fit) = extrapolate_blowup(&series, "Q", window).unwrap();
    let recorded = summary["t_star"]["t_star"].as_f64().unwrap();
    assert!((t_star - recorded).abs() <= 1e-12 * recorded.abs());
    let r2 = summary["t_star"]["r_squared"].as_f64().unwrap();
    assert!((fit.r_squared - r2).abs() <= 1e-12);
}

#[test]
fn sweep_writes_ordered_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    run_ok(&[
        "model1",
        "sweep",
        "--K",
        "1.0,1.3",
        "--t-end",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    let index = read_json(&out.join("sweep.json"));
    let entries = index["sweep"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["K"], 1.0);
    assert_eq!(entries[1]["K"], 1.3);
    for sub in ["K_1", "K_1.3"] {
        assert!(out.join(sub).join("series.csv").is_file());
        assert!(out.join(sub).join("summary.json").is_file());
    }
}

#[test]
fn report_renders_both_plot_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = dir.path().join("m1");
    let m2 = dir.path().join("m2");
    run_ok(&[
        "model1",
        "run",
        "--K",
        "1.0",
        "--t-end",
        "100",
        "--out",
        m1.to_str().unwrap(),
    ]);
    run_ok(&[
        "model2",
        "run",
        "--nx",
        "16",
        "--ny",
        "16",
        "--stop-Q",
        "100",
        "--d-cap",
        "1e15",
        "--out",
        m2.to_str().unwrap(),
    ]);
    run_ok(&["report", m1.to_str().unwrap()]);
    run_ok(&["report", m2.to_str().unwrap()]);

    let profile_svg = std::fs::read_to_string(m1.join("B_loglog.svg")).unwrap();
    assert!(profile_svg.len() > 500);
    assert!(profile_svg.contains("fitted exponent"));

    let boundary_svg = std::fs::read_to_string(m2.join("invQ.svg")).unwrap();
    assert!(boundary_svg.len() > 500);
    // The extrapolated root is marked on the axis.
    assert!(boundary_svg.contains("<circle"));
    assert!(boundary_svg.contains("T* ="));

    // Re-rendering is byte-identical.
    let before = std::fs::read(m2.join("invQ.svg")).unwrap();
    run_ok(&["report", m2.to_str().unwrap()]);
    assert_eq!(before, std::fs::read(m2.join("invQ.svg")).unwrap());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "model2",
            "run",
            "--nx",
            "16",
            "--ny",
            "16",
            "--stop-Q",
            "100",
            "--d-cap",
            "1e15",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        std::fs::read(a.join("series.csv")).unwrap(),
        std::fs::read(b.join("series.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("summary.json")).unwrap(),
        std::fs::read(b.join("summary.json")).unwrap()
    );
}
