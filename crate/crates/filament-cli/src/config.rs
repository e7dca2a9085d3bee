//! Flat JSON run configuration.
//!
//! A config file is a single flat object whose keys mirror the long flag
//! names (dashes become underscores). Flags always override file values;
//! built-in defaults fill whatever remains. Unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::errors::{CliError, CliResult};

/// File-level settings for the profile model (`model1`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model1File {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
    pub per_decade: Option<u32>,
    pub out: Option<PathBuf>,
}

/// File-level settings for the boundary-layer model (`model2`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model2File {
    pub delta: Option<f64>,
    #[serde(rename = "L")]
    pub width_factor: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    #[serde(rename = "stop_Q")]
    pub stop_q: Option<f64>,
    pub t_max: Option<f64>,
    pub growth_limit: Option<f64>,
    pub d_cap: Option<f64>,
    pub dt_init: Option<f64>,
    pub refine: Option<u32>,
    pub out: Option<PathBuf>,
}

/// Parse a JSON config file of type `T`.
pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fully resolved profile-model run settings.
#[derive(Debug, Clone)]
pub struct Model1Config {
    pub k: f64,
    pub t_end: f64,
    pub tol: f64,
    pub per_decade: u32,
    pub out: PathBuf,
}

impl Model1Config {
    /// Merge flags over file values over defaults, then validate.
    pub fn resolve(
        k: Option<f64>,
        t_end: Option<f64>,
        tol: Option<f64>,
        per_decade: Option<u32>,
        out: Option<PathBuf>,
        file: Model1File,
    ) -> CliResult<Self> {
        let config = Self {
            k: k.or(file.k).unwrap_or(1.0),
            t_end: t_end.or(file.t_end).unwrap_or(1e6),
            tol: tol.or(file.tol).unwrap_or(1e-9),
            per_decade: per_decade.or(file.per_decade).unwrap_or(64),
            out: out
                .or(file.out)
                .ok_or_else(|| CliError::Config("--out is required".into()))?,
        };
        if !(config.k.is_finite() && config.k > 0.0) {
            return Err(CliError::Config(format!(
                "K = {} must be positive and finite",
                config.k
            )));
        }
        if !(config.t_end.is_finite() && config.t_end > 0.0) {
            return Err(CliError::Config(format!(
                "t-end = {} must be positive and finite",
                config.t_end
            )));
        }
        if !(config.tol > 0.0 && config.tol < 0.1) {
            return Err(CliError::Config(format!(
                "tol = {} must lie in (0, 0.1)",
                config.tol
            )));
        }
        if config.per_decade == 0 {
            return Err(CliError::Config("per-decade must be at least 1".into()));
        }
        Ok(config)
    }

    /// True when the depletion constant sits outside the regime covered by
    /// the global-regularity analysis; results are then observational only.
    pub fn exploratory(&self) -> bool {
        !(1.0..=1.3).contains(&self.k)
    }
}

/// Fully resolved boundary-layer run settings.
#[derive(Debug, Clone)]
pub struct Model2Config {
    pub delta: f64,
    pub width_factor: f64,
    pub nx: usize,
    pub ny: usize,
    pub stop_q: f64,
    pub t_max: f64,
    pub growth_limit: f64,
    pub d_cap: f64,
    pub dt_init: f64,
    pub refine: u32,
    pub out: PathBuf,
}

/// Flag-side inputs for [`Model2Config::resolve`]; mirrors the clap struct.
#[derive(Debug, Default)]
pub struct Model2Flags {
    pub delta: Option<f64>,
    pub width_factor: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub stop_q: Option<f64>,
    pub t_max: Option<f64>,
    pub growth_limit: Option<f64>,
    pub d_cap: Option<f64>,
    pub dt_init: Option<f64>,
    pub refine: Option<u32>,
    pub out: Option<PathBuf>,
}

impl Model2Config {
    /// Merge flags over file values over defaults, then validate.
    ///
    /// Geometry and grid preconditions are delegated to the library
    /// constructors so the accepted domain cannot drift from the model's.
    pub fn resolve(flags: Model2Flags, file: Model2File) -> CliResult<Self> {
        let config = Self {
            delta: flags.delta.or(file.delta).unwrap_or(0.01),
            width_factor: flags.width_factor.or(file.width_factor).unwrap_or(50.0),
            nx: flags.nx.or(file.nx).unwrap_or(256),
            ny: flags.ny.or(file.ny).unwrap_or(256),
            stop_q: flags.stop_q.or(file.stop_q).unwrap_or(1e6),
            t_max: flags.t_max.or(file.t_max).unwrap_or(10.0),
            growth_limit: flags.growth_limit.or(file.growth_limit).unwrap_or(0.05),
            d_cap: flags.d_cap.or(file.d_cap).unwrap_or(1e12),
            dt_init: flags.dt_init.or(file.dt_init).unwrap_or(1e-3),
            refine: flags.refine.or(file.refine).unwrap_or(1),
            out: flags
                .out
                .or(file.out)
                .ok_or_else(|| CliError::Config("--out is required".into()))?,
        };
        // Geometry errors surface here (not at run time) for a clean exit 2.
        filament::boundary_layer::InitialData::new(config.delta, config.width_factor)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if config.nx < 16 || config.ny < 16 {
            return Err(CliError::Config(format!(
                "grid {}x{} is too coarse; both sides must be >= 16",
                config.nx, config.ny
            )));
        }
        let positive = [
            ("stop-Q", config.stop_q),
            ("t-max", config.t_max),
            ("growth-limit", config.growth_limit),
            ("dt-init", config.dt_init),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::Config(format!(
                    "{name} = {value} must be positive and finite"
                )));
            }
        }
        if config.d_cap < 1.0 {
            return Err(CliError::Config(format!(
                "d-cap = {} must be at least 1",
                config.d_cap
            )));
        }
        if !(1..=4).contains(&config.refine) {
            return Err(CliError::Config(format!(
                "refine = {} must lie in 1..=4 (each level doubles the grid)",
                config.refine
            )));
        }
        Ok(config)
    }
}
