//! Time-series storage and the regressions used to quantify runs.
//!
//! Both models emit sampled scalar histories.  [`TimeSeries`] stores them
//! column-wise under stable names; the free functions turn a series into the
//! headline numbers: a power-law exponent over a time window
//! ([`fit_power_law`]), sup/inf and per-decade means of a derived quantity
//! ([`boundedness_window`]), and a linear-in-`1/v` blow-up time
//! extrapolation ([`extrapolate_blowup`]).

use thiserror::Error;

/// Minimum number of samples a window must contain before any fit is
/// attempted; fewer points make slopes and `r^2` meaningless.
pub const MIN_FIT_POINTS: usize = 8;

/// Column-oriented store for sampled scalar histories over strictly
/// increasing times.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    names: Vec<String>,
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

/// Errors from building or extending a [`TimeSeries`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SeriesError {
    #[error("row has {got} values but the series has {expected} columns")]
    WidthMismatch { expected: usize, got: usize },
    #[error("time {t} does not extend the series (last time {last})")]
    NonIncreasingTime { t: f64, last: f64 },
    #[error("time {t} is not finite")]
    NonFiniteTime { t: f64 },
}

impl TimeSeries {
    /// Create an empty series with the given column names.
    ///
    /// # Panics
    ///
    /// Panics if names repeat; columns are addressed by name throughout.
    pub fn new(names: &[&str]) -> Self {
        for (i, name) in names.iter().enumerate() {
            assert!(!names[..i].contains(name), "duplicate column name {name:?}");
        }
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            times: Vec::new(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    /// Append one sample row at time `t`.
    pub fn push_row(&mut self, t: f64, values: &[f64]) -> Result<(), SeriesError> {
        if !t.is_finite() {
            return Err(SeriesError::NonFiniteTime { t });
        }
        if values.len() != self.columns.len() {
            return Err(SeriesError::WidthMismatch {
                expected: self.columns.len(),
                got: values.len(),
            });
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(SeriesError::NonIncreasingTime { t, last });
            }
        }
        self.times.push(t);
        for (column, &value) in self.columns.iter_mut().zip(values) {
            column.push(value);
        }
        Ok(())
    }

    /// Number of sample rows.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when no rows have been recorded.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sample times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Column names in storage order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Values of the named column, if present.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let index = self.names.iter().position(|n| n == name)?;
        Some(&self.columns[index])
    }

    /// Indices of samples with `t` in the closed window `[lo, hi]`.
    pub fn window_indices(&self, window: (f64, f64)) -> std::ops::Range<usize> {
        let start = self.times.partition_point(|&t| t < window.0);
        let end = self.times.partition_point(|&t| t <= window.1);
        start..end
    }
}

/// A least-squares line with its goodness of fit.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    /// Slope of the fitted line.
    pub slope: f64,
    /// Intercept of the fitted line (in the fit's own coordinates).
    pub intercept: f64,
    /// Coefficient of determination in `[0, 1]`.
    pub r_squared: f64,
    /// The requested time window.
    pub window: (f64, f64),
    /// Number of samples that entered the fit.
    pub n_points: usize,
}

/// Failure modes of the fitting routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("window holds {got} samples; at least {MIN_FIT_POINTS} are required")]
    InsufficientData { got: usize },
    #[error("column {name:?} is not present in the series")]
    UnknownColumn { name: String },
    #[error("fit requires strictly positive values; found {value} at t = {t}")]
    NonPositiveData { t: f64, value: f64 },
    #[error("no blow-up trend: 1/v is not decreasing (slope {slope:.3e})")]
    NoBlowupTrend { slope: f64 },
}

/// Mean-centered least squares of `ys` on `xs`.
///
/// Centering first keeps the normal equations well-conditioned even when the
/// abscissae live twelve orders of magnitude from the origin.  Returns
/// `(slope, intercept, r_squared)` in the original coordinates.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    // Flat data is fit perfectly by its own mean.
    let r_squared = if syy <= f64::EPSILON * y_mean.abs().max(1.0) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    (slope, intercept, r_squared)
}

/// Extract `(t, v)` pairs of `field` inside `window`, requiring enough points.
fn windowed_samples(
    series: &TimeSeries,
    field: &str,
    window: (f64, f64),
) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    let column = series
        .column(field)
        .ok_or_else(|| FitError::UnknownColumn {
            name: field.to_string(),
        })?;
    let range = series.window_indices(window);
    let ts = series.times()[range.clone()].to_vec();
    let vs = column[range].to_vec();
    if ts.len() < MIN_FIT_POINTS {
        return Err(FitError::InsufficientData { got: ts.len() });
    }
    Ok((ts, vs))
}

/// Fit `v ~ c * t^p` over `window` by least squares in log-log coordinates.
///
/// The returned [`FitResult::slope`] is the exponent `p`; the intercept is
/// `ln c`.  All windowed values (and times) must be strictly positive.
pub fn fit_power_law(
    series: &TimeSeries,
    field: &str,
    window: (f64, f64),
) -> Result<FitResult, FitError> {
    let (ts, vs) = windowed_samples(series, field, window)?;
    for (&t, &v) in ts.iter().zip(&vs) {
        if v <= 0.0 || t <= 0.0 {
            return Err(FitError::NonPositiveData { t, value: v });
        }
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        window,
        n_points: xs.len(),
    })
}

/// Sup, inf, and per-decade means of `a - coeff * ln(b)` over a time window.
#[derive(Debug, Clone)]
pub struct BoundednessReport {
    pub sup: f64,
    pub inf: f64,
    /// `(decade start time, mean over that decade)`, in time order.  The
    /// window's right endpoint joins the last decade rather than opening a
    /// new one.
    pub decade_means: Vec<(f64, f64)>,
    /// Largest absolute difference between consecutive decade means.
    pub max_decade_drift: f64,
    pub n_points: usize,
}

/// Track `a - coeff * ln(b)` over `window`, reporting its range and the
/// drift of its per-decade means.
///
/// A bounded result with vanishing drift is the numerical signature that
/// `e^A` and `b^coeff`-type quantities grow in lockstep.
pub fn boundedness_window(
    series: &TimeSeries,
    field_a: &str,
    field_b: &str,
    coeff: f64,
    window: (f64, f64),
) -> Result<BoundednessReport, FitError> {
    let column_b = series
        .column(field_b)
        .ok_or_else(|| FitError::UnknownColumn {
            name: field_b.to_string(),
        })?;
    let (ts, vals_a) = windowed_samples(series, field_a, window)?;
    let range = series.window_indices(window);
    let vals_b = &column_b[range];

    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let n_decades = (window.1 / window.0).log10().round().max(1.0) as usize;
    let mut decade_sums = vec![(0.0f64, 0usize); n_decades];
    for ((&t, &a), &b) in ts.iter().zip(&vals_a).zip(vals_b) {
        if b <= 0.0 {
            return Err(FitError::NonPositiveData { t, value: b });
        }
        let tracked = a - coeff * b.ln();
        sup = sup.max(tracked);
        inf = inf.min(tracked);
        let decade = (((t / window.0).log10() + 1e-9).floor() as usize).min(n_decades - 1);
        decade_sums[decade].0 += tracked;
        decade_sums[decade].1 += 1;
    }
    let decade_means: Vec<(f64, f64)> = decade_sums
        .iter()
        .enumerate()
        .filter(|(_, (_, count))| *count > 0)
        .map(|(i, (sum, count))| (window.0 * 10f64.powi(i as i32), sum / *count as f64))
        .collect();
    let max_decade_drift = decade_means
        .windows(2)
        .map(|pair| (pair[1].1 - pair[0].1).abs())
        .fold(0.0, f64::max);
    Ok(BoundednessReport {
        sup,
        inf,
        decade_means,
        max_decade_drift,
        n_points: ts.len(),
    })
}

/// Extrapolate a finite blow-up time by fitting `1/v` linearly in `t`.
///
/// If `v` blows up like `c/(T - t)`, its reciprocal falls on a straight line
/// hitting zero at `T`.  Returns the root of the fitted line together with
/// the fit itself ([`FitResult::slope`] is the slope of `1/v`); errors with
/// [`FitError::NoBlowupTrend`] when the fitted slope is nonnegative.
pub fn extrapolate_blowup(
    series: &TimeSeries,
    field: &str,
    window: (f64, f64),
) -> Result<(f64, FitResult), FitError> {
    let (ts, vs) = windowed_samples(series, field, window)?;
    for (&t, &v) in ts.iter().zip(&vs) {
        if v <= 0.0 {
            return Err(FitError::NonPositiveData { t, value: v });
        }
    }
    let ys: Vec<f64> = vs.iter().map(|v| 1.0 / v).collect();
    let (slope, intercept, r_squared) = least_squares(&ts, &ys);
    if slope >= 0.0 {
        return Err(FitError::NoBlowupTrend { slope });
    }
    let t_star = -intercept / slope;
    let fit = FitResult {
        slope,
        intercept,
        r_squared,
        window,
        n_points: ts.len(),
    };
    Ok((t_star, fit))
}
