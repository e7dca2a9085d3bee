//! Quadrature for the two nonlocal integrals that drive the profile model.
//!
//! The model's state is an affine front profile `G(y) = A - B*y` on the unit
//! interval, and its evolution is governed by two integrals of the kernel
//! `e^{-G} / (y^2 + e^{-2G})^2`, one carrying an extra factor `y`.  Both
//! integrands are smooth but develop a sharp interior or boundary layer once
//! the front steepens, so panels are placed adaptively with an embedded
//! 15-point/7-point Gauss-Kronrod pair and bisection of the worst panel.
//!
//! This module is deliberately not a general-purpose integrator: the only
//! integrands it accepts are the two model kernels, selected by [`Integrand`].

use thiserror::Error;

/// Parameters of the affine front profile `G(y) = A - B*y` together with the
/// depletion constant `K` that scales the slope equation.
///
/// `a` is the intercept (A), `b` the slope (B); both are nonnegative on any
/// trajectory of the model.  `k` must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    /// Front intercept A >= 0.
    pub a: f64,
    /// Front slope B >= 0.
    pub b: f64,
    /// Depletion constant K > 0.
    pub k: f64,
}

impl ProfileParams {
    /// Convenience constructor.
    pub fn new(a: f64, b: f64, k: f64) -> Self {
        Self { a, b, k }
    }
}

/// Selector for the two admissible integrands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// `y * e^{-G(y)} / (y^2 + e^{-2G(y)})^2`, the intercept growth kernel.
    A,
    /// `e^{-G(y)} / (y^2 + e^{-2G(y)})^2`, the slope growth kernel.
    B,
}

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    /// The panel-summed Kronrod value.
    pub value: f64,
    /// Sum of per-panel error estimates (conservative).
    pub error_estimate: f64,
    /// Number of integrand evaluations performed.
    pub evaluations: usize,
}

/// Failure modes of the adaptive integrator.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadratureError {
    /// The panel budget was exhausted before the error target was met.
    #[error("quadrature did not converge: estimate {error_estimate:.3e} after {panels} panels")]
    NonConvergence { error_estimate: f64, panels: usize },
    /// The intercept is so large that `e^{3A}` (the kernel value at `y = 0`)
    /// would overflow.  The intercept only grows logarithmically in time, so
    /// reaching this cap means the caller's state is far outside the regime
    /// the model describes; fail loudly instead of saturating silently.
    #[error("front intercept {a} exceeds the overflow guard for e^(3A)")]
    Saturation { a: f64 },
}

/// Intercept value beyond which `e^{3A}` leaves f64 range (ln(MAX) ~ 709.8).
const SATURATION_INTERCEPT: f64 = 230.0;

/// Live-panel budget for one adaptive integration.
pub const DEFAULT_PANEL_BUDGET: usize = 10_000;

/// Absolute tolerance of the bisection used by [`peak_split`].
const PEAK_BISECTION_TOL: f64 = 1e-14;

// 15-point Kronrod nodes on [-1, 1], positive half in decreasing order;
// odd indices are the embedded 7-point Gauss nodes. The tableau keeps the
// full published digits even where they exceed f64 resolution.
#[allow(clippy::excessive_precision)]
const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Weights of the embedded 7-point Gauss rule (for nodes 1, 3, 5, 7 above).
#[allow(clippy::excessive_precision)]
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// `ln(e^x + e^y)` computed without overflow or premature underflow.
fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Shared log-space kernel: `exp(extra - G(y) - 2*ln(y^2 + e^{-2G(y)}))`.
///
/// Direct evaluation of the kernel underflows in the denominator once the
/// front is tall (`(e^{-2G})^2` vanishes below `G ~ 177`) and produces
/// `inf/inf` NaNs once the slope is large, so the whole expression is formed
/// in log space.  The exponent is bounded above by `3A`, which the caller
/// guards against overflow.
fn log_space_kernel(p: &ProfileParams, y: f64, extra: f64) -> f64 {
    let neg_g = p.b * y - p.a;
    let log_denominator = log_add_exp(2.0 * y.ln(), 2.0 * neg_g);
    (extra + neg_g - 2.0 * log_denominator).exp()
}

/// Intercept growth integrand `y * e^{-G(y)} / (y^2 + e^{-2G(y)})^2`.
///
/// Strictly positive on `(0, 1]`, zero at `y = 0`.
pub fn integrand_a(p: &ProfileParams, y: f64) -> f64 {
    debug_assert!(p.a >= 0.0 && p.b >= 0.0);
    if y == 0.0 {
        return 0.0;
    }
    log_space_kernel(p, y, y.ln())
}

/// Slope growth integrand `e^{-G(y)} / (y^2 + e^{-2G(y)})^2`.
///
/// Strictly positive on `[0, 1]`; equals `e^{3A}` at `y = 0`.
pub fn integrand_b(p: &ProfileParams, y: f64) -> f64 {
    debug_assert!(p.a >= 0.0 && p.b >= 0.0);
    log_space_kernel(p, y, 0.0)
}

/// Root of `y = e^{-A + B*y}` in `(0, 1)`, if the front crosses the diagonal.
///
/// The residual `h(y) = y - e^{-G(y)}` satisfies `h(0) < 0` always, so a root
/// is bracketed exactly when `h(1) > 0`; by convexity of the exponential the
/// bracketed root is unique.  On model trajectories the front stays above the
/// diagonal (`A < B`) and this returns `None`; the split matters for
/// off-trajectory parameter studies where the kernel peaks at the crossing.
pub fn peak_split(p: &ProfileParams) -> Option<f64> {
    let residual = |y: f64| y - (p.b * y - p.a).exp();
    if residual(1.0) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > PEAK_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One Gauss-Kronrod 15(7) evaluation over `[lo, hi]`.
///
/// Returns the Kronrod value and `|kronrod - gauss|` as its error estimate.
fn gauss_kronrod_panel(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);
    let mut kronrod = KRONROD_WEIGHTS[7] * f_center;
    let mut gauss = GAUSS_WEIGHTS[3] * f_center;
    for (i, (&node, &weight)) in KRONROD_NODES
        .iter()
        .zip(&KRONROD_WEIGHTS)
        .enumerate()
        .take(7)
    {
        let offset = half * node;
        let pair = f(center - offset) + f(center + offset);
        kronrod += weight * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// Integrate the selected kernel over `[0, 1]` to `max(tol, tol*|value|)`.
///
/// Uses [`DEFAULT_PANEL_BUDGET`] live panels; see
/// [`adaptive_integrate_with_budget`] for an explicit budget.
///
/// # Examples
///
/// ```
/// use filament::quadrature::{adaptive_integrate, Integrand, ProfileParams};
///
/// // At the origin of the model the intercept kernel integrates to exactly 1/4.
/// let p = ProfileParams::new(0.0, 0.0, 1.0);
/// let result = adaptive_integrate(Integrand::A, &p, 1e-12).unwrap();
/// assert!((result.value - 0.25).abs() < 1e-12);
/// ```
pub fn adaptive_integrate(
    f: Integrand,
    p: &ProfileParams,
    tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    adaptive_integrate_with_budget(f, p, tol, DEFAULT_PANEL_BUDGET)
}

/// [`adaptive_integrate`] with an explicit live-panel budget.
pub fn adaptive_integrate_with_budget(
    f: Integrand,
    p: &ProfileParams,
    tol: f64,
    panel_budget: usize,
) -> Result<QuadratureResult, QuadratureError> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(
        p.a >= 0.0 && p.b >= 0.0 && p.k > 0.0,
        "invalid profile parameters"
    );
    if p.a > SATURATION_INTERCEPT {
        return Err(QuadratureError::Saturation { a: p.a });
    }
    let eval = |y: f64| match f {
        Integrand::A => integrand_a(p, y),
        Integrand::B => integrand_b(p, y),
    };

    // Seed panels at the kernel's structural break points: the diagonal
    // crossing (interior peak) when present, and the front's own scale while
    // the slope is still shallow.
    let mut cuts = vec![0.0, 1.0];
    if let Some(root) = peak_split(p) {
        cuts.push(root);
    }
    if p.b < 1.0 {
        let front_scale = 3.0 * (-p.a).exp();
        if front_scale < 1.0 && front_scale > 0.0 {
            cuts.push(front_scale);
        }
    }
    // A geometric ladder from below the smallest structural scale up to 1.
    // Steep fronts concentrate all mass in a layer of width ~1/(3B) at the
    // origin; without a seed panel down there every node of a coarse panel
    // lands in the dead zone and adaptivity sees nothing to refine.
    let scale = (-p.a).exp().min((1.0 + 3.0 * p.b).recip()) / 8.0;
    let mut rung = scale;
    while rung < 1.0 {
        cuts.push(rung);
        rung *= 4.0;
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut evaluations = 0usize;
    let mut panels: Vec<Panel> = Vec::new();
    for pair in cuts.windows(2) {
        let (value, error) = gauss_kronrod_panel(eval, pair[0], pair[1]);
        evaluations += 15;
        panels.push(Panel {
            lo: pair[0],
            hi: pair[1],
            value,
            error,
        });
    }

    loop {
        let total_value: f64 = panels.iter().map(|panel| panel.value).sum();
        let total_error: f64 = panels.iter().map(|panel| panel.error).sum();
        if total_error <= tol * total_value.abs().max(1.0) {
            // Re-sum left to right for a deterministic, well-ordered total.
            panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            let value = panels.iter().map(|panel| panel.value).sum();
            return Ok(QuadratureResult {
                value,
                error_estimate: total_error,
                evaluations,
            });
        }
        if panels.len() + 1 > panel_budget {
            return Err(QuadratureError::NonConvergence {
                error_estimate: total_error,
                panels: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { lo, hi, .. } = panels[worst];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Panel narrower than f64 spacing: no further refinement possible.
            return Err(QuadratureError::NonConvergence {
                error_estimate: panels.iter().map(|panel| panel.error).sum(),
                panels: panels.len(),
            });
        }
        let (left_value, left_error) = gauss_kronrod_panel(eval, lo, mid);
        let (right_value, right_error) = gauss_kronrod_panel(eval, mid, hi);
        evaluations += 30;
        panels[worst] = Panel {
            lo,
            hi: mid,
            value: left_value,
            error: left_error,
        };
        panels.push(Panel {
            lo: mid,
            hi,
            value: right_value,
            error: right_error,
        });
    }
}

/// Growth rates `(dA/dt, dB/dt)` of the profile at parameters `p`.
///
/// `dA/dt` integrates [`Integrand::A`]; `dB/dt` integrates [`Integrand::B`]
/// and divides by the depletion constant.  Both rates are strictly positive.
///
/// # Examples
///
/// ```
/// use filament::quadrature::{rhs, ProfileParams};
///
/// let (da, db) = rhs(&ProfileParams::new(0.0, 0.0, 1.0), 1e-12).unwrap();
/// assert!((da - 0.25).abs() < 1e-11);
/// assert!((db - (0.25 + std::f64::consts::PI / 8.0)).abs() < 1e-11);
/// ```
pub fn rhs(p: &ProfileParams, tol: f64) -> Result<(f64, f64), QuadratureError> {
    let growth_a = adaptive_integrate(Integrand::A, p, tol)?;
    let growth_b = adaptive_integrate(Integrand::B, p, tol)?;
    Ok((growth_a.value, growth_b.value / p.k))
}

/// Closed-form `(dA/dt, dB/dt)` for a flat front (`B = 0`), used as a test
/// oracle for the adaptive integrator.
///
/// With `B = 0` the kernel denominator is `(y^2 + e^{-2A})^2` and both
/// integrals reduce to elementary antiderivatives.  Writing `a = e^{-A}`:
///
/// ```text
/// dA/dt = 1/(2a) - a / (2(1 + a^2))
/// dB/dt = (1/K) * [ 1/(2a(1 + a^2)) + arctan(1/a)/(2a^2) ]
/// ```
pub fn oracle_rhs_b0(intercept: f64, k: f64) -> (f64, f64) {
    let front = (-intercept).exp();
    let da = 0.5 / front - front / (2.0 * (1.0 + front * front));
    let db = (1.0 / (2.0 * front * (1.0 + front * front))
        + (1.0 / front).atan() / (2.0 * front * front))
        / k;
    (da, db)
}
