//! The globally regular profile model: trajectories, regimes, and audits.
//!
//! The state is the pair `(A, B)` of the affine front `G(y) = A - B*y`,
//! evolving autonomously under the two kernel integrals of [`crate::quadrature`]
//! from `A(0) = B(0) = 0`.  Both components grow monotonically forever --
//! the slope roughly like `t^{1/(2-K)}` and the intercept like `(K/3) ln B`
//! -- yet no trajectory blows up in finite time.  That global existence
//! rests on a ladder of inequalities (front above the diagonal, intercept
//! pinched below `(K/2) B`, logarithmic gap bounds, growth-rate pinching),
//! each of which this module exposes as a runtime audit with an explicit
//! margin, so a run certifies the regularity mechanism instead of assuming
//! it.
//!
//! Integration uses an embedded Dormand-Prince 5(4) pair with a PI step
//! controller.  Samples are taken by clamping steps to a geometric schedule
//! rather than by dense-output interpolation: every recorded state is a
//! state the integrator actually visited, so audit margins are never blurred
//! by interpolation error.

use crate::diagnostics::TimeSeries;
use crate::quadrature::{rhs, ProfileParams, QuadratureError};
use thiserror::Error;

/// A point on a trajectory of the profile model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState {
    /// Time.
    pub t: f64,
    /// Front intercept A(t).
    pub a: f64,
    /// Front slope B(t).
    pub b: f64,
}

/// The two invariant regions of the phase plane, plus everything else.
///
/// Trajectories start in [`Regime::InitialI`], cross into
/// [`Regime::FinalF`] when the intercept passes 1, and never visit
/// [`Regime::Outside`]; the two named regions are disjoint by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `{0 <= A <= 1, B >= 2/K}` united with `{0 <= B <= 2/K}`.
    InitialI,
    /// `{A > 1, A <= (K/2) B}`.
    FinalF,
    /// Any state in neither region (never reached from the origin).
    Outside,
}

impl Regime {
    /// Short label used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::InitialI => "I",
            Regime::FinalF => "F",
            Regime::Outside => "Outside",
        }
    }
}

/// Classify a state into [`Regime`]s for depletion constant `k`.
pub fn classify_regime(state: &ProfileState, k: f64) -> Regime {
    let threshold = 2.0 / k;
    let in_initial = (state.a >= 0.0 && state.a <= 1.0 && state.b >= threshold)
        || (state.b >= 0.0 && state.b <= threshold && state.a >= 0.0);
    if in_initial {
        Regime::InitialI
    } else if state.a > 1.0 && state.a <= 0.5 * k * state.b {
        Regime::FinalF
    } else {
        Regime::Outside
    }
}

/// Upper end of the exponent range for which the exponential front bound and
/// the auxiliary logarithmic inequality close in the final regime.
///
/// `k_upper_bound(K) = 48 (1 - e^{-6/K}) / (K (K^2 + 4)^2)`; any audit
/// exponent must satisfy `1 < k < k_upper_bound(K)`, and the bound itself
/// stays inside `(1, 2)` across the admissible `K` range.
pub fn k_upper_bound(k: f64) -> f64 {
    assert!(k > 0.0, "depletion constant must be positive");
    let square = k * k + 4.0;
    48.0 * (-(-6.0 / k).exp_m1()) / (k * square * square)
}

/// Midpoint of the admissible audit-exponent range `(1, k_upper_bound(K))`.
pub fn default_audit_exponent(k: f64) -> f64 {
    0.5 * (1.0 + k_upper_bound(k))
}

/// Identifier of one audited inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckId {
    /// Front above the diagonal: `e^{-G(y)} - y >= 0` on `[0, 1]`.
    FrontAboveDiagonal,
    /// Intercept pinched below the slope: `(K/2) B - A > 0` for `t > 0`.
    RatioBound,
    /// Initial-regime front floor: `e^{-G(y)} - (2/K) y >= 0` on `[0, A/B]`.
    EarlyFrontBound,
    /// Final-regime front bound: `(K/2) e^{-G(y)} - y >= 0` on `[0, 1]`.
    LateFrontBound,
    /// Final-regime exponential front bound: `e^{-k G(y)} - y >= 0`.
    LateFrontBoundExp,
    /// Logarithmic gap: `1 - A + ln(K B / 2) >= 0`.
    LogInequalityMain,
    /// Auxiliary logarithmic gap: `1 - k A + ln(k B) >= 0`.
    LogInequalityAux,
    /// Intercept growth-rate ceiling: `e^{3A}/(9 B^2) - dA/dt >= 0`.
    RateAUpper,
    /// Slope growth-rate floor:
    /// `dB/dt - e^{3A} (1 - e^{-6/K}) / (3 K B (K^2/4 + 1)^2) >= 0`.
    RateBLower,
    /// Slope growth-rate ceiling: `e^{3A}/(3 K B) - dB/dt >= 0`.
    RateBUpper,
}

impl CheckId {
    /// Stable snake-case name used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::FrontAboveDiagonal => "front_above_diagonal",
            CheckId::RatioBound => "ratio_bound",
            CheckId::EarlyFrontBound => "early_front_bound",
            CheckId::LateFrontBound => "late_front_bound",
            CheckId::LateFrontBoundExp => "late_front_bound_exp",
            CheckId::LogInequalityMain => "log_inequality_main",
            CheckId::LogInequalityAux => "log_inequality_aux",
            CheckId::RateAUpper => "rate_a_upper",
            CheckId::RateBLower => "rate_b_lower",
            CheckId::RateBUpper => "rate_b_upper",
        }
    }
}

/// Outcome of one audited inequality at one state.
#[derive(Debug, Clone, Copy)]
pub struct AuditReport {
    /// Time of the audited state.
    pub time: f64,
    /// Which inequality was audited.
    pub check: CheckId,
    /// Slack of the inequality; negative means violated.
    pub margin: f64,
    /// True when the margin is below the audit tolerance.
    pub violated: bool,
}

/// Margins above `-AUDIT_TOLERANCE` count as satisfied; the slack allows
/// honest roundoff in margins that are exactly zero analytically.
pub const AUDIT_TOLERANCE: f64 = 1e-12;

fn report(time: f64, check: CheckId, margin: f64) -> AuditReport {
    AuditReport {
        time,
        check,
        margin,
        violated: margin < -AUDIT_TOLERANCE,
    }
}

/// Front height `e^{-G(y)}` for the state's affine profile.
fn front_height(state: &ProfileState, y: f64) -> f64 {
    (state.b * y - state.a).exp()
}

/// Evaluation grid for the pointwise front bounds: 101 uniform points plus
/// the interior critical points of each audited bound, so the reported
/// margin is the bound's true minimum and not a grid artifact.
pub fn default_audit_grid(state: &ProfileState, k: f64, k_exp: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    if state.b > 0.0 {
        // Critical point of e^{-G(y)} - y.
        let diagonal = (state.a - state.b.ln()) / state.b;
        // Shared critical point of (K/2) e^{-G(y)} - y and e^{-G(y)} - (2/K) y.
        let linear = (state.a + (2.0 / (k * state.b)).ln()) / state.b;
        // Critical point of e^{-k G(y)} - y.
        let exponential = (state.a + (1.0 / (k_exp * state.b)).ln() / k_exp) / state.b;
        for y in [diagonal, linear, exponential] {
            if y.is_finite() && y > 0.0 && y < 1.0 {
                grid.push(y);
            }
        }
    }
    grid
}

fn min_margin(grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    grid.iter().map(|&y| f(y)).fold(f64::INFINITY, f64::min)
}

/// Audit the pointwise front bounds of the state's regime over `grid`.
///
/// The diagonal bound is audited in every regime; the linear floor only in
/// the initial regime and only on `y ∈ [0, A/B]`; the two final-regime
/// bounds only in the final regime but over the whole grid.  `k_exp` is
/// the exponent of the exponential bound and must lie in
/// `(1, k_upper_bound(k))` for the audit to be meaningful.
pub fn audit_profile_bounds(
    state: &ProfileState,
    k: f64,
    k_exp: f64,
    grid: &[f64],
) -> Vec<AuditReport> {
    let mut reports = vec![report(
        state.t,
        CheckId::FrontAboveDiagonal,
        min_margin(grid, |y| front_height(state, y) - y),
    )];
    match classify_regime(state, k) {
        Regime::InitialI => {
            // The linear floor is claimed only left of the ratio point
            // y = A/B; to the right the diagonal bound already dominates
            // (and the floor genuinely fails near y = 1 at small times).
            let cutoff = if state.b > 0.0 {
                state.a / state.b
            } else {
                0.0
            };
            let mut eligible: Vec<f64> = grid.iter().copied().filter(|&y| y <= cutoff).collect();
            eligible.push(cutoff.min(1.0));
            reports.push(report(
                state.t,
                CheckId::EarlyFrontBound,
                min_margin(&eligible, |y| front_height(state, y) - 2.0 / k * y),
            ));
        }
        Regime::FinalF => {
            reports.push(report(
                state.t,
                CheckId::LateFrontBound,
                min_margin(grid, |y| 0.5 * k * front_height(state, y) - y),
            ));
            reports.push(report(
                state.t,
                CheckId::LateFrontBoundExp,
                min_margin(grid, |y| (k_exp * (state.b * y - state.a)).exp() - y),
            ));
        }
        Regime::Outside => {}
    }
    reports
}

/// Audit the two logarithmic gap inequalities of the final regime.
///
/// Meaningful for states in [`Regime::FinalF`] with `1 < k_exp <
/// k_upper_bound(k)`; callers gate on the regime.
pub fn audit_inequalities(state: &ProfileState, k: f64, k_exp: f64) -> Vec<AuditReport> {
    vec![
        report(
            state.t,
            CheckId::LogInequalityMain,
            1.0 - state.a + (0.5 * k * state.b).ln(),
        ),
        report(
            state.t,
            CheckId::LogInequalityAux,
            1.0 - k_exp * state.a + (k_exp * state.b).ln(),
        ),
    ]
}

/// Audit the growth-rate pinching of the final regime at a state with known
/// rates `(da, db)`.
///
/// The three margins certify that the intercept rate is capped by
/// `e^{3A}/(9B^2)` while the slope rate is pinched between
/// `e^{3A}(1 - e^{-6/K})/(3KB (K^2/4+1)^2)` and `e^{3A}/(3KB)`; together they
/// force the lockstep growth that prevents finite-time blow-up.  Meaningful
/// in [`Regime::FinalF`] (so `B > 0`); callers gate on the regime.
pub fn audit_pinching(state: &ProfileState, da: f64, db: f64, k: f64) -> Vec<AuditReport> {
    let tall = (3.0 * state.a).exp();
    let quarter = 0.25 * k * k + 1.0;
    vec![
        report(
            state.t,
            CheckId::RateAUpper,
            tall / (9.0 * state.b * state.b) - da,
        ),
        report(
            state.t,
            CheckId::RateBLower,
            db - tall * (-(-6.0 / k).exp_m1()) / (3.0 * k * state.b * quarter * quarter),
        ),
        report(
            state.t,
            CheckId::RateBUpper,
            tall / (3.0 * k * state.b) - db,
        ),
    ]
}

/// Run every audit applicable to `state` in one call.
///
/// Always audits the diagonal front bound and the intercept/slope ratio;
/// adds the regime-specific front bounds, and in the final regime the
/// logarithmic inequalities plus (when rates are supplied) the pinching
/// bounds.
pub fn audit_state(
    state: &ProfileState,
    rates: Option<(f64, f64)>,
    k: f64,
    k_exp: f64,
) -> Vec<AuditReport> {
    let grid = default_audit_grid(state, k, k_exp);
    let mut reports = audit_profile_bounds(state, k, k_exp, &grid);
    let ratio_margin = 0.5 * k * state.b - state.a;
    reports.push(AuditReport {
        time: state.t,
        check: CheckId::RatioBound,
        // Strict inequality away from the origin; equality holds only there.
        violated: state.t > 0.0 && ratio_margin <= 0.0,
        margin: ratio_margin,
    });
    if classify_regime(state, k) == Regime::FinalF {
        reports.extend(audit_inequalities(state, k, k_exp));
        if let Some((da, db)) = rates {
            reports.extend(audit_pinching(state, da, db, k));
        }
    }
    reports
}

/// Geometric sampling schedule: stop times `t_first * 10^(i/per_decade)`.
#[derive(Debug, Clone, Copy)]
pub struct SampleSchedule {
    /// First sampled time after the initial state.
    pub t_first: f64,
    /// Number of samples per decade of time.
    pub per_decade: u32,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        Self {
            t_first: 1e-6,
            per_decade: 64,
        }
    }
}

impl SampleSchedule {
    /// Strictly increasing stop times up to and including `t_end`.
    pub fn stops(&self, t_end: f64) -> Vec<f64> {
        assert!(self.t_first > 0.0 && self.per_decade > 0);
        let mut stops = Vec::new();
        let mut i = 0u32;
        loop {
            let t = self.t_first * 10f64.powf(f64::from(i) / f64::from(self.per_decade));
            if t >= t_end * (1.0 - 1e-12) {
                break;
            }
            stops.push(t);
            i += 1;
        }
        stops.push(t_end);
        stops
    }
}

/// A completed trajectory with its sampled history.
#[derive(Debug, Clone)]
pub struct ProfileRun {
    /// Columns `A`, `B`, `dA`, `dB` over the sample times (including `t = 0`).
    pub series: TimeSeries,
    /// Accepted steps on which `A` or `B` failed to increase (expected 0;
    /// both rates are strictly positive).
    pub monotonicity_violations: u64,
    /// State at the end of integration.
    pub final_state: ProfileState,
}

/// Failure modes of trajectory integration.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProfileError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("step size {h:.3e} fell below the floor at t = {t:.6e}")]
    StepFloor { t: f64, h: f64 },
    #[error("intercept still {a:.6} at the search horizon t = {horizon:.3e}")]
    TransitionNotReached { horizon: f64, a: f64 },
}

// Dormand-Prince 5(4) tableau.  The fifth-order weights equal the last stage
// row, so the last stage evaluates the right-hand side at the accepted state
// (FSAL): each step costs six fresh evaluations and hands the seventh to its
// successor.
const STAGE_2: [f64; 1] = [1.0 / 5.0];
const STAGE_3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const STAGE_4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const STAGE_5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const STAGE_6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const WEIGHTS: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the fifth- and embedded fourth-order weights.
const ERROR_WEIGHTS: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// PI step controller (error exponents 0.7/5 and 0.4/5, the classic pairing
// for fifth-order pairs).
const SAFETY: f64 = 0.9;
const GROW_EXPONENT: f64 = 0.14;
const MEMORY_EXPONENT: f64 = 0.08;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
/// Steps below this fraction of the current time scale abort the run.
const MIN_STEP_REL: f64 = 1e-14;

/// Quadrature tolerance used inside the stepper: two orders tighter than the
/// step tolerance so kernel integration error never masquerades as
/// truncation error, floored where tightening stops paying.
fn quadrature_tol(ode_tol: f64) -> f64 {
    (ode_tol * 1e-2).max(1e-13)
}

/// Embedded Dormand-Prince stepper specialized to the autonomous 2-state
/// profile system.
struct Stepper {
    k: f64,
    quad_tol: f64,
    ode_tol: f64,
    state: ProfileState,
    /// Right-hand side at `state` (FSAL carry-over).
    rates: [f64; 2],
    h: f64,
    previous_error: f64,
}

impl Stepper {
    fn new(k: f64, ode_tol: f64, state: ProfileState) -> Result<Self, ProfileError> {
        let quad_tol = quadrature_tol(ode_tol);
        let rates = eval_rates(k, quad_tol, state.a, state.b)?;
        // Seed the step from the state's own scales; the controller corrects
        // quickly either way.
        let scale = |y: f64, f: f64| (y.abs().max(1.0)) / f.abs().max(1e-12);
        let h = 0.01 * scale(state.a, rates[0]).min(scale(state.b, rates[1]));
        Ok(Self {
            k,
            quad_tol,
            ode_tol,
            state,
            rates,
            h,
            previous_error: 1e-4,
        })
    }

    /// Advance by one accepted step, clamped so `t` never exceeds `t_stop`.
    /// When the clamp binds, `t` lands on `t_stop` exactly.
    fn step_to_at_most(&mut self, t_stop: f64) -> Result<(), ProfileError> {
        debug_assert!(t_stop > self.state.t);
        loop {
            let remaining = t_stop - self.state.t;
            let clamped = self.h >= remaining;
            let h = if clamped { remaining } else { self.h };

            match self.try_step(h)? {
                StepOutcome::Accepted {
                    state,
                    rates,
                    error,
                } => {
                    self.state = state;
                    if clamped {
                        self.state.t = t_stop;
                    }
                    self.rates = rates;
                    let factor = (SAFETY
                        * error.powf(-GROW_EXPONENT)
                        * self.previous_error.powf(MEMORY_EXPONENT))
                    .clamp(MIN_FACTOR, MAX_FACTOR);
                    // Grow from the attempted step, not the clamp.
                    self.h = self.h.max(h) * factor;
                    self.previous_error = error.max(1e-4);
                    return Ok(());
                }
                StepOutcome::Rejected { error } => {
                    let shrink = (SAFETY * error.powf(-0.2)).clamp(MIN_FACTOR, 0.9);
                    self.h = h * shrink;
                    if self.h < MIN_STEP_REL * self.state.t.max(1e-6) {
                        return Err(ProfileError::StepFloor {
                            t: self.state.t,
                            h: self.h,
                        });
                    }
                }
            }
        }
    }

    /// Attempt a single step of size `h`.
    fn try_step(&self, h: f64) -> Result<StepOutcome, ProfileError> {
        let y = [self.state.a, self.state.b];
        let mut stages = [[0.0f64; 2]; 7];
        stages[0] = self.rates;

        let rows: [&[f64]; 5] = [&STAGE_2, &STAGE_3, &STAGE_4, &STAGE_5, &STAGE_6];
        for (stage, row) in rows.iter().enumerate() {
            let mut point = y;
            for (coefficient, k_vec) in row.iter().zip(&stages) {
                point[0] += h * coefficient * k_vec[0];
                point[1] += h * coefficient * k_vec[1];
            }
            if point[0] < 0.0 || point[1] < 0.0 {
                // Stage left the admissible quadrant: reject hard.
                return Ok(StepOutcome::Rejected { error: 4.0 });
            }
            stages[stage + 1] = eval_rates(self.k, self.quad_tol, point[0], point[1])?;
        }

        let mut accepted = y;
        for (weight, k_vec) in WEIGHTS.iter().zip(&stages) {
            accepted[0] += h * weight * k_vec[0];
            accepted[1] += h * weight * k_vec[1];
        }
        if accepted[0] < 0.0 || accepted[1] < 0.0 {
            return Ok(StepOutcome::Rejected { error: 4.0 });
        }
        let end_rates = eval_rates(self.k, self.quad_tol, accepted[0], accepted[1])?;
        stages[6] = end_rates;

        let mut error_norm = 0.0;
        for i in 0..2 {
            let mut e = 0.0;
            for (weight, k_vec) in ERROR_WEIGHTS.iter().zip(&stages) {
                e += weight * k_vec[i];
            }
            e *= h;
            let scale = self.ode_tol + self.ode_tol * y[i].abs().max(accepted[i].abs());
            error_norm += (e / scale) * (e / scale);
        }
        let error = (0.5 * error_norm).sqrt().max(1e-10);

        if error <= 1.0 {
            Ok(StepOutcome::Accepted {
                state: ProfileState {
                    t: self.state.t + h,
                    a: accepted[0],
                    b: accepted[1],
                },
                rates: end_rates,
                error,
            })
        } else {
            Ok(StepOutcome::Rejected { error })
        }
    }
}

enum StepOutcome {
    Accepted {
        state: ProfileState,
        rates: [f64; 2],
        error: f64,
    },
    Rejected {
        error: f64,
    },
}

fn eval_rates(k: f64, quad_tol: f64, a: f64, b: f64) -> Result<[f64; 2], ProfileError> {
    let (da, db) = rhs(&ProfileParams::new(a, b, k), quad_tol)?;
    Ok([da, db])
}

/// Integrate the profile model from the origin to `t_end`.
///
/// Samples land on the geometric `schedule` (plus the initial state), each
/// row holding `A`, `B` and the rates `dA`, `dB` at a genuinely visited
/// state.  `ode_tol` is used as both absolute and relative step tolerance.
pub fn integrate(
    k: f64,
    t_end: f64,
    ode_tol: f64,
    schedule: &SampleSchedule,
) -> Result<ProfileRun, ProfileError> {
    assert!(k > 0.0, "depletion constant must be positive");
    assert!(
        t_end > 0.0 && t_end.is_finite(),
        "t_end must be positive and finite"
    );
    assert!(
        ode_tol > 0.0 && ode_tol < 0.1,
        "ode_tol must be in (0, 0.1)"
    );

    let mut stepper = Stepper::new(
        k,
        ode_tol,
        ProfileState {
            t: 0.0,
            a: 0.0,
            b: 0.0,
        },
    )?;
    let mut series = TimeSeries::new(&["A", "B", "dA", "dB"]);
    series
        .push_row(0.0, &[0.0, 0.0, stepper.rates[0], stepper.rates[1]])
        .expect("initial row");

    let mut monotonicity_violations = 0u64;
    for stop in schedule.stops(t_end) {
        while stepper.state.t < stop {
            let before = stepper.state;
            stepper.step_to_at_most(stop)?;
            if stepper.state.a <= before.a || stepper.state.b <= before.b {
                monotonicity_violations += 1;
            }
        }
        series
            .push_row(
                stop,
                &[
                    stepper.state.a,
                    stepper.state.b,
                    stepper.rates[0],
                    stepper.rates[1],
                ],
            )
            .expect("schedule times are strictly increasing");
    }

    Ok(ProfileRun {
        series,
        monotonicity_violations,
        final_state: stepper.state,
    })
}

/// Search horizon for [`find_transition_time`]: the crossing happens at
/// order-one times for every admissible `K`, so this is generous.
const TRANSITION_HORIZON: f64 = 1e8;

/// Locate the regime transition: the time `t0` at which `A` first reaches 1.
///
/// Returns `(t0, state at t0)` with `|A(t0) - 1| <= 5e-10`.  The crossing is
/// bracketed during ordinary stepping and then refined by Illinois false
/// position, where each evaluation re-integrates from the bracket's left
/// endpoint at a tightened tolerance -- no interpolation is involved.
pub fn find_transition_time(k: f64, ode_tol: f64) -> Result<(f64, ProfileState), ProfileError> {
    find_transition_time_with_horizon(k, ode_tol, TRANSITION_HORIZON)
}

/// [`find_transition_time`] with an explicit search horizon.
pub fn find_transition_time_with_horizon(
    k: f64,
    ode_tol: f64,
    horizon: f64,
) -> Result<(f64, ProfileState), ProfileError> {
    const TARGET: f64 = 5e-10;
    let mut stepper = Stepper::new(
        k,
        ode_tol,
        ProfileState {
            t: 0.0,
            a: 0.0,
            b: 0.0,
        },
    )?;
    let mut before = stepper.state;
    while stepper.state.a < 1.0 {
        if stepper.state.t >= horizon {
            return Err(ProfileError::TransitionNotReached {
                horizon,
                a: stepper.state.a,
            });
        }
        before = stepper.state;
        stepper.step_to_at_most(2.0 * horizon)?;
    }
    if (stepper.state.a - 1.0).abs() <= TARGET {
        return Ok((stepper.state.t, stepper.state));
    }

    // Illinois false position on g(t) = A(t) - 1 over the bracketing step.
    let refine_tol = quadrature_tol(ode_tol).max(1e-13).min(ode_tol);
    let advance = |to: f64| -> Result<ProfileState, ProfileError> {
        let mut sub = Stepper::new(k, refine_tol, before)?;
        while sub.state.t < to {
            sub.step_to_at_most(to)?;
        }
        Ok(sub.state)
    };

    let (mut lo, mut g_lo) = (before.t, before.a - 1.0);
    let (mut hi, mut g_hi) = (stepper.state.t, stepper.state.a - 1.0);
    let mut last_side = 0i8;
    for _ in 0..100 {
        let mut t_mid = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !t_mid.is_finite() || t_mid <= lo || t_mid >= hi {
            t_mid = 0.5 * (lo + hi);
        }
        let state = advance(t_mid)?;
        let g_mid = state.a - 1.0;
        if g_mid.abs() <= TARGET {
            return Ok((t_mid, state));
        }
        if g_mid < 0.0 {
            lo = t_mid;
            g_lo = g_mid;
            if last_side == -1 {
                g_hi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = t_mid;
            g_hi = g_mid;
            if last_side == 1 {
                g_lo *= 0.5;
            }
            last_side = 1;
        }
    }
    // The residual shrinks superlinearly; a hundred sub-integrations without
    // convergence means the bracket itself is corrupt.
    unreachable!("transition refinement did not converge");
}
