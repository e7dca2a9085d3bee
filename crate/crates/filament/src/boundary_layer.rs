//! The finite-time blow-up boundary-layer model in Lagrangian coordinates.
//!
//! A thin vorticity patch next to the boundary is discretized by particle
//! labels `(x1, x2)`.  Particles move only horizontally; the back-to-label
//! coordinate `U` tracks where a particle came from, so its current position
//! is `(U/D, x2)`.  Four coupled quantities drive everything:
//!
//! * `J` — a Biot-Savart-type integral of the vorticity over current
//!   positions (computed by [`compute_j`]),
//! * `D` — the accumulated compression `exp(∫J)`, with `dD/dt = J·D`,
//! * `Q` — the accumulated clock `∫D`, with `dQ/dt = D`,
//! * `H = Q²` — stored as derived, never integrated separately.
//!
//! Per particle, `dU/dt = (x2/2)·φ_δ(U)·dH/dt` and `dω/dt = ρ0·D/U`, where
//! `φ_δ` is a plateau profile of height `1/δ` and `ρ0 = x1·φ_δ(x1)·η(x2)`
//! is the frozen initial density.  Vorticity feeds `J`, `J` feeds `D`, `D`
//! feeds `Q` and the vorticity again: the loop closes into a Riccati-type
//! inequality `dQ/dt ≳ Q²` and the solution blows up in finite time — in
//! sharp contrast to the globally regular profile model.
//!
//! On the plateau the dynamics admit closed forms (`U = x1 + x2·H/(2δ)` and
//! the arctan vorticity profile of [`oracle_omega`]); the simulation checks
//! itself against them continuously, and [`audit_box_bound`] /
//! [`audit_j_chain`] record the inequality chain behind the blow-up
//! mechanism.  Everything is deterministic: concurrent row evaluation in
//! [`compute_j`] ends in a fixed-order reduction.

use crate::diagnostics::TimeSeries;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

/// Vertical extent of the vorticity source: `η` vanishes above this height.
pub const ETA_SUPPORT: f64 = 2.0;

/// Height of the smallest vertical cell in [`build_grid`].
///
/// Current positions collapse like `1/D`, so late in a run the active box
/// `x2 ≤ δ²L/H` lives many decades below the patch height; the geometric
/// ladder must keep rows down there or the nonlocal integral starves and the
/// blow-up degenerates into mere exponential growth.  With `D` capped near
/// `1e15`, the box floor sits around `1e-17`.
pub const X2_INNER: f64 = 1e-18;

/// Shape of the smooth transitions of `φ_δ` and `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// Quintic smoothstep `6u⁵ - 15u⁴ + 10u³` (C² at both ends).
    #[default]
    Quintic,
}

/// Validated geometry of the initial vorticity source.
#[derive(Debug, Clone, Copy)]
pub struct InitialData {
    /// Plateau scale δ ∈ (0, 1).
    pub delta: f64,
    /// Plateau width factor L > 5: `φ_δ` holds its plateau on `[δ, Lδ]`.
    pub width_factor: f64,
    /// Support bound of `η` (fixed at [`ETA_SUPPORT`]).
    pub x2_cut: f64,
    /// Transition shape of both cutoffs.
    pub smoothing: Smoothing,
}

/// Rejected initial data or grid sizes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("plateau scale delta = {delta} must lie in (0, 1)")]
    InvalidDelta { delta: f64 },
    #[error("width factor L = {width_factor} must exceed 5")]
    InvalidWidthFactor { width_factor: f64 },
    #[error("patch extent {extent} reaches past 1; need (L+1)·delta < 1")]
    PatchTooWide { extent: f64 },
    #[error("grid {nx}x{ny} is too coarse; both sides must be >= 16")]
    GridTooSmall { nx: usize, ny: usize },
}

/// Quintic smoothstep on `[0, 1]`: `s(0) = 0`, `s(1) = 1`, `s' = s'' = 0`
/// at both ends.
///
/// Clamped to `[0, 1]`: the factored polynomial can stray an ulp outside
/// near the edges, and a cutoff that dips negative would inject sign errors
/// into rates that are provably nonnegative.
fn smoothstep(u: f64) -> f64 {
    (u * u * u * (10.0 + u * (6.0 * u - 15.0))).clamp(0.0, 1.0)
}

impl InitialData {
    /// Validate and build the source geometry.
    pub fn new(delta: f64, width_factor: f64) -> Result<Self, ConfigError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ConfigError::InvalidDelta { delta });
        }
        // Negated form so that NaN fails validation too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(width_factor > 5.0) {
            return Err(ConfigError::InvalidWidthFactor { width_factor });
        }
        let extent = (width_factor + 1.0) * delta;
        if !(delta * width_factor < 1.0 && extent < 1.0) {
            return Err(ConfigError::PatchTooWide { extent });
        }
        Ok(Self {
            delta,
            width_factor,
            x2_cut: ETA_SUPPORT,
            smoothing: Smoothing::Quintic,
        })
    }

    /// Horizontal cutoff: `0` below `δ/2`, rises to `1/δ` at `δ`, plateau
    /// `1/δ` on `[δ, Lδ]`, falls back to `0` at `(L+1)δ`.
    pub fn phi_delta(&self, x: f64) -> f64 {
        let d = self.delta;
        let plateau_end = self.width_factor * d;
        if x <= 0.5 * d {
            0.0
        } else if x < d {
            smoothstep((x - 0.5 * d) / (0.5 * d)) / d
        } else if x <= plateau_end {
            1.0 / d
        } else if x < plateau_end + d {
            (1.0 - smoothstep((x - plateau_end) / d)) / d
        } else {
            0.0
        }
    }

    /// Vertical cutoff: `1` on `[0, 1]`, falls smoothly to `0` at `2`.
    pub fn eta(&self, x2: f64) -> f64 {
        debug_assert!(x2 >= 0.0);
        if x2 <= 1.0 {
            1.0
        } else if x2 < ETA_SUPPORT {
            1.0 - smoothstep(x2 - 1.0)
        } else {
            0.0
        }
    }

    /// Frozen forcing profile `φ_δ(x1)·η(x2) = ρ0/x1`.
    pub fn forcing(&self, x1: f64, x2: f64) -> f64 {
        self.phi_delta(x1) * self.eta(x2)
    }

    /// Frozen initial density `ρ0 = x1·φ_δ(x1)·η(x2)`.
    pub fn rho0(&self, x1: f64, x2: f64) -> f64 {
        x1 * self.forcing(x1, x2)
    }
}

/// The scalar quantities coupling all particles.
#[derive(Debug, Clone, Copy)]
pub struct GlobalQuantities {
    /// Biot-Savart coefficient `J ≥ 0`.
    pub j: f64,
    /// Compression `D = exp(∫J) ≥ 1`.
    pub d: f64,
    /// Clock `Q = ∫D ≥ 0`.
    pub q: f64,
}

impl GlobalQuantities {
    /// State at `t = 0`: no vorticity, unit compression, zero clock.
    pub fn initial() -> Self {
        Self {
            j: 0.0,
            d: 1.0,
            q: 0.0,
        }
    }

    /// `H = Q²`, stored as derived so the identity is exact by construction.
    pub fn h(&self) -> f64 {
        self.q * self.q
    }

    /// Energy ratio `E = H/(δ·D)`.
    pub fn e(&self, delta: f64) -> f64 {
        self.h() / (delta * self.d)
    }
}

/// Tensor grid of Lagrangian particles in label space.
///
/// Storage is row-major by height: particle `(i, j)` lives at
/// `index = j*nx + i`, label `(x1_label[i], x2[j])`.
#[derive(Debug, Clone)]
pub struct ParticleGrid {
    pub nx: usize,
    pub ny: usize,
    /// Horizontal labels, uniform over `[δ/2, (L+1)δ]`.
    pub x1_label: Vec<f64>,
    /// Heights: `0`, then a geometric ladder from [`X2_INNER`] up to
    /// [`ETA_SUPPORT`].
    pub x2: Vec<f64>,
    /// Back-to-label coordinate per particle; starts equal to its label.
    pub u: Vec<f64>,
    /// Vorticity per particle; starts at zero.
    pub omega: Vec<f64>,
    /// Frozen density `ρ0` per particle.
    pub rho0: Vec<f64>,
    /// Frozen forcing `ρ0/x1` per particle.
    pub forcing: Vec<f64>,
}

impl ParticleGrid {
    /// Flat index of particle `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Total particle count.
    pub fn n_particles(&self) -> usize {
        self.nx * self.ny
    }
}

/// Discretize the label rectangle `[δ/2, (L+1)δ] × [0, 2]`.
///
/// Horizontal labels are uniform; heights put one row on the boundary and
/// grade the rest geometrically toward it, so the shrinking active box of
/// the blow-up stays resolved (see [`X2_INNER`]).
pub fn build_grid(init: &InitialData, nx: usize, ny: usize) -> Result<ParticleGrid, ConfigError> {
    if nx < 16 || ny < 16 {
        return Err(ConfigError::GridTooSmall { nx, ny });
    }
    let lo = 0.5 * init.delta;
    let hi = (init.width_factor + 1.0) * init.delta;
    let x1_label: Vec<f64> = (0..nx)
        .map(|i| lo + (hi - lo) * i as f64 / (nx - 1) as f64)
        .collect();

    let mut x2 = vec![0.0; ny];
    let ratio = (X2_INNER / ETA_SUPPORT).powf(1.0 / (ny - 2) as f64);
    for (j, height) in x2.iter_mut().enumerate().skip(1) {
        *height = ETA_SUPPORT * ratio.powi((ny - 1 - j) as i32);
    }

    let mut u = Vec::with_capacity(nx * ny);
    let mut rho0 = Vec::with_capacity(nx * ny);
    let mut forcing = Vec::with_capacity(nx * ny);
    for &height in &x2 {
        for &label in &x1_label {
            u.push(label);
            forcing.push(init.forcing(label, height));
            rho0.push(init.rho0(label, height));
        }
    }
    let omega = vec![0.0; nx * ny];
    Ok(ParticleGrid {
        nx,
        ny,
        x1_label,
        x2,
        u,
        omega,
        rho0,
        forcing,
    })
}

/// Biot-Savart kernel `y1·y2/(y1² + y2²)²` over current positions.
fn kernel(y1: f64, y2: f64) -> f64 {
    let r2 = y1 * y1 + y2 * y2;
    y1 * y2 / (r2 * r2)
}

/// The nonlocal coefficient `J = ∬ y1·y2·ω/|y|⁴ dy` by tensor trapezoid.
///
/// Horizontal cells carry the label measure to current space: each
/// label-adjacent pair spans `Δx1/D`.  On the cutoff plateau the map is a
/// rigid shift, so this equals the spacing of the current positions
/// themselves; where the cutoff fall piles particles up, the label measure
/// keeps their vorticity mass instead of degenerating with the collapsing
/// gap, which is what makes the quadrature stable under refinement.  The
/// `x2 = 0` row contributes nothing (kernel factor `y2`).  Rows may be
/// evaluated concurrently; the cross-row reduction is a fixed-order sum,
/// so the result is bit-stable across thread counts.
pub fn compute_j(grid: &ParticleGrid, d: f64) -> f64 {
    compute_j_arrays(grid, &grid.u, &grid.omega, d)
}

/// [`compute_j`] over explicit state arrays (used for Runge-Kutta stages).
fn compute_j_arrays(grid: &ParticleGrid, u: &[f64], omega: &[f64], d: f64) -> f64 {
    debug_assert!(d >= 1.0);
    let nx = grid.nx;
    let rows: Vec<f64> = (0..grid.ny)
        .into_par_iter()
        .map(|j| {
            let y2 = grid.x2[j];
            if y2 == 0.0 {
                return 0.0;
            }
            let row_u = &u[j * nx..(j + 1) * nx];
            let row_omega = &omega[j * nx..(j + 1) * nx];
            let mut sum = 0.0;
            let mut left = row_omega[0] * kernel(row_u[0] / d, y2);
            for i in 1..nx {
                let right = row_omega[i] * kernel(row_u[i] / d, y2);
                sum += 0.5 * (left + right) * (grid.x1_label[i] - grid.x1_label[i - 1]);
                left = right;
            }
            sum / d
        })
        .collect();

    let ny = grid.ny;
    let mut total = 0.0;
    for (j, row) in rows.iter().enumerate() {
        let weight = if j == 0 {
            0.5 * (grid.x2[1] - grid.x2[0])
        } else if j == ny - 1 {
            0.5 * (grid.x2[ny - 1] - grid.x2[ny - 2])
        } else {
            0.5 * (grid.x2[j + 1] - grid.x2[j - 1])
        };
        total += weight * row;
    }
    total
}

/// Numerical breakdown inside a step (never expected on valid runs).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BoundaryError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{quantity} became non-finite during a step")]
    NonFinite { quantity: &'static str },
}

/// What one accepted RK4 step did to the compression.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    /// `(D_new - D_old)/D_old`; nonnegative since `J ≥ 0`.
    pub d_relative_change: f64,
    /// The step carried `D` past the cap: terminal blow-up signal.
    pub d_cap_reached: bool,
}

// Classical RK4: stage offsets and accumulation weights.
const RK4_STAGES: [(f64, f64); 4] = [(0.0, 1.0), (0.5, 2.0), (0.5, 2.0), (1.0, 1.0)];

/// One classical RK4 step of the coupled `(U, ω, D, Q)` system.
///
/// `J` is recomputed at each of the four stages from the stage's own
/// particle state.  `H` is never integrated: it stays `Q²` by construction.
/// The step always commits; `d_cap_reached` in the report tells the caller
/// the run is over.
pub fn step(
    grid: &mut ParticleGrid,
    gq: &mut GlobalQuantities,
    init: &InitialData,
    dt: f64,
    d_cap: f64,
) -> Result<StepReport, BoundaryError> {
    debug_assert!(dt > 0.0);
    let n = grid.n_particles();
    let nx = grid.nx;
    let u0 = grid.u.clone();
    let omega0 = grid.omega.clone();
    let (d0, q0) = (gq.d, gq.q);

    let mut stage_u = u0.clone();
    let mut stage_omega = omega0.clone();
    let (mut stage_d, mut stage_q) = (d0, q0);
    let mut rate_u = vec![0.0; n];
    let mut rate_omega = vec![0.0; n];
    let (mut rate_d, mut rate_q) = (0.0, 0.0);
    let mut acc_u = vec![0.0; n];
    let mut acc_omega = vec![0.0; n];
    let (mut acc_d, mut acc_q) = (0.0, 0.0);

    for (offset, weight) in RK4_STAGES {
        if offset > 0.0 {
            let h = dt * offset;
            for i in 0..n {
                stage_u[i] = u0[i] + h * rate_u[i];
                stage_omega[i] = omega0[i] + h * rate_omega[i];
            }
            stage_d = d0 + h * rate_d;
            stage_q = q0 + h * rate_q;
        }
        let stage_j = compute_j_arrays(grid, &stage_u, &stage_omega, stage_d);
        for j in 0..grid.ny {
            let height = grid.x2[j];
            for i in 0..nx {
                let idx = j * nx + i;
                rate_u[idx] = height * init.phi_delta(stage_u[idx]) * stage_q * stage_d;
                rate_omega[idx] = grid.rho0[idx] * stage_d / stage_u[idx];
            }
        }
        rate_d = stage_j * stage_d;
        rate_q = stage_d;
        for i in 0..n {
            acc_u[i] += weight * rate_u[i];
            acc_omega[i] += weight * rate_omega[i];
        }
        acc_d += weight * rate_d;
        acc_q += weight * rate_q;
    }

    let scale = dt / 6.0;
    for i in 0..n {
        grid.u[i] = u0[i] + scale * acc_u[i];
        grid.omega[i] = omega0[i] + scale * acc_omega[i];
    }
    // Order-preserving projection.  The exact per-particle flows share one
    // velocity field, so trajectories never cross; a discrete step can
    // overshoot the stiff cutoff fall and land a fast particle past a
    // slower leader.  Pulling the overtaker back onto its leader (whose
    // own small rates are well resolved) stays within the step's
    // truncation error and keeps each row's positions monotone in the
    // label, as the exact map is.  It never moves a particle backward in
    // time: before the step u[i] <= u[i+1], and u[i+1] never decreases.
    for j in 0..grid.ny {
        let row = &mut grid.u[j * nx..(j + 1) * nx];
        for i in (0..nx - 1).rev() {
            if row[i] > row[i + 1] {
                row[i] = row[i + 1];
            }
        }
    }
    gq.d = d0 + scale * acc_d;
    gq.q = q0 + scale * acc_q;
    if !(gq.d.is_finite() && gq.q.is_finite()) {
        return Err(BoundaryError::NonFinite {
            quantity: "compression or clock",
        });
    }
    gq.j = compute_j_arrays(grid, &grid.u, &grid.omega, gq.d);
    if !gq.j.is_finite() {
        return Err(BoundaryError::NonFinite {
            quantity: "nonlocal coefficient",
        });
    }
    Ok(StepReport {
        d_relative_change: (gq.d - d0) / d0,
        d_cap_reached: gq.d > d_cap,
    })
}

/// Step-size policy for [`run`].
#[derive(Debug, Clone, Copy)]
pub struct DtControls {
    /// Starting step.
    pub dt_init: f64,
    /// Reject and halve when a step changes `D` by more than this fraction.
    /// Near blow-up the relative `D`-change is the natural clock; the
    /// default keeps it well under the 10% ceiling so the plateau closed
    /// form holds to one part in a million.
    pub growth_limit: f64,
    /// Declare blow-up when halving pushes the step below this floor.
    pub dt_floor: f64,
    /// Declare blow-up when `D` exceeds this cap.
    pub d_cap: f64,
}

impl Default for DtControls {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            growth_limit: 0.05,
            dt_floor: 1e-15,
            d_cap: 1e12,
        }
    }
}

/// When to declare a run finished short of blow-up.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    /// Stop once `Q` reaches this value.
    pub q_max: f64,
    /// Stop once `t` reaches this value.
    pub t_max: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            q_max: 1e6,
            t_max: 10.0,
        }
    }
}

/// Why a run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// `Q` reached the stop rule's target.
    QMaxReached,
    /// `t` reached the stop rule's horizon without blow-up markers.
    TMaxReached,
    /// `D` passed the cap: remaining lifetime numerically indistinguishable
    /// from zero.
    DCapReached,
    /// Step halving hit the floor: the dynamics outran every resolvable step.
    StepFloorReached,
}

impl RunStatus {
    /// True for terminal states that signal finite-time blow-up.
    pub fn is_blowup(self) -> bool {
        matches!(self, RunStatus::DCapReached | RunStatus::StepFloorReached)
    }

    /// Stable label used in summaries.
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::QMaxReached => "q_max",
            RunStatus::TMaxReached => "t_max",
            RunStatus::DCapReached => "d_cap",
            RunStatus::StepFloorReached => "dt_floor",
        }
    }
}

/// Counters for the structural invariants checked after every accepted step.
/// All are expected to stay zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct StructuralViolations {
    /// `D` decreased across a step.
    pub d_decrease: u64,
    /// Some particle's vorticity decreased.
    pub omega_decrease: u64,
    /// Some particle's vorticity went negative.
    pub omega_negative: u64,
    /// Some particle's `U` decreased.
    pub u_decrease: u64,
    /// A boundary-row particle's `U` moved at all (must hold bitwise).
    pub boundary_row_drift: u64,
    /// The box lower bound on vorticity was breached while applicable.
    pub box_bound: u64,
}

impl StructuralViolations {
    /// Sum of all counters.
    pub fn total(&self) -> u64 {
        self.d_decrease
            + self.omega_decrease
            + self.omega_negative
            + self.u_decrease
            + self.boundary_row_drift
            + self.box_bound
    }
}

/// A finished simulation with its history, audits, and self-checks.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Columns `J, D, Q, H, E, max_omega, box_margin, jchain_margin,
    /// jchain_applicable` at every accepted step (margins are NaN while the
    /// corresponding audit is not applicable).
    pub series: TimeSeries,
    pub status: RunStatus,
    pub t_final: f64,
    pub final_state: GlobalQuantities,
    /// Accepted steps.
    pub steps: u64,
    /// Rejected (halved) steps.
    pub rejections: u64,
    /// Final particle field.
    pub grid: ParticleGrid,
    /// Worst relative defect of `U` against the plateau closed form
    /// `x1 + x2·H/(2δ)`, over all particles that stayed on the plateau.
    pub plateau_max_rel_err: f64,
    /// Worst relative defect of `ω` against [`oracle_omega`], over all
    /// audited particle-times.
    pub omega_oracle_max_rel_err: f64,
    /// Number of particle-times that entered the vorticity-oracle audit.
    pub omega_oracle_points: u64,
    pub violations: StructuralViolations,
}

/// Advance the patch until a stop rule or blow-up marker fires.
///
/// Control is step-halving on the relative `D`-change per step (see
/// [`DtControls`]); every accepted step emits one sample row.  Blow-up
/// (`D` cap or step floor) is a normal terminal status, not an error.
pub fn run(
    init: &InitialData,
    nx: usize,
    ny: usize,
    controls: &DtControls,
    stop: &StopRule,
) -> Result<RunResult, BoundaryError> {
    let mut grid = build_grid(init, nx, ny)?;
    let mut gq = GlobalQuantities::initial();
    let n = grid.n_particles();
    let delta = init.delta;
    let plateau_end = init.width_factor * delta;

    let mut series = TimeSeries::new(&[
        "J",
        "D",
        "Q",
        "H",
        "E",
        "max_omega",
        "box_margin",
        "jchain_margin",
        "jchain_applicable",
    ]);
    series
        .push_row(
            0.0,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, f64::NAN, f64::NAN, 0.0],
        )
        .expect("initial row");

    // A particle stays "on the plateau" while its U remains in [δ, Lδ]; the
    // flag only ever turns off, so the closed form is compared exactly for
    // the particles it claims to describe.
    let mut on_plateau: Vec<bool> = grid
        .u
        .iter()
        .map(|&u| u >= delta && u <= plateau_end)
        .collect();

    let mut previous_u = grid.u.clone();
    let mut previous_omega = grid.omega.clone();
    let mut previous_d = gq.d;
    let mut violations = StructuralViolations::default();
    let mut plateau_max_rel_err = 0.0f64;
    let mut omega_oracle_max_rel_err = 0.0f64;
    let mut omega_oracle_points = 0u64;

    let mut t = 0.0f64;
    let mut dt = controls.dt_init;
    let mut steps = 0u64;
    let mut rejections = 0u64;
    let mut snapshot_u = vec![0.0; n];
    let mut snapshot_omega = vec![0.0; n];

    let status = loop {
        if gq.q >= stop.q_max {
            break RunStatus::QMaxReached;
        }
        if t >= stop.t_max {
            break RunStatus::TMaxReached;
        }

        snapshot_u.copy_from_slice(&grid.u);
        snapshot_omega.copy_from_slice(&grid.omega);
        let snapshot_gq = gq;

        let report = step(&mut grid, &mut gq, init, dt, controls.d_cap)?;
        if report.d_relative_change > controls.growth_limit {
            grid.u.copy_from_slice(&snapshot_u);
            grid.omega.copy_from_slice(&snapshot_omega);
            gq = snapshot_gq;
            rejections += 1;
            dt *= 0.5;
            if dt < controls.dt_floor {
                break RunStatus::StepFloorReached;
            }
            continue;
        }

        t += dt;
        steps += 1;

        // Structural invariants: checked on every accepted step.
        if gq.d < previous_d {
            violations.d_decrease += 1;
        }
        for i in 0..n {
            if grid.omega[i] < previous_omega[i] {
                violations.omega_decrease += 1;
            }
            if grid.omega[i] < 0.0 {
                violations.omega_negative += 1;
            }
            if grid.u[i] < previous_u[i] {
                violations.u_decrease += 1;
            }
        }
        for i in 0..grid.nx {
            if grid.u[i] != grid.x1_label[i] {
                violations.boundary_row_drift += 1;
            }
        }
        previous_u.copy_from_slice(&grid.u);
        previous_omega.copy_from_slice(&grid.omega);
        previous_d = gq.d;

        // Plateau closed form for particles still inside [δ, Lδ].
        let h_val = gq.h();
        for j in 0..grid.ny {
            let displacement = grid.x2[j] * h_val / (2.0 * delta);
            for i in 0..grid.nx {
                let idx = j * grid.nx + i;
                if !on_plateau[idx] {
                    continue;
                }
                let u_val = grid.u[idx];
                if u_val > plateau_end {
                    on_plateau[idx] = false;
                    continue;
                }
                let predicted = grid.x1_label[i] + displacement;
                let rel = ((u_val - predicted) / u_val).abs();
                plateau_max_rel_err = plateau_max_rel_err.max(rel);
            }
        }

        // Vorticity oracle over its validity domain.  The closed form also
        // needs the vertical cutoff at full strength, so heights above the
        // η-plateau are excluded even when the domain box allows them.
        if h_val > 0.0 {
            let x2_bound = (delta * delta * init.width_factor / h_val).min(1.0);
            for j in 0..grid.ny {
                let height = grid.x2[j];
                if height > x2_bound {
                    continue;
                }
                for i in 0..grid.nx {
                    let label = grid.x1_label[i];
                    if let Ok(expected) = oracle_omega(label, height, gq.q, init) {
                        let idx = j * grid.nx + i;
                        let rel = ((grid.omega[idx] - expected) / expected).abs();
                        omega_oracle_max_rel_err = omega_oracle_max_rel_err.max(rel);
                        omega_oracle_points += 1;
                    }
                }
            }
        }

        let max_omega = grid.omega.iter().fold(0.0f64, |acc, &w| acc.max(w));
        let box_audit = audit_box_bound(&grid, &gq, init);
        let chain_audit = audit_j_chain(&gq, init, gq.q, gq.j);
        series
            .push_row(
                t,
                &[
                    gq.j,
                    gq.d,
                    gq.q,
                    h_val,
                    gq.e(delta),
                    max_omega,
                    box_audit.map_or(f64::NAN, |a| a.margin),
                    chain_audit.as_ref().map_or(f64::NAN, |a| a.margin),
                    if chain_audit.is_some() { 1.0 } else { 0.0 },
                ],
            )
            .expect("time advances monotonically");
        if box_audit.is_some_and(|a| a.violated) {
            violations.box_bound += 1;
        }

        if report.d_cap_reached {
            break RunStatus::DCapReached;
        }
    };

    Ok(RunResult {
        series,
        status,
        t_final: t,
        final_state: gq,
        steps,
        rejections,
        grid,
        plateau_max_rel_err,
        omega_oracle_max_rel_err,
        omega_oracle_points,
        violations,
    })
}

/// A label outside the vorticity oracle's validity domain.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("label ({x1}, {x2}) lies outside the oracle's validity domain")]
pub struct DomainError {
    pub x1: f64,
    pub x2: f64,
}

/// `arctan(w)/w`, continued by its series through `w = 0`.
fn arctan_ratio(w: f64) -> f64 {
    if w < 1e-4 {
        let w2 = w * w;
        1.0 - w2 / 3.0 + w2 * w2 / 5.0
    } else {
        w.atan() / w
    }
}

/// Closed-form vorticity `(Q/δ)·arctan(w)/w` with `w = sqrt(x2·H/(2δ·x1))`.
///
/// Valid for labels in the domain `max{x2·H/(2δ), δ} ≤ x1 ≤ Lδ/2` with
/// `x2 ≤ δ²L/H`: there the particle has sat on both cutoff plateaus its
/// whole life and its trajectory integral collapses to an arctangent.
pub fn oracle_omega(x1: f64, x2: f64, q: f64, init: &InitialData) -> Result<f64, DomainError> {
    let delta = init.delta;
    let h = q * q;
    let displacement = x2 * h / (2.0 * delta);
    let lower = displacement.max(delta);
    let upper = 0.5 * init.width_factor * delta;
    let x2_bound = if h > 0.0 {
        delta * delta * init.width_factor / h
    } else {
        f64::INFINITY
    };
    if x1 < lower || x1 > upper || x2 > x2_bound {
        return Err(DomainError { x1, x2 });
    }
    let w = (displacement / x1).sqrt();
    Ok(q / delta * arctan_ratio(w))
}

/// Which boundary-layer inequality an audit examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCheck {
    /// `ω ≥ (π/4)·Q/δ` on the moving box of positions.
    BoxLowerBound,
    /// `J ≥ (π/48)·(Q/δ)·ln(L/5)` under the chain's guards.
    JChainLowerBound,
}

impl BoundaryCheck {
    /// Stable snake-case name used in output.
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCheck::BoxLowerBound => "box_lower_bound",
            BoundaryCheck::JChainLowerBound => "j_chain_lower_bound",
        }
    }
}

/// Outcome of one boundary-layer audit (returned only when applicable).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryAudit {
    pub check: BoundaryCheck,
    /// Slack of the inequality; negative means below the bound.
    pub margin: f64,
    pub violated: bool,
}

/// Audit `ω ≥ (π/4)·Q/δ` over the box of current positions
/// `[Lo(x2), Up(x2)] × [0, δ²L/H]`.
///
/// The box corners map the oracle's label domain through the flow:
/// `Lo = (max{x2·H/(2δ), δ} + x2·H/(2δ))/D`, `Up = (Lδ/2 + x2·H/(2δ))/D`.
/// Applicable once vorticity exists and the box height has shrunk into the
/// η-plateau (`δ²L/H ≤ 1`), which is also where the underlying arctangent
/// bound is valid; returns `None` otherwise or when no particle is inside.
/// A margin below `-1e-6·(Q/δ)` counts as a violation.
pub fn audit_box_bound(
    grid: &ParticleGrid,
    gq: &GlobalQuantities,
    init: &InitialData,
) -> Option<BoundaryAudit> {
    let h = gq.h();
    if h <= 0.0 {
        return None;
    }
    let delta = init.delta;
    let x2_bound = delta * delta * init.width_factor / h;
    if x2_bound > 1.0 {
        return None;
    }
    let floor = 0.25 * PI * gq.q / delta;
    let mut margin = f64::INFINITY;
    for j in 0..grid.ny {
        let height = grid.x2[j];
        if height > x2_bound {
            continue;
        }
        let displacement = height * h / (2.0 * delta);
        let lo = (displacement.max(delta) + displacement) / gq.d;
        let up = (0.5 * init.width_factor * delta + displacement) / gq.d;
        for i in 0..grid.nx {
            let idx = j * grid.nx + i;
            let position = grid.u[idx] / gq.d;
            if position >= lo && position <= up {
                margin = margin.min(grid.omega[idx] - floor);
            }
        }
    }
    if margin == f64::INFINITY {
        return None;
    }
    Some(BoundaryAudit {
        check: BoundaryCheck::BoxLowerBound,
        margin,
        violated: margin < -1e-6 * (gq.q / delta),
    })
}

/// Record the slack of the chain bound `J ≥ (π/48)·(Q/δ)·ln(L/5)`.
///
/// Guarded by `E ≤ 2`, `δ²L/H ≤ 1`, and `L > 5`; returns `None` when any
/// guard fails.  The margin's sign is an empirical observation — the
/// rigorous chain assumes label-domain properties a desk-scale run can
/// exceed — so it is recorded, never asserted.
pub fn audit_j_chain(
    gq: &GlobalQuantities,
    init: &InitialData,
    q_measured: f64,
    j_measured: f64,
) -> Option<BoundaryAudit> {
    let h = gq.h();
    let delta = init.delta;
    let guards = gq.e(delta) <= 2.0
        && h > 0.0
        && delta * delta * init.width_factor / h <= 1.0
        && init.width_factor > 5.0;
    if !guards {
        return None;
    }
    let bound = PI / 48.0 * (q_measured / delta) * (init.width_factor / 5.0).ln();
    Some(BoundaryAudit {
        check: BoundaryCheck::JChainLowerBound,
        margin: j_measured - bound,
        violated: false,
    })
}
