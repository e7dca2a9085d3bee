//! Property-based invariants of the fitting, quadrature, and model layers.

use filament::boundary_layer::{compute_j, InitialData, ParticleGrid};
use filament::diagnostics::{extrapolate_blowup, fit_power_law, TimeSeries};
use filament::quadrature::{adaptive_integrate, oracle_rhs_b0, Integrand, ProfileParams};
use proptest::prelude::*;

/// Log-spaced sample times across one decade.
fn decade_times() -> Vec<f64> {
    (0..40).map(|i| 10f64.powf(i as f64 / 39.0)).collect()
}

fn series_of(f: impl Fn(f64) -> f64) -> TimeSeries {
    let mut series = TimeSeries::new(&["v"]);
    for t in decade_times() {
        series.push_row(t, &[f(t)]).unwrap();
    }
    series
}

proptest! {
    /// A pure power law is recovered exactly (up to roundoff) regardless of
    /// exponent and amplitude.
    #[test]
    fn power_law_fit_recovers_exponent(
        exponent in -3.0f64..3.0,
        log_amp in -2.0f64..2.0,
    ) {
        let amp = log_amp.exp();
        let series = series_of(|t| amp * t.powf(exponent));
        let fit = fit_power_law(&series, "v", (1.0, 10.0)).unwrap();
        prop_assert!((fit.slope - exponent).abs() < 1e-12);
        prop_assert!((fit.intercept - log_amp).abs() < 1e-11);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    /// The extrapolated singular time of `v = c/(T - t)` is `T`, independent
    /// of the amplitude `c` (the root of a line is scale-invariant).
    #[test]
    fn blowup_extrapolation_finds_the_pole(
        t_star in 15.0f64..200.0,
        log_amp in -3.0f64..3.0,
    ) {
        let amp = log_amp.exp();
        let series = series_of(|t| amp / (t_star - t));
        let (found, fit) = extrapolate_blowup(&series, "v", (1.0, 10.0)).unwrap();
        prop_assert!(fit.slope < 0.0);
        prop_assert!(
            (found - t_star).abs() < 1e-8 * t_star,
            "found {found}, expected {t_star}"
        );
    }

    /// Both growth kernels are strictly positive on the open interval, so the
    /// adaptive integrals must be too, whatever the front parameters.
    #[test]
    fn profile_growth_rates_stay_positive(
        a in 0.0f64..30.0,
        log_b in -3.0f64..8.0,
        k in 1.0f64..1.3,
    ) {
        let p = ProfileParams::new(a, 10f64.powf(log_b), k);
        let tol = 1e-10;
        let growth_a = adaptive_integrate(Integrand::A, &p, tol).unwrap();
        let growth_b = adaptive_integrate(Integrand::B, &p, tol).unwrap();
        prop_assert!(growth_a.value.is_finite() && growth_a.value > 0.0);
        prop_assert!(growth_b.value.is_finite() && growth_b.value > 0.0);
    }

    /// For a flat front the integrals have elementary closed forms; the
    /// adaptive integrator must land on them within its own error estimate.
    #[test]
    fn quadrature_matches_flat_front_closed_form(
        a in 0.0f64..20.0,
        k in 1.0f64..1.3,
    ) {
        let p = ProfileParams::new(a, 0.0, k);
        let tol = 1e-12;
        let growth_a = adaptive_integrate(Integrand::A, &p, tol).unwrap();
        let growth_b = adaptive_integrate(Integrand::B, &p, tol).unwrap();
        let (oracle_a, oracle_b) = oracle_rhs_b0(a, k);
        let err_a = (growth_a.value - oracle_a).abs();
        let err_b = (growth_b.value / k - oracle_b).abs();
        prop_assert!(
            err_a <= (10.0 * tol * oracle_a).max(growth_a.error_estimate) + 1e-15,
            "a: {err_a} vs oracle {oracle_a}"
        );
        prop_assert!(
            err_b <= (10.0 * tol * oracle_b).max(growth_b.error_estimate) + 1e-15,
            "b: {err_b} vs oracle {oracle_b}"
        );
    }

    /// Tightening the tolerance must not move the value by more than the
    /// looser run's own error estimate: the estimate is trustworthy.
    #[test]
    fn quadrature_error_estimate_bounds_refinement(
        a in 0.0f64..15.0,
        log_b in -2.0f64..6.0,
    ) {
        let p = ProfileParams::new(a, 10f64.powf(log_b), 1.0);
        let loose = adaptive_integrate(Integrand::A, &p, 1e-8).unwrap();
        let tight = adaptive_integrate(Integrand::A, &p, 1e-12).unwrap();
        let drift = (loose.value - tight.value).abs();
        prop_assert!(
            drift <= loose.error_estimate + 1e-12 * tight.value.abs(),
            "drift {drift} exceeds estimate {}",
            loose.error_estimate
        );
    }

    /// The horizontal cutoff profile stays inside `[0, 1/delta]` and its mass
    /// weight `rho0` is nonnegative everywhere, including the transition
    /// bands where cancellation once pushed the smoothstep out of range.
    #[test]
    fn cutoff_profiles_stay_in_range(
        delta in 0.001f64..0.015,
        width in 6.0f64..60.0,
        x in 0.0f64..1.0,
        x2 in 0.0f64..3.0,
    ) {
        prop_assume!((width + 1.0) * delta < 1.0);
        let init = InitialData::new(delta, width).unwrap();
        let phi = init.phi_delta(x);
        prop_assert!((0.0..=1.0 / delta).contains(&phi));
        prop_assert!((0.0..=1.0).contains(&init.eta(x2)));
        prop_assert!(init.rho0(x, x2) >= 0.0);
        prop_assert!(init.rho0(x, x2) <= x / delta * (1.0 + 4.0 * f64::EPSILON));
    }
}

/// The particle quadrature for the interaction coefficient agrees with a
/// closed form when positions equal labels and the vorticity is constant:
/// `J = w * [ln((a²+v²)/(b²+v²))]/4` over `v` between the vertical limits,
/// and the trapezoid error shrinks by ~4x per mesh doubling.
#[test]
fn interaction_coefficient_matches_closed_form() {
    let (a, b) = (0.3, 0.5);
    let (lo, hi) = (0.25, 0.5);
    let w = 2.0;
    let log_term = |v: f64| ((a * a + v * v) / (b * b + v * v)).ln();
    let exact = w * 0.25 * (log_term(hi) - log_term(lo));

    let errors: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&n| {
            let x1: Vec<f64> = (0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect();
            let x2: Vec<f64> = (0..n)
                .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
                .collect();
            let mut u = Vec::with_capacity(n * n);
            for _ in 0..n {
                u.extend_from_slice(&x1);
            }
            let grid = ParticleGrid {
                nx: n,
                ny: n,
                x1_label: x1,
                x2,
                omega: vec![w; n * n],
                rho0: vec![0.0; n * n],
                forcing: vec![0.0; n * n],
                u,
            };
            (compute_j(&grid, 1.0) - exact).abs()
        })
        .collect();
    assert!(errors[0] < 1e-4, "coarse error {}", errors[0]);
    // Second-order convergence: each doubling divides the error by ~4.
    assert!(errors[1] < errors[0] / 3.0);
    assert!(errors[2] < errors[1] / 3.0);
}
