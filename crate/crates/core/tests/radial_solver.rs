//! Behaviour of the reduced radial solver against the closed-form solutions.

use vanishing_maxwell::boundary::BoundarySpace;
use vanishing_maxwell::profiles::{exponential_rate, make_bump, make_exponential};
use vanishing_maxwell::quadrature::{shell_energy, ShellGrid};
use vanishing_maxwell::radial::{
    constraint_residual, eigenmode_check, init_from_profile, l2_error, run, step, OuterBoundary, RadialGrid,
};

#[test]
fn constraint_stays_second_order_after_many_steps() {
    // the continuum constraint is conserved, so discrete violations do not decay
    let profile = make_exponential(0.25).unwrap();
    let bc = BoundarySpace::eps(0.25).unwrap();
    let outer = OuterBoundary::AnalyticDirichlet(profile.clone());
    for dr in [1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0] {
        let mut s = init_from_profile(&profile, &RadialGrid::new(6.0, dr).unwrap(), 0.0).unwrap();
        let scale = s.scale();
        for _ in 0..1000 {
            s = step(&s, 0.5 * dr, &bc, &outer).unwrap();
        }
        let c = constraint_residual(&s) / scale;
        assert!(c < 15.0 * dr * dr, "dr = {dr}: {c}");
    }
}

/// Rises of the discrete energy up to this fraction of the initial energy are
/// attributed to discretization.
const RISE_TOLERANCE: f64 = 1e-8;

fn max_rise(energy: &[f64]) -> f64 {
    energy
        .windows(2)
        .map(|w| (w[1] - w[0]) / energy[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn energy_is_nonincreasing_without_inflow() {
    // bump data are zero near the outer node for the whole run
    let bump = make_bump(1.5).unwrap();
    let grid = RadialGrid::new(3.0, 1e-3).unwrap();
    let s = init_from_profile(&bump, &grid, 0.0).unwrap();
    for bc in [BoundarySpace::eps(0.25).unwrap(), BoundarySpace::eps(0.9).unwrap()] {
        let out = run(&s, 1.0, 5e-4, &bc, &OuterBoundary::Extrapolation, 1).unwrap();
        assert!(max_rise(&out.trace.energy.energy) <= RISE_TOLERANCE, "{bc:?}");
    }
    let b = 1.05;
    let s = init_from_profile(&make_bump(b).unwrap(), &RadialGrid::new(1.25, 2.5e-4).unwrap(), 0.0).unwrap();
    let out = run(
        &s,
        0.1,
        1.25e-4,
        &BoundarySpace::gamma(b).unwrap(),
        &OuterBoundary::Extrapolation,
        1,
    )
    .unwrap();
    assert!(max_rise(&out.trace.energy.energy) <= RISE_TOLERANCE);
}

#[test]
fn eigenmode_structure() {
    for eps in [0.25, 0.1] {
        let c = eigenmode_check(eps).unwrap();
        assert_eq!(c.rate_expected, exponential_rate(eps).unwrap());
        assert!(c.max_relative_deviation < 1e-4, "{c:?}");
        assert!((c.rate_from_generator - c.rate_expected).abs() < 1e-4 * c.rate_expected.abs());
    }
    let r = exponential_rate(0.1).unwrap();
    assert!((r - (1.0 - 41f64.sqrt()) / 2.0).abs() < 1e-14);
}

#[test]
fn analytic_outer_run_tracks_shell_quadrature() {
    let profile = make_exponential(0.25).unwrap();
    let r_max = 6.0;
    let s = init_from_profile(&profile, &RadialGrid::new(r_max, 1.0 / 400.0).unwrap(), 0.0).unwrap();
    let bc = BoundarySpace::eps(0.25).unwrap();
    let out = run(
        &s,
        1.0,
        1.0 / 800.0,
        &bc,
        &OuterBoundary::AnalyticDirichlet(profile.clone()),
        200,
    )
    .unwrap();
    let grid = ShellGrid::new(r_max, 64, 6, 8).unwrap();
    for (t, e) in out.trace.energy.times.iter().zip(&out.trace.energy.energy) {
        let q = shell_energy(&profile, *t, &grid).unwrap().energy;
        assert!((e - q).abs() < 1e-4 * q, "t = {t}: {e} vs {q}");
    }
    assert!(l2_error(&out.state, &profile) < 1e-4);
}

#[test]
fn disappearance_under_refinement() {
    let b = 1.05;
    let profile = make_bump(b).unwrap();
    let bc = BoundarySpace::gamma(b).unwrap();
    let mut residual = Vec::new();
    for dr in [1e-3, 5e-4, 2.5e-4] {
        let s = init_from_profile(&profile, &RadialGrid::new(1.25, dr).unwrap(), 0.0).unwrap();
        let out = run(&s, 0.1, 0.5 * dr, &bc, &OuterBoundary::Extrapolation, 1).unwrap();
        let e = &out.trace.energy;
        let after = e
            .times
            .iter()
            .zip(&e.energy)
            .filter(|(t, _)| **t >= b - 1.0)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        residual.push(after / e.energy[0]);
    }
    assert!(residual[0] < 1e-6, "{residual:?}");
    assert!(residual.windows(2).all(|w| w[1] < w[0]), "{residual:?}");
}
