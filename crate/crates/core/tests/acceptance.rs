//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vanishing_maxwell::boundary::{
    an_spectrum, choose_b, dissipativity_scan, find_mu, lemma41_residue, q_lower_bound, q_poly, sup_gamma,
    BoundaryFrame, BoundarySpace,
};
use vanishing_maxwell::diffops::{maxwell_residual_batch, FdScheme};
use vanishing_maxwell::fields::{eval_pair, SpacetimePoint};
use vanishing_maxwell::nogo::{modulated_div_obstruction, quiet_spot_find, solution_divergence, ModulationCase};
use vanishing_maxwell::profiles::{exponential_rate, make_bump, make_exponential, Profile};
use vanishing_maxwell::quadrature::{decay_rate, energy_identity_check, energy_trace, ShellGrid};
use vanishing_maxwell::radial::{
    self, init_from_profile, l2_error, reduced_system_residual, OuterBoundary, RadialGrid,
};
use vanishing_maxwell::sampling::{annulus_points, halton4, sphere_point};
use vanishing_maxwell::Vec3;

type Outcome = Result<(bool, String), vanishing_maxwell::Error>;
type Tangential = Box<dyn Fn(f64, &Vec3) -> Vec3>;

fn sphere(n: usize, offset: u64) -> Vec<Vec3> {
    (0..n as u64)
        .map(|i| {
            let [u, v, _, _] = halton4(offset + i);
            sphere_point(u, v)
        })
        .collect()
}

fn maxwell_verification() -> Outcome {
    let started = Instant::now();
    let points = annulus_points(500, (1.0, 3.0), (0.0, 2.0), 0)?;
    let scheme = FdScheme::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, profile) in [
        ("exponential(0.25)", make_exponential(0.25)?),
        ("bump(6)", make_bump(6.0)?),
    ] {
        let maxwell = maxwell_residual_batch(&profile, &points, &scheme)?;
        let div = solution_divergence(&profile, &points, &scheme)?;
        let orders = maxwell.converges_within((1.8, 2.3)) && div.converges_within((1.8, 2.3));
        let small = maxwell.coarsest() <= 1e-5 && div.coarsest() <= 1e-5;
        ok &= orders && small;
        notes.push(format!(
            "{name}: order {:.3}/{:.3}, residual at 1e-3 {:.3e}/{:.3e}",
            maxwell.estimated_order,
            div.estimated_order,
            maxwell.coarsest(),
            div.coarsest()
        ));
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    notes.push(format!("{secs:.1} s"));
    Ok((ok, notes.join("; ")))
}

fn boundary_identity() -> Outcome {
    let started = Instant::now();
    let dirs = sphere(20, 1);
    let mut worst_exp: f64 = 0.0;
    let mut worst_bump: f64 = 0.0;
    let exp = make_exponential(0.25)?;
    let bump = make_bump(1.05)?;
    for omega in &dirs {
        for j in 0..20 {
            let rho = 1.0 + 2.0 * j as f64 / 19.0;
            for k in 0..10 {
                let t = 2.0 * k as f64 / 9.0;
                let (lhs, rhs) = lemma41_residue(&exp, &(omega * rho), t)?;
                worst_exp = worst_exp.max((lhs - rhs).norm() / rhs.norm());
                let tb = 0.05 * k as f64 / 9.0;
                let (lhs, rhs) = lemma41_residue(&bump, &(omega * (1.0 + 0.05 * j as f64 / 19.0)), tb)?;
                worst_bump = worst_bump.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = worst_exp <= 1e-12 && worst_bump <= 1e-12 && secs < 5.0;
    Ok((
        ok,
        format!("exponential relative {worst_exp:.2e}; bump {worst_bump:.2e}; {secs:.2} s"),
    ))
}

fn exponential_decay() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for eps in [0.05, 0.1, 0.25] {
        let profile = make_exponential(eps)?;
        let r = exponential_rate(eps)?;
        let expected = (1.0 - (1.0 + 4.0 / eps).sqrt()) / 2.0;
        let space = BoundarySpace::eps(eps)?;

        let mut bc: f64 = 0.0;
        for (i, omega) in sphere(200, 7).iter().enumerate() {
            let t = 3.0 * i as f64 / 199.0;
            let u = eval_pair(&profile, &SpacetimePoint::new(t, *omega)?);
            let scale = u.e.norm().max(u.b.norm());
            bc = bc.max(space.residual(&u, &BoundaryFrame::new(*omega)?, t).norm() / scale);
        }

        let times: Vec<f64> = (0..21).map(|i| 0.1 * i as f64).collect();
        let trace = energy_trace(&profile, &times, &ShellGrid::default_for(&profile)?, &space)?;
        let quad_rate = decay_rate(&trace)?;

        let start = init_from_profile(&profile, &RadialGrid::new(12.0, 1.0 / 400.0)?, 0.0)?;
        let out = radial::run(
            &start,
            3.0,
            1.0 / 800.0,
            &space,
            &OuterBoundary::AnalyticDirichlet(profile.clone()),
            20,
        )?;
        let radial_rate = decay_rate(&out.trace.energy)?;

        let quad_err = (quad_rate - r).abs() / r.abs();
        let radial_err = (radial_rate - r).abs() / r.abs();
        ok &= (r - expected).abs() <= 1e-14 && bc <= 1e-12 && quad_err <= 0.01 && radial_err <= 0.02;
        notes.push(format!(
            "eps {eps}: bc {bc:.1e}, quadrature {quad_err:.1e}, radial {radial_err:.1e}"
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn post_support_energy(profile: &Profile, b: f64, dr: f64) -> Result<f64, vanishing_maxwell::Error> {
    let start = init_from_profile(profile, &RadialGrid::new(1.0 + 5.0 * (b - 1.0), dr)?, 0.0)?;
    let out = radial::run(
        &start,
        2.0 * (b - 1.0),
        0.5 * dr,
        &BoundarySpace::gamma(b)?,
        &OuterBoundary::Extrapolation,
        1,
    )?;
    let e = &out.trace.energy;
    let post = e
        .times
        .iter()
        .zip(&e.energy)
        .filter(|(t, _)| **t >= b - 1.0)
        .fold(0.0f64, |m, (_, v)| m.max(*v));
    Ok(post / e.energy[0])
}

fn exact_disappearance() -> Outcome {
    let b = choose_b(0.5)?;
    let sup = sup_gamma(b, 2001)?;
    let profile = make_bump(b)?;
    let space = BoundarySpace::gamma(b)?;
    let dirs = sphere(50, 11);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..=40 {
        let t = (b - 1.0) * k as f64 / 40.0;
        for omega in &dirs {
            let u = eval_pair(&profile, &SpacetimePoint::new(t, *omega)?);
            scale = scale.max(u.e.norm().max(u.b.norm()));
            worst = worst.max(space.residual(&u, &BoundaryFrame::new(*omega)?, t).norm());
        }
    }
    let q11 = q_poly(1.0, 1.0);
    let mu = find_mu(1000)?;
    let q_bound = q_lower_bound(mu, 1000);
    let coarse = post_support_energy(&profile, b, (b - 1.0) / 100.0)?;
    let fine = post_support_energy(&profile, b, (b - 1.0) / 200.0)?;
    let ok = sup <= 0.25 && worst <= 1e-10 * scale && q11 == 4.0 && q_bound >= 3.0 && fine <= 1e-6 && fine < coarse;
    Ok((
        ok,
        format!(
            "b {b:.6}, sup gamma {sup:.2e}, bc {:.1e}, Q(1,1) {q11}, mu {mu:.4} (bound {q_bound:.3}), post energy {coarse:.1e} -> {fine:.1e}",
            worst / scale
        ),
    ))
}

fn energy_identity() -> Outcome {
    let profile = make_exponential(0.25)?;
    let grid = ShellGrid::default_for(&profile)?;
    let mut worst: f64 = 0.0;
    let mut inconclusive = false;
    for t in [0.3, 0.7, 1.1, 1.6, 2.2] {
        let id = energy_identity_check(&profile, t, &grid, 1e-3)?;
        worst = worst.max(id.mismatch);
        inconclusive |= id.inconclusive;
    }
    Ok((worst <= 1e-5 && !inconclusive, format!("worst mismatch {worst:.2e}")))
}

fn symbol_and_dissipativity() -> Outcome {
    let mut spectrum_err: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = sphere_point(rng.gen(), rng.gen());
        for (x, y) in an_spectrum(&n).iter().zip([-1.0, -1.0, 0.0, 0.0, 1.0, 1.0]) {
            spectrum_err = spectrum_err.max((x - y).abs());
        }
    }
    let scan = dissipativity_scan(0.25, 100_000, 0)?;
    let ok = spectrum_err <= 1e-10 && scan.c_estimate > 0.0 && scan.min_margin < 0.0;
    Ok((
        ok,
        format!(
            "spectrum error {spectrum_err:.1e}; c_estimate {:.4}, min_margin {:.4}",
            scan.c_estimate, scan.min_margin
        ),
    ))
}

fn nogo_demonstration() -> Outcome {
    let points = annulus_points(200, (1.0, 3.0), (0.0, 2.0), 0)?;
    let scheme = FdScheme::default();
    let reference = solution_divergence(&make_exponential(0.25)?, &points, &scheme)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for case in ModulationCase::SMOOTH {
        let r = modulated_div_obstruction(|s, w| case.eval(s, w), &points, &scheme)?;
        let ratio = r.finest() / reference.finest();
        ok &= ratio > 10.0 && r.mesh_independent(1e-3);
        notes.push(format!(
            "{}: {:.3} (spread {:.1e}, ratio {ratio:.1e})",
            case.name(),
            r.finest(),
            r.relative_spread
        ));
    }
    let v = Vec3::new(1.0, 2.0, -2.0) / 3.0;
    let tangential: Vec<Tangential> = vec![
        Box::new(|_, w: &Vec3| w.cross(&Vec3::x())),
        Box::new(move |_, w: &Vec3| w.cross(&v)),
        Box::new(|s, w: &Vec3| ModulationCase::ProjectedE2.eval(s, w)),
        Box::new(|s, w: &Vec3| ModulationCase::PolarWeighted.eval(s, w)),
    ];
    let mut worst: f64 = 0.0;
    for f in &tangential {
        let spot = quiet_spot_find(f, 0.5, 32)?;
        ok &= spot.certified;
        worst = worst.max(spot.min_norm / spot.scale);
    }
    notes.push(format!("quiet spots worst {worst:.1e}"));
    Ok((ok, notes.join("; ")))
}

fn reduced_system() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let profile = if rng.gen_bool(0.5) {
            make_exponential(rng.gen_range(0.05..0.9))?
        } else {
            make_bump(rng.gen_range(2.0..6.0))?
        };
        let t = rng.gen_range(0.0..2.0);
        let r = rng.gen_range(1.0..3.0);
        let res = reduced_system_residual(&profile, t, r);
        let norm = res
            .equations
            .iter()
            .chain([&res.constraint, &res.boundary])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(norm / res.scale.max(1.0));
    }

    let profile = make_exponential(0.25)?;
    let space = BoundarySpace::eps(0.25)?;
    let mut errors = Vec::new();
    for dr in [1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0, 1.0 / 800.0] {
        let start = init_from_profile(&profile, &RadialGrid::new(4.0, dr)?, 0.0)?;
        let out = radial::run(
            &start,
            1.0,
            0.5 * dr,
            &space,
            &OuterBoundary::AnalyticDirichlet(profile.clone()),
            1000,
        )?;
        errors.push(l2_error(&out.state, &profile));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = worst <= 1e-10 && ratios.iter().all(|r| (3.0..=5.0).contains(r));
    Ok((
        ok,
        format!(
            "worst residual {worst:.1e}; error ratios {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn main() {
    #[allow(clippy::type_complexity)]
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Maxwell residuals of the explicit fields", maxwell_verification),
        ("boundary identity on spheres", boundary_identity),
        (
            "exponential decay under the constant boundary condition",
            exponential_decay,
        ),
        (
            "exact disappearance under the time-dependent condition",
            exact_disappearance,
        ),
        ("energy identity", energy_identity),
        ("boundary symbol and dissipativity", symbol_and_dissipativity),
        ("modulated-wave obstruction and quiet spots", nogo_demonstration),
        ("reduced radial system", reduced_system),
    ];
    let mut out = std::io::stdout();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (passed, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        let _ = writeln!(
            out,
            "criterion {}: {} {name} [{detail}] ({:.1} s)",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    let _ = writeln!(
        out,
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
