//! Numerical demonstrations that pure `1/|x|` modulated waves with
//! direction-dependent profiles are not Maxwell fields, and that tangential
//! far-field profiles vanish somewhere on the sphere.
//!
//! These are demonstrations at finite resolution, not proofs; every report
//! carries the label [`LABEL`].

use serde::{Deserialize, Serialize};

use crate::diffops::{field_residuals, residual_sweep, FdScheme, MaxwellResiduals, ResidualReport};
use crate::error::{invalid, Error, Result};
use crate::fields::{eval_pair, modulated_wave, Direction, FieldSample, SpacetimePoint};
use crate::profiles::Profile;
use crate::{e1, Vec3};

pub const LABEL: &str = "demonstration";

/// Smooth, nowhere-vanishing radial envelope `exp(−s²/4)` used by the test cases.
pub fn envelope(s: f64) -> f64 {
    (-0.25 * s * s).exp()
}

/// Direction-dependent tangential modulation profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulationCase {
    /// `f(s) ω∧e1`
    CrossE1,
    /// `f(s) (e2 − ω2 ω)`
    ProjectedE2,
    /// `f(s) ω3 (ω∧e1)`
    PolarWeighted,
    /// `f(s) (ω∧e3)/|ω∧e3|`, a unit azimuthal field singular on the `x3` axis.
    Azimuthal,
}

impl ModulationCase {
    /// The three smooth cases.
    pub const SMOOTH: [ModulationCase; 3] = [
        ModulationCase::CrossE1,
        ModulationCase::ProjectedE2,
        ModulationCase::PolarWeighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModulationCase::CrossE1 => "cross-e1",
            ModulationCase::ProjectedE2 => "projected-e2",
            ModulationCase::PolarWeighted => "polar-weighted",
            ModulationCase::Azimuthal => "azimuthal",
        }
    }

    pub fn eval(self, s: f64, omega: &Vec3) -> Vec3 {
        let f = envelope(s);
        match self {
            ModulationCase::CrossE1 => omega.cross(&e1()) * f,
            ModulationCase::ProjectedE2 => (Vec3::y() - omega * omega.y) * f,
            ModulationCase::PolarWeighted => omega.cross(&e1()) * (omega.z * f),
            ModulationCase::Azimuthal => {
                let a = omega.cross(&Vec3::z());
                let n = a.norm();
                if n == 0.0 {
                    Vec3::zeros()
                } else {
                    a * (f / n)
                }
            }
        }
    }
}

/// Divergence of a modulated wave across refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub label: String,
    pub steps: Vec<f64>,
    /// Per level, the largest `max(|div E|, |div B|)` over points.
    pub max_abs_div: Vec<f64>,
    /// Per level, the smallest such value over points.
    pub min_abs_div: Vec<f64>,
    /// `|max_abs_div(coarsest) − max_abs_div(finest)| / max_abs_div(finest)`.
    pub relative_spread: f64,
    pub points: usize,
}

impl ObstructionReport {
    pub fn finest(&self) -> f64 {
        *self.max_abs_div.last().unwrap_or(&f64::NAN)
    }

    /// Nonzero and essentially unchanged under refinement.
    pub fn mesh_independent(&self, spread: f64) -> bool {
        self.finest() > 0.0 && self.relative_spread <= spread
    }
}

/// Finite-difference divergence of the candidate field
/// `(e/|x|, ω∧e/|x|)` built from `profile_e`.
pub fn modulated_div_obstruction<F>(
    profile_e: F,
    points: &[SpacetimePoint],
    scheme: &FdScheme,
) -> Result<ObstructionReport>
where
    F: Fn(f64, &Vec3) -> Vec3,
{
    scheme.validate()?;
    if points.is_empty() {
        return Err(invalid("no test points"));
    }
    let mut nonzero = false;
    for pt in points {
        if let Some(p) = points_outside(pt) {
            return Err(Error::Domain(p));
        }
        let u = modulated_wave(&profile_e, pt, Direction::Outgoing)?;
        nonzero |= u.norm_squared() > 0.0;
    }
    if !nonzero {
        return Err(Error::DegenerateInput(
            "modulation profile vanishes at every test point".into(),
        ));
    }
    let steps = scheme.steps();
    let mut max_abs = Vec::with_capacity(steps.len());
    let mut min_abs = Vec::with_capacity(steps.len());
    for &h in &steps {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for pt in points {
            let r = field_residuals(candidate(&profile_e), pt, h, scheme.order)?;
            let d = r.divergence();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        max_abs.push(hi);
        min_abs.push(lo);
    }
    let finest = *max_abs.last().unwrap();
    let spread = if finest > 0.0 {
        (max_abs[0] - finest).abs() / finest
    } else {
        f64::INFINITY
    };
    Ok(ObstructionReport {
        label: LABEL.into(),
        steps,
        max_abs_div: max_abs,
        min_abs_div: min_abs,
        relative_spread: spread,
        points: points.len(),
    })
}

fn points_outside(pt: &SpacetimePoint) -> Option<String> {
    let r = pt.radius();
    if (1.0..=3.0).contains(&r) {
        None
    } else {
        Some(format!("test point radius {r} outside [1, 3]"))
    }
}

/// The candidate field as a function of `(t, x)`; evaluation errors become NaN.
fn candidate<F>(profile_e: &F) -> impl Fn(f64, &Vec3) -> FieldSample + '_
where
    F: Fn(f64, &Vec3) -> Vec3,
{
    move |t, x| {
        modulated_wave(profile_e, &SpacetimePoint { t, x: *x }, Direction::Outgoing).unwrap_or(FieldSample {
            e: Vec3::repeat(f64::NAN),
            b: Vec3::repeat(f64::NAN),
        })
    }
}

/// Divergence residuals of the exact solution generated by `profile` on the
/// same points and levels, for comparison.
pub fn solution_divergence(profile: &Profile, points: &[SpacetimePoint], scheme: &FdScheme) -> Result<ResidualReport> {
    let field = |t: f64, x: &Vec3| eval_pair(profile, &SpacetimePoint { t, x: *x });
    residual_sweep(field, points, scheme, MaxwellResiduals::divergence)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuietSpot {
    pub label: String,
    pub omega_star: [f64; 3],
    pub min_norm: f64,
    /// Largest `|e|` seen on the search grid.
    pub scale: f64,
    /// `min_norm < 1e−6·scale`.
    pub certified: bool,
}

pub const QUIET_TOLERANCE: f64 = 1e-6;
const SEEDS: usize = 4;

/// Minimizes `|e(s, ω)|` over the unit sphere: a `resolution × resolution`
/// grid in `(θ, φ)` followed by pattern search in the tangent plane from the
/// best grid points.
pub fn quiet_spot_find<F>(profile_e: F, s: f64, resolution: usize) -> Result<QuietSpot>
where
    F: Fn(f64, &Vec3) -> Vec3,
{
    if resolution < 16 {
        return Err(invalid(format!(
            "resolution must be at least 16 per axis, got {resolution}"
        )));
    }
    let norm_at = |omega: &Vec3| profile_e(s, omega).norm();
    let mut grid = Vec::with_capacity(resolution * resolution);
    let mut scale: f64 = 0.0;
    for i in 0..resolution {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / resolution as f64;
        for j in 0..resolution {
            let phi = std::f64::consts::TAU * j as f64 / resolution as f64;
            let omega = Vec3::new(theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin());
            let n = norm_at(&omega);
            if !n.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "profile is not finite at ω = {:?}",
                    omega.as_slice()
                )));
            }
            scale = scale.max(n);
            grid.push((n, omega));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let initial_step = std::f64::consts::PI / resolution as f64;
    let mut best = (f64::INFINITY, Vec3::x());
    for &(n, omega) in grid.iter().take(SEEDS) {
        let found = pattern_search(&norm_at, omega, n, initial_step);
        if found.0 < best.0 {
            best = found;
        }
    }
    Ok(QuietSpot {
        label: LABEL.into(),
        omega_star: [best.1.x, best.1.y, best.1.z],
        min_norm: best.0,
        scale,
        certified: best.0 < QUIET_TOLERANCE * scale,
    })
}

fn pattern_search<G: Fn(&Vec3) -> f64>(norm_at: &G, start: Vec3, start_value: f64, step: f64) -> (f64, Vec3) {
    let mut omega = start;
    let mut value = start_value;
    let mut h = step;
    for _ in 0..2000 {
        if h < 1e-15 || value == 0.0 {
            break;
        }
        let (u, v) = tangent_pair(&omega);
        let mut improved = false;
        for k in 0..8 {
            let a = std::f64::consts::TAU * k as f64 / 8.0;
            let trial = (omega + (u * a.cos() + v * a.sin()) * h).normalize();
            let n = norm_at(&trial);
            if n < value {
                value = n;
                omega = trial;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (value, omega)
}

fn tangent_pair(omega: &Vec3) -> (Vec3, Vec3) {
    let helper = if omega.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = omega.cross(&helper).normalize();
    (u, omega.cross(&u))
}

/// Residual of the azimuthal case at shrinking distances from the `x3` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSweep {
    pub label: String,
    pub distances: Vec<f64>,
    /// Largest Maxwell residual on a ring at each distance.
    pub residuals: Vec<f64>,
    /// Fitted `k` in `residual ∝ distance^(−k)`.
    pub growth_exponent: f64,
}

/// Samples rings `x = (d cos φ, d sin φ, height)` at time `t`.
pub fn azimuthal_tube_sweep(distances: &[f64], height: f64, t: f64) -> Result<TubeSweep> {
    if distances.len() < 2 {
        return Err(invalid("need at least two distances"));
    }
    let profile = |s: f64, w: &Vec3| ModulationCase::Azimuthal.eval(s, w);
    let mut residuals = Vec::with_capacity(distances.len());
    for &d in distances {
        if !(d > 0.0) {
            return Err(invalid(format!("distance must be positive, got {d}")));
        }
        let h = (d / 20.0).min(1e-3);
        let mut worst: f64 = 0.0;
        for k in 0..8 {
            let phi = std::f64::consts::TAU * (k as f64 + 0.25) / 8.0;
            let pt = SpacetimePoint::new(t, Vec3::new(d * phi.cos(), d * phi.sin(), height))?;
            let r = field_residuals(candidate(&profile), &pt, h, crate::diffops::FdOrder::Second)?;
            worst = worst.max(r.max());
        }
        residuals.push(worst);
    }
    let xs: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    Ok(TubeSweep {
        label: LABEL.into(),
        distances: distances.to_vec(),
        residuals,
        growth_exponent: -crate::diffops::least_squares_slope(&xs, &ys),
    })
}
