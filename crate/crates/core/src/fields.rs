//! Closed-form evaluation of the incoming dipole solution and the
//! auxiliary spherical waves.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::profiles::Profile;
use crate::{e1, Vec3};

/// Points closer than this to the origin are rejected.
pub const MIN_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Vec3,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: Vec3) -> Result<Self> {
        if !(t.is_finite() && x.iter().all(|c| c.is_finite())) {
            return Err(invalid("non-finite spacetime point"));
        }
        if x.norm() < MIN_RADIUS {
            return Err(invalid(format!("|x| = {} is too close to the origin", x.norm())));
        }
        Ok(Self { t, x })
    }

    pub fn radius(&self) -> f64 {
        self.x.norm()
    }

    pub fn direction(&self) -> Vec3 {
        self.x / self.x.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub e: Vec3,
    pub b: Vec3,
}

impl FieldSample {
    pub fn zero() -> Self {
        Self {
            e: Vec3::zeros(),
            b: Vec3::zeros(),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.e.norm_squared() + self.b.norm_squared()
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.e.x, self.e.y, self.e.z, self.b.x, self.b.y, self.b.z]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            e: Vec3::new(v[0], v[1], v[2]),
            b: Vec3::new(v[3], v[4], v[5]),
        }
    }
}

/// `Φ1 = ω∧e1`, `Φ2 = ω∧(ω∧e1)`, `Φ3 = e1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularBasis {
    pub phi1: Vec3,
    pub phi2: Vec3,
    pub phi3: Vec3,
}

impl AngularBasis {
    /// Basis at `x ≠ 0` from the polynomial forms `(0, x3, −x2)/|x|` and
    /// `(−x2² − x3², x1x2, x1x3)/|x|²`. Both vanish exactly on the e1 axis.
    pub fn at(x: &Vec3) -> Self {
        let r2 = x.norm_squared();
        let r = r2.sqrt();
        let phi1 = Vec3::new(0.0, x.z / r, -x.y / r);
        let phi2 = Vec3::new(-(x.y * x.y + x.z * x.z) / r2, x.x * x.y / r2, x.x * x.z / r2);
        Self { phi1, phi2, phi3: e1() }
    }
}

pub fn angular_basis(omega: &Vec3) -> Result<AngularBasis> {
    if (omega.norm() - 1.0).abs() >= 1e-10 {
        return Err(invalid(format!(
            "direction must be a unit vector, |ω| = {}",
            omega.norm()
        )));
    }
    Ok(AngularBasis::at(omega))
}

/// Radial coefficients of the solution in the angular basis:
/// `E = p Φ1`, `B = q Φ2 + w Φ3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DipoleCoefficients {
    pub p: f64,
    pub q: f64,
    pub w: f64,
}

impl DipoleCoefficients {
    /// Coefficients from `[h, h', h'']` at `s = |x| + t` on the sphere of radius `rho`.
    pub fn from_derivs(h: &[f64], rho: f64) -> Self {
        let inv = 1.0 / rho;
        let p = (h[2] - h[1] * inv) * inv;
        let q = -(h[2] - (3.0 * h[1] - 3.0 * h[0] * inv) * inv) * inv;
        let w = 2.0 * (h[1] - h[0] * inv) * inv * inv;
        Self { p, q, w }
    }

    pub fn at(profile: &Profile, t: f64, rho: f64) -> Self {
        Self::from_derivs(&profile.derivs(rho + t), rho)
    }
}

fn pair_from(profile: &Profile, pt: &SpacetimePoint) -> FieldSample {
    let rho = pt.radius();
    let c = DipoleCoefficients::at(profile, pt.t, rho);
    let basis = AngularBasis::at(&pt.x);
    FieldSample {
        e: basis.phi1 * c.p,
        b: basis.phi2 * c.q + basis.phi3 * c.w,
    }
}

pub fn eval_e(profile: &Profile, pt: &SpacetimePoint) -> Vec3 {
    let rho = pt.radius();
    let h = profile.derivs(rho + pt.t);
    let inv = 1.0 / rho;
    let p = (h[2] - h[1] * inv) * inv;
    AngularBasis::at(&pt.x).phi1 * p
}

pub fn eval_b(profile: &Profile, pt: &SpacetimePoint) -> Vec3 {
    pair_from(profile, pt).b
}

pub fn eval_pair(profile: &Profile, pt: &SpacetimePoint) -> FieldSample {
    pair_from(profile, pt)
}

/// Which argument a spherical wave is transported along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Argument `|x| − t`.
    #[default]
    Outgoing,
    /// Argument `|x| + t`.
    Incoming,
}

impl Direction {
    pub fn argument(self, rho: f64, t: f64) -> f64 {
        match self {
            Direction::Outgoing => rho - t,
            Direction::Incoming => rho + t,
        }
    }
}

/// `f(|x| ± t)/|x|`.
pub fn spherical_wave(f: &Profile, pt: &SpacetimePoint, direction: Direction) -> f64 {
    let rho = pt.radius();
    f.value(direction.argument(rho, pt.t)) / rho
}

/// Largest normal component a modulation profile may return.
pub const TANGENTIAL_TOLERANCE: f64 = 1e-10;

/// `(E, B) = (e(s, ω)/|x|, ω∧e(s, ω)/|x|)` with `s = |x| ∓ t`.
///
/// This is a candidate field only; it is not a Maxwell solution in general.
pub fn modulated_wave<F>(profile_e: F, pt: &SpacetimePoint, direction: Direction) -> Result<FieldSample>
where
    F: Fn(f64, &Vec3) -> Vec3,
{
    let rho = pt.radius();
    let omega = pt.direction();
    let e = profile_e(direction.argument(rho, pt.t), &omega);
    let normal = e.dot(&omega);
    if !(normal.abs() < TANGENTIAL_TOLERANCE) {
        return Err(Error::ContractViolation(format!(
            "modulation profile has normal component {normal:e} at ω = {:?}",
            omega.as_slice()
        )));
    }
    Ok(FieldSample {
        e: e / rho,
        b: omega.cross(&e) / rho,
    })
}

/// Evaluates the solution on rows of `(t, x1, x2, x3)` and writes the rows
/// back with `(E1, E2, E3, B1, B2, B3)` appended.
pub fn eval_csv<R: std::io::Read, W: std::io::Write>(profile: &Profile, input: R, output: W) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(["t", "x1", "x2", "x3", "E1", "E2", "E3", "B1", "B2", "B3"])?;
    let mut rows = 0;
    for record in reader.deserialize() {
        let (t, x1, x2, x3): (f64, f64, f64, f64) = record?;
        let pt = SpacetimePoint::new(t, Vec3::new(x1, x2, x3))?;
        let u = eval_pair(profile, &pt);
        let mut row = vec![t, x1, x2, x3];
        row.extend_from_slice(&u.as_array());
        writer.serialize(row)?;
        rows += 1;
    }
    writer.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{exponential_rate, make_bump, make_exponential};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(t: f64, x: [f64; 3]) -> SpacetimePoint {
        SpacetimePoint::new(t, Vec3::from(x)).unwrap()
    }

    #[test]
    fn origin_is_rejected() {
        assert!(SpacetimePoint::new(0.0, Vec3::zeros()).is_err());
        assert!(SpacetimePoint::new(0.0, Vec3::new(1e-13, 0.0, 0.0)).is_err());
    }

    #[test]
    fn angular_basis_at_pole() {
        let b = angular_basis(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(b.phi1, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(b.phi2, Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(b.phi3, Vec3::new(1.0, 0.0, 0.0));
        let b = angular_basis(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(b.phi1, Vec3::zeros());
        assert_eq!(b.phi2, Vec3::zeros());
        assert!(angular_basis(&Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn exponential_field_at_pole() {
        let p = make_exponential(0.25).unwrap();
        let r = exponential_rate(0.25).unwrap();
        let e = eval_e(&p, &pt(0.0, [0.0, 0.0, 1.0]));
        let expect = Vec3::new(0.0, 1.0, 0.0) * ((r * r - r) * r.exp());
        assert_relative_eq!(e, expect, max_relative = 1e-14);
    }

    #[test]
    fn magnetic_field_at_pole() {
        for p in [make_exponential(0.1).unwrap(), make_bump(2.0).unwrap()] {
            let h = p.derivs(1.0);
            let b = eval_b(&p, &pt(0.0, [0.0, 0.0, 1.0]));
            let expect = Vec3::new(h[2] - h[1] + h[0], 0.0, 0.0);
            assert_relative_eq!(b, expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn fields_vanish_on_e1_axis_and_outside_support() {
        let p = make_exponential(0.25).unwrap();
        for x in [[2.0, 0.0, 0.0], [-1.5, 0.0, 0.0]] {
            let u = eval_pair(&p, &pt(0.4, x));
            assert_eq!(u.e, Vec3::zeros());
            assert_eq!(u.b.y, 0.0);
            assert_eq!(u.b.z, 0.0);
        }
        let bump = make_bump(1.05).unwrap();
        let u = eval_pair(&bump, &pt(0.06, [0.0, 0.6, 0.8]));
        assert_eq!(u, FieldSample::zero());
        let u = eval_pair(&bump, &pt(0.0, [0.0, 0.0, 1.2]));
        assert_eq!(u, FieldSample::zero());
    }

    #[test]
    fn exponential_bound() {
        // both coefficient groups are bounded by e^{rs}(r² + 3|r| + 3) at |x| ≥ 1
        let p = make_exponential(0.25).unwrap();
        let r = exponential_rate(0.25).unwrap();
        let bound = (3.0 * r).exp() * (r * r + 3.0 * r.abs() + 3.0);
        for x in [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [1.2, -0.9, 1.3]] {
            let x = Vec3::from(x).normalize() * 2.0;
            let u = eval_pair(&p, &SpacetimePoint::new(1.0, x).unwrap());
            assert!(u.e.norm() <= bound && u.b.norm() <= bound);
        }
    }

    #[test]
    fn spherical_wave_examples() {
        let f = make_bump(2.0).unwrap();
        assert_eq!(spherical_wave(&f, &pt(1.5, [0.0, 1.0, 0.0]), Direction::Incoming), 0.0);
        let f = make_exponential(0.25).unwrap();
        let v = spherical_wave(&f, &pt(0.0, [0.0, 0.6, 0.8]), Direction::Incoming);
        assert_relative_eq!(v, f.value(1.0), max_relative = 1e-15);
    }

    #[test]
    fn modulated_wave_examples() {
        let f = make_exponential(0.25).unwrap();
        let profile = |s: f64, _: &Vec3| Vec3::new(0.0, f.value(s), 0.0);
        let point = pt(0.3, [0.0, 0.0, 2.0]);
        let u = modulated_wave(profile, &point, Direction::Outgoing).unwrap();
        assert_relative_eq!(u.e.y, f.value(1.7) / 2.0, max_relative = 1e-15);
        assert_eq!(u.b, point.direction().cross(&u.e));

        let u = modulated_wave(|_, _| Vec3::zeros(), &point, Direction::Outgoing).unwrap();
        assert_eq!(u, FieldSample::zero());

        let radial = |_: f64, w: &Vec3| *w;
        assert!(matches!(
            modulated_wave(radial, &point, Direction::Outgoing),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn csv_batch_appends_fields() {
        let p = make_exponential(0.25).unwrap();
        let input = "t,x1,x2,x3\n0.0,0.0,0.0,1.0\n0.5,1.0,2.0,-1.0\n";
        let mut out = Vec::new();
        assert_eq!(eval_csv(&p, input.as_bytes(), &mut out).unwrap(), 2);
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("t,x1,x2,x3,E1"));
        let cols: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
        let u = eval_pair(&p, &pt(0.0, [0.0, 0.0, 1.0]));
        assert_eq!(cols[4..], u.as_array());
        assert!(eval_csv(&p, "t,x1,x2,x3\n0,0,0,0\n".as_bytes(), Vec::new()).is_err());
    }

    fn unit(theta: f64, phi: f64) -> Vec3 {
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    proptest! {
        #[test]
        fn basis_invariants(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.3) {
            let w = unit(theta, phi);
            let b = angular_basis(&w).unwrap();
            prop_assert!(b.phi1.dot(&w).abs() < 1e-15);
            prop_assert!(b.phi2.dot(&w).abs() < 1e-15);
            let tangential = e1() - w * w.x;
            prop_assert!((b.phi2 + tangential).norm() < 1e-15);
            let sin2 = 1.0 - w.x * w.x;
            prop_assert!((b.phi1.norm_squared() - sin2).abs() < 1e-14);
            prop_assert!((b.phi2.norm_squared() - sin2).abs() < 1e-14);
        }

        #[test]
        fn exponential_time_scaling(eps in 0.05f64..0.9, t in -1.0f64..3.0,
                                    theta in 0.0f64..3.1, phi in 0.0f64..6.2, rho in 1.0f64..3.0) {
            let p = make_exponential(eps).unwrap();
            let r = exponential_rate(eps).unwrap();
            let x = unit(theta, phi) * rho;
            let u0 = eval_pair(&p, &SpacetimePoint::new(0.0, x).unwrap());
            let ut = eval_pair(&p, &SpacetimePoint::new(t, x).unwrap());
            let scale = (r * t).exp();
            for (a, b) in [(ut.e, u0.e), (ut.b, u0.b)] {
                prop_assert!((a - b * scale).norm() <= 1e-13 * (b * scale).norm());
            }
            prop_assert!(ut.e.dot(&x).abs() <= 1e-15 * ut.e.norm() * rho);
        }

        #[test]
        fn bump_support(b in 1.01f64..3.0, rho in 1.0f64..3.0, dt in 0.0f64..2.0, theta in 0.0f64..3.1) {
            let p = make_bump(b).unwrap();
            let t = (b - rho).max(0.0) + dt;
            let u = eval_pair(&p, &SpacetimePoint::new(t, unit(theta, 0.7) * rho).unwrap());
            prop_assert_eq!(u, FieldSample::zero());
        }
    }
}
