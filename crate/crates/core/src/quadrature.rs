//! Shell energy `∫_{|x|>1} |u|² dx`, boundary flux `∫_{|x|=1} ⟨A(n)u, u⟩ dσ`
//! and the energy identity linking them.
//!
//! Radial integrals use Gauss–Legendre nodes; the sphere uses a product of
//! Gauss–Legendre in `cos θ` and the trapezoid rule in `φ`.

use serde::{Deserialize, Serialize};

use crate::boundary::{kappa, poynting_normal, quad_form, BoundaryFrame, BoundarySpace};
use crate::diffops::least_squares_slope;
use crate::error::{invalid, Error, Result};
use crate::fields::{eval_pair, SpacetimePoint};
use crate::profiles::Profile;
use crate::Vec3;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Largest total degree of polynomials in `ω` integrated exactly.
    pub exactness_degree: usize,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (cos_nodes, cos_weights) = gauss_legendre(n_theta);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (&z, &wz) in cos_nodes.iter().zip(&cos_weights) {
            let s = (1.0 - z * z).sqrt();
            for k in 0..n_phi {
                let phi = dphi * (k as f64 + 0.5);
                directions.push(Vec3::new(s * phi.cos(), s * phi.sin(), z));
                weights.push(wz * dphi);
            }
        }
        Self {
            directions,
            weights,
            exactness_degree: (2 * n_theta - 1).min(n_phi - 1),
        }
    }

    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, f: F) -> f64 {
        let mut acc = CompensatedSum::default();
        for (d, w) in self.directions.iter().zip(&self.weights) {
            acc.add(w * f(d));
        }
        acc.value()
    }
}

/// Radial and angular resolution of the exterior shell `1 ≤ |x| ≤ r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Relative quadrature error above which results carry a warning.
    pub tolerance: f64,
}

pub const DEFAULT_N_R: usize = 64;
pub const DEFAULT_N_THETA: usize = 6;
pub const DEFAULT_N_PHI: usize = 8;

impl ShellGrid {
    pub fn new(r_max: f64, n_r: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        let g = Self {
            r_max,
            n_r,
            n_theta,
            n_phi,
            tolerance: 1e-10,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_max > 1.0) {
            return Err(invalid(format!("r_max must exceed 1, got {}", self.r_max)));
        }
        if self.n_r < 4 || self.n_theta < 4 || self.n_phi < 4 {
            return Err(invalid("node counts must be at least 4"));
        }
        Ok(())
    }

    /// Default truncation: `1 + 20/|r|` for exponential profiles, the
    /// support edge for bumps.
    pub fn default_for(profile: &Profile) -> Result<Self> {
        let r_max = match profile {
            Profile::Exponential { rate } => 1.0 + 20.0 / rate.abs(),
            Profile::Bump { b } => *b,
            Profile::Custom { .. } => return Err(invalid("custom profiles need an explicit r_max")),
        };
        Self::new(r_max.max(1.0 + 1e-9), DEFAULT_N_R, DEFAULT_N_THETA, DEFAULT_N_PHI)
    }

    pub fn refined(&self) -> Self {
        Self {
            n_r: 2 * self.n_r,
            n_theta: 2 * self.n_theta,
            n_phi: 2 * self.n_phi,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellEnergy {
    pub energy: f64,
    /// Upper radius actually integrated to.
    pub truncation: f64,
    /// Analytic bound on the energy beyond the truncation radius, when known.
    pub tail_bound: Option<f64>,
    /// `|E(n_r) − E(n_r/2)|`, a pessimistic quadrature error estimate.
    pub quadrature_error: f64,
    pub accuracy_warning: bool,
}

fn radial_integral<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = CompensatedSum::default();
    for (x, w) in nodes.iter().zip(&weights) {
        acc.add(w * f(mid + half * x));
    }
    half * acc.value()
}

/// Upper integration radius for the profile at time `t`, or `None` if the
/// solution already vanishes on the shell.
fn effective_r_max(profile: &Profile, t: f64, grid: &ShellGrid) -> Option<f64> {
    match profile.support_end() {
        Some(b) if b - t <= 1.0 => None,
        Some(b) => Some(grid.r_max.min(b - t)),
        None => Some(grid.r_max),
    }
}

fn energy_on(profile: &Profile, t: f64, r_max: f64, n_r: usize, sphere: &SphereRule) -> f64 {
    radial_integral(1.0, r_max, n_r, |rho| {
        rho * rho * sphere.integrate(|w| eval_pair(profile, &SpacetimePoint { t, x: w * rho }).norm_squared())
    })
}

/// Bound on `∫_{|x|>R} |u|² dx` for `h = e^{rs}`, from `|p|, |q| ≤ K e^{rs}`,
/// `|w| ≤ 2K e^{rs}` with `K = r² + 3|r| + 3`.
pub fn exponential_tail_bound(rate: f64, t: f64, r_max: f64) -> f64 {
    let k = rate * rate + 3.0 * rate.abs() + 3.0;
    let a = 2.0 * rate.abs();
    let radial = (-a * r_max).exp() * (r_max * r_max / a + 2.0 * r_max / (a * a) + 2.0 / (a * a * a));
    40.0 * std::f64::consts::PI * k * k * (2.0 * rate * t).exp() * radial
}

pub fn shell_energy(profile: &Profile, t: f64, grid: &ShellGrid) -> Result<ShellEnergy> {
    grid.validate()?;
    let Some(r_max) = effective_r_max(profile, t, grid) else {
        return Ok(ShellEnergy {
            energy: 0.0,
            truncation: 1.0,
            tail_bound: Some(0.0),
            quadrature_error: 0.0,
            accuracy_warning: false,
        });
    };
    let sphere = SphereRule::new(grid.n_theta, grid.n_phi);
    let energy = energy_on(profile, t, r_max, grid.n_r, &sphere);
    let coarse = energy_on(profile, t, r_max, grid.n_r / 2, &sphere);
    let quadrature_error = (energy - coarse).abs();
    let tail_bound = match profile {
        Profile::Exponential { rate } => Some(exponential_tail_bound(*rate, t, r_max)),
        Profile::Bump { b } if r_max >= b - t => Some(0.0),
        _ => None,
    };
    Ok(ShellEnergy {
        energy,
        truncation: r_max,
        tail_bound,
        quadrature_error,
        accuracy_warning: quadrature_error > grid.tolerance * energy.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFlux {
    /// `∫_{|x|=1} ⟨A(n)u, u⟩ dσ`.
    pub flux: f64,
    /// `∫_{|x|=1} (E∧B)·n dσ`.
    pub poynting_flux: f64,
    /// Largest boundary-condition residual over the sphere nodes.
    pub max_bc_residual: f64,
}

pub fn boundary_flux(profile: &Profile, t: f64, grid: &ShellGrid, space: &BoundarySpace) -> Result<BoundaryFlux> {
    grid.validate()?;
    let sphere = SphereRule::new(grid.n_theta, grid.n_phi);
    let mut flux = CompensatedSum::default();
    let mut poynting = CompensatedSum::default();
    let mut max_bc_residual: f64 = 0.0;
    for (w, weight) in sphere.directions.iter().zip(&sphere.weights) {
        let frame = BoundaryFrame::from_direction(*w)?;
        let u = eval_pair(profile, &SpacetimePoint { t, x: frame.x });
        flux.add(weight * quad_form(&u, &frame));
        poynting.add(weight * poynting_normal(&u, &frame));
        max_bc_residual = max_bc_residual.max(space.residual(&u, &frame, t).norm());
    }
    Ok(BoundaryFlux {
        flux: flux.value(),
        poynting_flux: poynting.value(),
        max_bc_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    pub t: f64,
    /// Centered difference of the shell energy.
    pub lhs: f64,
    /// `κ ∫ (E∧B)·n dσ`.
    pub rhs: f64,
    pub kappa: f64,
    pub mismatch: f64,
    pub inconclusive: bool,
}

/// Compares `d/dt ∫|u|²` with the boundary flux at time `t`.
pub fn energy_identity_check(profile: &Profile, t: f64, grid: &ShellGrid, dt: f64) -> Result<EnergyIdentity> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let plus = shell_energy(profile, t + dt, grid)?;
    let minus = shell_energy(profile, t - dt, grid)?;
    let lhs = (plus.energy - minus.energy) / (2.0 * dt);
    let k = kappa();
    let space = BoundarySpace::Eps { eps: 0.0 };
    let rhs = k * boundary_flux(profile, t, grid, &space)?.poynting_flux;
    let mismatch = if rhs == 0.0 && lhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / rhs.abs()
    };
    let tail = plus
        .tail_bound
        .unwrap_or(f64::INFINITY)
        .max(minus.tail_bound.unwrap_or(f64::INFINITY));
    Ok(EnergyIdentity {
        t,
        lhs,
        rhs,
        kappa: k,
        mismatch,
        inconclusive: tail > grid.tolerance * minus.energy.abs().max(f64::MIN_POSITIVE),
    })
}

/// Sampled energy and boundary flux.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub flux: Vec<f64>,
}

impl EnergyTrace {
    pub fn push(&mut self, t: f64, energy: f64, flux: f64) {
        self.times.push(t);
        self.energy.push(energy);
        self.flux.push(flux);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn energy_trace(profile: &Profile, times: &[f64], grid: &ShellGrid, space: &BoundarySpace) -> Result<EnergyTrace> {
    let mut trace = EnergyTrace::default();
    for &t in times {
        let e = shell_energy(profile, t, grid)?;
        let f = boundary_flux(profile, t, grid, space)?;
        trace.push(t, e.energy, f.flux);
    }
    Ok(trace)
}

/// Field decay rate: half the least-squares slope of `log energy` against
/// `t`, over the samples with positive energy.
pub fn decay_rate(trace: &EnergyTrace) -> Result<f64> {
    if trace.energy.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidInput("energies must be finite and non-negative".into()));
    }
    let (ts, logs): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.energy)
        .filter(|(_, e)| **e > 0.0)
        .map(|(t, e)| (*t, e.ln()))
        .unzip();
    if ts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 samples with positive energy, got {}",
            ts.len()
        )));
    }
    Ok(0.5 * least_squares_slope(&ts, &logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{exponential_rate, make_bump, make_exponential};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 5, 8, 33, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn sphere_rule_exactness() {
        let s = SphereRule::new(DEFAULT_N_THETA, DEFAULT_N_PHI);
        assert_relative_eq!(s.integrate(|_| 1.0), 4.0 * PI, max_relative = 1e-12);
        // sin²θ about the e1 axis, which is what |Φ1|² and |Φ2|² are
        assert_relative_eq!(s.integrate(|w| 1.0 - w.x * w.x), 8.0 * PI / 3.0, max_relative = 1e-12);
        assert_relative_eq!(s.integrate(|w| 1.0 - w.z * w.z), 8.0 * PI / 3.0, max_relative = 1e-12);
        assert!(s.exactness_degree >= 2);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert_relative_eq!(s.value(), 1e-15, max_relative = 1e-10);
    }

    #[test]
    fn vanished_and_zero_energies() {
        let bump = make_bump(1.05).unwrap();
        let g = ShellGrid::default_for(&bump).unwrap();
        assert_eq!(shell_energy(&bump, 0.05, &g).unwrap().energy, 0.0);
        assert_eq!(shell_energy(&bump, 0.3, &g).unwrap().energy, 0.0);
        let s = BoundarySpace::Eps { eps: 0.25 };
        assert_eq!(boundary_flux(&bump, 0.06, &g, &s).unwrap().flux, 0.0);
        let g = ShellGrid::new(4.0, 16, 4, 4).unwrap();
        assert_eq!(shell_energy(&Profile::zero(), 0.0, &g).unwrap().energy, 0.0);
        let id = energy_identity_check(&Profile::zero(), 0.5, &g, 1e-4).unwrap();
        assert_eq!((id.lhs, id.rhs, id.mismatch), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exponential_energy_scaling_and_flux_sign() {
        let eps = 0.25;
        let p = make_exponential(eps).unwrap();
        let r = exponential_rate(eps).unwrap();
        let g = ShellGrid::default_for(&p).unwrap();
        let s = BoundarySpace::eps(eps).unwrap();
        let e0 = shell_energy(&p, 0.0, &g).unwrap();
        assert!(!e0.accuracy_warning, "{e0:?}");
        assert!(e0.tail_bound.unwrap() < 1e-10 * e0.energy);
        let f0 = boundary_flux(&p, 0.0, &g, &s).unwrap();
        assert!(f0.flux < 0.0);
        assert!(f0.max_bc_residual < 1e-12);
        for t in [0.5, 1.0, 2.5] {
            let e = shell_energy(&p, t, &g).unwrap().energy;
            assert_relative_eq!(e / e0.energy, (2.0 * r * t).exp(), max_relative = 1e-8);
            let f = boundary_flux(&p, t, &g, &s).unwrap().flux;
            assert_relative_eq!(f, (2.0 * r * t).exp() * f0.flux, max_relative = 1e-12);
            assert!(f < 0.0);
        }
    }

    #[test]
    fn doubling_resolution_changes_little() {
        let p = make_exponential(0.25).unwrap();
        let g = ShellGrid::default_for(&p).unwrap();
        let a = shell_energy(&p, 0.3, &g).unwrap().energy;
        let b = shell_energy(&p, 0.3, &g.refined()).unwrap().energy;
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn energy_identity_for_exponential() {
        let eps = 0.25;
        let p = make_exponential(eps).unwrap();
        let r = exponential_rate(eps).unwrap();
        let g = ShellGrid::default_for(&p).unwrap();
        let id = energy_identity_check(&p, 0.5, &g, 1e-4).unwrap();
        assert!(!id.inconclusive);
        assert!(id.mismatch <= 1e-5, "{id:?}");
        let e = shell_energy(&p, 0.5, &g).unwrap().energy;
        assert_relative_eq!(id.lhs / e, 2.0 * r, max_relative = 1e-6);
    }

    #[test]
    fn decay_rate_examples() {
        let p = make_exponential(0.25).unwrap();
        let r = exponential_rate(0.25).unwrap();
        let g = ShellGrid::default_for(&p).unwrap();
        let s = BoundarySpace::eps(0.25).unwrap();
        let times: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let trace = energy_trace(&p, &times, &g, &s).unwrap();
        assert_relative_eq!(decay_rate(&trace).unwrap(), r, max_relative = 1e-2);

        let flat = EnergyTrace {
            times: vec![0.0, 1.0, 2.0],
            energy: vec![3.0; 3],
            flux: vec![0.0; 3],
        };
        assert_eq!(decay_rate(&flat).unwrap(), 0.0);

        let bump = make_bump(1.05).unwrap();
        let g = ShellGrid::default_for(&bump).unwrap();
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let trace = energy_trace(&bump, &times, &g, &BoundarySpace::gamma(1.05).unwrap()).unwrap();
        assert!(trace.energy[5..].iter().all(|e| *e == 0.0));
        let rate = decay_rate(&trace).unwrap();
        assert!(rate.is_finite() && rate < 0.0);

        let bad = EnergyTrace {
            times: vec![0.0, 1.0, 2.0],
            energy: vec![1.0, -1.0, 0.5],
            flux: vec![0.0; 3],
        };
        assert!(decay_rate(&bad).is_err());
        let short = EnergyTrace {
            times: vec![0.0, 1.0, 2.0],
            energy: vec![1.0, 0.5, 0.0],
            flux: vec![0.0; 3],
        };
        assert!(decay_rate(&short).is_err());
    }
}
