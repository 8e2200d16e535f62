//! Boundary algebra on the unit sphere: the symbol `A(n)` of the Maxwell
//! system, its quadratic form, the dissipative spaces
//! `N_ε = {(1+ε)E_tan = n∧B_tan}` and the time-dependent coefficient `γ(t)`
//! that makes the bump solution satisfy a dissipative condition.
//!
//! The system is written `u_t + Σ A_j ∂_j u = 0` with `u = (E, B)`, so
//! `A(n)(E, B) = (−n∧B, n∧E)` and `⟨A(n)u, u⟩ = 2 (E∧B)·n`. The normal is
//! `n = x/|x|`.

use std::sync::OnceLock;

use nalgebra::{Matrix6, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{eval_pair, AngularBasis, FieldSample, SpacetimePoint};
use crate::profiles::Profile;
use crate::sampling::sphere_point;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub x: Vec3,
    pub n: Vec3,
}

impl BoundaryFrame {
    pub fn new(x: Vec3) -> Result<Self> {
        let r = x.norm();
        if !((r - 1.0).abs() < 1e-12) {
            return Err(invalid(format!(
                "boundary point must lie on the unit sphere, |x| = {r}"
            )));
        }
        Ok(Self { x, n: x / r })
    }

    /// Frame at the unit vector along `v`.
    pub fn from_direction(v: Vec3) -> Result<Self> {
        let r = v.norm();
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("direction must be non-zero"));
        }
        let n = v / r;
        Ok(Self { x: n, n })
    }

    /// Orthonormal pair spanning the tangent plane.
    pub fn tangent_basis(&self) -> (Vec3, Vec3) {
        let n = self.n;
        let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vec3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let t1 = (helper - n * n.dot(&helper)).normalize();
        (t1, n.cross(&t1))
    }
}

pub fn tangential_part(v: &Vec3, frame: &BoundaryFrame) -> Vec3 {
    v - frame.n * v.dot(&frame.n)
}

pub fn apply_an(u: &FieldSample, frame: &BoundaryFrame) -> FieldSample {
    FieldSample {
        e: -frame.n.cross(&u.b),
        b: frame.n.cross(&u.e),
    }
}

/// `A(n)` as a 6×6 matrix acting on `(E, B)`.
pub fn an_matrix(n: &Vec3) -> Matrix6<f64> {
    // cross-product matrix: [n]_× v = n∧v
    let cross = nalgebra::Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-cross));
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&cross);
    m
}

/// Eigenvalues of `A(n)` in increasing order.
pub fn an_spectrum(n: &Vec3) -> [f64; 6] {
    let eig = SymmetricEigen::new(an_matrix(n));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    [v[0], v[1], v[2], v[3], v[4], v[5]]
}

pub fn an_rank(n: &Vec3, tol: f64) -> usize {
    an_spectrum(n).iter().filter(|l| l.abs() > tol).count()
}

pub fn quad_form(u: &FieldSample, frame: &BoundaryFrame) -> f64 {
    let a = apply_an(u, frame);
    a.e.dot(&u.e) + a.b.dot(&u.b)
}

/// Normal component of the Poynting vector, `(E∧B)·n`.
pub fn poynting_normal(u: &FieldSample, frame: &BoundaryFrame) -> f64 {
    u.e.cross(&u.b).dot(&frame.n)
}

/// Ratio `⟨A(n)u, u⟩ / (E∧B)·n` over random samples; fails if it is not constant.
pub fn measure_kappa(samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kappa: Option<f64> = None;
    let mut seen = 0;
    while seen < samples.max(1) {
        let frame = BoundaryFrame::from_direction(sphere_point(rng.gen(), rng.gen()))?;
        let u = random_sample(&mut rng);
        let poynting = poynting_normal(&u, &frame);
        if poynting.abs() < 1e-3 {
            continue;
        }
        let ratio = quad_form(&u, &frame) / poynting;
        match kappa {
            None => kappa = Some(ratio),
            Some(k) if (ratio - k).abs() > 1e-12 * k.abs() => {
                return Err(Error::ContractViolation(format!(
                    "quadratic form is not a fixed multiple of the Poynting flux: {k} vs {ratio}"
                )))
            }
            _ => {}
        }
        seen += 1;
    }
    Ok(kappa.unwrap_or(f64::NAN))
}

/// `κ` with `⟨A(n)u, u⟩ = κ (E∧B)·n`, measured once per process.
pub fn kappa() -> f64 {
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| measure_kappa(64, 0x6b_6170_7061).expect("boundary symbol convention is inconsistent"))
}

fn random_sample<R: Rng>(rng: &mut R) -> FieldSample {
    let mut v = [0.0; 6];
    for c in &mut v {
        *c = rng.gen_range(-1.0..1.0);
    }
    FieldSample::from_array(v)
}

/// `(1+ε)E_tan − n∧B_tan`.
pub fn neps_residual(u: &FieldSample, frame: &BoundaryFrame, eps: f64) -> Vec3 {
    let e_tan = tangential_part(&u.e, frame);
    let b_tan = tangential_part(&u.b, frame);
    e_tan * (1.0 + eps) - frame.n.cross(&b_tan)
}

/// Both sides of `E_tan − n∧B_tan = −h(ρ+t)/ρ³ · Φ1` on the sphere `|x| = ρ`:
/// the left from the closed-form fields, the right from the profile alone.
pub fn lemma41_residue(profile: &Profile, x: &Vec3, t: f64) -> Result<(Vec3, Vec3)> {
    let pt = SpacetimePoint::new(t, *x)?;
    let rho = pt.radius();
    let n = pt.direction();
    let u = eval_pair(profile, &pt);
    let e_tan = u.e - n * u.e.dot(&n);
    let b_tan = u.b - n * u.b.dot(&n);
    let lhs = e_tan - n.cross(&b_tan);
    let rhs = AngularBasis::at(x).phi1 * (-profile.value(rho + t) / rho.powi(3));
    Ok((lhs, rhs))
}

/// Result of sampling a dissipative space `N_ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativityScan {
    pub eps: f64,
    pub samples: usize,
    /// Largest `⟨A(n)u, u⟩ / ‖(E_tan, B_tan)‖²` seen.
    pub min_margin: f64,
    pub c_estimate: f64,
    pub dim_neps: usize,
    pub kernel_contained: bool,
    /// Frames at which `rank A(n) = 4` was confirmed.
    pub rank_checks: usize,
    pub rank_failures: usize,
}

/// Number of frames on which the spectrum of `A(n)` is re-checked during a scan.
const RANK_CHECK_FRAMES: usize = 100;

/// Element of `N_ε` from its free parameters `(B_tan, E·n, B·n)`.
pub fn neps_element(frame: &BoundaryFrame, eps: f64, b_tan: (f64, f64), e_n: f64, b_n: f64) -> FieldSample {
    let (t1, t2) = frame.tangent_basis();
    let bt = t1 * b_tan.0 + t2 * b_tan.1;
    FieldSample {
        e: frame.n.cross(&bt) / (1.0 + eps) + frame.n * e_n,
        b: bt + frame.n * b_n,
    }
}

fn column_rank(cols: &[FieldSample], tol: f64) -> usize {
    let m = nalgebra::DMatrix::from_fn(6, cols.len(), |i, j| cols[j].as_array()[i]);
    m.svd(false, false).singular_values.iter().filter(|s| **s > tol).count()
}

pub fn dissipativity_scan(eps: f64, samples: usize, seed: u64) -> Result<DissipativityScan> {
    if !(eps.is_finite() && eps > -1.0) {
        return Err(invalid(format!("1 + eps must be positive, got eps = {eps}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut rank_checks = 0;
    let mut rank_failures = 0;
    let mut dim_neps = usize::MAX;
    let mut kernel_contained = true;

    for i in 0..samples {
        let frame = BoundaryFrame::from_direction(sphere_point(rng.gen(), rng.gen()))?;
        if i < RANK_CHECK_FRAMES {
            if an_rank(&frame.n, 1e-10) == 4 {
                rank_checks += 1;
            } else {
                rank_failures += 1;
            }
            let basis = [
                neps_element(&frame, eps, (1.0, 0.0), 0.0, 0.0),
                neps_element(&frame, eps, (0.0, 1.0), 0.0, 0.0),
                neps_element(&frame, eps, (0.0, 0.0), 1.0, 0.0),
                neps_element(&frame, eps, (0.0, 0.0), 0.0, 1.0),
            ];
            dim_neps = dim_neps.min(column_rank(&basis, 1e-10));
            let kernel = [
                FieldSample {
                    e: frame.n,
                    b: Vec3::zeros(),
                },
                FieldSample {
                    e: Vec3::zeros(),
                    b: frame.n,
                },
            ];
            kernel_contained &= kernel
                .iter()
                .all(|k| neps_residual(k, &frame, eps).norm() < 1e-14 && apply_an(k, &frame).norm_squared() < 1e-28);
        }
        let u = neps_element(
            &frame,
            eps,
            (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let tan = tangential_part(&u.e, &frame).norm_squared() + tangential_part(&u.b, &frame).norm_squared();
        if tan < 1e-20 {
            continue;
        }
        worst = worst.max(quad_form(&u, &frame) / tan);
    }
    Ok(DissipativityScan {
        eps,
        samples,
        min_margin: worst,
        c_estimate: -worst,
        dim_neps,
        kernel_contained,
        rank_checks,
        rank_failures,
    })
}

/// `Q(y, b) = 2(3y⁴ − 2(b²−1)y² − b⁴) + 2y(b² − y²)²`.
pub fn q_poly(y: f64, b: f64) -> f64 {
    let y2 = y * y;
    let b2 = b * b;
    let d = b2 - y2;
    2.0 * (3.0 * y2 * y2 - 2.0 * (b2 - 1.0) * y2 - b2 * b2) + 2.0 * y * d * d
}

/// Bound on `|∇Q|` over `[1, top]²`.
fn q_lipschitz(top: f64) -> f64 {
    let y3 = top.powi(3);
    let spread = top * top - 1.0;
    let dy = 24.0 * y3 + 8.0 * spread * top + 2.0 * spread * spread + 8.0 * top * top * spread;
    let db = 16.0 * y3 + 8.0 * top * top * spread;
    dy.hypot(db)
}

/// Certified lower bound of `Q` over `[1, 1+μ]²` from a `resolution²` grid.
pub fn q_lower_bound(mu: f64, resolution: usize) -> f64 {
    let h = mu / (resolution - 1) as f64;
    let mut min = f64::INFINITY;
    for i in 0..resolution {
        let y = 1.0 + h * i as f64;
        for j in 0..resolution {
            min = min.min(q_poly(y, 1.0 + h * j as f64));
        }
    }
    min - q_lipschitz(1.0 + mu) * h * std::f64::consts::FRAC_1_SQRT_2
}

/// Largest `μ ∈ (0, 1]` (to bisection accuracy) with `Q ≥ 3` certified on `[1, 1+μ]²`.
pub fn find_mu(resolution: usize) -> Result<f64> {
    if resolution < 100 {
        return Err(invalid(format!(
            "need at least 100 grid points per axis, got {resolution}"
        )));
    }
    let certified = |mu: f64| q_lower_bound(mu, resolution) >= 3.0;
    if certified(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if certified(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::ConstructionInvalid("no certified μ at this resolution".into()));
    }
    Ok(lo)
}

/// `γ(t) = (b² − (1+t)²)⁴ / Q(1+t, b)` on `[0, b−1]`, extended by zero.
pub fn gamma_of_t(t: f64, b: f64) -> Result<f64> {
    if !(b.is_finite() && b > 1.0) {
        return Err(invalid(format!("b must exceed 1, got {b}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("γ is defined for t ≥ 0, got {t}")));
    }
    if t >= b - 1.0 {
        return Ok(0.0);
    }
    let y = 1.0 + t;
    let q = q_poly(y, b);
    if !(q > 0.0) {
        return Err(Error::ConstructionInvalid(format!(
            "Q(1+t, b) = {q} is not positive at t = {t}, b = {b}; choose b closer to 1"
        )));
    }
    let d = (b - y) * (b + y);
    Ok(d.powi(4) / q)
}

/// Supremum of `|γ|` on a grid of `n` points over `[0, b−1]`.
pub fn sup_gamma(b: f64, n: usize) -> Result<f64> {
    let n = n.max(2);
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let t = (b - 1.0) * i as f64 / (n - 1) as f64;
        sup = sup.max(gamma_of_t(t, b)?.abs());
    }
    Ok(sup)
}

const SUP_GRID: usize = 2001;

/// Bump width `b ∈ (1, 1+μ)` with `sup |γ| ≤ δ/2`, as far from 1 as bisection allows.
pub fn choose_b(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mu = find_mu(1000)?;
    let ok = |b: f64| sup_gamma(b, SUP_GRID).map(|s| s <= 0.5 * delta).unwrap_or(false);
    let top = 1.0 + 0.999 * mu;
    if ok(top) {
        return Ok(top);
    }
    let (mut lo, mut hi) = (1.0, top);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 1.0 {
        return Err(Error::ConstructionInvalid(format!(
            "no admissible b for delta = {delta}"
        )));
    }
    Ok(lo)
}

/// Time-dependent coefficient of the bump construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSchedule {
    pub b: f64,
}

impl GammaSchedule {
    /// Validates that `Q(1+t, b) > 0` and `|γ| < 1` on the whole window.
    pub fn new(b: f64) -> Result<Self> {
        let sup = sup_gamma(b, SUP_GRID)?;
        if !(sup < 1.0) {
            return Err(invalid(format!("sup |γ| = {sup} is not below 1")));
        }
        Ok(Self { b })
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        gamma_of_t(t, self.b).unwrap_or(0.0)
    }

    pub fn window_end(&self) -> f64 {
        self.b - 1.0
    }
}

/// The dissipative boundary condition `(1 + c(t))E_tan − n∧B_tan = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundarySpace {
    Eps { eps: f64 },
    Gamma(GammaSchedule),
}

impl BoundarySpace {
    pub fn eps(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(BoundarySpace::Eps { eps })
    }

    pub fn gamma(b: f64) -> Result<Self> {
        Ok(BoundarySpace::Gamma(GammaSchedule::new(b)?))
    }

    /// `ε` or `γ(t)`.
    pub fn coefficient(&self, t: f64) -> f64 {
        match self {
            BoundarySpace::Eps { eps } => *eps,
            BoundarySpace::Gamma(g) => g.value(t),
        }
    }

    pub fn residual(&self, u: &FieldSample, frame: &BoundaryFrame, t: f64) -> Vec3 {
        neps_residual(u, frame, self.coefficient(t))
    }
}
