//! Finite-difference vector calculus used as an independent oracle for the
//! closed-form identities.
//!
//! Nothing here looks at profile derivatives: every derivative is a central
//! difference of point evaluations, so the oracle stays independent of the
//! analytic code it checks.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{eval_pair, FieldSample, SpacetimePoint};
use crate::profiles::Profile;
use crate::Vec3;

/// Stencil points must stay strictly outside this radius.
pub const MIN_STENCIL_RADIUS: f64 = 0.5;

/// Central-difference accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Second),
            4 => Ok(FdOrder::Fourth),
            _ => Err(invalid(format!("difference order must be 2 or 4, got {order}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }

    /// Offsets (in units of the step) and weights of the first-derivative stencil.
    fn first(self) -> &'static [(f64, f64)] {
        match self {
            FdOrder::Second => &[(1.0, 0.5), (-1.0, -0.5)],
            FdOrder::Fourth => &[
                (2.0, -1.0 / 12.0),
                (1.0, 8.0 / 12.0),
                (-1.0, -8.0 / 12.0),
                (-2.0, 1.0 / 12.0),
            ],
        }
    }

    fn second(self) -> &'static [(f64, f64)] {
        match self {
            FdOrder::Second => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
            FdOrder::Fourth => &[
                (2.0, -1.0 / 12.0),
                (1.0, 16.0 / 12.0),
                (0.0, -30.0 / 12.0),
                (-1.0, 16.0 / 12.0),
                (-2.0, -1.0 / 12.0),
            ],
        }
    }

    fn radius(self) -> f64 {
        match self {
            FdOrder::Second => 1.0,
            FdOrder::Fourth => 2.0,
        }
    }
}

/// Step size, difference order and number of halving levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    pub step: f64,
    pub order: FdOrder,
    pub levels: usize,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            step: 1e-3,
            order: FdOrder::Second,
            levels: 3,
        }
    }
}

impl FdScheme {
    pub fn new(step: f64, order: FdOrder, levels: usize) -> Result<Self> {
        let s = Self { step, order, levels };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(invalid(format!("step must be positive, got {}", self.step)));
        }
        if self.levels < 2 {
            return Err(invalid(format!(
                "need at least 2 refinement levels, got {}",
                self.levels
            )));
        }
        Ok(())
    }

    /// Steps of all levels, coarsest first.
    pub fn steps(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.step / f64::powi(2.0, k as i32)).collect()
    }

    pub fn stencil_radius(&self) -> f64 {
        self.step * self.order.radius()
    }
}

fn check_stencil(x: &Vec3, h: f64, order: FdOrder) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("step must be positive, got {h}")));
    }
    let reach = h * order.radius();
    if x.norm() - reach <= MIN_STENCIL_RADIUS {
        return Err(Error::Domain(format!(
            "stencil of radius {reach} around |x| = {} comes within {MIN_STENCIL_RADIUS} of the origin",
            x.norm()
        )));
    }
    Ok(())
}

/// Jacobian `J[i][j] = ∂_j F_i` by central differences with step `h`.
pub fn fd_jacobian<F>(f: F, x: &Vec3, h: f64, order: FdOrder) -> Result<Matrix3<f64>>
where
    F: Fn(&Vec3) -> Vec3,
{
    check_stencil(x, h, order)?;
    let mut jac = Matrix3::zeros();
    for j in 0..3 {
        let mut col = Vec3::zeros();
        for &(offset, weight) in order.first() {
            let mut y = *x;
            y[j] += offset * h;
            col += f(&y) * weight;
        }
        jac.set_column(j, &(col / h));
    }
    Ok(jac)
}

pub fn fd_grad<F>(phi: F, x: &Vec3, h: f64, order: FdOrder) -> Result<Vec3>
where
    F: Fn(&Vec3) -> f64,
{
    check_stencil(x, h, order)?;
    let mut g = Vec3::zeros();
    for j in 0..3 {
        for &(offset, weight) in order.first() {
            let mut y = *x;
            y[j] += offset * h;
            g[j] += weight * phi(&y);
        }
    }
    Ok(g / h)
}

fn curl_of(j: &Matrix3<f64>) -> Vec3 {
    Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

pub fn fd_curl<F>(f: F, x: &Vec3, scheme: &FdScheme) -> Result<Vec3>
where
    F: Fn(&Vec3) -> Vec3,
{
    Ok(curl_of(&fd_jacobian(f, x, scheme.step, scheme.order)?))
}

pub fn fd_div<F>(f: F, x: &Vec3, scheme: &FdScheme) -> Result<f64>
where
    F: Fn(&Vec3) -> Vec3,
{
    Ok(fd_jacobian(f, x, scheme.step, scheme.order)?.trace())
}

/// `u_tt − Δu` for a vector-valued `u(t, x)` of fixed length.
pub fn fd_box<F>(u: F, pt: &SpacetimePoint, scheme: &FdScheme) -> Result<Vec<f64>>
where
    F: Fn(f64, &Vec3) -> Vec<f64>,
{
    let h = scheme.step;
    check_stencil(&pt.x, h, scheme.order)?;
    let stencil = scheme.order.second();
    let mut out = vec![0.0; u(pt.t, &pt.x).len()];
    let mut accumulate = |values: Vec<f64>, weight: f64| {
        for (o, v) in out.iter_mut().zip(values) {
            *o += weight * v;
        }
    };
    for &(offset, weight) in stencil {
        accumulate(u(pt.t + offset * h, &pt.x), weight);
        for j in 0..3 {
            let mut y = pt.x;
            y[j] += offset * h;
            accumulate(u(pt.t, &y), -weight);
        }
    }
    Ok(out.into_iter().map(|v| v / (h * h)).collect())
}

/// Pointwise residuals of Maxwell's equations for a field `(t, x) ↦ (E, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MaxwellResiduals {
    /// `‖∂_t E − curl B‖_∞`
    pub ampere: f64,
    /// `‖∂_t B + curl E‖_∞`
    pub faraday: f64,
    pub div_e: f64,
    pub div_b: f64,
}

impl MaxwellResiduals {
    pub fn max(&self) -> f64 {
        self.ampere.max(self.faraday).max(self.div_e).max(self.div_b)
    }

    pub fn divergence(&self) -> f64 {
        self.div_e.max(self.div_b)
    }
}

/// Maxwell residuals of an arbitrary field at one step size.
pub fn field_residuals<F>(field: F, pt: &SpacetimePoint, h: f64, order: FdOrder) -> Result<MaxwellResiduals>
where
    F: Fn(f64, &Vec3) -> FieldSample,
{
    check_stencil(&pt.x, h, order)?;
    let mut dt = FieldSample::zero();
    for &(offset, weight) in order.first() {
        let u = field(pt.t + offset * h, &pt.x);
        dt.e += u.e * weight;
        dt.b += u.b * weight;
    }
    dt.e /= h;
    dt.b /= h;

    let mut je = Matrix3::zeros();
    let mut jb = Matrix3::zeros();
    for j in 0..3 {
        let mut ce = Vec3::zeros();
        let mut cb = Vec3::zeros();
        for &(offset, weight) in order.first() {
            let mut y = pt.x;
            y[j] += offset * h;
            let u = field(pt.t, &y);
            ce += u.e * weight;
            cb += u.b * weight;
        }
        je.set_column(j, &(ce / h));
        jb.set_column(j, &(cb / h));
    }
    Ok(MaxwellResiduals {
        ampere: (dt.e - curl_of(&jb)).amax(),
        faraday: (dt.b + curl_of(&je)).amax(),
        div_e: je.trace().abs(),
        div_b: jb.trace().abs(),
    })
}

/// Residual norms over refinement levels and the fitted convergence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    #[serde(rename = "norms")]
    pub residual_norms: Vec<f64>,
    pub steps: Vec<f64>,
    /// `+∞` (serialized as `null`) when a level hit an exact zero.
    #[serde(rename = "order")]
    pub estimated_order: f64,
    #[serde(rename = "points")]
    pub points_tested: usize,
    pub at_floor: bool,
}

impl ResidualReport {
    pub fn from_norms(norms: Vec<f64>, steps: Vec<f64>, points: usize) -> Result<Self> {
        let order = convergence_order(&norms, &steps)?;
        Ok(Self {
            residual_norms: norms,
            steps,
            estimated_order: order,
            points_tested: points,
            at_floor: order.is_infinite(),
        })
    }

    /// Norm at the finest level.
    pub fn finest(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&f64::NAN)
    }

    /// Norm at the coarsest level (the nominal step).
    pub fn coarsest(&self) -> f64 {
        *self.residual_norms.first().unwrap_or(&f64::NAN)
    }

    /// True if the order is within `range` or every level is an exact zero.
    pub fn converges_within(&self, range: (f64, f64)) -> bool {
        if self.at_floor {
            return self.residual_norms.iter().all(|&n| n == 0.0);
        }
        (range.0..=range.1).contains(&self.estimated_order)
    }
}

/// Least-squares slope of `log(norm)` against `log(step)`.
///
/// Returns `+∞` when any norm is exactly zero (already at the floor).
pub fn convergence_order(norms: &[f64], steps: &[f64]) -> Result<f64> {
    if norms.len() != steps.len() || norms.len() < 2 {
        return Err(invalid("need at least two levels of equal length"));
    }
    if steps.windows(2).any(|w| !(w[1] < w[0]) || w[1] <= 0.0) {
        return Err(invalid("steps must be positive and strictly decreasing"));
    }
    if norms.iter().any(|n| !n.is_finite() || *n < 0.0) {
        return Err(invalid("norms must be finite and non-negative"));
    }
    if norms.contains(&0.0) {
        return Ok(f64::INFINITY);
    }
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Residual norms of an arbitrary field over a point set: at each level the
/// max over points of `metric(residuals)`.
pub fn residual_sweep<F, M>(field: F, points: &[SpacetimePoint], scheme: &FdScheme, metric: M) -> Result<ResidualReport>
where
    F: Fn(f64, &Vec3) -> FieldSample,
    M: Fn(&MaxwellResiduals) -> f64,
{
    scheme.validate()?;
    if points.is_empty() {
        return Err(invalid("no test points"));
    }
    let steps = scheme.steps();
    let mut norms = Vec::with_capacity(steps.len());
    for &h in &steps {
        let mut worst: f64 = 0.0;
        for pt in points {
            let r = field_residuals(&field, pt, h, scheme.order)?;
            worst = worst.max(metric(&r));
        }
        norms.push(worst);
    }
    ResidualReport::from_norms(norms, steps, points.len())
}

/// Max of the Maxwell and divergence residuals of the profile's solution at
/// one point, over the scheme's refinement levels.
pub fn maxwell_residual(profile: &Profile, pt: &SpacetimePoint, scheme: &FdScheme) -> Result<ResidualReport> {
    maxwell_residual_batch(profile, std::slice::from_ref(pt), scheme)
}

pub fn maxwell_residual_batch(
    profile: &Profile,
    points: &[SpacetimePoint],
    scheme: &FdScheme,
) -> Result<ResidualReport> {
    let field = |t: f64, x: &Vec3| eval_pair(profile, &SpacetimePoint { t, x: *x });
    residual_sweep(field, points, scheme, MaxwellResiduals::max)
}
