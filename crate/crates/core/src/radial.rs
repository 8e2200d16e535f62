//! Reduced radial evolution of the dipole-mode fields
//! `E = p Φ1`, `B = q Φ2 + w Φ3` on `1 ≤ r ≤ R`.
//!
//! Maxwell's equations for fields of this form reduce to
//!
//! ```text
//! p_t = −q_r − q/r + w_r
//! q_t = −p_r + p/r
//! w_t = 2p/r
//! ```
//!
//! with the constraint `w_r + 2q/r = 0` (from `div B = 0`), and the boundary
//! condition `(1 + c)E_tan = n∧B_tan` on `r = 1` becomes `(1 + c) p = w − q`.
//!
//! The solver works in the characteristic variables `a = p + m`, `b = p − m`
//! with `m = w − q`:
//!
//! ```text
//! a_t =  a_r + (p − q)/r      (moves toward r = 1)
//! b_t = −b_r − (p + q)/r      (moves away from r = 1)
//! w_t =  2p/r
//! ```
//!
//! Each is discretized with second-order upwind differences and advanced by
//! Heun's method. At `r = 1` the outgoing `b` is set from the arriving `a`
//! by the boundary relation; at `r = R` the incoming `a` is imposed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundarySpace;
use crate::error::{invalid, Error, Result};
use crate::fields::DipoleCoefficients;
use crate::profiles::{exponential_rate, make_exponential, Profile};
use crate::quadrature::EnergyTrace;

/// Angular integrals over the unit sphere used by the reduced energy:
/// `∫|Φ1|² = ∫|Φ2|² = −∫Φ2·Φ3 = 8π/3` and `∫|Φ3|² = 4π`.
pub const SIN2_WEIGHT: f64 = 8.0 * PI / 3.0;
pub const ONE_WEIGHT: f64 = 4.0 * PI;

/// Grid spacing above which results carry an accuracy warning.
pub const COARSE_SPACING: f64 = 0.05;

/// Uniform node-centred grid `1 = r_0 < … < r_N = R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_outer: f64,
    pub cells: usize,
}

impl RadialGrid {
    /// Grid on `[1, r_outer]` with spacing at most `dr`.
    pub fn new(r_outer: f64, dr: f64) -> Result<Self> {
        if !(r_outer.is_finite() && r_outer > 1.0) {
            return Err(invalid(format!("outer radius must exceed 1, got {r_outer}")));
        }
        if !(dr.is_finite() && dr > 0.0) {
            return Err(invalid(format!("spacing must be positive, got {dr}")));
        }
        let cells = ((r_outer - 1.0) / dr - 1e-9).ceil().max(4.0) as usize;
        Ok(Self { r_outer, cells })
    }

    pub fn dr(&self) -> f64 {
        (self.r_outer - 1.0) / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let dr = self.dr();
        (0..=self.cells).map(|j| 1.0 + dr * j as f64).collect()
    }

    pub fn accuracy_warning(&self) -> bool {
        self.dr() > COARSE_SPACING
    }

    /// Trapezoid weights.
    fn weights(&self) -> Vec<f64> {
        let dr = self.dr();
        let mut w = vec![dr; self.cells + 1];
        w[0] *= 0.5;
        w[self.cells] *= 0.5;
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub grid: RadialGrid,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl RadialState {
    pub fn zeros(grid: RadialGrid) -> Self {
        let r = grid.nodes();
        let n = r.len();
        Self {
            grid,
            r,
            p: vec![0.0; n],
            q: vec![0.0; n],
            w: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `∫_{1 ≤ |x| ≤ R} |E|² + |B|² dx` with exact angular integrals and the
    /// trapezoid rule in `r`.
    pub fn energy(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(j, wt)| wt * self.r[j] * self.r[j] * energy_density(self.p[j], self.q[j], self.w[j]))
            .sum()
    }

    /// `∫_{|x|=1} ⟨A(n)u, u⟩ dσ` from the boundary node.
    pub fn boundary_flux(&self) -> f64 {
        2.0 * SIN2_WEIGHT * self.p[0] * (self.q[0] - self.w[0])
    }

    /// `|(1 + c) p − (w − q)|` at `r = 1`.
    pub fn boundary_residual(&self, bc: &BoundarySpace) -> f64 {
        let c = bc.coefficient(self.t);
        ((1.0 + c) * self.p[0] - (self.w[0] - self.q[0])).abs()
    }

    fn all_finite(&self) -> bool {
        self.p.iter().chain(&self.q).chain(&self.w).all(|v| v.is_finite())
    }

    /// Largest absolute coefficient.
    pub fn scale(&self) -> f64 {
        self.p
            .iter()
            .chain(&self.q)
            .chain(&self.w)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Angular integral of `|E|² + |B|²` on the sphere of radius `r`, divided by `r²`.
pub fn energy_density(p: f64, q: f64, w: f64) -> f64 {
    SIN2_WEIGHT * (p * p + q * q - 2.0 * q * w) + ONE_WEIGHT * w * w
}

/// Closed-form coefficients `(p, q, w)` of the profile's solution at `(t, r)`.
pub fn analytic_coefficients(profile: &Profile, t: f64, r: f64) -> DipoleCoefficients {
    DipoleCoefficients::at(profile, t, r)
}

/// Coefficients and their `t` and `r` derivatives, all in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientJet {
    pub value: DipoleCoefficients,
    pub dt: DipoleCoefficients,
    pub dr: DipoleCoefficients,
}

/// Each coefficient is `Σ_k a_k(r) h^{(k)}(r + t)`; `∂_t` shifts the
/// derivative order, `∂_r` additionally differentiates `a_k`.
pub fn coefficient_jet(profile: &Profile, t: f64, r: f64) -> CoefficientJet {
    let h = profile.derivs(r + t);
    let (r2, r3, r4) = (r * r, r * r * r, r * r * r * r);
    let p_a = [0.0, -1.0 / r2, 1.0 / r];
    let p_da = [0.0, 2.0 / r3, -1.0 / r2];
    let q_a = [-3.0 / r3, 3.0 / r2, -1.0 / r];
    let q_da = [9.0 / r4, -6.0 / r3, 1.0 / r2];
    let w_a = [-2.0 / r3, 2.0 / r2, 0.0];
    let w_da = [6.0 / r4, -4.0 / r3, 0.0];
    let combine = |a: &[f64; 3], shift: usize| (0..3).map(|k| a[k] * h[k + shift]).sum::<f64>();
    let value = DipoleCoefficients {
        p: combine(&p_a, 0),
        q: combine(&q_a, 0),
        w: combine(&w_a, 0),
    };
    let dt = DipoleCoefficients {
        p: combine(&p_a, 1),
        q: combine(&q_a, 1),
        w: combine(&w_a, 1),
    };
    let dr = DipoleCoefficients {
        p: dt.p + combine(&p_da, 0),
        q: dt.q + combine(&q_da, 0),
        w: dt.w + combine(&w_da, 0),
    };
    CoefficientJet { value, dt, dr }
}

/// Residuals of the three reduced equations and of the constraint for the
/// analytic coefficients, each paired with the magnitude of its largest term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedResidual {
    pub equations: [f64; 3],
    pub constraint: f64,
    pub boundary: f64,
    pub scale: f64,
}

pub fn reduced_system_residual(profile: &Profile, t: f64, r: f64) -> ReducedResidual {
    let j = coefficient_jet(profile, t, r);
    let (c, ct, cr) = (j.value, j.dt, j.dr);
    let equations = [
        ct.p - (-cr.q - c.q / r + cr.w),
        ct.q - (-cr.p + c.p / r),
        ct.w - 2.0 * c.p / r,
    ];
    let constraint = cr.w + 2.0 * c.q / r;
    // Lemma-type residue: p − (w − q) = −h/r³
    let boundary = c.p - (c.w - c.q) + profile.value(r + t) / (r * r * r);
    let scale = [c.p, c.q, c.w, ct.p, ct.q, ct.w, cr.p, cr.q, cr.w, c.p / r, c.q / r]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    ReducedResidual {
        equations,
        constraint,
        boundary,
        scale,
    }
}

/// Samples the closed-form coefficients on the grid at time `t`.
pub fn init_from_profile(profile: &Profile, grid: &RadialGrid, t: f64) -> Result<RadialState> {
    let mut state = RadialState::zeros(grid.clone());
    state.t = t;
    let mut worst: f64 = 0.0;
    for (j, &r) in state.r.clone().iter().enumerate() {
        let c = analytic_coefficients(profile, t, r);
        state.p[j] = c.p;
        state.q[j] = c.q;
        state.w[j] = c.w;
        let res = reduced_system_residual(profile, t, r);
        worst = worst.max(res.constraint.abs() / (1.0 + res.scale));
    }
    if !state.all_finite() {
        return Err(Error::InvalidInput("profile produced non-finite coefficients".into()));
    }
    if worst > 1e-10 {
        return Err(Error::ContractViolation(format!(
            "closed-form coefficients violate w_r + 2q/r = 0 by {worst:e}"
        )));
    }
    Ok(state)
}

/// Largest `|w_r + 2q/r|` over interior nodes, `w_r` by central differences.
pub fn constraint_residual(state: &RadialState) -> f64 {
    let dr = state.grid.dr();
    (1..state.len().saturating_sub(1))
        .map(|j| ((state.w[j + 1] - state.w[j - 1]) / (2.0 * dr) + 2.0 * state.q[j] / state.r[j]).abs())
        .fold(0.0, f64::max)
}

/// Treatment of the last node `r = R`.
#[derive(Debug, Clone)]
pub enum OuterBoundary {
    /// Impose the incoming characteristic of the closed-form solution.
    AnalyticDirichlet(Profile),
    /// Copy the incoming characteristic from the neighbouring node.
    Extrapolation,
}

/// Characteristic form of the state.
struct Characteristic {
    a: Vec<f64>,
    b: Vec<f64>,
    w: Vec<f64>,
}

impl Characteristic {
    fn from_state(s: &RadialState) -> Self {
        let n = s.len();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for j in 0..n {
            let m = s.w[j] - s.q[j];
            a[j] = s.p[j] + m;
            b[j] = s.p[j] - m;
        }
        Self { a, b, w: s.w.clone() }
    }

    fn write_into(&self, s: &mut RadialState) {
        for j in 0..s.len() {
            let p = 0.5 * (self.a[j] + self.b[j]);
            let m = 0.5 * (self.a[j] - self.b[j]);
            s.p[j] = p;
            s.w[j] = self.w[j];
            s.q[j] = self.w[j] - m;
        }
    }
}

fn rhs(c: &Characteristic, r: &[f64], dr: f64) -> Characteristic {
    let n = r.len();
    let last = n - 1;
    let mut da = vec![0.0; n];
    let mut db = vec![0.0; n];
    let mut dw = vec![0.0; n];
    let inv2 = 0.5 / dr;
    for j in 0..n {
        let p = 0.5 * (c.a[j] + c.b[j]);
        let m = 0.5 * (c.a[j] - c.b[j]);
        let q = c.w[j] - m;
        let a_r = if j + 2 <= last {
            (-3.0 * c.a[j] + 4.0 * c.a[j + 1] - c.a[j + 2]) * inv2
        } else if j < last && j >= 1 {
            (c.a[j + 1] - c.a[j - 1]) * inv2
        } else {
            // r = R: overwritten by the outer condition
            (c.a[j] - c.a[j - 1]) / dr
        };
        let b_r = if j >= 2 {
            (3.0 * c.b[j] - 4.0 * c.b[j - 1] + c.b[j - 2]) * inv2
        } else if j == 1 {
            (c.b[j + 1] - c.b[j - 1]) * inv2
        } else {
            // r = 1: overwritten by the boundary relation
            (c.b[j + 1] - c.b[j]) / dr
        };
        da[j] = a_r + (p - q) / r[j];
        db[j] = -b_r - (p + q) / r[j];
        dw[j] = 2.0 * p / r[j];
    }
    Characteristic { a: da, b: db, w: dw }
}

fn enforce_boundaries(c: &mut Characteristic, t: f64, r_outer: f64, bc: &BoundarySpace, outer: &OuterBoundary) {
    // (1 + k) p = m  ⇔  b = −k a / (2 + k)
    let k = bc.coefficient(t);
    c.b[0] = -k * c.a[0] / (2.0 + k);
    let last = c.a.len() - 1;
    c.a[last] = match outer {
        OuterBoundary::AnalyticDirichlet(profile) => {
            let v = analytic_coefficients(profile, t, r_outer);
            v.p + v.w - v.q
        }
        OuterBoundary::Extrapolation => c.a[last - 1],
    };
}

fn axpy(base: &[f64], k: f64, d: &[f64]) -> Vec<f64> {
    base.iter().zip(d).map(|(x, y)| x + k * y).collect()
}

/// One Heun step of size `dt`.
pub fn step(state: &RadialState, dt: f64, bc: &BoundarySpace, outer: &OuterBoundary) -> Result<RadialState> {
    let dr = state.grid.dr();
    if !(dt > 0.0 && dt <= 0.9 * dr) {
        return Err(invalid(format!("time step {dt} violates dt ≤ 0.9·dr = {}", 0.9 * dr)));
    }
    let t1 = state.t + dt;
    let c0 = Characteristic::from_state(state);
    let k0 = rhs(&c0, &state.r, dr);
    let mut c1 = Characteristic {
        a: axpy(&c0.a, dt, &k0.a),
        b: axpy(&c0.b, dt, &k0.b),
        w: axpy(&c0.w, dt, &k0.w),
    };
    enforce_boundaries(&mut c1, t1, state.grid.r_outer, bc, outer);
    let k1 = rhs(&c1, &state.r, dr);
    let avg = |x0: &[f64], x1: &[f64], d: &[f64]| -> Vec<f64> {
        x0.iter()
            .zip(x1)
            .zip(d)
            .map(|((a, b), k)| 0.5 * (a + b + dt * k))
            .collect()
    };
    let mut c2 = Characteristic {
        a: avg(&c0.a, &c1.a, &k1.a),
        b: avg(&c0.b, &c1.b, &k1.b),
        w: avg(&c0.w, &c1.w, &k1.w),
    };
    enforce_boundaries(&mut c2, t1, state.grid.r_outer, bc, outer);
    let mut next = state.clone();
    c2.write_into(&mut next);
    next.t = t1;
    Ok(next)
}

/// Per-sample diagnostics of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub energy: EnergyTrace,
    pub boundary_residual: Vec<f64>,
    pub constraint_residual: Vec<f64>,
}

impl RunTrace {
    fn record(&mut self, s: &RadialState, bc: &BoundarySpace) {
        self.energy.push(s.t, s.energy(), s.boundary_flux());
        self.boundary_residual.push(s.boundary_residual(bc));
        self.constraint_residual.push(constraint_residual(s));
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub state: RadialState,
    pub steps: usize,
    pub dt: f64,
}

/// Advances `state` to `t_end` with steps no larger than `dt`, recording the
/// diagnostics every `sample_every` steps and at the final time.
pub fn run(
    state: &RadialState,
    t_end: f64,
    dt: f64,
    bc: &BoundarySpace,
    outer: &OuterBoundary,
    sample_every: usize,
) -> Result<RunOutput> {
    if !(t_end >= state.t) {
        return Err(invalid(format!("t_end = {t_end} precedes the state time {}", state.t)));
    }
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let span = t_end - state.t;
    let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { dt } else { span / steps as f64 };
    let every = sample_every.max(1);
    let mut trace = RunTrace::default();
    let mut current = state.clone();
    trace.record(&current, bc);
    let t0 = state.t;
    for n in 1..=steps {
        let mut next = step(&current, dt, bc, outer)?;
        next.t = t0 + dt * n as f64;
        if !next.all_finite() {
            return Err(Error::Divergence { step: n, t: next.t });
        }
        current = next;
        if n % every == 0 || n == steps {
            trace.record(&current, bc);
        }
    }
    Ok(RunOutput {
        trace,
        state: current,
        steps,
        dt,
    })
}

/// Discrete L² distance `(∫ (Δp² + Δq² + Δw²) dr)^{1/2}` to the closed-form solution.
pub fn l2_error(state: &RadialState, profile: &Profile) -> f64 {
    let weights = state.grid.weights();
    let mut acc = 0.0;
    for (j, wt) in weights.iter().enumerate() {
        let c = analytic_coefficients(profile, state.t, state.r[j]);
        acc += wt * ((state.p[j] - c.p).powi(2) + (state.q[j] - c.q).powi(2) + (state.w[j] - c.w).powi(2));
    }
    acc.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenmodeCheck {
    pub eps: f64,
    pub time: f64,
    /// Mean over nodes and coefficients of `log(u(t)/u(0))/t`.
    pub rate_from_generator: f64,
    pub rate_expected: f64,
    /// Largest nodewise `|rate − r|/|r|`.
    pub max_relative_deviation: f64,
}

/// Default resolution of [`eigenmode_check`].
pub const EIGENMODE_DR: f64 = 1.0 / 800.0;
pub const EIGENMODE_TIME: f64 = 0.5;

/// Evolves the exponential data and compares `u(t)` with `e^{rt} u(0)` node by node.
pub fn eigenmode_check(eps: f64) -> Result<EigenmodeCheck> {
    eigenmode_check_with(eps, EIGENMODE_TIME, EIGENMODE_DR)
}

pub fn eigenmode_check_with(eps: f64, time: f64, dr: f64) -> Result<EigenmodeCheck> {
    let space = BoundarySpace::eps(eps)?;
    let profile = make_exponential(eps)?;
    let rate = exponential_rate(eps)?;
    let grid = RadialGrid::new(1.0 + 20.0 / rate.abs(), dr)?;
    let start = init_from_profile(&profile, &grid, 0.0)?;
    if time == 0.0 {
        return Ok(EigenmodeCheck {
            eps,
            time,
            rate_from_generator: rate,
            rate_expected: rate,
            max_relative_deviation: 0.0,
        });
    }
    let out = run(
        &start,
        time,
        0.5 * grid.dr(),
        &space,
        &OuterBoundary::AnalyticDirichlet(profile),
        usize::MAX,
    )?;
    let end = &out.state;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut worst: f64 = 0.0;
    for j in 0..end.len() {
        for (u1, u0) in [(end.p[j], start.p[j]), (end.q[j], start.q[j]), (end.w[j], start.w[j])] {
            let ratio = u1 / u0;
            if !(ratio > 0.0) {
                return Err(Error::ContractViolation(format!(
                    "coefficient changed sign at r = {}",
                    end.r[j]
                )));
            }
            let measured = ratio.ln() / time;
            sum += measured;
            count += 1;
            worst = worst.max((measured - rate).abs() / rate.abs());
        }
    }
    Ok(EigenmodeCheck {
        eps,
        time,
        rate_from_generator: sum / count as f64,
        rate_expected: rate,
        max_relative_deviation: worst,
    })
}
