//! Scalar profiles `h` generating the explicit solutions.
//!
//! Three families: the exponential `e^{rs}` whose rate solves
//! `ε r² − ε r − 1 = 0`, the compactly supported bump
//! `exp(−1/(b² − y²))`, and user-supplied closures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Highest derivative order any profile provides.
pub const MAX_ORDER: usize = 3;

/// Bump evaluations closer than this to the support edge return exactly 0.
pub const BUMP_EDGE_GUARD: f64 = 1e-12;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Profile {
    /// `h(s) = e^{rs}` with `r < 0`.
    Exponential { rate: f64 },
    /// `h(y) = exp(−1/(b² − y²))` on `|y| < b`, zero elsewhere.
    Bump { b: f64 },
    /// Closures for `h, h', …`; entry `k` is the `k`-th derivative.
    Custom { derivs: Vec<ScalarFn> },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Exponential { rate } => f.debug_struct("Exponential").field("rate", rate).finish(),
            Profile::Bump { b } => f.debug_struct("Bump").field("b", b).finish(),
            Profile::Custom { derivs } => f.debug_struct("Custom").field("orders", &derivs.len()).finish(),
        }
    }
}

/// Negative root of `ε ρ² − ε ρ − 1 = 0`, i.e. `(1 − √(1 + 4/ε))/2`.
///
/// Evaluated as `−1/(ε ρ₊)` through the product of the roots so that large
/// `ε` does not cancel.
pub fn exponential_rate(epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let root = (1.0 + 4.0 / epsilon).sqrt();
    Ok(-2.0 / (epsilon * (1.0 + root)))
}

pub fn make_exponential(epsilon: f64) -> Result<Profile> {
    Ok(Profile::Exponential {
        rate: exponential_rate(epsilon)?,
    })
}

pub fn make_bump(b: f64) -> Result<Profile> {
    if !(b.is_finite() && b > 1.0) {
        return Err(invalid(format!("b must exceed 1, got {b}")));
    }
    Ok(Profile::Bump { b })
}

impl Profile {
    /// The identically zero profile.
    pub fn zero() -> Profile {
        let z: ScalarFn = Arc::new(|_| 0.0);
        Profile::Custom {
            derivs: vec![z.clone(), z.clone(), z.clone(), z],
        }
    }

    /// Right end of the support, if the profile is compactly supported.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            Profile::Bump { b } => Some(*b),
            _ => None,
        }
    }

    /// Number of derivatives (including order 0) the profile provides.
    pub fn provided_orders(&self) -> usize {
        match self {
            Profile::Custom { derivs } => derivs.len(),
            _ => MAX_ORDER + 1,
        }
    }

    /// `[h(s), h'(s), h''(s), h'''(s)]`.
    ///
    /// Custom profiles missing orders report them as NaN; use
    /// [`eval_derivs`] for checked access.
    pub fn derivs(&self, s: f64) -> [f64; 4] {
        match self {
            Profile::Exponential { rate } => {
                let h = (rate * s).exp();
                let r = *rate;
                [h, r * h, r * r * h, r * r * r * h]
            }
            Profile::Bump { b } => bump_derivs(*b, s),
            Profile::Custom { derivs } => {
                let mut out = [f64::NAN; 4];
                for (slot, f) in out.iter_mut().zip(derivs) {
                    *slot = f(s);
                }
                out
            }
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Profile::Custom { derivs } => derivs[0](s),
            _ => self.derivs(s)[0],
        }
    }
}

/// Returns `[h(s), …, h^{(max_order)}(s)]`.
pub fn eval_derivs(p: &Profile, s: f64, max_order: usize) -> Result<Vec<f64>> {
    if max_order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(max_order));
    }
    if max_order >= p.provided_orders() {
        return Err(Error::UnsupportedOrder(max_order));
    }
    Ok(p.derivs(s)[..=max_order].to_vec())
}

/// Bump and its first three derivatives, each a rational prefactor in `y`
/// times `h(y)`:
///
/// ```text
/// h'   = −2y / D² · h
/// h''  = P / D⁴ · h,            P = 2(3y⁴ − 2(b²−1)y² − b⁴)
/// h''' = ((P' D + 8yP) D − 2yP) / D⁶ · h
/// ```
///
/// with `D = b² − y²`.
fn bump_derivs(b: f64, y: f64) -> [f64; 4] {
    if y.abs() >= b - BUMP_EDGE_GUARD {
        return [0.0; 4];
    }
    let d = (b - y) * (b + y);
    let h = (-1.0 / d).exp();
    if h == 0.0 {
        return [0.0; 4];
    }
    let y2 = y * y;
    let b2 = b * b;
    let p = 2.0 * (3.0 * y2 * y2 - 2.0 * (b2 - 1.0) * y2 - b2 * b2);
    let dp = 2.0 * (12.0 * y2 * y - 4.0 * (b2 - 1.0) * y);
    let d2 = d * d;
    let d4 = d2 * d2;
    let h1 = -2.0 * y / d2 * h;
    let h2 = p / d4 * h;
    let h3 = ((dp * d + 8.0 * y * p) * d - 2.0 * y * p) / (d4 * d2) * h;
    [h, h1, h2, h3]
}

/// JSON descriptor of a profile, e.g. `{"kind": "exponential", "epsilon": 0.25}`
/// or `{"kind": "bump", "b": 1.05}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Exponential { epsilon: f64 },
    Bump { b: f64 },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        match *self {
            ProfileSpec::Exponential { epsilon } => make_exponential(epsilon),
            ProfileSpec::Bump { b } => make_bump(b),
        }
    }
}
