//! Deterministic low-discrepancy point sets for residual sweeps.

use crate::error::{invalid, Result};
use crate::fields::SpacetimePoint;
use crate::Vec3;

/// Radical inverse of `index` in `base` (van der Corput).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// Four-dimensional Halton point with bases 2, 3, 5, 7.
pub fn halton4(index: u64) -> [f64; 4] {
    [
        radical_inverse(index, 2),
        radical_inverse(index, 3),
        radical_inverse(index, 5),
        radical_inverse(index, 7),
    ]
}

/// Unit vector from two uniform coordinates (area-uniform on the sphere).
pub fn sphere_point(u: f64, v: f64) -> Vec3 {
    let z = 2.0 * u - 1.0;
    let s = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * v;
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// `n` Halton points in `{rho.0 ≤ |x| ≤ rho.1} × [t.0, t.1]`.
///
/// The seed shifts the starting index of the sequence, so equal seeds give
/// identical point sets.
pub fn annulus_points(n: usize, rho: (f64, f64), t: (f64, f64), seed: u64) -> Result<Vec<SpacetimePoint>> {
    if !(rho.0 > 0.0 && rho.1 >= rho.0) || t.1 < t.0 {
        return Err(invalid("empty or invalid sampling window"));
    }
    let start = 1 + seed.wrapping_mul(7919) % 1_000_003;
    (0..n as u64)
        .map(|i| {
            let [a, b, c, d] = halton4(start + i);
            let r = rho.0 + (rho.1 - rho.0) * a;
            let x = sphere_point(b, c) * r;
            SpacetimePoint::new(t.0 + (t.1 - t.0) * d, x)
        })
        .collect()
}
