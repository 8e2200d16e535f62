//! Explicit incoming solutions of Maxwell's equations outside the unit ball,
//! the dissipative boundary conditions they satisfy, and the numerical
//! machinery used to certify them.
//!
//! The solutions are generated by a single scalar profile `h` evaluated at
//! `|x| + t`:
//!
//! ```text
//! E = (h''/|x| - h'/|x|^2) Φ1
//! B = -(h''/|x| - 3h'/|x|^2 + 3h/|x|^3) Φ2 + 2(h'/|x|^2 - h/|x|^3) Φ3
//! ```
//!
//! with `Φ1 = ω∧e1`, `Φ2 = ω∧(ω∧e1)`, `Φ3 = e1` and `ω = x/|x|`. An
//! exponential profile produces solutions of a fixed dissipative boundary
//! problem whose energy decays exponentially; a compactly supported bump
//! produces solutions of a time-dependent dissipative problem that vanish
//! identically after finite time.
//!
//! Modules:
//! - [`profiles`]: the scalar profiles and their derivatives.
//! - [`fields`]: closed-form evaluation of `(E, B)` and auxiliary waves.
//! - [`diffops`]: finite-difference oracle for curl, div, box and Maxwell residuals.
//! - [`boundary`]: the boundary symbol `A(n)`, dissipative spaces and `γ(t)`.
//! - [`quadrature`]: shell energy, boundary flux and the energy identity.
//! - [`nogo`]: modulated spherical waves and quiet spots.
//! - [`radial`]: evolution of the reduced one-dimensional system.
//! - [`cli`]: the command-line front end and report emission.

pub mod boundary;
pub mod cli;
pub mod diffops;
pub mod error;
pub mod fields;
pub mod nogo;
pub mod profiles;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};

/// Real 3-vector used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Unit vector `e1 = (1, 0, 0)`, the axis of the dipole structure.
pub fn e1() -> Vec3 {
    Vec3::new(1.0, 0.0, 0.0)
}
