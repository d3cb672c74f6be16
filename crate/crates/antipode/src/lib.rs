//! Combinatorics and numerics for the cubic rational maps
//! `f_q(z) = z^2 (q - z) / (1 + conj(q) z)`, which commute with the
//! antipodal map `z -> -1/conj(z)`.
//!
//! The crate is split bottom-up:
//!
//! * [`circle`]: exact angles on R/Z, orbits under `m_d`, arcs.
//! * [`rotation`]: rotation sets, monotone circle-map extensions,
//!   rotation numbers, Goldberg orbits, semiconjugacies.
//! * [`calculus`]: critical gaps, the ternary landing map `phi`, its
//!   inverse `psi`, doubly visible sets and the dynamic rotation number.
//! * [`dynamics`]: floating-point numerics of `f_q` and orbit classification.
//! * [`rays`]: Böttcher coordinates, internal rays, landing points and the
//!   parameter map of the central component.
//! * [`render`]: dynamical- and parameter-plane rasters.
//! * [`checks`]: the acceptance checks shared by tests and the CLI.

pub mod calculus;
pub mod checks;
pub mod circle;
pub mod dynamics;
pub mod error;
pub mod rays;
pub mod render;
pub mod rotation;

pub use circle::{Angle, CircleInterval};
pub use error::{Error, Result};
