//! detwave — a numerical laboratory for detonation-wave stability and
//! gradient blowup in one-dimensional reacting-flow models.
//!
//! The crate has two halves that share a common toolkit:
//!
//! 1. **Wave stability.** Steady reacting shock profiles for a scalar model
//!    with one reactant (construction, admissibility checks, and closed-form
//!    derivative bounds), an upwind solver for the exact perturbation system
//!    in the shock frame, and weighted-energy diagnostics that certify
//!    exponential decay of perturbations — or document growth when the wave
//!    is unstable.
//!
//! 2. **Gradient blowup.** Characteristic-field machinery for small
//!    hyperbolic systems with lower-order source terms: coupling
//!    coefficients, a Riccati-type forecast of the gradient-blowup time, and
//!    an ensemble integrator that rides characteristics of a finite-volume
//!    gas simulation until the gradient leaves the resolvable range.
//!
//! Everything is deterministic: fixed seeds, fixed iteration orders, and
//! fixed-format output, so that repeated runs produce byte-identical
//! artifacts.

pub mod error;
pub mod accept;
pub mod experiments;
pub mod flux;
pub mod linalg;
pub mod profile;
pub mod sim;
pub mod blowup;
pub mod chars;
pub mod config;
pub mod energy;

pub use error::{Error, Result};
