//! Bulk and edge Hall conductances of disordered magnetic lattice models.
//!
//! The crate discretizes random magnetic Schrödinger operators on finite
//! tight-binding lattices (tori for the bulk, cylinders with a confining wall
//! for the edge) and evaluates the trace formulas relating the two:
//!
//! * [`lattice`] builds Hofstadter Hamiltonians with electric or magnetic
//!   disorder and electric or magnetic (Iwatsuka) walls.
//! * [`spectral`] diagonalizes them and computes projectors, matrix functions
//!   (spectral and Helffer–Sjöstrand), evolutions and exact time averages.
//! * [`conductance`] holds the bulk Hall formulas, the regularized edge
//!   conductance, its remainder and the Chern-number oracle.
//! * [`localization`] measures moments and kernel decay.
//! * [`ensemble`] runs seeded sweeps over many realizations.
//!
//! All conductances are reported in units of `e²/h`.

pub mod conductance;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod linalg;
pub mod localization;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Workers;
