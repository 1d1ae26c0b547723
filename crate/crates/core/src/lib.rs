//! Scattering of spin-entangled neutron probes off a Heisenberg spin dimer.
//!
//! Layering, bottom up:
//! - [`spin_algebra`]: 3-vectors, spinors, Pauli matrices, basis rotations
//! - [`probe`]: the path–spin entangled wave packet
//! - [`dimer`]: singlet/triplet target states and thermal populations
//! - [`response`]: closed-form response functions and plane-wave limits
//! - [`oracle`]: dense-operator reference evaluations
//! - [`quadrature`], [`engine`]: wave-packet cross-sections and polarization
//! - [`multiparticle`]: two-fermion entangled-probe matrix elements

pub mod dimer;
pub mod engine;
pub mod error;
pub mod multiparticle;
pub mod oracle;
pub mod probe;
pub mod quadrature;
pub mod response;
pub mod spin_algebra;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
