//! Collective radiative coupling, decay and photon statistics of spin waves
//! stored in a frozen cold-atom ensemble.
//!
//! Internal units: positions are stored as `k_eg * r` (dimensionless), wave
//! vectors in units of `k_eg`, rates in units of the single-atom linewidth
//! `Γ` and times in units of `1/Γ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`ensemble`] generates and persists frozen atom configurations.
//! * [`dicke`] enumerates timed-Dicke bases and evaluates their coupling
//!   functions, with a brute-force product-basis oracle for small systems.
//! * [`radiative`] holds the pair radiation kernel, the collective decay
//!   rate `Γ_N` and the single-excitation decay matrix.
//! * [`dynamics`] covers pulse retrieval, single-photon emission profiles,
//!   the phase-matched mode and the two-photon cascade.
//! * [`dephasing`] models interaction phases and their effect on `g²` and on
//!   symmetric-state overlaps.
//! * [`scan`] evaluates coupling maps over wave-vector scans.

pub mod dephasing;
pub mod dicke;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod numeric;
pub mod quadrature;
pub mod radiative;
pub mod scan;

pub use error::{Error, Result};
pub use num_complex::Complex64;
