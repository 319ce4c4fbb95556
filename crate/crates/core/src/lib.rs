//! Emulation of reduced (1D/2D) Dirac Hamiltonians on a Rabi-driven qubit
//! dispersively coupled to one or two cavity modes.
//!
//! The crate is organised bottom-up:
//!
//! - [`fockspace`]: truncated qubit ⊗ Fock operator algebra and states.
//! - [`drives`]: sideband, resonant and Rabi drive waveforms and the
//!   classical cavity displacement they induce.
//! - [`hamiltonians`]: ideal (post-RWA) Dirac Hamiltonians, the full
//!   pre-RWA driven Hamiltonian, the second-order Magnus correction and the
//!   cQED → Dirac parameter mapping.
//! - [`propagator`]: fixed-step RK4, exact eigenbasis and Lindblad evolution
//!   with observable recording.
//! - [`analysis`]: spectra, quadrature marginals, transmission and tier
//!   deviation metrics.
//! - [`runner`]: configuration, presets, orchestration and artifacts.
//!
//! Units: time in μs, angular frequencies in rad/μs. Values quoted as
//! "/2π MHz" are converted once, at the configuration boundary.

pub mod analysis;
pub mod drives;
pub mod error;
pub mod fockspace;
pub mod hamiltonians;
pub mod propagator;
pub mod runner;
mod sparse;

pub use error::{Error, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Converts a frequency quoted as `f/2π` in MHz to an angular frequency in rad/μs.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    std::f64::consts::TAU * f_mhz
}

/// Inverse of [`mhz_to_rad_per_us`].
pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / std::f64::consts::TAU
}
