//! Measurement-induced radiation from Dirac fermions.
//!
//! Numerical core for computing the observables of photon radiation caused by
//! a projective measurement of the state of free Dirac particles: inclusive
//! and conditional chain probabilities, first-order stimulated-radiation
//! amplitudes, second-order spontaneous spectra, and Stokes polarization.
//! Every analytic trace identity used on the production paths is
//! cross-checked against an exact finite-mode Fock-space oracle ([`fock`]).
//!
//! Units: `ħ = c = 1` and the particle mass `m = 1`, so momenta and photon
//! energies are measured in units of `m` and times in units of `1/m`. The
//! coupling is `e² = 4πα`. Box normalization is fixed once by `V = (2π)³`,
//! which makes the `(2π)³/V` factors of the mode sums equal to one; all
//! reported observables are densities in `k` or ratios and do not depend on
//! this choice.
//!
//! The crate is `no_std` (alloc required); IO, file formats and the scenario
//! CLI live in the companion `mrad-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beams;
pub mod constants;
pub mod density;

pub mod fock;
pub mod kernels;
pub mod packets;
pub mod linalg;

pub mod polarization;
pub mod quadrature;
pub mod rng;
pub mod spontaneous;
pub mod stimulated;


pub mod vec3;
pub mod verify;
pub mod wigner;



pub use num_complex::Complex64;

/// Numeric tolerance for projector and Hermiticity checks on exact
/// (non-quadrature) paths: double precision with `O(dim)` accumulation.
pub const EXACT_TOL: f64 = 1e-12;

/// Hard cap on oracle Fock-space dimensions. The oracle exists for
/// desk-scale verification; anything larger is a usage error.
pub const DIMENSION_CAP: usize = 1 << 14;
