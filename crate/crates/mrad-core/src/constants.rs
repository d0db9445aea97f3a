//! Physical constants in the `ħ = c = m = 1` system.

use num_traits::Float;

/// Fine structure constant (CODATA value of 1/137.035999...).
pub const ALPHA_FINE: f64 = 1.0 / 137.035999;

/// Elementary coupling `e = √(4πα)` for the default fine-structure constant.
pub fn coupling_e() -> f64 {
    (4.0 * core::f64::consts::PI * ALPHA_FINE).sqrt()
}

/// Coupling for a caller-supplied fine-structure constant.
pub fn coupling_e_for(alpha: f64) -> f64 {
    (4.0 * core::f64::consts::PI * alpha).sqrt()
}

/// Box volume fixed to `(2π)³` so that `(2π)³/V = 1` in every mode sum.
/// Reported observables are densities or ratios and do not depend on it.
pub const BOX_VOLUME: f64 = {
    let two_pi = 2.0 * core::f64::consts::PI;
    two_pi * two_pi * two_pi
};

/// Imaginary offset implementing the `-i0` prescription in energy
/// denominators. Evaluated points keep `|k₀ - q₀| ≫ ε`; the offset only
/// guards accidental zeros.
pub const EPS_DENOMINATOR: f64 = 1e-9;
