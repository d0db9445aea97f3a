//! Stokes parameters of measurement-induced radiation: extraction from
//! polarization amplitudes and the closed forms for spin-measured
//! stimulated and spontaneous radiation in the nonrelativistic and
//! ultrarelativistic regimes.
//!
//! Conventions: the polarization matrix is `M_{λλ'} = χ_λ χ*_{λ'}` over the
//! linear basis `{f₁, f₂}` and decomposes as `M = A(1 + b·σ)` with standard
//! Pauli matrices, so `A = tr M / 2` and `b_i = tr(σ_i M)/tr M`. `b₃` is
//! linear polarization along `f₁`, `b₂` circular. Components of the
//! measured spin direction `ζ` are always given in the local `{f₁, f₂, n}`
//! triad.

use num_complex::Complex64;
use num_traits::Float;

use crate::packets::{SpinMat, PAULI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesState {
    /// Intensity scale `A` (raw, in the units of the producing formula).
    pub intensity: f64,
    /// Stokes vector `(b₁, b₂, b₃)`, `|b| ≤ 1`.
    pub b: [f64; 3],
}

impl StokesState {
    pub fn degree(&self) -> f64 {
        (self.b[0] * self.b[0] + self.b[1] * self.b[1] + self.b[2] * self.b[2]).sqrt()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.degree() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationError {
    /// Zero polarization matrix: the Stokes direction is undefined.
    ZeroIntensity,
}

impl core::fmt::Display for PolarizationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "zero intensity: polarization undefined")
    }
}

/// Stokes decomposition of a Hermitian 2×2 polarization matrix.
pub fn stokes_from_matrix(m: &SpinMat) -> Result<StokesState, PolarizationError> {
    let tr = (m[0][0] + m[1][1]).re;
    if tr.abs() < 1e-300 {
        return Err(PolarizationError::ZeroIntensity);
    }
    let mut b = [0.0; 3];
    for (i, sigma) in PAULI.iter().enumerate() {
        let mut t = Complex64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                t += sigma[r][c] * m[c][r];
            }
        }
        b[i] = t.re / tr;
    }
    Ok(StokesState {
        intensity: tr / 2.0,
        b,
    })
}

/// Stokes state of a polarization amplitude `χ` (`M = χχ†`, pure).
pub fn stokes_from_chi(chi: [Complex64; 2]) -> Result<StokesState, PolarizationError> {
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = chi[r] * chi[c].conj();
        }
    }
    stokes_from_matrix(&m)
}

// ---------------------------------------------------------------------------
// Nonrelativistic closed forms
// ---------------------------------------------------------------------------

/// Polarization amplitude of nonrelativistic stimulated radiation from a
/// spin measurement, in the spherical basis with the z axis along ζ:
/// `χ ∝ (i, cosθ)` up to the global factor `-(ik₀/m)F_m|κ|e^{i(φ-ϕ)}`.
pub fn chi_stimulated_nonrel(theta: f64, phase: f64, scale: f64) -> [Complex64; 2] {
    let global = Complex64::new(0.0, -scale) * Complex64::new(0.0, phase).exp();
    [
        global * Complex64::new(0.0, 1.0),
        global * Complex64::new(theta.cos(), 0.0),
    ]
}

/// Stokes parameters of nonrelativistic stimulated radiation at polar angle
/// `θ` from the measured direction: `b₂ = -2cosθ/(1+cos²θ)`, `b₁ = 0`,
/// `b₃ = sin²θ/(1+cos²θ)`; intensity `A = F_m²(1+cos²θ)` (the overall
/// `k₀²κ²/2m²` scale is the caller's).
pub fn stokes_stimulated_nonrel(theta: f64, fm: f64) -> StokesState {
    let c = theta.cos();
    let denom = 1.0 + c * c;
    StokesState {
        intensity: fm * fm * denom,
        b: [0.0, -2.0 * c / denom, (1.0 - c * c) / denom],
    }
}

/// Stokes parameters of nonrelativistic spontaneous radiation from a spin
/// measurement. `zeta` in the `{f₁, f₂, n}` triad; only `(ζ·ξ)` of the
/// state's polarization enters. Returns the Stokes state and the displayed
/// degree-of-polarization value `b²`.
pub fn stokes_spontaneous_nonrel(zeta: [f64; 3], zeta_dot_xi: f64, fm: f64) -> (StokesState, f64) {
    let z3 = zeta[2];
    let denom = 1.0 + z3 * z3;
    let b2 = 2.0 * z3 * zeta_dot_xi / denom;
    // b₃ + i b₁ = (ζ₁ + iζ₂)² / (1 + ζ₃²)
    let zc = Complex64::new(zeta[0], zeta[1]);
    let b31 = zc * zc / denom;
    let degree2 =
        1.0 - 4.0 * z3 * z3 * (1.0 - zeta_dot_xi * zeta_dot_xi) / (denom * denom);
    (
        StokesState {
            intensity: fm * fm * denom,
            b: [b31.im, b2, b31.re],
        },
        degree2,
    )
}

// ---------------------------------------------------------------------------
// Ultrarelativistic closed forms
// ---------------------------------------------------------------------------

/// Polarization amplitude of ultrarelativistic stimulated radiation in the
/// `{f₁ = β⊥/β⊥, f₂ = [n,β⊥]/β⊥, n}` basis, up to the global factor
/// `-(ik₀|κ|e^{iφ}/mγ)`:
/// `χ = (1/ζ⊥)·[(F_m - (β⊥γ)²a)(ζ₁ + iζ₂ζ₃),
///               F_m(ζ₂ - i(ζ₁ζ₃ - β⊥γ(1-ζ₃²)))]`.
pub fn chi_stimulated_ultra(zeta: [f64; 3], bpg: f64, fe: f64, fm: f64) -> [Complex64; 2] {
    let a = fe - fm;
    let zperp = (zeta[0] * zeta[0] + zeta[1] * zeta[1]).sqrt();
    let f_anom = fm - bpg * bpg * a;
    let c1 = Complex64::new(zeta[0], zeta[1] * zeta[2]) * f_anom;
    let c2 = Complex64::new(
        zeta[1],
        -(zeta[0] * zeta[2] - bpg * (1.0 - zeta[2] * zeta[2])),
    ) * fm;
    [c1 / zperp, c2 / zperp]
}

/// Stokes parameters of ultrarelativistic stimulated radiation from a spin
/// measurement. Both printed forms of `b₃ + ib₁` are returned (sum form,
/// factored product form); they agree for unit `ζ` away from `ζ₃ = ±1`.
pub struct UltraStokes {
    pub state: StokesState,
    pub b31_factored: Complex64,
}

pub fn stokes_stimulated_ultra(zeta: [f64; 3], bpg: f64, fe: f64, fm: f64) -> UltraStokes {
    let a = fe - fm;
    let (z1, z2, z3) = (zeta[0], zeta[1], zeta[2]);
    let f_anom = fm - bpg * bpg * a;
    let big_a = f_anom * f_anom * (1.0 - z2 * z2)
        + fm * fm * (1.0 + bpg * bpg - (z1 + bpg * z3) * (z1 + bpg * z3));
    let b2 = -2.0 * fm * f_anom * (z3 - bpg * z1) / big_a;
    // sum form
    let w = Complex64::new(fm * (z1 + bpg * z3), f_anom * z2);
    let b31_sum = (w * w
        - Complex64::new(
            bpg * bpg * (fe * fe - a * a * (1.0 + bpg * bpg)),
            0.0,
        ))
        / big_a;
    // factored product form
    let b31_factored = if (1.0 - z3 * z3).abs() > 1e-12 {
        let left = Complex64::new(z1 + bpg * (1.0 + z3), z2) * fm
            - Complex64::new(z1, -z2 * z3) * (bpg * bpg * a / (1.0 - z3));
        let right = Complex64::new(z1 - bpg * (1.0 - z3), z2) * fm
            - Complex64::new(z1, z2 * z3) * (bpg * bpg * a / (1.0 + z3));
        left * right / big_a
    } else {
        b31_sum
    };
    UltraStokes {
        state: StokesState {
            intensity: big_a,
            b: [b31_sum.im, b2, b31_sum.re],
        },
        b31_factored,
    }
}

/// Stokes parameters of ultrarelativistic spontaneous radiation: `A`, `b₁`,
/// `b₃` as for stimulated radiation; `b₂` carries the extra `(ζ·ξ)` factor
/// with flipped sign. Returns the state and the displayed degree value `b²`.
pub fn stokes_spontaneous_ultra(
    zeta: [f64; 3],
    zeta_dot_xi: f64,
    bpg: f64,
    fe: f64,
    fm: f64,
) -> (StokesState, f64) {
    let stim = stokes_stimulated_ultra(zeta, bpg, fe, fm);
    let a = fe - fm;
    let f_anom = fm - bpg * bpg * a;
    let big_a = stim.state.intensity;
    let b2 = 2.0 * fm * f_anom * (zeta[2] - bpg * zeta[0]) * zeta_dot_xi / big_a;
    let degree2 = 1.0
        - 4.0 * fm * fm * f_anom * f_anom * (zeta[2] - bpg * zeta[0]) * (zeta[2] - bpg * zeta[0])
            * (1.0 - zeta_dot_xi * zeta_dot_xi)
            / (big_a * big_a);
    (
        StokesState {
            intensity: big_a,
            b: [stim.state.b[0], b2, stim.state.b[2]],
        },
        degree2,
    )
}

/// `β⊥γ ≫ 1` with dominant anomalous moment: `A ≈ (β⊥γ)⁴a²(1-ζ₂²)`,
/// `b₃+ib₁ ≈ 1`, `b₂ ≈ -2F_mζ₁/(β⊥γ·a·(1-ζ₂²))`.
pub fn stokes_stimulated_ultra_anomalous(zeta: [f64; 3], bpg: f64, fe: f64, fm: f64) -> StokesState {
    let a = fe - fm;
    let big_a = bpg.powi(4) * a * a * (1.0 - zeta[1] * zeta[1]);
    StokesState {
        intensity: big_a,
        b: [
            0.0,
            -2.0 * fm * zeta[0] / (bpg * a * (1.0 - zeta[1] * zeta[1])),
            1.0,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chi_basics() {
        // (1, 0): linear along f₁ → b = (0,0,1)
        let s = stokes_from_chi([c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((s.b[2] - 1.0).abs() < 1e-14 && s.b[0].abs() < 1e-14 && s.b[1].abs() < 1e-14);
        // circular states: (1, ±i)/√2 → b₂ = ±1 with standard Pauli
        let sp = stokes_from_chi([c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!((sp.b[1] - 1.0).abs() < 1e-14);
        let sm = stokes_from_chi([c(1.0, 0.0), c(0.0, -1.0)]).unwrap();
        assert!((sm.b[1] + 1.0).abs() < 1e-14);
        // rank-1 input is pure
        let r = stokes_from_chi([c(0.3, 0.4), c(-0.2, 0.7)]).unwrap();
        assert!(r.is_pure(1e-12));
        // zero input flagged
        assert_eq!(
            stokes_from_chi([c(0.0, 0.0), c(0.0, 0.0)]),
            Err(PolarizationError::ZeroIntensity)
        );
    }

    #[test]
    fn nonrel_limits_and_purity() {
        // θ = 0: circular, b = (0,-1,0)
        let s = stokes_stimulated_nonrel(0.0, 1.0);
        assert!((s.b[1] + 1.0).abs() < 1e-14 && s.b[0].abs() < 1e-14 && s.b[2].abs() < 1e-14);
        // θ = π/2: linear along f₁, b = (0,0,1)
        let s = stokes_stimulated_nonrel(core::f64::consts::FRAC_PI_2, 1.0);
        assert!((s.b[2] - 1.0).abs() < 1e-14 && s.b[1].abs() < 1e-14);
        // purity at every angle
        let mut th = 0.0;
        while th < core::f64::consts::PI {
            assert!(stokes_stimulated_nonrel(th, 0.8).is_pure(1e-12));
            th += 0.01;
        }
    }

    #[test]
    fn nonrel_chi_reproduces_formula() {
        let mut th: f64 = 0.05;
        while th < core::f64::consts::PI {
            let chi = chi_stimulated_nonrel(th, 0.37, 2.1);
            let got = stokes_from_chi(chi).unwrap();
            let want = stokes_stimulated_nonrel(th, 1.0);
            for i in 0..3 {
                assert!((got.b[i] - want.b[i]).abs() < 1e-12, "θ={th}, b[{i}]");
            }
            // intensity ratio: |global|²·(1+cos²θ)/2 vs F_m²(1+cos²θ)
            assert!((got.intensity / (2.1 * 2.1) - want.intensity / 2.0).abs() < 1e-12);
            th += 0.1;
        }
    }

    #[test]
    fn ultra_chi_reproduces_formula_and_forms_agree() {
        let mut worst: f64 = 0.0;
        let cases = [
            ([0.3, 0.5, (1.0f64 - 0.34).sqrt()], 0.7, 1.0, 1.0),
            ([0.6, -0.3, (1.0f64 - 0.45).sqrt()], 1.8, 1.0, 1.4),
            ([-0.2, 0.9, -(1.0f64 - 0.85).sqrt()], 3.2, 0.6, 1.1),
        ];
        for (zeta, bpg, fe, fm) in cases {
            let chi = chi_stimulated_ultra(zeta, bpg, fe, fm);
            let got = stokes_from_chi(chi).unwrap();
            let want = stokes_stimulated_ultra(zeta, bpg, fe, fm);
            for i in 0..3 {
                worst = worst.max((got.b[i] - want.state.b[i]).abs());
            }
            // intensity: tr(χχ†) = A
            worst = worst.max((2.0 * got.intensity - want.state.intensity).abs() / want.state.intensity);
            // the two printed forms of b₃ + ib₁
            let sum = Complex64::new(want.state.b[2], want.state.b[0]);
            worst = worst.max((sum - want.b31_factored).norm());
        }
        assert!(worst < 1e-10, "worst deviation {worst:e}");
    }

    #[test]
    fn ultra_reduces_to_nonrel() {
        // β⊥γ → 0 with the nonrel geometry mapping ζ = (sinθ, 0, cosθ)
        let th = 0.83;
        let zeta = [th.sin(), 0.0, th.cos()];
        let nonrel = stokes_stimulated_nonrel(th, 1.3);
        let mut prev = f64::INFINITY;
        for bpg in [0.1, 0.05, 0.025] {
            let u = stokes_stimulated_ultra(zeta, bpg, 1.3, 1.3);
            let err: f64 = (0..3)
                .map(|i| (u.state.b[i] - nonrel.b[i]).abs())
                .fold(0.0, f64::max);
            // O(β⊥γ) convergence: error halves with bpg
            assert!(err < prev * 0.65, "err {err} prev {prev}");
            prev = err;
        }
    }

    #[test]
    fn anomalous_dominant_limit() {
        let zeta = [0.8, 0.6, 0.0];
        let (fe, fm) = (2.4, 1.0); // a = 1.4 dominant
        let bpg = 30.0;
        let full = stokes_stimulated_ultra(zeta, bpg, fe, fm);
        let approx = stokes_stimulated_ultra_anomalous(zeta, bpg, fe, fm);
        assert!((full.state.intensity / approx.intensity - 1.0).abs() < 0.01);
        let b31 = Complex64::new(full.state.b[2], full.state.b[0]);
        assert!((b31 - Complex64::new(1.0, 0.0)).norm() < 0.01);
        assert!((full.state.b[1] / approx.b[1] - 1.0).abs() < 0.05);
    }

    #[test]
    fn spontaneous_nonrel_purity_loci_and_degree() {
        // ζ ⊥ n (ζ₃ = 0): pure
        let (s, d2) = stokes_spontaneous_nonrel([0.8, 0.6, 0.0], 0.3, 1.0);
        assert!(s.is_pure(1e-12));
        assert!((d2 - 1.0).abs() < 1e-12);
        // ζ ∥ ξ ((ζξ) = ±1): pure
        let (s, d2) = stokes_spontaneous_nonrel([0.2, 0.3, (1.0f64 - 0.13).sqrt()], 1.0, 1.0);
        assert!(s.is_pure(1e-12));
        assert!((d2 - 1.0).abs() < 1e-12);
        // generic: degree formula equals |b|²
        let mut worst: f64 = 0.0;
        for i in 0..40 {
            let t = i as f64 / 40.0;
            let z3 = -0.9 + 1.8 * t;
            let z1 = ((1.0 - z3 * z3) * 0.7).sqrt();
            let z2 = ((1.0 - z3 * z3) * 0.3).sqrt();
            let zx = -0.95 + 1.9 * t;
            let (s, d2) = stokes_spontaneous_nonrel([z1, z2, z3], zx, 1.2);
            worst = worst.max((s.degree() * s.degree() - d2).abs());
        }
        assert!(worst < 1e-12, "{worst:e}");
    }

    #[test]
    fn spontaneous_matches_stimulated_at_opposite_spin() {
        // ζ = -ξ ⇒ (ζ·ξ) = -1: spontaneous Stokes = stimulated Stokes
        let th = 1.1;
        let zeta = [th.sin(), 0.0, th.cos()];
        let stim = stokes_stimulated_nonrel(th, 1.0);
        let (spon, _) = stokes_spontaneous_nonrel(zeta, -1.0, 1.0);
        for i in 0..3 {
            assert!((stim.b[i] - spon.b[i]).abs() < 1e-12, "b[{i}]");
        }
        // ultrarelativistic case
        let zeta = [0.5, 0.3, (1.0f64 - 0.34).sqrt()];
        let stim = stokes_stimulated_ultra(zeta, 1.7, 1.0, 1.2);
        let (spon, d2) = stokes_spontaneous_ultra(zeta, -1.0, 1.7, 1.0, 1.2);
        for i in 0..3 {
            assert!((stim.state.b[i] - spon.b[i]).abs() < 1e-12, "ultra b[{i}]");
        }
        assert!((d2 - 1.0).abs() < 1e-12, "(ζξ) = -1 is pure");
    }

    #[test]
    fn spontaneous_ultra_degree_matches_b_squared() {
        let mut worst: f64 = 0.0;
        for i in 0..60 {
            let t = i as f64 / 60.0;
            let z3 = -0.85 + 1.7 * t;
            let rest = 1.0 - z3 * z3;
            let z1 = (rest * 0.6).sqrt();
            let z2 = (rest * 0.4).sqrt() * if i % 2 == 0 { 1.0 } else { -1.0 };
            let (s, d2) =
                stokes_spontaneous_ultra([z1, z2, z3], -0.9 + 1.8 * t, 0.4 + 2.0 * t, 1.1, 0.9);
            worst = worst.max((s.degree() * s.degree() - d2).abs());
        }
        assert!(worst < 1e-10, "{worst:e}");
    }

    #[test]
    fn b2_sign_relation_between_spontaneous_and_stimulated() {
        // b₂(spont) = -(ζ·ξ)·b₂(stim) in both regimes
        let zeta = [0.5, -0.2, (1.0f64 - 0.29).sqrt()];
        for zx in [-0.7, 0.0, 0.4, 1.0] {
            let stim = stokes_stimulated_ultra(zeta, 2.2, 1.05, 0.95);
            let (spon, _) = stokes_spontaneous_ultra(zeta, zx, 2.2, 1.05, 0.95);
            assert!((spon.b[1] + zx * stim.state.b[1]).abs() < 1e-12);
        }
    }
}
