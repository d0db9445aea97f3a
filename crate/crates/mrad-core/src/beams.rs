//! Continuum beam and entangled-pair constructions feeding the radiation
//! amplitudes.
//!
//! The uncorrelated beam carries mutually orthogonal Gaussian packets; its
//! projected densities use the product closed forms, with the normalization
//! `ρ⁰_{D̃} = Π_i ⟨D̃⟩_i`. The entangled pair is a two-fermion state with
//! spin correlation `f_{s₁s₂} = δ_{s₁,-s₂}χ_{s₁}`; measuring the spin of
//! particle 1 is modeled by the rank-one projector `D_e = ½(1+σζ) ⊗ |g¹⟩⟨g¹|`
//! , which realizes the detector-locality condition `D_e φ² ≈ 0` exactly up
//! to the packet overlap. All pair objects are evaluated in closed form on
//! the two-packet subspace, keeping every overlap correction.

use alloc::boxed::Box;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::density::{DensityError, ORTHOGONALITY_TOL};
use crate::packets::{
    spin_projector, spin_zero, GaussianPacket, ScalarGaussian, SpinKernel, SpinMat,
};
use crate::quadrature::{integrate_3d_plain, GridSpec};
use crate::vec3::{self, Vec3};

/// Measured spin direction as a field over momentum.
pub enum ZetaField {
    Constant(Vec3),
    Custom(Box<dyn Fn(Vec3) -> Vec3 + Send + Sync>),
}

impl ZetaField {
    pub fn constant(zeta: Vec3) -> Self {
        assert!(
            (vec3::norm(zeta) - 1.0).abs() < 1e-10,
            "measured spin direction must be a unit vector"
        );
        ZetaField::Constant(zeta)
    }

    pub fn at(&self, p: Vec3) -> Vec3 {
        match self {
            ZetaField::Constant(z) => *z,
            ZetaField::Custom(f) => f(p),
        }
    }
}

/// Beam of `N` uncorrelated, mutually orthogonal Gaussian packets.
pub struct UncorrelatedBeam {
    members: Vec<GaussianPacket>,
}

impl UncorrelatedBeam {
    pub fn new(members: Vec<GaussianPacket>) -> Result<Self, DensityError> {
        assert!(!members.is_empty());
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let overlap = members[i]
                    .spatial
                    .overlap(&members[j].spatial)
                    .norm();
                if overlap > ORTHOGONALITY_TOL {
                    return Err(DensityError::OrthogonalityViolation {
                        overlap,
                        tolerance: ORTHOGONALITY_TOL,
                    });
                }
            }
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[GaussianPacket] {
        &self.members
    }

    /// `⟨D̃⟩_i = ∫dp tr[½(1-σζ(p)) K_i(p,p)]` for member `i`.
    pub fn member_projection(&self, i: usize, zeta: &ZetaField, order: usize) -> f64 {
        let pk = &self.members[i];
        let grid = pk.spatial.grid(order);
        integrate_3d_plain(
            |p| {
                let k = pk.kernel(p, p);
                let z = zeta.at(p);
                let mut dt = crate::packets::spin_identity();
                for a in 0..3 {
                    dt = crate::packets::spin_add(
                        dt,
                        crate::packets::spin_scale(
                            crate::packets::PAULI[a],
                            Complex64::new(-z[a], 0.0),
                        ),
                    );
                }
                let dt = crate::packets::spin_scale(dt, Complex64::new(0.5, 0.0));
                crate::packets::spin_trace(crate::packets::spin_mul(dt, k))
            },
            &grid,
        )
        .re
    }

    /// `ρ⁰_{D̃} = Π_i ⟨D̃⟩_i`.
    pub fn rho0_projected(&self, zeta: &ZetaField, order: usize) -> f64 {
        (0..self.members.len())
            .map(|i| self.member_projection(i, zeta, order))
            .product()
    }

    /// Beam polarization per particle along the measured direction,
    /// `S_ζ = (1/N) Σ_i ⟨(ζ·ξ_i)⟩`.
    pub fn s_zeta(&self, zeta: &ZetaField, order: usize) -> f64 {
        let n = self.members.len() as f64;
        (0..self.members.len())
            .map(|i| 1.0 - 2.0 * self.member_projection(i, zeta, order))
            .sum::<f64>()
            / n
    }

    /// The sandwiched kernel `D̃_e ρ^(1)_{D̃_e} D_e` for spin measurement,
    /// as a weighted packet sum, together with the normalization factor
    /// `1 - ρ⁰_{D̃}`.
    pub fn projected_sandwiched(
        &self,
        zeta: &ZetaField,
        order: usize,
    ) -> (BeamKernel, f64) {
        let projections: Vec<f64> = (0..self.members.len())
            .map(|i| self.member_projection(i, zeta, order))
            .collect();
        let rho0: f64 = projections.iter().product();
        let weights: Vec<f64> = projections.iter().map(|p| rho0 / p).collect();
        (
            BeamKernel {
                members: self.members.clone(),
                weights,
                zeta: match zeta {
                    ZetaField::Constant(z) => Some(*z),
                    ZetaField::Custom(_) => None,
                },
            },
            1.0 - rho0,
        )
    }
}

/// `D̃ (Σ w_i K_i) D` with the spin projectors of the measured direction
/// applied pointwise; for a constant ζ the projectors are cached.
pub struct BeamKernel {
    members: Vec<GaussianPacket>,
    weights: Vec<f64>,
    zeta: Option<Vec3>,
}

impl BeamKernel {
    fn zeta_at(&self, _p: Vec3) -> Vec3 {
        self.zeta.expect("beam kernels require a constant ζ field")
    }
}

impl SpinKernel for BeamKernel {
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat {
        let mut acc = spin_zero();
        for (w, pk) in self.weights.iter().zip(self.members.iter()) {
            let k = pk.kernel(p, pp);
            for s in 0..2 {
                for sp in 0..2 {
                    acc[s][sp] += k[s][sp] * *w;
                }
            }
        }
        let d = spin_projector(self.zeta_at(p));
        let mut dt = crate::packets::spin_identity();
        for r in 0..2 {
            for c in 0..2 {
                dt[r][c] -= d[r][c];
            }
        }
        crate::packets::spin_mul(crate::packets::spin_mul(dt, acc), d)
    }
}

/// Two spin-entangled fermions in non-overlapping packets.
///
/// State: `|Ψ⟩ = k Σ_s χ_{-s} a†[φ²_{-s}] a†[φ¹_s] |0⟩` with
/// `φⁱ_s(p) = cⁱ_s gⁱ(p)`.
pub struct EntangledPair {
    pub g1: ScalarGaussian,
    pub spin1: [Complex64; 2],
    pub g2: ScalarGaussian,
    pub spin2: [Complex64; 2],
    pub chi: [Complex64; 2],
}

fn flip(s: usize) -> usize {
    1 - s
}

impl EntangledPair {
    pub fn new(
        g1: ScalarGaussian,
        spin1: [Complex64; 2],
        g2: ScalarGaussian,
        spin2: [Complex64; 2],
        chi: [Complex64; 2],
    ) -> Result<Self, DensityError> {
        let overlap = g1.overlap(&g2).norm();
        if overlap > ORTHOGONALITY_TOL {
            return Err(DensityError::OrthogonalityViolation {
                overlap,
                tolerance: ORTHOGONALITY_TOL,
            });
        }
        let norm = |v: [Complex64; 2]| {
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        };
        Ok(Self {
            g1,
            spin1: norm(spin1),
            g2,
            spin2: norm(spin2),
            chi,
        })
    }

    /// Pair amplitudes `d_s = χ_{-s} c²_{-s} c¹_s`.
    pub fn d(&self) -> [Complex64; 2] {
        [
            self.chi[1] * self.spin2[1] * self.spin1[0],
            self.chi[0] * self.spin2[0] * self.spin1[1],
        ]
    }

    fn s12(&self) -> Complex64 {
        self.g1.overlap(&self.g2)
    }

    /// Exact `|k|⁻² = ⟨Ψ'|Ψ'⟩` of the unnormalized state, including the
    /// exchange overlap correction.
    pub fn norm_k2_inv(&self) -> f64 {
        let d = self.d();
        let s2 = self.s12().norm_sqr();
        let direct: f64 = d.iter().map(|x| x.norm_sqr()).sum();
        let exch = (d[0].conj() * d[1] + d[1].conj() * d[0]).re;
        direct - s2 * exch
    }

    /// The approximate-orthogonality closed form `|k|⁻² = Σ_s |d_s|²`.
    pub fn norm_k2_inv_closed(&self) -> f64 {
        self.d().iter().map(|x| x.norm_sqr()).sum()
    }

    /// Effective one-particle wave function of the measured particle:
    /// per-spin amplitudes `e_s = |k| χ_{-s}|c²_{-s}| c¹_s` on the spatial
    /// packet `g¹`, normalized to `Σ_s |e_s|² = 1` up to overlap corrections.
    pub fn effective_amplitudes(&self) -> [Complex64; 2] {
        let k = 1.0 / self.norm_k2_inv_closed().sqrt();
        let mut e = [Complex64::new(0.0, 0.0); 2];
        for s in 0..2 {
            e[s] = self.chi[flip(s)] * self.spin2[flip(s)].norm() * self.spin1[s] * k;
        }
        e
    }

    /// Reduced one-particle kernel coefficients on the `{g¹, g²} ⊗ spin`
    /// basis (exact, including exchange terms).
    pub fn reduced_coefficients(&self) -> PairCoefficients {
        let d = self.d();
        let k2 = 1.0 / self.norm_k2_inv();
        let s12 = self.s12();
        let mut c = [[[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; 2]; // [i][s][j][s']
        for s in 0..2 {
            // spin-diagonal by the correlation structure
            c[0][s][0][s] += d[s] * d[s].conj() * k2;
            c[1][s][1][s] += d[flip(s)] * d[flip(s)].conj() * k2;
            c[1][s][0][s] -= d[flip(s)] * d[s].conj() * s12.conj() * k2;
            c[0][s][1][s] -= d[s] * d[flip(s)].conj() * s12 * k2;
        }
        PairCoefficients { c }
    }

    /// `X = contraction of ρ^(2) with D_e`: the measured-particle term of
    /// the projected density, `ρ^(1)_{D̃} = K - X`.
    fn measured_coefficients(&self, zeta: Vec3) -> PairCoefficients {
        let d = self.d();
        let k2 = 1.0 / self.norm_k2_inv();
        let s12 = self.s12();
        let dspin = spin_projector(zeta);
        // h_s = d_{-s}·g² - s12 d_s·g¹ (coefficients on the spatial basis)
        let h = |i: usize, s: usize| -> Complex64 {
            if i == 1 {
                d[flip(s)]
            } else {
                -s12 * d[s]
            }
        };
        let mut c = [[[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; 2];
        for s in 0..2 {
            for sp in 0..2 {
                let w = dspin[flip(sp)][flip(s)] * k2;
                for i in 0..2 {
                    for j in 0..2 {
                        c[i][s][j][sp] += w * h(i, s) * h(j, sp).conj();
                    }
                }
            }
        }
        PairCoefficients { c }
    }

    /// Projected kernel `ρ^(1)_{D̃_e} = K - X` for the spin measurement of
    /// particle 1 with direction ζ.
    pub fn projected_coefficients(&self, zeta: Vec3) -> PairCoefficients {
        self.reduced_coefficients()
            .sub(&self.measured_coefficients(zeta))
    }

    /// The amplitude kernel `D̃_e ρ^(1)_{D̃_e} D_e` on the pair basis.
    pub fn sandwiched_coefficients(&self, zeta: Vec3) -> PairCoefficients {
        let rho = self.projected_coefficients(zeta);
        let de = PairCoefficients::spin_on_g1(spin_projector(zeta));
        let gram = self.gram();
        // ρ D - D ρ D
        let rho_d = rho.compose(&gram, &de);
        let d_rho_d = de.compose(&gram, &rho_d);
        rho_d.sub(&d_rho_d)
    }

    fn gram(&self) -> [[Complex64; 2]; 2] {
        let s12 = self.s12();
        [
            [Complex64::new(1.0, 0.0), s12],
            [s12.conj(), Complex64::new(1.0, 0.0)],
        ]
    }

    /// Exact normalization factor `1 - ρ⁰_{D̃} = ‖a[w]|Ψ⟩‖²` with
    /// `w = (ζ-spinor) ⊗ g¹` the measured rank-one mode.
    pub fn norm_factor(&self, zeta: Vec3) -> f64 {
        let d = self.d();
        let s12 = self.s12();
        // spinor of the ζ projector
        let w_spin = zeta_spinor(zeta);
        // a[w]|Ψ⟩ = k Σ_σ d_σ [ w̄_{-σ}s12·|v_σ⟩... ] expanded on the
        // basis (v₀, v₁, u₀, u₁):
        // ⟨w|u_σ⟩ = w̄_{-σ}·s12,   ⟨w|v_σ⟩ = w̄_σ
        let mut coeff = [Complex64::new(0.0, 0.0); 4]; // v0 v1 u0 u1
        for sigma in 0..2 {
            let wu = w_spin[flip(sigma)].conj() * s12;
            let wv = w_spin[sigma].conj();
            coeff[sigma] += d[sigma] * wu; // + ⟨w|u_σ⟩ |v_σ⟩
            coeff[2 + sigma] -= d[sigma] * wv; // - ⟨w|v_σ⟩ |u_σ⟩
        }
        // Gram of (v0, v1, u0, u1): ⟨v_σ|u_τ⟩ = δ_{σ,-τ} s12
        let mut gram = [[Complex64::new(0.0, 0.0); 4]; 4];
        for a in 0..2 {
            gram[a][a] = Complex64::new(1.0, 0.0);
            gram[2 + a][2 + a] = Complex64::new(1.0, 0.0);
        }
        for sigma in 0..2 {
            gram[sigma][2 + flip(sigma)] = s12;
            gram[2 + flip(sigma)][sigma] = s12.conj();
        }
        let mut norm2 = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            for b in 0..4 {
                norm2 += coeff[a].conj() * gram[a][b] * coeff[b];
            }
        }
        norm2.re / self.norm_k2_inv()
    }

    /// Closed form `1 - ρ⁰_{D̃} = Σ_s ½(1+σ·ζ)_{ss} |e_s|²` built from the
    /// effective wave function (approximate orthogonality). The ½ belongs
    /// to the measurement projector; without it the value can exceed 1.
    pub fn norm_factor_closed(&self, zeta: Vec3) -> f64 {
        let e = self.effective_amplitudes();
        let proj = spin_projector(zeta);
        (0..2).map(|s| proj[s][s].re * e[s].norm_sqr()).sum()
    }

    /// Evaluable amplitude kernel for the pair.
    pub fn amplitude_kernel(&self, zeta: Vec3) -> PairKernel {
        PairKernel {
            coeff: self.sandwiched_coefficients(zeta),
            g1: self.g1,
            g2: self.g2,
        }
    }

    /// Effective one-particle density of the measured particle: the
    /// spin-diagonal kernel `Σ_s |e_s|² |s⟩⟨s| ⊗ g¹g¹*`. The correlation
    /// makes it diagonal in the entangled spin basis, so it is a mixture,
    /// not a pure spinor state.
    pub fn effective_density(&self) -> crate::packets::OneParticleDensity {
        let e = self.effective_amplitudes();
        let up = crate::packets::SpinState::Pure([
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let down = crate::packets::SpinState::Pure([
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        crate::packets::OneParticleDensity::Mixture(alloc::vec![
            (
                e[0].norm_sqr(),
                GaussianPacket::new(self.g1.p0, self.g1.x0, self.g1.sigma, up)
            ),
            (
                e[1].norm_sqr(),
                GaussianPacket::new(self.g1.p0, self.g1.x0, self.g1.sigma, down)
            ),
        ])
    }

    /// Natural quadrature grid of the pair (covers both packets).
    pub fn natural_grid(&self, order: usize) -> GridSpec {
        crate::packets::OneParticleDensity::Mixture(alloc::vec![
            (
                0.5,
                GaussianPacket::new(
                    self.g1.p0,
                    self.g1.x0,
                    self.g1.sigma,
                    crate::packets::SpinState::up()
                )
            ),
            (
                0.5,
                GaussianPacket::new(
                    self.g2.p0,
                    self.g2.x0,
                    self.g2.sigma,
                    crate::packets::SpinState::up()
                )
            ),
        ])
        .natural_grid(order)
    }
}

/// Spinor `χ_ζ` with `χχ† = ½(1+σζ)`.
pub fn zeta_spinor(zeta: Vec3) -> [Complex64; 2] {
    let theta = zeta[2].clamp(-1.0, 1.0).acos();
    let phi = zeta[1].atan2(zeta[0]);
    [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::new(0.0, phi).exp() * (theta / 2.0).sin(),
    ]
}

/// One-particle operator coefficients on the basis `gᵢ ⊗ |s⟩`:
/// kernel `(p,p') = Σ c[i][s][j][s'] gᵢ(p) gⱼ*(p')`.
#[derive(Debug, Clone)]
pub struct PairCoefficients {
    c: [[[[Complex64; 2]; 2]; 2]; 2],
}

impl PairCoefficients {
    fn zero() -> Self {
        Self {
            c: [[[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; 2],
        }
    }

    /// Spin operator supported on the `g¹` spatial mode.
    fn spin_on_g1(spin: SpinMat) -> Self {
        let mut out = Self::zero();
        for s in 0..2 {
            for sp in 0..2 {
                out.c[0][s][0][sp] = spin[s][sp];
            }
        }
        out
    }

    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..2 {
            for s in 0..2 {
                for j in 0..2 {
                    for sp in 0..2 {
                        out.c[i][s][j][sp] -= other.c[i][s][j][sp];
                    }
                }
            }
        }
        out
    }

    /// Operator composition through the spatial Gram matrix.
    fn compose(&self, gram: &[[Complex64; 2]; 2], other: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for s in 0..2 {
                for l in 0..2 {
                    for tp in 0..2 {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for j in 0..2 {
                            for k in 0..2 {
                                for m in 0..2 {
                                    acc += self.c[i][s][j][m] * gram[j][k] * other.c[k][m][l][tp];
                                }
                            }
                        }
                        out.c[i][s][l][tp] = acc;
                    }
                }
            }
        }
        out
    }

    pub fn get(&self, i: usize, s: usize, j: usize, sp: usize) -> Complex64 {
        self.c[i][s][j][sp]
    }
}

/// Evaluable kernel built from pair coefficients.
pub struct PairKernel {
    pub coeff: PairCoefficients,
    pub g1: ScalarGaussian,
    pub g2: ScalarGaussian,
}

impl SpinKernel for PairKernel {
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat {
        let g = [self.g1.amplitude(p), self.g2.amplitude(p)];
        let gc = [
            self.g1.amplitude(pp).conj(),
            self.g2.amplitude(pp).conj(),
        ];
        let mut out = spin_zero();
        for i in 0..2 {
            for j in 0..2 {
                let w = g[i] * gc[j];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                for s in 0..2 {
                    for sp in 0..2 {
                        out[s][sp] += self.coeff.c[i][s][j][sp] * w;
                    }
                }
            }
        }
        out
    }
}
