//! One-particle density kernels on continuum momentum space.
//!
//! The canonical internal form is the spin decomposition
//! `ρ_{ss'}(p,p') = ½ρ(p,p')[1 + σ·ξ(p,p')]_{ss'}`; the 2×2 kernel form is
//! derived from it. Momentum normalization is `Σ_s ∫dp ρ_ss(p,p) = 1`
//! (continuum states with the box factors absorbed once into the measure).

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::quadrature::{integrate_3d_plain, GridSpec};
use crate::vec3::{self, CVec3, Vec3};

pub type SpinMat = [[Complex64; 2]; 2];

pub const PAULI: [SpinMat; 3] = {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mi = Complex64::new(0.0, -1.0);
    let mo = Complex64::new(-1.0, 0.0);
    [
        [[z, o], [o, z]],
        [[z, mi], [i, z]],
        [[o, z], [z, mo]],
    ]
};

pub fn spin_zero() -> SpinMat {
    [[Complex64::new(0.0, 0.0); 2]; 2]
}

pub fn spin_identity() -> SpinMat {
    let mut m = spin_zero();
    m[0][0] = Complex64::new(1.0, 0.0);
    m[1][1] = Complex64::new(1.0, 0.0);
    m
}

pub fn spin_add(a: SpinMat, b: SpinMat) -> SpinMat {
    let mut m = spin_zero();
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][c] + b[r][c];
        }
    }
    m
}

pub fn spin_scale(a: SpinMat, s: Complex64) -> SpinMat {
    let mut m = spin_zero();
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][c] * s;
        }
    }
    m
}

pub fn spin_mul(a: SpinMat, b: SpinMat) -> SpinMat {
    let mut m = spin_zero();
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    m
}

pub fn spin_trace(a: SpinMat) -> Complex64 {
    a[0][0] + a[1][1]
}

/// `tr(σ_i A)` for the three Pauli matrices.
pub fn spin_sigma_trace(a: SpinMat) -> CVec3 {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (i, sigma) in PAULI.iter().enumerate() {
        out[i] = spin_trace(spin_mul(*sigma, a));
    }
    out
}

/// `½(1 + σ·ζ)` spin projector onto the direction `ζ` (|ζ| = 1).
pub fn spin_projector(zeta: Vec3) -> SpinMat {
    let mut m = spin_identity();
    for i in 0..3 {
        m = spin_add(m, spin_scale(PAULI[i], Complex64::new(zeta[i], 0.0)));
    }
    spin_scale(m, Complex64::new(0.5, 0.0))
}

/// Spin content of a one-particle state: a pure spinor or a polarization
/// vector `ξ` with `|ξ| ≤ 1` (mixed for `|ξ| < 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinState {
    Pure([Complex64; 2]),
    Polarized(Vec3),
}

impl SpinState {
    pub fn up() -> Self {
        SpinState::Pure([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    /// Unit-trace spin density `½(1 + σ·ξ)`.
    pub fn density(&self) -> SpinMat {
        match *self {
            SpinState::Pure(chi) => {
                let n = (chi[0].norm_sqr() + chi[1].norm_sqr()).sqrt();
                let c = [chi[0] / n, chi[1] / n];
                let mut m = spin_zero();
                for r in 0..2 {
                    for cidx in 0..2 {
                        m[r][cidx] = c[r] * c[cidx].conj();
                    }
                }
                m
            }
            SpinState::Polarized(xi) => {
                assert!(vec3::norm(xi) <= 1.0 + 1e-12, "polarization |ξ| must be ≤ 1");
                let mut m = spin_identity();
                for i in 0..3 {
                    m = spin_add(m, spin_scale(PAULI[i], Complex64::new(xi[i], 0.0)));
                }
                spin_scale(m, Complex64::new(0.5, 0.0))
            }
        }
    }

    /// Polarization vector `ξ = tr(σ ρ_spin)`.
    pub fn xi(&self) -> Vec3 {
        let d = self.density();
        let t = spin_sigma_trace(d);
        [t[0].re, t[1].re, t[2].re]
    }
}

/// Normalized scalar Gaussian wave function in momentum space:
/// `g(p) = (2πσ²)^{-3/4} exp(-(p-p₀)²/4σ² - i x₀·p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarGaussian {
    pub p0: Vec3,
    pub x0: Vec3,
    pub sigma: f64,
}

impl ScalarGaussian {
    pub fn new(p0: Vec3, x0: Vec3, sigma: f64) -> Self {
        assert!(sigma > 0.0, "packet width must be positive");
        Self { p0, x0, sigma }
    }

    pub fn amplitude(&self, p: Vec3) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let d = vec3::sub(p, self.p0);
        let mag = (2.0 * core::f64::consts::PI * s2).powf(-0.75)
            * (-vec3::dot(d, d) / (4.0 * s2)).exp();
        let phase = -vec3::dot(self.x0, p);
        Complex64::new(0.0, phase).exp() * mag
    }

    /// Exact overlap `⟨self|other⟩ = ∫ g₁*(p) g₂(p) d³p`.
    pub fn overlap(&self, other: &ScalarGaussian) -> Complex64 {
        let s1 = self.sigma * self.sigma;
        let s2 = other.sigma * other.sigma;
        let a = 0.25 / s1 + 0.25 / s2;
        let pref = (2.0 * core::f64::consts::PI * self.sigma * other.sigma).powf(-1.5)
            * (core::f64::consts::PI / a).powf(1.5);
        let mut result = Complex64::new(pref, 0.0);
        for i in 0..3 {
            let b = Complex64::new(
                self.p0[i] / (2.0 * s1) + other.p0[i] / (2.0 * s2),
                self.x0[i] - other.x0[i],
            );
            let c = -self.p0[i] * self.p0[i] / (4.0 * s1) - other.p0[i] * other.p0[i] / (4.0 * s2);
            result *= (b * b / (4.0 * a) + c).exp();
        }
        result
    }

    /// Natural Gauss-Hermite grid covering this packet.
    pub fn grid(&self, order: usize) -> GridSpec {
        GridSpec::hermite_isotropic(order, self.p0, core::f64::consts::SQRT_2 * self.sigma)
    }
}

/// Pure one-particle state: spinor amplitude `φ_s(p) = χ_s g(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacket {
    pub spatial: ScalarGaussian,
    pub spinor: [Complex64; 2],
}

impl WavePacket {
    pub fn new(spatial: ScalarGaussian, spinor: [Complex64; 2]) -> Self {
        let n = (spinor[0].norm_sqr() + spinor[1].norm_sqr()).sqrt();
        assert!(n > 0.0, "zero spinor");
        Self {
            spatial,
            spinor: [spinor[0] / n, spinor[1] / n],
        }
    }

    pub fn amplitude(&self, s: usize, p: Vec3) -> Complex64 {
        self.spinor[s] * self.spatial.amplitude(p)
    }

    /// `⟨self|other⟩` including the spinor contraction.
    pub fn overlap(&self, other: &WavePacket) -> Complex64 {
        let spin: Complex64 = (0..2).map(|s| self.spinor[s].conj() * other.spinor[s]).sum();
        spin * self.spatial.overlap(&other.spatial)
    }
}

/// Evaluable one-particle density kernel in the spin decomposition.
pub trait SpinKernel: Send + Sync {
    /// Full 2×2 kernel `ρ_{ss'}(p, p')`.
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat;

    /// Scalar part and polarization-weighted vector `(ρ, ρ·ξ)` of the spin
    /// decomposition; returning the product keeps points with `ρ → 0`
    /// well-defined.
    fn scalar_parts(&self, p: Vec3, pp: Vec3) -> (Complex64, CVec3) {
        let k = self.kernel(p, pp);
        (spin_trace(k), spin_sigma_trace(k))
    }
}

/// Gaussian wave packet with factorized spin content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub spatial: ScalarGaussian,
    pub spin: SpinState,
}

impl GaussianPacket {
    pub fn new(p0: Vec3, x0: Vec3, sigma: f64, spin: SpinState) -> Self {
        Self {
            spatial: ScalarGaussian::new(p0, x0, sigma),
            spin,
        }
    }

    /// Scalar kernel `ρ(p,p')`, normalized to `∫dp ρ(p,p) = 1`.
    pub fn scalar_kernel(&self, p: Vec3, pp: Vec3) -> Complex64 {
        self.spatial.amplitude(p) * self.spatial.amplitude(pp).conj()
    }
}

impl SpinKernel for GaussianPacket {
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat {
        spin_scale(self.spin.density(), self.scalar_kernel(p, pp))
    }
}

/// General one-particle density: a packet, a pure superposition of wave
/// packets, or a statistical mixture of packets.
#[derive(Debug, Clone)]
pub enum OneParticleDensity {
    Packet(GaussianPacket),
    /// Pure state `Σ c_i |packet_i⟩` (normalized internally).
    Superposition(Vec<(Complex64, WavePacket)>),
    /// Statistical mixture with positive weights summing to 1.
    Mixture(Vec<(f64, GaussianPacket)>),
}

impl OneParticleDensity {
    pub fn packet(p0: Vec3, x0: Vec3, sigma: f64, spin: SpinState) -> Self {
        OneParticleDensity::Packet(GaussianPacket::new(p0, x0, sigma, spin))
    }

    /// Normalized superposition of wave packets.
    pub fn superposition(terms: Vec<(Complex64, WavePacket)>) -> Self {
        assert!(!terms.is_empty());
        let mut norm2 = Complex64::new(0.0, 0.0);
        for (ci, wi) in &terms {
            for (cj, wj) in &terms {
                norm2 += ci.conj() * cj * wi.overlap(wj);
            }
        }
        let scale = 1.0 / norm2.re.sqrt();
        OneParticleDensity::Superposition(
            terms
                .into_iter()
                .map(|(c, w)| (c * scale, w))
                .collect(),
        )
    }

    /// A Gauss-Hermite grid that covers the density's momentum support.
    pub fn natural_grid(&self, order: usize) -> GridSpec {
        match self {
            OneParticleDensity::Packet(p) => p.spatial.grid(order),
            OneParticleDensity::Superposition(terms) => {
                combined_grid(order, terms.iter().map(|(_, w)| w.spatial))
            }
            OneParticleDensity::Mixture(terms) => {
                combined_grid(order, terms.iter().map(|(_, p)| p.spatial))
            }
            }
    }

    /// `Σ_s ∫dp ρ_ss(p,p)` on the supplied grid.
    pub fn norm(&self, grid: &GridSpec) -> f64 {
        integrate_3d_plain(|p| spin_trace(self.kernel(p, p)), grid).re
    }
}

fn combined_grid(order: usize, packets: impl Iterator<Item = ScalarGaussian>) -> GridSpec {
    use crate::quadrature::AxisSpec;
    let packets: Vec<ScalarGaussian> = packets.collect();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut sigma_min = f64::INFINITY;
    // ±7σ envelope: the Gaussian mass beyond it is ~1e-12 per axis, so a
    // finite box does not cap the quadrature accuracy
    for p in &packets {
        sigma_min = sigma_min.min(p.sigma);
        for i in 0..3 {
            lo[i] = lo[i].min(p.p0[i] - 7.0 * p.sigma);
            hi[i] = hi[i].max(p.p0[i] + 7.0 * p.sigma);
        }
    }
    // Hermite while the support is a single cluster; a Legendre box with
    // resolution matched to the narrowest packet once the centers spread
    let axes = core::array::from_fn(|i| {
        let center = 0.5 * (lo[i] + hi[i]);
        let half = 0.5 * (hi[i] - lo[i]);
        if half <= 10.0 * sigma_min {
            AxisSpec::hermite(order, center, core::f64::consts::SQRT_2 * sigma_min)
        } else {
            let needed = (4.5 * half / sigma_min).ceil() as usize;
            AxisSpec::legendre(needed.clamp(order, 400), center, half)
        }
    });
    GridSpec { axes }
}

impl SpinKernel for OneParticleDensity {
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat {
        match self {
            OneParticleDensity::Packet(pk) => pk.kernel(p, pp),
            OneParticleDensity::Superposition(terms) => {
                let mut m = spin_zero();
                for (ci, wi) in terms {
                    for (cj, wj) in terms {
                        let amp = ci * cj.conj();
                        for s in 0..2 {
                            for sp in 0..2 {
                                m[s][sp] +=
                                    amp * wi.amplitude(s, p) * wj.amplitude(sp, pp).conj();
                            }
                        }
                    }
                }
                m
            }
            OneParticleDensity::Mixture(terms) => {
                let mut m = spin_zero();
                for (w, pk) in terms {
                    m = spin_add(m, spin_scale(pk.kernel(p, pp), Complex64::new(*w, 0.0)));
                }
                m
            }
        }
    }
}

/// Grid-coverage check for packet construction: the declared grid must
/// reach `±5σ` around the packet center on every axis.
pub fn grid_covers_packet(grid: &GridSpec, packet: &ScalarGaussian) -> bool {
    for (i, axis) in grid.axes.iter().enumerate() {
        let nodes = axis.nodes();
        let lo = nodes.first().map(|&(x, _)| x).unwrap_or(0.0);
        let hi = nodes.last().map(|&(x, _)| x).unwrap_or(0.0);
        if lo > packet.p0[i] - 5.0 * packet.sigma || hi < packet.p0[i] + 5.0 * packet.sigma {
            return false;
        }
    }
    true
}
