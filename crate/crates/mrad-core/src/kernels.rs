//! Physical kernels shared by the radiation computations: transition-current
//! matrix elements in the small-recoil expansion, form factors, photon
//! polarization bases, energy denominators, the radiation formation time,
//! and the finite-measurement-time window factor.
//!
//! Conventions: `m = 1`; the current kernel splits into a charge part `G̃`
//! and a magnetic-moment part `Z̃`. `Z̃[j][i]` couples the spin-side vector
//! (index `j`) to the photon polarization (index `i`). The tetrad mapping
//! spin-sphere vectors to x-space vectors is taken as the identity, so `ζ`
//! and `ξ` are used directly as spatial vectors.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::constants::EPS_DENOMINATOR;
use crate::quadrature::oscillatory_unit_integral;
use crate::vec3::{self, CVec3, Vec3};

/// On-shell energy `p⁰ = √(1 + p²)` in units of the particle mass.
pub fn energy(p: Vec3) -> f64 {
    (1.0 + vec3::dot(p, p)).sqrt()
}

/// Charge and magnetic-moment form factors. `a = F_e - F_m` is the
/// anomalous-moment combination.
#[derive(Debug, Clone)]
pub enum FormFactors {
    Constant { fe: f64, fm: f64 },
    /// Piecewise-linear table of `(q², F_e, F_m)`, sorted by `q²` and
    /// clamped at the ends.
    Tabulated { points: Vec<(f64, f64, f64)> },
}

impl FormFactors {
    /// Electron preset without anomalous magnetic moment: `F_e = F_m = 1`.
    pub fn electron() -> Self {
        FormFactors::Constant { fe: 1.0, fm: 1.0 }
    }

    pub fn constant(fe: f64, fm: f64) -> Self {
        FormFactors::Constant { fe, fm }
    }

    pub fn tabulated(mut points: Vec<(f64, f64, f64)>) -> Self {
        assert!(points.len() >= 2, "a form-factor table needs two rows");
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        FormFactors::Tabulated { points }
    }

    pub fn fe(&self, q2: f64) -> f64 {
        match self {
            FormFactors::Constant { fe, .. } => *fe,
            FormFactors::Tabulated { points } => interp(points, q2, 1),
        }
    }

    pub fn fm(&self, q2: f64) -> f64 {
        match self {
            FormFactors::Constant { fm, .. } => *fm,
            FormFactors::Tabulated { points } => interp(points, q2, 2),
        }
    }

    /// Anomalous combination `a(q²) = F_e(q²) - F_m(q²)`.
    pub fn a(&self, q2: f64) -> f64 {
        self.fe(q2) - self.fm(q2)
    }
}

fn interp(points: &[(f64, f64, f64)], q2: f64, which: usize) -> f64 {
    let val = |p: &(f64, f64, f64)| if which == 1 { p.1 } else { p.2 };
    if q2 <= points[0].0 {
        return val(&points[0]);
    }
    if q2 >= points[points.len() - 1].0 {
        return val(&points[points.len() - 1]);
    }
    let i = points.partition_point(|p| p.0 <= q2).max(1) - 1;
    let (x0, x1) = (points[i].0, points[i + 1].0);
    let t = (q2 - x0) / (x1 - x0);
    val(&points[i]) * (1.0 - t) + val(&points[i + 1]) * t
}

/// Transition-current matrix element split into charge (`g`) and
/// magnetic-moment (`z`) parts: `ūΓⁱu = ½[δ G̃ⁱ + σ_j Z̃^{ji}]`.
#[derive(Debug, Clone, Copy)]
pub struct CurrentKernel {
    /// Charge current `G̃ⁱ`.
    pub g: CVec3,
    /// Magnetic-moment tensor `Z̃^{ji}`; first index spin side, second
    /// photon side.
    pub z: [[Complex64; 3]; 3],
}

impl CurrentKernel {
    /// `Σ_i G̃ⁱ vᵢ` for a complex vector (typically `f*`).
    pub fn g_dot(&self, v: CVec3) -> Complex64 {
        vec3::cdot(self.g, v)
    }

    /// `Σ_{ji} wʲ Z̃^{ji} vᵢ` with `w` on the spin side.
    pub fn z_contract(&self, w: CVec3, v: CVec3) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            for i in 0..3 {
                acc += w[j] * self.z[j][i] * v[i];
            }
        }
        acc
    }
}

/// Pluggable source of current kernels. Only the small-recoil expansion
/// ships; exact kernels may be supplied by implementing this trait.
pub trait TransitionCurrent: Send + Sync {
    fn eval(&self, p_c: Vec3, k: Vec3, ff: &FormFactors) -> CurrentKernel;
}

/// Small-recoil expansion of the transition current (|k| ≪ p⁰_c; the caller
/// is responsible for staying in its validity range).
#[derive(Debug, Clone, Copy, Default)]
pub struct SmallRecoilCurrent;

impl TransitionCurrent for SmallRecoilCurrent {
    fn eval(&self, p_c: Vec3, k: Vec3, ff: &FormFactors) -> CurrentKernel {
        current_kernel_small_recoil(p_c, k, ff)
    }
}

/// Small-recoil current kernel at `p = p_c + k/2`, `p' = p_c - k/2`:
/// `G̃ = 2 p_c F_e` and the three-term magnetic bracket with `ε^{123} = 1`.
/// The photon carries away `q = k`, `q₀ = p₀ - p'₀` (exact on-shell value).
pub fn current_kernel_small_recoil(p_c: Vec3, k: Vec3, ff: &FormFactors) -> CurrentKernel {
    let p = vec3::add(p_c, vec3::scale(k, 0.5));
    let pp = vec3::sub(p_c, vec3::scale(k, 0.5));
    let q0 = energy(p) - energy(pp);
    let q2 = q0 * q0 - vec3::dot(k, k);
    let fe = ff.fe(q2);
    let fm = ff.fm(q2);
    let a = fe - fm;
    let e0 = energy(p_c);
    let g = vec3::to_complex(vec3::scale(p_c, 2.0 * fe));
    // Z̃^{ji} = -i [ ε^{jil} q_l F_m - ε^{jil} q₀ p_c^l F_m/(p⁰+1)
    //              + p_c^i ε^{jkl} q_k p_c^l a/(p⁰+1) ]
    let mut z = [[Complex64::new(0.0, 0.0); 3]; 3];
    let minus_i = Complex64::new(0.0, -1.0);
    let qv = k;
    let denom = e0 + 1.0;
    let q_cross: Vec3 = vec3::cross(qv, p_c); // ε^{jkl} q_k p_c^l as vector in j
    for j in 0..3 {
        for i in 0..3 {
            let mut bracket = 0.0;
            for l in 0..3 {
                let eps = levi_civita(j, i, l);
                if eps != 0.0 {
                    bracket += eps * (qv[l] * fm - q0 * p_c[l] * fm / denom);
                }
            }
            bracket += p_c[i] * q_cross[j] * a / denom;
            z[j][i] = minus_i * bracket;
        }
    }
    CurrentKernel { g, z }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Energy denominator `k₀ - p₀ + p'₀` of the half-line time integrals, with
/// `p = p_c + k/2`, `p' = p_c - k/2` on shell.
#[derive(Debug, Clone, Copy)]
pub struct EnergyDenominator {
    /// Exact value with the `-i0` prescription as a small imaginary offset.
    pub exact: Complex64,
    /// Small-recoil approximant `k₀(1 - n·β_c)`.
    pub small_recoil: f64,
}

pub fn energy_denominator(p_c: Vec3, k: Vec3) -> EnergyDenominator {
    let k0 = vec3::norm(k);
    let p = vec3::add(p_c, vec3::scale(k, 0.5));
    let pp = vec3::sub(p_c, vec3::scale(k, 0.5));
    let exact_re = k0 - energy(p) + energy(pp);
    let beta = vec3::scale(p_c, 1.0 / energy(p_c));
    let n = if k0 > 0.0 { vec3::scale(k, 1.0 / k0) } else { [0.0; 3] };
    EnergyDenominator {
        exact: Complex64::new(exact_re, -EPS_DENOMINATOR),
        small_recoil: k0 * (1.0 - vec3::dot(n, beta)),
    }
}

/// Formation time of edge/transition radiation and its ultrarelativistic
/// approximation `2γ²/[k₀(1 + (β⊥-n⊥)²γ²)]`.
#[derive(Debug, Clone, Copy)]
pub struct FormationTime {
    pub exact: f64,
    pub ultrarelativistic: f64,
}

/// `t_f = 1/[k₀(1 - n·β_c)]`. Returns `None` for the degenerate direction
/// `n·β_c = 1` where the formation time is unbounded.
pub fn formation_time(k: Vec3, beta_c: Vec3) -> Option<FormationTime> {
    let k0 = vec3::norm(k);
    assert!(k0 > 0.0, "photon momentum must be nonzero");
    let n = vec3::scale(k, 1.0 / k0);
    let nb = vec3::dot(n, beta_c);
    if (1.0 - nb).abs() < 1e-300 {
        return None;
    }
    let beta2 = vec3::dot(beta_c, beta_c);
    let gamma2 = 1.0 / (1.0 - beta2.min(1.0 - 1e-300));
    let beta_perp = vec3::sub(beta_c, vec3::scale(n, nb));
    // n⊥ relative to the beam axis ≈ transverse offset between n and β̂;
    // in the coordinates of the approximation n is the axis, so the offset
    // is β⊥ itself.
    let off2 = vec3::dot(beta_perp, beta_perp);
    Some(FormationTime {
        exact: 1.0 / (k0 * (1.0 - nb)),
        ultrarelativistic: 2.0 * gamma2 / (k0 * (1.0 + off2 * gamma2)),
    })
}

/// Photon polarization-basis conventions.
#[derive(Debug, Clone, Copy)]
pub enum BasisConvention {
    /// Spherical basis with the z axis along `axis` (typically the measured
    /// spin direction ζ): `f₁` in the (axis, n) plane, `f₂` azimuthal.
    SphericalAboutAxis { axis: Vec3 },
    /// `f₁ = β⊥/|β⊥|`, `f₂ = [n, β⊥]/|β⊥|`. Undefined when β has no
    /// component transverse to the photon.
    BetaPerpAligned { beta: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelError {
    DegenerateBasis,
}

impl core::fmt::Display for KernelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelError::DegenerateBasis => {
                write!(f, "polarization basis undefined for this geometry")
            }
        }
    }
}

/// Orthonormal transverse polarization pair `(f₁, f₂)` for photon momentum
/// `k` in the requested convention.
pub fn polarization_basis(k: Vec3, convention: BasisConvention) -> Result<(Vec3, Vec3), KernelError> {
    let k0 = vec3::norm(k);
    assert!(k0 > 0.0, "photon momentum must be nonzero");
    let n = vec3::scale(k, 1.0 / k0);
    match convention {
        BasisConvention::SphericalAboutAxis { axis } => {
            let z = vec3::unit(axis);
            // frame (e1, e2, z); e1 picked deterministically
            let seed = if z[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let e1 = vec3::unit(vec3::sub(seed, vec3::scale(z, vec3::dot(seed, z))));
            let e2 = vec3::cross(z, e1);
            let cos_t = vec3::dot(n, z).clamp(-1.0, 1.0);
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            let (cos_p, sin_p) = if sin_t > 1e-14 {
                (vec3::dot(n, e1) / sin_t, vec3::dot(n, e2) / sin_t)
            } else {
                (1.0, 0.0)
            };
            // f1 = (cosφ cosθ, sinφ cosθ, -sinθ), f2 = (-sinφ, cosφ, 0) in frame
            let f1 = vec3::add(
                vec3::add(vec3::scale(e1, cos_p * cos_t), vec3::scale(e2, sin_p * cos_t)),
                vec3::scale(z, -sin_t),
            );
            let f2 = vec3::add(vec3::scale(e1, -sin_p), vec3::scale(e2, cos_p));
            Ok((f1, f2))
        }
        BasisConvention::BetaPerpAligned { beta } => {
            let beta_perp = vec3::sub(beta, vec3::scale(n, vec3::dot(n, beta)));
            let bp = vec3::norm(beta_perp);
            if bp < 1e-14 {
                return Err(KernelError::DegenerateBasis);
            }
            let f1 = vec3::scale(beta_perp, 1.0 / bp);
            let f2 = vec3::cross(n, f1);
            Ok((f1, f2))
        }
    }
}

/// Time profile of the measurement switching function `λ(t)`: `λ = 1` for
/// `t ≤ 0`, `0` for `t ≥ τ`, infinitely differentiable in between, with
/// `-∫λ' = 1`. The enum stores the shape of `-τ·λ'(τu)` on `(0,1)` before
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowProfile {
    /// Plain smooth bump `exp(-s/(u(1-u)))`.
    Bump { steepness: f64 },
    /// Kaiser-cored bump `I₀(2β√(u(1-u)))·exp(-s/(u(1-u)))`. Near-optimal
    /// time-bandwidth concentration; the bump factor keeps it smooth with
    /// compact support.
    KaiserBump { beta: f64, steepness: f64 },
}

impl Default for WindowProfile {
    fn default() -> Self {
        WindowProfile::KaiserBump {
            beta: 24.0,
            steepness: 0.02,
        }
    }
}

impl WindowProfile {
    /// Unnormalized shape on (0,1); zero outside.
    pub fn shape(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let w = u * (1.0 - u);
        match *self {
            WindowProfile::Bump { steepness } => {
                let e = steepness / w;
                if e > 700.0 {
                    0.0
                } else {
                    (-e).exp()
                }
            }
            WindowProfile::KaiserBump { beta, steepness } => {
                let e = steepness / w;
                if e > 700.0 {
                    0.0
                } else {
                    bessel_i0(2.0 * beta * w.sqrt()) * (-e).exp()
                }
            }
        }
    }

    /// Mass of the unnormalized shape, `∫₀¹ shape`.
    pub fn mass(&self) -> f64 {
        oscillatory_unit_integral(|u| self.shape(u), 0.0).re
    }
}

/// Modified Bessel function `I₀` by power series (adequate to `z ≲ 60`).
pub fn bessel_i0(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..300 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

/// Finite-measurement-time factor `-∫₀^τ λ'(t) e^{iΔt} dt` multiplying the
/// radiation amplitude; `Δ = k₀ - q₀`. Equals 1 at `τ = 0` (instantaneous
/// measurement) and at `Δ = 0`, and decays in `τΔ` faster than any power.
pub fn measurement_window(tau: f64, delta: f64, profile: WindowProfile) -> Complex64 {
    PreparedWindow::new(tau, profile).factor(delta)
}

/// Window with its profile normalization computed once.
#[derive(Debug, Clone, Copy)]
pub struct PreparedWindow {
    pub tau: f64,
    pub profile: WindowProfile,
    mass: f64,
}

impl PreparedWindow {
    pub fn new(tau: f64, profile: WindowProfile) -> Self {
        assert!(tau >= 0.0, "measurement duration must be non-negative");
        Self {
            tau,
            profile,
            mass: profile.mass(),
        }
    }

    pub fn factor(&self, delta: f64) -> Complex64 {
        if self.tau == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let mass = self.mass;
        oscillatory_unit_integral(|u| self.profile.shape(u) / mass, self.tau * delta)
    }

    /// Chebyshev interpolant of the factor over a Δ-interval, for use in
    /// quadrature inner loops (the factor is analytic in Δ, so a modest
    /// node count reaches machine precision).
    pub fn table(&self, delta_min: f64, delta_max: f64) -> WindowTable {
        let n = 48usize;
        let pad = (delta_max - delta_min).abs() * 0.05 + 1e-12;
        let a = delta_min - pad;
        let b = delta_max + pad;
        let mut samples = alloc::vec::Vec::with_capacity(n);
        for j in 0..n {
            let x = ((2 * j + 1) as f64) * core::f64::consts::PI / (2.0 * n as f64);
            let t = x.cos();
            let delta = 0.5 * (a + b) + 0.5 * (b - a) * t;
            samples.push(self.factor(delta));
        }
        // Chebyshev coefficients by the discrete cosine transform
        let mut coeffs = alloc::vec::Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &s) in samples.iter().enumerate() {
                let ang = core::f64::consts::PI * (k as f64) * ((2 * j + 1) as f64)
                    / (2.0 * n as f64);
                acc += s * ang.cos();
            }
            coeffs.push(acc * (2.0 / n as f64));
        }
        coeffs[0] *= 0.5;
        WindowTable { a, b, coeffs }
    }
}

/// Chebyshev table of the window factor on `[a, b]` in Δ.
#[derive(Debug, Clone)]
pub struct WindowTable {
    a: f64,
    b: f64,
    coeffs: Vec<Complex64>,
}

impl WindowTable {
    pub fn eval(&self, delta: f64) -> Complex64 {
        let t = ((2.0 * delta - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0);
        // Clenshaw recurrence
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            let tmp = b1;
            b1 = c + b1 * (2.0 * t) - b2;
            b2 = tmp;
        }
        b1 - b2 * t
    }
}
