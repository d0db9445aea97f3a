//! First-order stimulated-radiation amplitudes under measurement.
//!
//! Every continuum amplitude is a momentum integral of the same shape,
//!
//! `A(λ,k) = ∓ (e/2) (2Vk₀)^{-1/2} ∫dμ (p₀p'₀)^{-1/2} W(τΔ)/(k₀-q₀)
//!          · [ tr M · (G̃·f*) + tr(σ_j M) · (Z̃^{j}·f*) ] / (1-ρ⁰_{D̃})`
//!
//! where `M(p,p')` is the relevant one-particle spin kernel (the density
//! itself for the classical edge amplitude, `D̃_e ρ^(1)_{D̃_e} D_e` for a
//! measured state, `ψφ†` for state transitions). The 2×2 spin algebra is
//! done numerically instead of through the expanded vector brackets; the
//! brackets are kept separately for cross-checking. Time integrals over
//! half-lines are always analytic (`1/(Δ∓i0)` denominators); the finite
//! measurement time enters as a multiplicative window factor.

use alloc::string::String;
use num_traits::Float;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::constants::BOX_VOLUME;
use crate::kernels::{
    energy, energy_denominator, measurement_window, polarization_basis, BasisConvention,
    FormFactors, TransitionCurrent, WindowProfile,
};
use crate::linalg::CMat;
use crate::packets::{
    spin_mul, spin_projector, spin_sigma_trace, spin_trace, SpinKernel, SpinMat,
};
use crate::quadrature::{integrate_3d, GridSpec};
use crate::vec3::{self, cadd, cdot, cscale, csub, to_complex, CVec3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub enum StimulatedError {
    /// `1 - ρ⁰_{D̃}` vanished: the measured outcome has zero probability.
    MeasuredStateProbabilityZero,
    /// The momentum diagonal vanishes at the measured momentum.
    MeasuredMomentumOutsideSupport,
    /// `⟨φ|ψ⟩ ≈ 0`: the recorded outcome is incompatible with the state.
    IncompatibleOutcome,
    Other(String),
}

impl core::fmt::Display for StimulatedError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StimulatedError::MeasuredStateProbabilityZero => {
                write!(f, "measured-state probability is zero")
            }
            StimulatedError::MeasuredMomentumOutsideSupport => {
                write!(f, "measured momentum outside the state's support")
            }
            StimulatedError::IncompatibleOutcome => {
                write!(f, "measurement outcome incompatible with the state (⟨φ|ψ⟩ ≈ 0)")
            }
            StimulatedError::Other(s) => write!(f, "{s}"),
        }
    }
}

/// One photon-grid point with its polarization pair.
#[derive(Debug, Clone, Copy)]
pub struct PhotonPoint {
    pub k: Vec3,
    pub k0: f64,
    pub theta: f64,
    pub phi: f64,
    pub f1: Vec3,
    pub f2: Vec3,
}

/// Photon detection grid: log-spaced energies × product angular grid by
/// default, with a polarization basis convention fixed per grid.
#[derive(Debug, Clone)]
pub struct PhotonGrid {
    pub points: Vec<PhotonPoint>,
}

impl PhotonGrid {
    /// Log-spaced `k₀ ∈ [k0_min, k0_max]` (n_energy points) × uniform
    /// `θ ∈ [theta_min, theta_max]` × uniform `φ` starting at 0.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        k0_min: f64,
        k0_max: f64,
        n_energy: usize,
        theta_min: f64,
        theta_max: f64,
        n_theta: usize,
        n_phi: usize,
        convention: BasisConvention,
    ) -> Result<Self, crate::kernels::KernelError> {
        assert!(k0_min > 0.0 && k0_max >= k0_min);
        assert!(n_energy >= 1 && n_theta >= 1 && n_phi >= 1);
        let mut points = Vec::new();
        for ie in 0..n_energy {
            let k0 = if n_energy == 1 {
                k0_min
            } else {
                let t = ie as f64 / (n_energy - 1) as f64;
                k0_min * (k0_max / k0_min).powf(t)
            };
            for it in 0..n_theta {
                let theta = if n_theta == 1 {
                    theta_min
                } else {
                    theta_min + (theta_max - theta_min) * it as f64 / (n_theta - 1) as f64
                };
                for ip in 0..n_phi {
                    let phi = 2.0 * core::f64::consts::PI * ip as f64 / n_phi as f64;
                    let n = [
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ];
                    let k = vec3::scale(n, k0);
                    let (f1, f2) = polarization_basis(k, convention)?;
                    points.push(PhotonPoint {
                        k,
                        k0,
                        theta,
                        phi,
                        f1,
                        f2,
                    });
                }
            }
        }
        Ok(Self { points })
    }

    pub fn single(k: Vec3, convention: BasisConvention) -> Result<Self, crate::kernels::KernelError> {
        let k0 = vec3::norm(k);
        let (f1, f2) = polarization_basis(k, convention)?;
        let theta = (k[2] / k0).acos();
        let phi = k[1].atan2(k[0]);
        Ok(Self {
            points: alloc::vec![PhotonPoint {
                k,
                k0,
                theta,
                phi,
                f1,
                f2
            }],
        })
    }
}

/// Which half-line time integral produced the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBranch {
    /// `t ∈ (-∞, 0]`: amplitude `-e·X/(Δ - i0)`.
    Transition,
    /// `t ∈ [0, ∞)`: amplitude `+e·X/(Δ + i0)`.
    Post,
}

/// Momentum parametrization of the kernel arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumFrame {
    /// Integrate over `p_c` with `p = p_c + k/2`, `p' = p_c - k/2`.
    Central,
    /// Integrate over `p'` with `p = p' + k`.
    Shifted,
}

/// Everything the generic amplitude evaluator needs besides the kernel.
pub struct AmplitudeSetup<'a> {
    pub ff: &'a FormFactors,
    pub current: &'a dyn TransitionCurrent,
    pub grid: GridSpec,
    pub branch: TimeBranch,
    pub frame: MomentumFrame,
    /// Use `k₀(1 - n·β_c)` instead of the exact energy denominator.
    pub small_recoil_denominator: bool,
    pub window: Option<(f64, WindowProfile)>,
    pub coupling: f64,
    pub norm_factor: f64,
    pub rel_tol: f64,
}

impl<'a> AmplitudeSetup<'a> {
    pub fn transition(ff: &'a FormFactors, current: &'a dyn TransitionCurrent, grid: GridSpec) -> Self {
        Self {
            ff,
            current,
            grid,
            branch: TimeBranch::Transition,
            frame: MomentumFrame::Central,
            small_recoil_denominator: false,
            window: None,
            coupling: crate::constants::coupling_e(),
            norm_factor: 1.0,
            rel_tol: 1e-6,
        }
    }
}

/// Amplitude value at one grid point for the two linear polarizations.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeEntry {
    pub point: PhotonPoint,
    pub values: [Complex64; 2],
    pub window_mod: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Radiation amplitude on a photon grid with its normalization metadata.
#[derive(Debug, Clone)]
pub struct RadiationAmplitude {
    pub entries: Vec<AmplitudeEntry>,
    pub norm_factor: f64,
}

impl RadiationAmplitude {
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.values.iter())
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }
}

/// Generic kernel-trace amplitude at a single photon point.
pub fn amplitude_point(
    kernel: &dyn SpinKernel,
    setup: &AmplitudeSetup<'_>,
    point: &PhotonPoint,
) -> AmplitudeEntry {
    let k = point.k;
    let k0 = point.k0;
    let prefactor = setup.coupling / (2.0 * (2.0 * BOX_VOLUME * k0).sqrt());
    let sign = match setup.branch {
        TimeBranch::Transition => -1.0,
        TimeBranch::Post => 1.0,
    };
    let f_used: [CVec3; 2] = [to_complex(point.f1), to_complex(point.f2)];
    let mut window_mod = 1.0;
    let mut values = [Complex64::new(0.0, 0.0); 2];
    let mut err = 0.0f64;
    let mut conv = true;
    let window_table = setup.window.map(|(tau, profile)| {
        let prepared = crate::kernels::PreparedWindow::new(tau, profile);
        let (lo, hi) = delta_range(setup, k);
        prepared.table(lo, hi)
    });
    for (lam, fvec) in f_used.iter().enumerate() {
        let fconj: CVec3 = [fvec[0].conj(), fvec[1].conj(), fvec[2].conj()];
        let res = integrate_3d(
            |u| {
                let (p, pp, p_c) = match setup.frame {
                    MomentumFrame::Central => (
                        vec3::add(u, vec3::scale(k, 0.5)),
                        vec3::sub(u, vec3::scale(k, 0.5)),
                        u,
                    ),
                    MomentumFrame::Shifted => {
                        let p = vec3::add(u, k);
                        (p, u, vec3::scale(vec3::add(p, u), 0.5))
                    }
                };
                let den = energy_denominator(p_c, k);
                let denom = if setup.small_recoil_denominator {
                    Complex64::new(den.small_recoil, 0.0)
                } else {
                    match setup.branch {
                        TimeBranch::Transition => den.exact,
                        TimeBranch::Post => den.exact.conj(),
                    }
                };
                let kern = setup.current.eval(p_c, k, setup.ff);
                let m = kernel.kernel(p, pp);
                let tr = spin_trace(m);
                let st = spin_sigma_trace(m);
                let charge = kern.g_dot(fconj) * tr;
                let magnetic = kern.z_contract(st, fconj);
                let weight = 1.0 / (energy(p) * energy(pp)).sqrt();
                let wfac = match &window_table {
                    Some(table) => table.eval(den.exact.re),
                    None => Complex64::new(1.0, 0.0),
                };
                (charge + magnetic) * weight * wfac / denom
            },
            &setup.grid,
            setup.rel_tol,
        );
        values[lam] = res.value * (sign * prefactor) / setup.norm_factor;
        err = err.max(res.error_estimate * prefactor / setup.norm_factor);
        conv = conv && res.converged;
    }
    if let Some((tau, profile)) = setup.window {
        // representative window modulus at the central geometry
        let den = energy_denominator(centroid(&setup.grid), k);
        window_mod = measurement_window(tau, den.exact.re, profile).norm();
    }
    AmplitudeEntry {
        point: *point,
        values,
        window_mod,
        error_estimate: err,
        converged: conv,
    }
}

/// Range of the exact denominator Δ = k₀ - p₀ + p'₀ over the quadrature
/// nodes (base and refined), for window-table construction.
fn delta_range(setup: &AmplitudeSetup<'_>, k: Vec3) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for spec in [setup.grid, setup.grid.raised(4)] {
        let nx = spec.axes[0].nodes();
        let ny = spec.axes[1].nodes();
        let nz = spec.axes[2].nodes();
        for &(x, _) in &nx {
            for &(y, _) in &ny {
                for &(z, _) in &nz {
                    let u = [x, y, z];
                    let p_c = match setup.frame {
                        MomentumFrame::Central => u,
                        MomentumFrame::Shifted => vec3::add(u, vec3::scale(k, 0.5)),
                    };
                    let d = energy_denominator(p_c, k).exact.re;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
    }
    (lo, hi)
}

fn centroid(grid: &GridSpec) -> Vec3 {
    [
        grid.axes[0].center,
        grid.axes[1].center,
        grid.axes[2].center,
    ]
}

/// Evaluate the kernel amplitude over a photon grid.
pub fn amplitude_over_grid(
    kernel: &dyn SpinKernel,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> RadiationAmplitude {
    let entries = photon
        .points
        .iter()
        .map(|pt| amplitude_point(kernel, setup, pt))
        .collect();
    RadiationAmplitude {
        entries,
        norm_factor: setup.norm_factor,
    }
}

/// Classical edge-radiation amplitude of a density: the current of a
/// charge distribution cut off at `t = 0`.
pub fn amplitude_classical_edge(
    density: &dyn SpinKernel,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> RadiationAmplitude {
    amplitude_over_grid(density, setup, photon)
}

/// Classical edge amplitude through the Weyl-symbol route: the kernel at
/// `(p_c + k/2, p_c - k/2)` is reassembled from the Wigner function by the
/// inverse transform, so every point of the packet contributes with the
/// phase `e^{-ik·x}`. Equivalent to [`amplitude_classical_edge`]; kept as
/// the phase-space reading of the same integral.
pub fn amplitude_classical_edge_wigner(
    density: &dyn SpinKernel,
    setup: &AmplitudeSetup<'_>,
    x_grid: &GridSpec,
    q_grid: &GridSpec,
    photon: &PhotonGrid,
) -> RadiationAmplitude {
    struct WignerRoute<'a> {
        inner: &'a dyn SpinKernel,
        x_grid: GridSpec,
        q_grid: GridSpec,
    }
    impl<'a> SpinKernel for WignerRoute<'a> {
        fn kernel(&self, p: Vec3, pp: Vec3) -> crate::packets::SpinMat {
            let wig = |x: Vec3, pc: Vec3| crate::wigner::wigner_point(self.inner, x, pc, &self.q_grid);
            crate::wigner::wigner_inverse_point(&wig, p, pp, &self.x_grid)
        }
    }
    let route = WignerRoute {
        inner: density,
        x_grid: *x_grid,
        q_grid: *q_grid,
    };
    amplitude_over_grid(&route, setup, photon)
}

/// Spin-projector sandwich `½(1-σζ(p)) · K · ½(1+σζ(p'))` of a kernel.
pub struct SpinMeasuredKernel<'a> {
    pub inner: &'a dyn SpinKernel,
    pub zeta: &'a crate::beams::ZetaField,
}

impl<'a> SpinKernel for SpinMeasuredKernel<'a> {
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat {
        let d_ket = spin_projector(self.zeta.at(p));
        let mut dt_ket = crate::packets::spin_identity();
        for r in 0..2 {
            for c in 0..2 {
                dt_ket[r][c] -= d_ket[r][c];
            }
        }
        let d_bra = spin_projector(self.zeta.at(pp));
        spin_mul(spin_mul(dt_ket, self.inner.kernel(p, pp)), d_bra)
    }
}

/// Stimulated amplitude for a spin measurement of a one-particle state
/// (`ρ^(1)_{D̃} = ρ` for N = 1): full spin structure, exact denominators.
pub fn amplitude_spin_measured(
    density: &dyn SpinKernel,
    zeta: &crate::beams::ZetaField,
    norm_factor: f64,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> Result<RadiationAmplitude, StimulatedError> {
    if norm_factor < 1e-12 {
        return Err(StimulatedError::MeasuredStateProbabilityZero);
    }
    let kernel = SpinMeasuredKernel {
        inner: density,
        zeta,
    };
    let mut setup2 = AmplitudeSetup {
        norm_factor,
        ..AmplitudeSetup::transition(setup.ff, setup.current, setup.grid)
    };
    setup2.window = setup.window;
    setup2.coupling = setup.coupling;
    setup2.rel_tol = setup.rel_tol;
    setup2.small_recoil_denominator = setup.small_recoil_denominator;
    Ok(amplitude_over_grid(&kernel, &setup2, photon))
}

/// Small-recoil spin-measurement amplitude: magnetic bracket
/// `(κ + i[κ,ζ])·Z̃` with `κ = ξ - ζ(ζ·ξ)` and the `1/[k₀(1-nβ_c)]`
/// denominator (constant measured direction).
pub fn amplitude_spin_measured_small_recoil(
    density: &dyn SpinKernel,
    zeta: Vec3,
    norm_factor: f64,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> Result<RadiationAmplitude, StimulatedError> {
    if norm_factor < 1e-12 {
        return Err(StimulatedError::MeasuredStateProbabilityZero);
    }
    let zc = to_complex(zeta);
    let mut entries = Vec::new();
    for pt in &photon.points {
        let k = pt.k;
        let k0 = pt.k0;
        let prefactor = setup.coupling / (4.0 * (2.0 * BOX_VOLUME * k0 * k0 * k0).sqrt());
        let f_used = [to_complex(pt.f1), to_complex(pt.f2)];
        let mut values = [Complex64::new(0.0, 0.0); 2];
        let mut err = 0.0f64;
        let mut conv = true;
        let window_table = setup.window.map(|(tau, profile)| {
            let prepared = crate::kernels::PreparedWindow::new(tau, profile);
            let (lo, hi) = delta_range(setup, k);
            prepared.table(lo, hi)
        });
        for (lam, fvec) in f_used.iter().enumerate() {
            let fconj: CVec3 = [fvec[0].conj(), fvec[1].conj(), fvec[2].conj()];
            let res = integrate_3d(
                |pc| {
                    let p = vec3::add(pc, vec3::scale(k, 0.5));
                    let pp = vec3::sub(pc, vec3::scale(k, 0.5));
                    let m = density.kernel(p, pp);
                    let v = spin_sigma_trace(m); // ρ·ξ as a complex vector
                    // ρκ = v - ζ(ζ·v); bracket = ρ(κ + i[κ,ζ])
                    let kappa = csub(v, cscale(zc, cdot(zc, v)));
                    let bracket = cadd(
                        kappa,
                        cscale(vec3::ccross(kappa, zc), Complex64::new(0.0, 1.0)),
                    );
                    let kern = setup.current.eval(pc, k, setup.ff);
                    let magnetic = kern.z_contract(bracket, fconj);
                    let e0 = energy(pc);
                    let beta = vec3::scale(pc, 1.0 / e0);
                    let n = vec3::scale(k, 1.0 / k0);
                    let wfac = match &window_table {
                        Some(table) => table.eval(k0 * (1.0 - vec3::dot(n, beta))),
                        None => Complex64::new(1.0, 0.0),
                    };
                    magnetic * wfac / (e0 * (1.0 - vec3::dot(n, beta)))
                },
                &setup.grid,
                setup.rel_tol,
            );
            values[lam] = res.value * (-prefactor) / norm_factor;
            err = err.max(res.error_estimate * prefactor / norm_factor);
            conv = conv && res.converged;
        }
        entries.push(AmplitudeEntry {
            point: *pt,
            values,
            window_mod: 1.0,
            error_estimate: err,
            converged: conv,
        });
    }
    Ok(RadiationAmplitude {
        entries,
        norm_factor,
    })
}

/// Stimulated amplitude for a momentum measurement at `p_r`: pointwise
/// closed form, no quadrature.
pub fn amplitude_momentum_measured(
    density: &dyn SpinKernel,
    p_r: Vec3,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> Result<RadiationAmplitude, StimulatedError> {
    let diag = spin_trace(density.kernel(p_r, p_r)).re;
    if diag < 1e-300 {
        return Err(StimulatedError::MeasuredMomentumOutsideSupport);
    }
    let mut entries = Vec::new();
    for pt in &photon.points {
        let k = pt.k;
        let k0 = pt.k0;
        let p = vec3::add(p_r, k);
        let p_c = vec3::add(p_r, vec3::scale(k, 0.5));
        let e_p = energy(p);
        let e_pp = energy(p_r);
        let q0 = e_p - e_pp;
        let denom = Complex64::new(k0 - q0, -crate::constants::EPS_DENOMINATOR);
        let kern = setup.current.eval(p_c, k, setup.ff);
        let m = density.kernel(p, p_r);
        let tr = spin_trace(m);
        let st = spin_sigma_trace(m);
        let prefactor =
            setup.coupling / (2.0 * diag * (2.0 * BOX_VOLUME * k0 * e_p * e_pp).sqrt());
        let mut values = [Complex64::new(0.0, 0.0); 2];
        for (lam, f) in [pt.f1, pt.f2].iter().enumerate() {
            let fconj: CVec3 = [
                Complex64::new(f[0], 0.0),
                Complex64::new(f[1], 0.0),
                Complex64::new(f[2], 0.0),
            ];
            let val = (kern.g_dot(fconj) * tr + kern.z_contract(st, fconj)) / denom;
            values[lam] = val * (-prefactor);
        }
        entries.push(AmplitudeEntry {
            point: *pt,
            values,
            window_mod: 1.0,
            error_estimate: 0.0,
            converged: true,
        });
    }
    Ok(RadiationAmplitude {
        entries,
        norm_factor: diag,
    })
}

/// Transition kernel `ψ(p) φ†(p')` between two wave packets.
pub struct TransitionKernel<'a> {
    pub ket: &'a crate::packets::WavePacket,
    pub bra: &'a crate::packets::WavePacket,
}

impl<'a> SpinKernel for TransitionKernel<'a> {
    fn kernel(&self, p: Vec3, pp: Vec3) -> SpinMat {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for s in 0..2 {
            for sp in 0..2 {
                m[s][sp] = self.ket.amplitude(s, p) * self.bra.amplitude(sp, pp).conj();
            }
        }
        m
    }
}

/// Position/state measurement amplitude: the post-measurement classical
/// current of `φ` plus the normalized `ψ → φ` transition amplitude.
pub struct PositionMeasuredAmplitude {
    pub total: RadiationAmplitude,
    pub post_term: RadiationAmplitude,
    pub transition_term: RadiationAmplitude,
    pub overlap: Complex64,
}

pub fn amplitude_position_measured(
    psi: &crate::packets::WavePacket,
    phi: &crate::packets::WavePacket,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> Result<PositionMeasuredAmplitude, StimulatedError> {
    let overlap = phi.overlap(psi); // ⟨φ|ψ⟩
    if overlap.norm() < 1e-10 {
        return Err(StimulatedError::IncompatibleOutcome);
    }
    let phi_phi = TransitionKernel { ket: phi, bra: phi };
    let psi_phi = TransitionKernel { ket: psi, bra: phi };
    let mut post_setup = AmplitudeSetup {
        branch: TimeBranch::Post,
        frame: MomentumFrame::Shifted,
        ..AmplitudeSetup::transition(setup.ff, setup.current, setup.grid)
    };
    post_setup.coupling = setup.coupling;
    post_setup.window = setup.window;
    post_setup.rel_tol = setup.rel_tol;
    let mut trans_setup = AmplitudeSetup {
        branch: TimeBranch::Transition,
        frame: MomentumFrame::Shifted,
        ..AmplitudeSetup::transition(setup.ff, setup.current, setup.grid)
    };
    trans_setup.coupling = setup.coupling;
    trans_setup.window = setup.window;
    trans_setup.rel_tol = setup.rel_tol;
    let post = amplitude_over_grid(&phi_phi, &post_setup, photon);
    let trans = amplitude_over_grid(&psi_phi, &trans_setup, photon);
    let mut total_entries = Vec::new();
    for (a, b) in post.entries.iter().zip(trans.entries.iter()) {
        let mut values = [Complex64::new(0.0, 0.0); 2];
        for lam in 0..2 {
            values[lam] = a.values[lam] + b.values[lam] / overlap;
        }
        total_entries.push(AmplitudeEntry {
            point: a.point,
            values,
            window_mod: a.window_mod,
            error_estimate: a.error_estimate + b.error_estimate,
            converged: a.converged && b.converged,
        });
    }
    Ok(PositionMeasuredAmplitude {
        total: RadiationAmplitude {
            entries: total_entries,
            norm_factor: overlap.norm_sqr(),
        },
        post_term: post,
        transition_term: trans,
        overlap,
    })
}

/// Spin measurement of one particle of an entangled pair: the amplitude of
/// the exact pair kernel, including all packet-overlap corrections.
pub fn amplitude_entangled_spin(
    pair: &crate::beams::EntangledPair,
    zeta: Vec3,
    setup: &AmplitudeSetup<'_>,
    photon: &PhotonGrid,
) -> Result<RadiationAmplitude, StimulatedError> {
    let norm_factor = pair.norm_factor(zeta);
    if norm_factor < 1e-12 {
        return Err(StimulatedError::MeasuredStateProbabilityZero);
    }
    let kernel = pair.amplitude_kernel(zeta);
    let mut setup2 = AmplitudeSetup {
        norm_factor,
        ..AmplitudeSetup::transition(setup.ff, setup.current, setup.grid)
    };
    setup2.coupling = setup.coupling;
    setup2.window = setup.window;
    setup2.rel_tol = setup.rel_tol;
    Ok(amplitude_over_grid(&kernel, &setup2, photon))
}

// ---------------------------------------------------------------------------
// Discrete-mode general amplitude and chain probabilities
// ---------------------------------------------------------------------------

/// Interaction matrix elements on a discrete mode set: for each photon mode
/// `γ̄`, a fermion one-particle matrix `V^γ̄_{ᾱα}` (row = creation index).
#[derive(Debug, Clone)]
pub struct VBlocks {
    pub v_out_in: Vec<CMat>,
    pub v_out_0: Vec<CMat>,
    pub v_0_in: Vec<CMat>,
}

impl VBlocks {
    /// Consistency: `V_{out,in} = V_{out,0} + V_{0,in}` per photon mode.
    pub fn check(&self) -> bool {
        self.v_out_in.len() == self.v_out_0.len()
            && self.v_out_in.len() == self.v_0_in.len()
            && self
                .v_out_in
                .iter()
                .zip(self.v_out_0.iter().zip(self.v_0_in.iter()))
                .all(|(vi, (vo, vn))| vi.max_abs_diff(&vo.add(vn)) < 1e-12)
    }

    pub fn n_photon(&self) -> usize {
        self.v_out_in.len()
    }

    /// Free-particle blocks: `V_{out,in} = 0`, `V_{out,0} = -V_{0,in}`.
    pub fn free(v_0_in: Vec<CMat>) -> Self {
        let n = v_0_in[0].rows();
        let v_out_0: Vec<CMat> = v_0_in
            .iter()
            .map(|v| CMat::zeros(n, n).sub(v))
            .collect();
        let v_out_in = v_0_in.iter().map(|v| CMat::zeros(v.rows(), v.cols())).collect();
        Self {
            v_out_in,
            v_out_0,
            v_0_in,
        }
    }
}

/// Coherent photon probe: amplitude vector `d` and the detection projector
/// `D` on the photon one-particle space.
#[derive(Debug, Clone)]
pub struct CoherentProbe {
    pub d: Vec<Complex64>,
    pub proj: CMat,
}

impl CoherentProbe {
    pub fn new(d: Vec<Complex64>, proj: CMat) -> Result<Self, StimulatedError> {
        let defect = proj
            .mul(&proj)
            .max_abs_diff(&proj)
            .max(proj.max_abs_diff(&proj.dagger()));
        if defect > 1e-10 {
            return Err(StimulatedError::Other(
                "photon detection operator is not a projector".into(),
            ));
        }
        Ok(Self { d, proj })
    }

    /// `d*·D·d`.
    pub fn d_proj_d(&self) -> f64 {
        let dd = self.proj.mul_vec(&self.d);
        self.d
            .iter()
            .zip(dd.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    }
}

/// General stimulated amplitude on discrete modes with its three addends:
/// unrecorded-electron, post-measurement, and transition radiation.
#[derive(Debug, Clone)]
pub struct GeneralAmplitude {
    pub total: Vec<Complex64>,
    pub addends: [Vec<Complex64>; 3],
    pub norm_factor: f64,
}

/// `𝒜^γ̄ = [(ρ¹-ρ¹_{D̃})V_{out,in} + D_eρ¹_{D̃}D_e V_{out,0}
///          + ρ¹_{D̃}D_e V_{0,in}] / (1-ρ⁰_{D̃})` per photon mode.
pub fn amplitude_general(
    rho1: &CMat,
    rho1_proj: &CMat,
    rho0_proj: f64,
    de: &CMat,
    v: &VBlocks,
) -> Result<GeneralAmplitude, StimulatedError> {
    let norm_factor = 1.0 - rho0_proj;
    if norm_factor < 1e-12 {
        return Err(StimulatedError::MeasuredStateProbabilityZero);
    }
    let unrecorded = rho1.sub(rho1_proj);
    let de_rho_de = de.mul(rho1_proj).mul(de);
    let rho_de = rho1_proj.mul(de);
    let contract = |m: &CMat, vv: &CMat| -> Complex64 { m.mul(vv).trace() };
    let n = v.n_photon();
    let mut a1 = Vec::with_capacity(n);
    let mut a2 = Vec::with_capacity(n);
    let mut a3 = Vec::with_capacity(n);
    let mut total = Vec::with_capacity(n);
    for g in 0..n {
        let t1 = contract(&unrecorded, &v.v_out_in[g]) / norm_factor;
        let t2 = contract(&de_rho_de, &v.v_out_0[g]) / norm_factor;
        let t3 = contract(&rho_de, &v.v_0_in[g]) / norm_factor;
        a1.push(t1);
        a2.push(t2);
        a3.push(t3);
        total.push(t1 + t2 + t3);
    }
    Ok(GeneralAmplitude {
        total,
        addends: [a1, a2, a3],
        norm_factor,
    })
}

/// Conditional probability `P(Π_D|Π_{D_e}) = (d*+𝒜*)·D·(d+𝒜)` with the
/// `e²` self-term of the radiated field discarded.
pub fn conditional_probability(probe: &CoherentProbe, amp: &GeneralAmplitude) -> f64 {
    let n = probe.d.len();
    assert_eq!(amp.total.len(), n);
    let d_plus: Vec<Complex64> = probe
        .d
        .iter()
        .zip(amp.total.iter())
        .map(|(d, a)| d + a)
        .collect();
    let full: f64 = {
        let pd = probe.proj.mul_vec(&d_plus);
        d_plus
            .iter()
            .zip(pd.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    };
    // discard the O(e²) self term |𝒜|²_D
    let self_term: f64 = {
        let pa = probe.proj.mul_vec(&amp.total);
        amp.total
            .iter()
            .zip(pa.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    };
    full - self_term
}

/// Full first-order chain probability `P(Π_D ← Π_{D_e})` on discrete modes.
#[allow(clippy::too_many_arguments)]
pub fn chain_probability_stimulated(
    rho1: &CMat,
    rho1_proj: &CMat,
    rho0_proj: f64,
    de: &CMat,
    v: &VBlocks,
    probe: &CoherentProbe,
) -> f64 {
    let nf = 1.0 - rho0_proj;
    let d_proj_d = probe.d_proj_d();
    let absorb = 1.0 - (-d_proj_d).exp();
    // photon-trace vectors: Sp(R_ph Π_D c†_γ̄) and Sp(R_ph Π_D c_γ)
    let n = probe.d.len();
    let dt = CMat::identity(n).sub(&probe.proj);
    let d_conj_proj: Vec<Complex64> = {
        // (d* D)_γ̄
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); n];
        for g in 0..n {
            for a in 0..n {
                out[g] += probe.d[a].conj() * probe.proj[(a, g)];
            }
        }
        out
    };
    let d_conj_tilde: Vec<Complex64> = {
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); n];
        for g in 0..n {
            for a in 0..n {
                out[g] += probe.d[a].conj() * dt[(a, g)];
            }
        }
        out
    };
    let exp_factor = (-d_proj_d).exp();
    let unrecorded = rho1.sub(rho1_proj);
    let de_rho_de = de.mul(rho1_proj).mul(de);
    let rho_de = rho1_proj.mul(de);
    let contract = |m: &CMat, vv: &CMat| -> Complex64 { m.mul(vv).trace() };
    let mut cross = Complex64::new(0.0, 0.0);
    for g in 0..n {
        // (ρ¹-ρ¹_{D̃})V_{out,in}(d*D) e^{-d*Dd}
        cross += contract(&unrecorded, &v.v_out_in[g]) * d_conj_proj[g] * exp_factor;
        // ρ¹_{D̃}D_e [ ((d*D) + (1-e^{-d*Dd})(d*D̃)) V_{0,in} - V†_{0,in}(1-e^{-d*Dd})d ]
        cross += contract(&rho_de, &v.v_0_in[g])
            * (d_conj_proj[g] + absorb * d_conj_tilde[g]);
        cross -= contract(&rho_de, &v.v_0_in[g].dagger()) * absorb * probe.d[g];
        // D_eρ¹_{D̃}D_e V_{out,0} (d*D) e^{-d*Dd}
        cross += contract(&de_rho_de, &v.v_out_0[g]) * d_conj_proj[g] * exp_factor;
    }
    nf * absorb + 2.0 * cross.re
}

/// Electron-detection probability `P(Π_{D_e})` to first order.
pub fn electron_probability_stimulated(
    rho1_proj: &CMat,
    rho0_proj: f64,
    de: &CMat,
    v: &VBlocks,
    probe: &CoherentProbe,
) -> f64 {
    let rho_de = rho1_proj.mul(de);
    let mut cross = Complex64::new(0.0, 0.0);
    for g in 0..v.n_photon() {
        cross += rho_de.mul(&v.v_0_in[g]).trace() * probe.d[g].conj();
        cross -= rho_de.mul(&v.v_0_in[g].dagger()).trace() * probe.d[g];
    }
    (1.0 - rho0_proj) + 2.0 * cross.re
}
