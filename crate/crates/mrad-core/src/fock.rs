//! Exact finite-mode Fock-space oracle.
//!
//! Exponential-cost reference implementation of ladder operators, measurement
//! projectors, chain probabilities, and operator traces on small mode sets.
//! Everything downstream that has a closed form is validated against the
//! matrices built here.
//!
//! The projector `Π̃_D` (the normal-ordered exponential `:exp(-â†Dâ):`) is
//! realized spectrally: it is the orthogonal projector onto the kernel of the
//! mode-number operator `â†Dâ` of the measured subspace. `Π^{(N)}_D` is the
//! spectral projector onto eigenvalues `≥ N` of the same operator. On
//! truncated bosonic spaces the number operator built from truncated ladders
//! equals the truncation of the exact one, so the projector algebra stays
//! exact; only identities that rely on the canonical commutator near the
//! cutoff sector are approximate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::linalg::{eigh, spectral_projector, CMat};
use crate::{DIMENSION_CAP, EXACT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Fermionic,
    /// Bosonic with a per-mode occupation cutoff.
    Bosonic { cutoff: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FockError {
    DimensionOverflow { dim: usize, cap: usize },
    NotAProjector { defect: f64 },
    NotNormalized { trace: f64 },
    NotUnitary { defect: f64 },
    NotPositive { min_eigenvalue: f64 },
    ShapeMismatch { detail: String },
}

impl core::fmt::Display for FockError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FockError::DimensionOverflow { dim, cap } => {
                write!(f, "Fock dimension {dim} exceeds cap {cap}")
            }
            FockError::NotAProjector { defect } => {
                write!(f, "matrix is not a projector (defect {defect:.3e})")
            }
            FockError::NotNormalized { trace } => {
                write!(f, "density operator trace is {trace:.6}, expected 1")
            }
            FockError::NotUnitary { defect } => {
                write!(f, "matrix is not unitary (defect {defect:.3e})")
            }
            FockError::NotPositive { min_eigenvalue } => {
                write!(f, "operator has negative eigenvalue {min_eigenvalue:.3e}")
            }
            FockError::ShapeMismatch { detail } => write!(f, "shape mismatch: {detail}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_modes: usize,
    pub statistics: Statistics,
}

impl FockSpace {
    pub fn fermionic(n_modes: usize) -> Result<Self, FockError> {
        let s = Self {
            n_modes,
            statistics: Statistics::Fermionic,
        };
        s.dimension().map(|_| s)
    }

    pub fn bosonic(n_modes: usize, cutoff: usize) -> Result<Self, FockError> {
        assert!(cutoff >= 1, "bosonic cutoff must be at least 1");
        let s = Self {
            n_modes,
            statistics: Statistics::Bosonic { cutoff },
        };
        s.dimension().map(|_| s)
    }

    /// Total Hilbert-space dimension, checked against [`DIMENSION_CAP`].
    pub fn dimension(&self) -> Result<usize, FockError> {
        let per_mode = match self.statistics {
            Statistics::Fermionic => 2usize,
            Statistics::Bosonic { cutoff } => cutoff + 1,
        };
        let mut dim: usize = 1;
        for _ in 0..self.n_modes {
            dim = dim.checked_mul(per_mode).unwrap_or(usize::MAX);
            if dim > DIMENSION_CAP {
                return Err(FockError::DimensionOverflow {
                    dim,
                    cap: DIMENSION_CAP,
                });
            }
        }
        Ok(dim)
    }

    fn per_mode(&self) -> usize {
        match self.statistics {
            Statistics::Fermionic => 2,
            Statistics::Bosonic { cutoff } => cutoff + 1,
        }
    }

    /// Occupation of `mode` in the basis state with the given index.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        let p = self.per_mode();
        (index / p.pow(mode as u32)) % p
    }

    /// Total particle number of a basis state.
    pub fn total_occupation(&self, index: usize) -> usize {
        (0..self.n_modes).map(|m| self.occupation(index, m)).sum()
    }

    /// Basis index for the given occupations (mode 0 least significant).
    pub fn index_of(&self, occupations: &[usize]) -> usize {
        assert_eq!(occupations.len(), self.n_modes);
        let p = self.per_mode();
        occupations
            .iter()
            .rev()
            .fold(0usize, |acc, &n| acc * p + n)
    }

    /// Annihilation matrix for one mode. Fermions carry the Jordan-Wigner
    /// sign `(-1)^{Σ_{j<mode} n_j}`.
    pub fn annihilator(&self, mode: usize) -> Result<CMat, FockError> {
        assert!(mode < self.n_modes);
        let dim = self.dimension()?;
        let p = self.per_mode();
        let stride = p.pow(mode as u32);
        let mut a = CMat::zeros(dim, dim);
        for idx in 0..dim {
            let n = self.occupation(idx, mode);
            if n == 0 {
                continue;
            }
            let target = idx - stride;
            let amp = match self.statistics {
                Statistics::Fermionic => {
                    let mut sign = 1.0;
                    for j in 0..mode {
                        if self.occupation(idx, j) == 1 {
                            sign = -sign;
                        }
                    }
                    sign
                }
                Statistics::Bosonic { .. } => (n as f64).sqrt(),
            };
            a[(target, idx)] = Complex64::new(amp, 0.0);
        }
        Ok(a)
    }

    pub fn creator(&self, mode: usize) -> Result<CMat, FockError> {
        Ok(self.annihilator(mode)?.dagger())
    }

    /// All annihilation matrices, indexed by mode.
    pub fn ladder_matrices(&self) -> Result<Vec<CMat>, FockError> {
        (0..self.n_modes).map(|m| self.annihilator(m)).collect()
    }

    /// Vacuum state vector.
    pub fn vacuum(&self) -> Result<Vec<Complex64>, FockError> {
        let dim = self.dimension()?;
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[0] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Mode-number operator `â† D â` of the subspace selected by `D`.
    pub fn number_operator(&self, d: &OneParticleProjector) -> Result<CMat, FockError> {
        self.weighted_number_operator(d.matrix())
    }

    /// `Σ_{αβ} W_{αβ} â†_α â_β` for an arbitrary one-particle matrix `W`.
    pub fn weighted_number_operator(&self, w: &CMat) -> Result<CMat, FockError> {
        if w.rows() != self.n_modes || w.cols() != self.n_modes {
            return Err(FockError::ShapeMismatch {
                detail: format!(
                    "one-particle matrix is {}x{}, space has {} modes",
                    w.rows(),
                    w.cols(),
                    self.n_modes
                ),
            });
        }
        let dim = self.dimension()?;
        let ladders = self.ladder_matrices()?;
        let mut n = CMat::zeros(dim, dim);
        for alpha in 0..self.n_modes {
            for beta in 0..self.n_modes {
                let wab = w[(alpha, beta)];
                if wab.norm_sqr() == 0.0 {
                    continue;
                }
                n = n.add(&ladders[alpha].dagger().mul(&ladders[beta]).scale(wab));
            }
        }
        Ok(n)
    }

    /// Normalized multimode coherent state with amplitude vector `d`,
    /// together with the truncated tail norm (amplitude lost to the cutoff).
    pub fn coherent_state(&self, d: &[Complex64]) -> Result<(Vec<Complex64>, f64), FockError> {
        let cutoff = match self.statistics {
            Statistics::Bosonic { cutoff } => cutoff,
            Statistics::Fermionic => {
                return Err(FockError::ShapeMismatch {
                    detail: "coherent states require a bosonic space".into(),
                })
            }
        };
        if d.len() != self.n_modes {
            return Err(FockError::ShapeMismatch {
                detail: "coherent amplitude length != n_modes".into(),
            });
        }
        let dim = self.dimension()?;
        let mut v = vec![Complex64::new(1.0, 0.0); dim];
        for idx in 0..dim {
            let mut amp = Complex64::new(1.0, 0.0);
            for mode in 0..self.n_modes {
                let n = self.occupation(idx, mode);
                let mut fact = 1.0;
                for k in 1..=n {
                    fact *= k as f64;
                }
                let mut p = Complex64::new(1.0, 0.0);
                for _ in 0..n {
                    p *= d[mode];
                }
                amp *= p / fact.sqrt();
            }
            v[idx] = amp;
        }
        let norm2: f64 = d.iter().map(|z| z.norm_sqr()).sum();
        let gauss = (-0.5 * norm2).exp();
        for x in v.iter_mut() {
            *x *= gauss;
        }
        let kept: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tail = (1.0 - kept).max(0.0);
        // renormalize on the truncated space so densities have unit trace
        let scale = 1.0 / kept.sqrt();
        for x in v.iter_mut() {
            *x *= scale;
        }
        let _ = cutoff;
        Ok((v, tail))
    }
}

/// Projector in the one-particle Hilbert space: `D = D†`, `D² = D`.
#[derive(Debug, Clone)]
pub struct OneParticleProjector {
    mat: CMat,
}

impl OneParticleProjector {
    pub fn new(mat: CMat) -> Result<Self, FockError> {
        if !mat.is_square() {
            return Err(FockError::ShapeMismatch {
                detail: "projector must be square".into(),
            });
        }
        let herm = mat.max_abs_diff(&mat.dagger());
        let idem = mat.mul(&mat).max_abs_diff(&mat);
        let defect = herm.max(idem);
        if defect > EXACT_TOL {
            return Err(FockError::NotAProjector { defect });
        }
        Ok(Self { mat })
    }

    /// Zero projector on `n` modes (selects nothing).
    pub fn zero(n: usize) -> Self {
        Self {
            mat: CMat::zeros(n, n),
        }
    }

    /// Identity projector on `n` modes (selects everything).
    pub fn full(n: usize) -> Self {
        Self {
            mat: CMat::identity(n),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// The complement `D̃ = 1 - D`.
    pub fn complement(&self) -> Self {
        Self {
            mat: CMat::identity(self.mat.rows()).sub(&self.mat),
        }
    }

    pub fn rank(&self) -> usize {
        self.mat.trace().re.round() as usize
    }
}

/// `Π̃_D`: projector onto the Fock states containing no particle in the
/// subspace selected by `D`. Maps the vacuum to itself.
pub fn projector_pi_tilde(
    space: &FockSpace,
    d: &OneParticleProjector,
) -> Result<CMat, FockError> {
    let n_d = space.number_operator(d)?;
    Ok(spectral_projector(&n_d, |ev| ev < 0.5))
}

/// `Π_D = 1 - Π̃_D`: at least one particle in the measured subspace.
pub fn projector_pi(space: &FockSpace, d: &OneParticleProjector) -> Result<CMat, FockError> {
    let dim = space.dimension()?;
    Ok(CMat::identity(dim).sub(&projector_pi_tilde(space, d)?))
}

/// `Π^{(N)}_D`: at least `n` particles in the measured subspace. For
/// fermions with `n > rank(D)` this is the zero operator (Pauli exclusion).
pub fn projector_pi_n(
    space: &FockSpace,
    d: &OneParticleProjector,
    n: usize,
) -> Result<CMat, FockError> {
    assert!(n >= 1, "particle count must be at least 1");
    let n_d = space.number_operator(d)?;
    let threshold = n as f64 - 0.5;
    Ok(spectral_projector(&n_d, |ev| ev > threshold))
}

fn check_density(r: &CMat) -> Result<(), FockError> {
    let tr = r.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(FockError::NotNormalized { trace: tr.re });
    }
    if !r.is_hermitian(1e-9) {
        return Err(FockError::ShapeMismatch {
            detail: "density operator is not Hermitian".into(),
        });
    }
    let (evs, _) = eigh(r);
    if evs[0] < -1e-9 {
        return Err(FockError::NotPositive {
            min_eigenvalue: evs[0],
        });
    }
    Ok(())
}

/// Probability of a time-ordered chain of measurements:
/// `Sp(Π_M U_M ⋯ Π_1 U_1 R U_1† Π_1 ⋯ U_M† Π_M)`. Each step is an evolution
/// followed by a projective measurement.
pub fn chain_probability(r: &CMat, steps: &[(CMat, CMat)]) -> Result<f64, FockError> {
    check_density(r)?;
    let dim = r.rows();
    let mut state = r.clone();
    for (u, proj) in steps {
        if u.rows() != dim || proj.rows() != dim {
            return Err(FockError::ShapeMismatch {
                detail: "chain step dimension differs from density operator".into(),
            });
        }
        let udef = u.dagger().mul(u).max_abs_diff(&CMat::identity(dim));
        if udef > 1e-9 {
            return Err(FockError::NotUnitary { defect: udef });
        }
        let pdef = proj
            .mul(proj)
            .max_abs_diff(proj)
            .max(proj.max_abs_diff(&proj.dagger()));
        if pdef > 1e-9 {
            return Err(FockError::NotAProjector { defect: pdef });
        }
        let evolved = u.mul(&state).mul(&u.dagger());
        state = proj.mul(&evolved).mul(proj);
    }
    Ok(state.trace().re)
}

/// Exact trace of `R · ops[0] · ops[1] ⋯`.
pub fn trace_expectation(r: &CMat, ops: &[&CMat]) -> Result<Complex64, FockError> {
    let dim = r.rows();
    let mut acc = r.clone();
    for op in ops {
        if op.rows() != dim || op.cols() != dim {
            return Err(FockError::ShapeMismatch {
                detail: "operator dimension differs from density operator".into(),
            });
        }
        acc = acc.mul(op);
    }
    Ok(acc.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_fermion_mode_matrix() {
        let space = FockSpace::fermionic(1).unwrap();
        let a = space.annihilator(0).unwrap();
        assert_eq!(a[(0, 1)], c(1.0, 0.0));
        assert_eq!(a[(0, 0)], c(0.0, 0.0));
        assert_eq!(a[(1, 0)], c(0.0, 0.0));
        assert_eq!(a[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn fermionic_anticommutators() {
        let space = FockSpace::fermionic(3).unwrap();
        let ladders = space.ladder_matrices().unwrap();
        let id = CMat::identity(8);
        for i in 0..3 {
            for j in 0..3 {
                let acom = ladders[i].anticommutator(&ladders[j].dagger());
                let expect = if i == j {
                    id.clone()
                } else {
                    CMat::zeros(8, 8)
                };
                assert!(acom.max_abs_diff(&expect) < 1e-14, "{{a_{i}, a†_{j}}}");
                let aa = ladders[i].anticommutator(&ladders[j]);
                assert!(aa.max_abs() < 1e-14, "{{a_{i}, a_{j}}} != 0");
            }
        }
    }

    #[test]
    fn bosonic_commutators_below_cutoff() {
        let space = FockSpace::bosonic(2, 4).unwrap();
        let a0 = space.annihilator(0).unwrap();
        let com = a0.commutator(&a0.dagger());
        // canonical on states with occupation < cutoff; defect confined to the top sector
        let dim = space.dimension().unwrap();
        for idx in 0..dim {
            if space.occupation(idx, 0) < 4 {
                assert!((com[(idx, idx)] - c(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pi_tilde_limits() {
        let space = FockSpace::fermionic(3).unwrap();
        let dim = space.dimension().unwrap();
        // D = 0 -> identity
        let p0 = projector_pi_tilde(&space, &OneParticleProjector::zero(3)).unwrap();
        assert!(p0.max_abs_diff(&CMat::identity(dim)) < 1e-12);
        // D = 1 -> |0><0|, so Pi_D = 1 - |0><0|
        let p1 = projector_pi_tilde(&space, &OneParticleProjector::full(3)).unwrap();
        let mut vac = CMat::zeros(dim, dim);
        vac[(0, 0)] = c(1.0, 0.0);
        assert!(p1.max_abs_diff(&vac) < 1e-12);
    }

    #[test]
    fn pi_tilde_commutation_block() {
        let mut rng = Rng::seed_from(11);
        let space = FockSpace::fermionic(3).unwrap();
        let ladders = space.ladder_matrices().unwrap();
        for _ in 0..10 {
            let rank = 1 + rng.usize_below(2);
            let d = OneParticleProjector::new(rng.projector(3, rank)).unwrap();
            let dt = d.complement();
            let pt = projector_pi_tilde(&space, &d).unwrap();
            let pi = projector_pi(&space, &d).unwrap();
            // vacuum fixed
            let vac = space.vacuum().unwrap();
            let pv = pt.mul_vec(&vac);
            assert!((pv[0] - c(1.0, 0.0)).norm() < 1e-12);
            // idempotent, hermitian
            assert!(pt.mul(&pt).max_abs_diff(&pt) < 1e-12);
            assert!(pt.is_hermitian(1e-12));
            for alpha in 0..3 {
                // (Da)_alpha built in mode space
                let mut da = CMat::zeros(8, 8);
                let mut dta = CMat::zeros(8, 8);
                for beta in 0..3 {
                    da = da.add(&ladders[beta].scale(d.matrix()[(alpha, beta)]));
                    dta = dta.add(&ladders[beta].scale(dt.matrix()[(alpha, beta)]));
                }
                assert!(da.mul(&pt).max_abs() < 1e-12, "(Da) Pi-tilde = 0");
                assert!(pt.mul(&da.dagger()).max_abs() < 1e-12, "Pi-tilde (a†D) = 0");
                assert!(dta.commutator(&pt).max_abs() < 1e-12, "[(D̃a), Pi-tilde] = 0");
                // [a, Pi_D] = Pi-tilde (Da)
                let lhs = ladders[alpha].commutator(&pi);
                let rhs = pt.mul(&da);
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
                // (Da) Pi_D = (Da)
                assert!(da.mul(&pi).max_abs_diff(&da) < 1e-12);
            }
        }
    }

    #[test]
    fn pi_n_selects_particle_count() {
        let space = FockSpace::fermionic(3).unwrap();
        let d = OneParticleProjector::full(3);
        for n in 1..=3 {
            let p = projector_pi_n(&space, &d, n).unwrap();
            let dim = space.dimension().unwrap();
            for idx in 0..dim {
                let expect = if space.total_occupation(idx) >= n {
                    1.0
                } else {
                    0.0
                };
                assert!((p[(idx, idx)].re - expect).abs() < 1e-12);
            }
        }
        // Pauli exclusion: more particles than the rank of D
        let d1 = OneParticleProjector::new(CMat::from_fn(3, 3, |r, cc| {
            if r == 0 && cc == 0 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
        .unwrap();
        let p2 = projector_pi_n(&space, &d1, 2).unwrap();
        assert!(p2.max_abs() < 1e-12);
    }

    #[test]
    fn pi_n_equals_pi_for_n1() {
        let mut rng = Rng::seed_from(5);
        let space = FockSpace::fermionic(3).unwrap();
        let d = OneParticleProjector::new(rng.projector(3, 2)).unwrap();
        let p1 = projector_pi_n(&space, &d, 1).unwrap();
        let pi = projector_pi(&space, &d).unwrap();
        assert!(p1.max_abs_diff(&pi) < 1e-12);
    }

    #[test]
    fn chain_probability_completeness() {
        let mut rng = Rng::seed_from(21);
        let dim = 8;
        let r = rng.density_matrix(dim);
        let id = CMat::identity(dim);
        let u = rng.unitary(dim);
        let p = chain_probability(&r, &[(u.clone(), id.clone()), (u, id)]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_probability_vacuum_stays() {
        let dim = 4;
        let mut r = CMat::zeros(dim, dim);
        r[(0, 0)] = c(1.0, 0.0);
        let mut proj = CMat::zeros(dim, dim);
        proj[(0, 0)] = c(1.0, 0.0);
        let p = chain_probability(&r, &[(CMat::identity(dim), proj)]).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chain_sum_rule_over_partition() {
        // summing over a complete family of final projectors returns the
        // shorter chain's probability
        let mut rng = Rng::seed_from(33);
        let space = FockSpace::fermionic(3).unwrap();
        let dim = 8;
        let r = rng.density_matrix(dim);
        let u1 = rng.unitary(dim);
        let u2 = rng.unitary(dim);
        let d1 = OneParticleProjector::new(rng.projector(3, 1)).unwrap();
        let pi1 = projector_pi(&space, &d1).unwrap();
        let short = chain_probability(&r, &[(u1.clone(), pi1.clone())]).unwrap();
        // complete partition of the second measurement from basis projectors
        let mut total = 0.0;
        for idx in 0..dim {
            let mut proj = CMat::zeros(dim, dim);
            proj[(idx, idx)] = c(1.0, 0.0);
            total += chain_probability(
                &r,
                &[(u1.clone(), pi1.clone()), (u2.clone(), proj)],
            )
            .unwrap();
        }
        assert!((total - short).abs() < 1e-12, "{total} vs {short}");
    }

    #[test]
    fn coherent_state_projector_trace() {
        // Sp(R_ph Pi_D) = 1 - exp(-d*Dd)
        let space = FockSpace::bosonic(2, 9).unwrap();
        let d_amp = [c(0.4, 0.1), c(-0.3, 0.2)];
        let (coh, tail) = space.coherent_state(&d_amp).unwrap();
        assert!(tail < 1e-10, "cutoff tail too large: {tail}");
        let r = CMat::outer(&coh, &coh);
        let mut rng = Rng::seed_from(9);
        let d = OneParticleProjector::new(rng.projector(2, 1)).unwrap();
        let pi = projector_pi(&space, &d).unwrap();
        let got = trace_expectation(&r, &[&pi]).unwrap().re;
        // d* D d
        let ddd: Complex64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| d_amp[i].conj() * d.matrix()[(i, j)] * d_amp[j])
            .sum();
        let expect = 1.0 - (-ddd.re).exp();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn dimension_cap_enforced() {
        assert!(matches!(
            FockSpace::fermionic(20),
            Err(FockError::DimensionOverflow { .. })
        ));
    }
}
