//! Randomized verification suites: every analytic identity used on the
//! production paths cross-checked against the exact Fock-space oracle.
//!
//! Three suites:
//!  1. projector algebra (idempotence, self-adjointness, the commutation
//!     block, particle-count selection, orthogonal-family commutation,
//!     coherent-state matrix elements, the Wick determinant identity);
//!  2. trace identities (reduced and projected density matrices, photon
//!     coherent-state traces, the four spontaneous traces and their
//!     `D_e → 0` limits);
//!  3. probability closure on a fermion×photon toy (first-order stimulated
//!     and second-order spontaneous chain probabilities against the oracle
//!     with the S operator truncated to matching order).


use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;
use num_complex::Complex64;

use crate::density::ManyBodyDensity;
use crate::fock::{
    projector_pi, projector_pi_n, projector_pi_tilde, trace_expectation,
    FockSpace, OneParticleProjector,
};
use crate::linalg::CMat;
use crate::rng::Rng;
use crate::spontaneous::probability_general;
use crate::stimulated::{
    chain_probability_stimulated, electron_probability_stimulated, CoherentProbe, VBlocks,
};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub max_err: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.max_err <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass())
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    max_err: f64,
    cases: usize,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max_err: 0.0,
            cases: 0,
        }
    }

    fn record(&mut self, err: f64) {
        self.max_err = self.max_err.max(err);
        self.cases += 1;
    }

    fn result(&self) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            max_err: self.max_err,
            tolerance: self.tolerance,
            cases: self.cases,
        }
    }
}

/// Suite 1: projector algebra on fermionic 2–4 mode spaces and bosonic
/// 2-mode (cutoff 3) spaces.
pub fn verify_projector_algebra(seed: u64, instances: usize) -> VerifyReport {
    let mut rng = Rng::seed_from(seed);
    let mut idem = Tally::new("projector idempotence and self-adjointness", 1e-12);
    let mut vacuum = Tally::new("projector fixes the vacuum", 1e-12);
    let mut comm = Tally::new("commutation-relation block", 1e-12);
    let mut count = Tally::new("particle-count selection of the N-projector", 1e-12);
    let mut family = Tally::new("orthogonal-family projectors commute", 1e-12);
    let mut matel = Tally::new("coherent-state matrix-element alternating sum", 1e-8);
    let mut wick = Tally::new("fully-mixed-state determinant identity", 1e-12);

    for inst in 0..instances {
        // cycle through the spaces
        let space = match inst % 4 {
            0 => FockSpace::fermionic(2).unwrap(),
            1 => FockSpace::fermionic(3).unwrap(),
            2 => FockSpace::fermionic(4).unwrap(),
            _ => FockSpace::bosonic(2, 3).unwrap(),
        };
        let n = space.n_modes;
        let dim = space.dimension().unwrap();
        let rank = 1 + rng.usize_below(n);
        let d = OneParticleProjector::new(rng.projector(n, rank)).unwrap();
        let dt = d.complement();
        let pt = projector_pi_tilde(&space, &d).unwrap();
        let pi = projector_pi(&space, &d).unwrap();

        idem.record(pt.mul(&pt).max_abs_diff(&pt));
        idem.record(pt.max_abs_diff(&pt.dagger()));
        let vac = space.vacuum().unwrap();
        let pv = pt.mul_vec(&vac);
        vacuum.record(
            (pv[0] - Complex64::new(1.0, 0.0)).norm()
                + pv[1..].iter().map(|z| z.norm()).fold(0.0, f64::max),
        );

        // commutation block, one random mode combination per instance.
        // On truncated bosonic spaces the relations hold exactly only on
        // states whose total occupation fits the cutoff (the kernel of the
        // rotated number operator loses rearranged occupations otherwise),
        // so the residuals are restricted to that sector.
        let ladders = space.ladder_matrices().unwrap();
        let alpha = rng.usize_below(n);
        let mut da = CMat::zeros(dim, dim);
        let mut dta = CMat::zeros(dim, dim);
        for beta in 0..n {
            da = da.add(&ladders[beta].scale(d.matrix()[(alpha, beta)]));
            dta = dta.add(&ladders[beta].scale(dt.matrix()[(alpha, beta)]));
        }
        let sector = match space.statistics {
            crate::fock::Statistics::Fermionic => CMat::identity(dim),
            crate::fock::Statistics::Bosonic { cutoff } => {
                let mut q = CMat::zeros(dim, dim);
                for idx in 0..dim {
                    if space.total_occupation(idx) + 1 <= cutoff {
                        q[(idx, idx)] = Complex64::new(1.0, 0.0);
                    }
                }
                q
            }
        };
        let resid = |m: CMat| m.mul(&sector).max_abs();
        comm.record(resid(da.mul(&pt)));
        comm.record(resid(pt.mul(&da.dagger())));
        comm.record(resid(dta.commutator(&pt)));
        comm.record(resid(ladders[alpha].commutator(&pi).sub(&pt.mul(&da))));
        comm.record(resid(
            pi.commutator(&ladders[alpha].dagger())
                .sub(&da.dagger().mul(&pt)),
        ));
        comm.record(resid(da.mul(&pi).sub(&da)));
        comm.record(resid(pi.mul(&da.dagger()).sub(&da.dagger())));

        // Π^{(N)} selects the ≥N sector of the rotated number operator
        let max_n = match space.statistics {
            crate::fock::Statistics::Fermionic => rank,
            crate::fock::Statistics::Bosonic { cutoff } => cutoff * 2,
        };
        let n_sel = 1 + rng.usize_below(max_n.max(1));
        let pn = projector_pi_n(&space, &d, n_sel).unwrap();
        // check against the spectral count of â†Dâ and the n=1 coincidence
        let num = space.number_operator(&d).unwrap();
        let (evs, vecs) = crate::linalg::eigh(&num);
        let mut spectral = CMat::zeros(dim, dim);
        for (i, &ev) in evs.iter().enumerate() {
            if ev > n_sel as f64 - 0.5 {
                for r in 0..dim {
                    for c in 0..dim {
                        spectral[(r, c)] += vecs[(r, i)] * vecs[(c, i)].conj();
                    }
                }
            }
        }
        count.record(pn.max_abs_diff(&spectral));
        let p1 = projector_pi_n(&space, &d, 1).unwrap();
        count.record(p1.max_abs_diff(&pi));
        if let crate::fock::Statistics::Fermionic = space.statistics {
            if rank < n {
                let p_over = projector_pi_n(&space, &d, rank + 1).unwrap();
                count.record(p_over.max_abs());
            }
            // diagonal D: enumerated basis-state selection
            let mut ddiag = CMat::zeros(n, n);
            let keep: Vec<usize> = (0..n).filter(|_| rng.uniform() < 0.5).collect();
            for &m in &keep {
                ddiag[(m, m)] = Complex64::new(1.0, 0.0);
            }
            if !keep.is_empty() {
                let dd = OneParticleProjector::new(ddiag).unwrap();
                let nsel2 = 1 + rng.usize_below(keep.len());
                let pnd = projector_pi_n(&space, &dd, nsel2).unwrap();
                let mut worst = 0.0f64;
                for idx in 0..dim {
                    let occ: usize = keep.iter().map(|&m| space.occupation(idx, m)).sum();
                    let expect = if occ >= nsel2 { 1.0 } else { 0.0 };
                    worst = worst.max((pnd[(idx, idx)].re - expect).abs());
                }
                count.record(worst);
            }
        }

        // orthogonal family commutes: split the rotated D-modes in two
        if rank >= 2 {
            let (evs_d, vecs_d) = crate::linalg::eigh(d.matrix());
            let cols: Vec<usize> = (0..n).filter(|&i| evs_d[i] > 0.5).collect();
            let mut d1 = CMat::zeros(n, n);
            let mut d2 = CMat::zeros(n, n);
            for (j, &col) in cols.iter().enumerate() {
                let target = if j % 2 == 0 { &mut d1 } else { &mut d2 };
                for r in 0..n {
                    for c in 0..n {
                        *(&mut target[(r, c)]) +=
                            vecs_d[(r, col)] * vecs_d[(c, col)].conj();
                    }
                }
            }
            let pi1 = projector_pi(&space, &OneParticleProjector::new(d1).unwrap()).unwrap();
            let pi2 = projector_pi(&space, &OneParticleProjector::new(d2).unwrap()).unwrap();
            family.record(pi1.commutator(&pi2).max_abs());
        }

        // coherent-state matrix elements of projector products (bosonic)
        if let crate::fock::Statistics::Bosonic { .. } = space.statistics {
            let big = FockSpace::bosonic(2, 8).unwrap();
            let m_chain = 1 + rng.usize_below(3);
            let ds: Vec<CMat> = (0..m_chain)
                .map(|_| {
                    let rank = 1 + rng.usize_below(2);
                    rng.projector(2, rank)
                })
                .collect();
            let mut prod = CMat::identity(big.dimension().unwrap());
            for dm in &ds {
                prod = prod.mul(
                    &projector_pi(&big, &OneParticleProjector::new(dm.clone()).unwrap())
                        .unwrap(),
                );
            }
            let a_amp = [rng.complex_normal() * 0.2, rng.complex_normal() * 0.2];
            let abar = [rng.complex_normal() * 0.2, rng.complex_normal() * 0.2];
            let lhs = bargmann_matrix_element(&big, &prod, &abar, &a_amp);
            let rhs = alternating_sum(&ds, &abar, &a_amp);
            matel.record((lhs - rhs).norm());
        }

        // Wick/determinant identity on the fully mixed fermionic state
        if let crate::fock::Statistics::Fermionic = space.statistics {
            let n_ops = 1 + rng.usize_below(n.min(4));
            let kets: Vec<usize> = (0..n_ops).map(|_| rng.usize_below(n)).collect();
            let bras: Vec<usize> = (0..n_ops).map(|_| rng.usize_below(n)).collect();
            let mixed = CMat::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
            // Sp(R a†_{k1}…a†_{kN} a_{bN}…a_{b1})
            let mut ops: Vec<&CMat> = Vec::new();
            let creators: Vec<CMat> = kets.iter().map(|&k| ladders[k].dagger()).collect();
            for cmat in &creators {
                ops.push(cmat);
            }
            let annis: Vec<CMat> = bras.iter().rev().map(|&b| ladders[b].clone()).collect();
            for amat in &annis {
                ops.push(amat);
            }
            let got = trace_expectation(&mixed, &ops).unwrap();
            // det of the δ-matrix /2 per contraction
            let mut detm = CMat::zeros(n_ops, n_ops);
            for i in 0..n_ops {
                for j in 0..n_ops {
                    detm[(i, j)] = if kets[i] == bras[j] {
                        Complex64::new(0.5, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
            }
            wick.record((got - det_small(&detm)).norm());
        }
    }

    VerifyReport {
        seed,
        checks: alloc::vec![
            idem.result(),
            vacuum.result(),
            comm.result(),
            count.result(),
            family.result(),
            matel.result(),
            wick.result(),
        ],
    }
}

fn det_small(m: &CMat) -> Complex64 {
    // Laplace expansion; matrices here are at most 4×4
    let n = m.rows();
    if n == 1 {
        return m[(0, 0)];
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for col in 0..n {
        let mut sub = CMat::zeros(n - 1, n - 1);
        for r in 1..n {
            let mut cc = 0;
            for c in 0..n {
                if c == col {
                    continue;
                }
                sub[(r - 1, cc)] = m[(r, c)];
                cc += 1;
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        acc += m[(0, col)] * det_small(&sub) * sign;
    }
    acc
}

/// Unnormalized Bargmann matrix element `⟨ā|X|a⟩` on a truncated bosonic
/// space: coherent vectors with components `∏ aᵢ^{nᵢ}/√(nᵢ!)`, no Gaussian
/// factor, bra labels NOT conjugated.
fn bargmann_matrix_element(
    space: &FockSpace,
    x: &CMat,
    abar: &[Complex64],
    a: &[Complex64],
) -> Complex64 {
    let dim = space.dimension().unwrap();
    let comp = |label: &[Complex64], idx: usize| -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for mode in 0..space.n_modes {
            let occ = space.occupation(idx, mode);
            let mut fact = 1.0;
            for k in 1..=occ {
                fact *= k as f64;
            }
            let mut p = Complex64::new(1.0, 0.0);
            for _ in 0..occ {
                p *= label[mode];
            }
            v *= p / fact.sqrt();
        }
        v
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        let left = comp(abar, r);
        for c in 0..dim {
            acc += left * x[(r, c)] * comp(a, c);
        }
    }
    acc
}

/// `Σ_{k=0}^{M} Σ_{σ∈S^k_M} (-1)^k exp(ā·D̃_{σ(1)}⋯D̃_{σ(k)}·a)`.
fn alternating_sum(ds: &[CMat], abar: &[Complex64], a: &[Complex64]) -> Complex64 {
    let m = ds.len();
    let n = ds[0].rows();
    let dts: Vec<CMat> = ds
        .iter()
        .map(|d| CMat::identity(n).sub(d))
        .collect();
    let bilinear = |mat: &CMat| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += abar[i] * mat[(i, j)] * a[j];
            }
        }
        acc
    };
    let mut total = Complex64::new(0.0, 0.0);
    // ordered k-subsets: indices increasing, preserving the operator order
    fn rec(
        dts: &[CMat],
        start: usize,
        prod: &CMat,
        k: usize,
        total: &mut Complex64,
        bilinear: &dyn Fn(&CMat) -> Complex64,
    ) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *total += bilinear(prod).exp() * sign;
        for i in start..dts.len() {
            let next = prod.mul(&dts[i]);
            rec(dts, i + 1, &next, k + 1, total, bilinear);
        }
    }
    rec(&dts, 0, &CMat::identity(n), 0, &mut total, &bilinear);
    let _ = m;
    total
}

/// Random many-body density with particle-number coherences on `n_modes`.
fn random_density(rng: &mut Rng, n_modes: usize, max_particles: usize) -> ManyBodyDensity {
    let mut parts = Vec::new();
    let n_pure = 2 + rng.usize_below(2);
    let mut weights = Vec::new();
    for _ in 0..n_pure {
        weights.push(rng.uniform() + 0.1);
    }
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    for wi in weights {
        let mut amps: Vec<(Vec<u8>, Complex64)> = Vec::new();
        let n_terms = 1 + rng.usize_below(3);
        for _ in 0..n_terms {
            let npart = rng.usize_below(max_particles + 1);
            let mut tuple: Vec<u8> = Vec::new();
            let mut avail: Vec<u8> = (0..n_modes as u8).collect();
            for _ in 0..npart {
                let pick = rng.usize_below(avail.len());
                tuple.push(avail.remove(pick));
            }
            amps.push((tuple, rng.complex_normal()));
        }
        parts.push((wi, ManyBodyDensity::pure_state(n_modes, &amps)));
    }
    ManyBodyDensity::mixture(&parts)
}

/// Suite 2: trace identities against the oracle.
pub fn verify_trace_identities(seed: u64, instances: usize) -> VerifyReport {
    let mut rng = Rng::seed_from(seed);
    let mut reduced = Tally::new("reduced density matrices vs oracle", 1e-10);
    let mut projected = Tally::new("projected density matrices vs oracle", 1e-10);
    let mut photon = Tally::new("photon coherent-state traces vs closed forms", 1e-10);
    let mut spont = Tally::new("spontaneous traces vs oracle", 1e-10);
    let mut spont_limit = Tally::new("spontaneous-trace D_e → 0 limits", 5e-2);

    for inst in 0..instances {
        let n_modes = 3 + inst % 2;
        let space = FockSpace::fermionic(n_modes).unwrap();
        let rho = random_density(&mut rng, n_modes, n_modes.min(3));
        let r = rho.to_fock_matrix(&space).unwrap();
        let norm = rho.normalization();
        let r = r.scale(Complex64::new(1.0 / norm, 0.0));
        let rho = {
            // renormalize the table the same way
            let mut parts = Vec::new();
            parts.push((1.0 / norm, rho));
            ManyBodyDensity::mixture(&parts)
        };
        let ladders = space.ladder_matrices().unwrap();
        let rank = 1 + rng.usize_below(n_modes - 1);
        let d = OneParticleProjector::new(rng.projector(n_modes, rank)).unwrap();
        let dt = d.complement();
        let pt = projector_pi_tilde(&space, &d).unwrap();

        // reduced: ρ^(1), ρ^(2)
        let r1 = rho.reduced(1).as_matrix();
        let r2 = rho.reduced(2);
        for a in 0..n_modes {
            for ab in 0..n_modes {
                let got = trace_expectation(&r, &[&ladders[ab].dagger(), &ladders[a]]).unwrap();
                reduced.record((got - r1[(a, ab)]).norm());
            }
        }
        let a = rng.usize_below(n_modes);
        let b = rng.usize_below(n_modes);
        let ab = rng.usize_below(n_modes);
        let bb = rng.usize_below(n_modes);
        let got2 = trace_expectation(
            &r,
            &[
                &ladders[ab].dagger(),
                &ladders[bb].dagger(),
                &ladders[a],
                &ladders[b],
            ],
        )
        .unwrap();
        reduced.record((got2 - r2.rho2(a, b, ab, bb)).norm());

        // projected: ρ^(0)_{D̃}, ρ^(1)_{D̃}, ρ^(2)_{D̃}
        let p0 = rho.projected(0, dt.matrix()).scalar();
        projected.record((p0 - trace_expectation(&r, &[&pt]).unwrap()).norm());
        let p1 = rho.projected(1, dt.matrix()).as_matrix();
        for aa in 0..n_modes {
            for aab in 0..n_modes {
                let got = trace_expectation(
                    &r,
                    &[&ladders[aab].dagger(), &pt, &ladders[aa]],
                )
                .unwrap();
                projected.record((got - p1[(aa, aab)]).norm());
            }
        }
        let p2 = rho.projected(2, dt.matrix());
        let got2d = trace_expectation(
            &r,
            &[
                &ladders[ab].dagger(),
                &ladders[bb].dagger(),
                &pt,
                &ladders[a],
                &ladders[b],
            ],
        )
        .unwrap();
        projected.record((got2d - p2.rho2(a, b, ab, bb)).norm());

        // the spontaneous traces and their limits
        let bundle = rho.spontaneous_traces(d.matrix());
        let pi = projector_pi(&space, &d).unwrap();
        let aa_op = ladders[ab].dagger().mul(&ladders[a]);
        let bb_op = ladders[bb].dagger().mul(&ladders[b]);
        let o1 = trace_expectation(&r, &[&aa_op, &pi, &bb_op, &pi]).unwrap();
        let o2 = trace_expectation(&r, &[&pi, &aa_op, &pi, &bb_op]).unwrap();
        let o3 = trace_expectation(&r, &[&aa_op, &pi, &bb_op]).unwrap();
        let o4 = trace_expectation(&r, &[&pi, &aa_op, &bb_op, &pi]).unwrap();
        spont.record((o1 - bundle.aa_pi_bb_pi.rho2(a, b, ab, bb)).norm());
        spont.record((o2 - bundle.pi_aa_pi_bb.rho2(a, b, ab, bb)).norm());
        spont.record((o3 - bundle.aa_pi_bb.rho2(a, b, ab, bb)).norm());
        spont.record((o4 - bundle.pi_aa_bb_pi.rho2(a, b, ab, bb)).norm());

        // limits: exact(εD) = ε·limit(D) + O(ε²), so the residual must
        // shrink quadratically between two ε values
        if inst % 10 == 0 {
            let dmat = d.matrix().clone();
            let limit = rho.spontaneous_traces_de_limit(&dmat);
            let residual = |eps: f64| -> f64 {
                let exact = rho.spontaneous_traces(&dmat.scale(Complex64::new(eps, 0.0)));
                exact
                    .aa_pi_bb_pi
                    .max_abs_diff(&limit.aa_pi_bb_pi.scale(eps))
                    .max(exact.pi_aa_pi_bb.max_abs_diff(&limit.pi_aa_pi_bb.scale(eps)))
                    .max(exact.aa_pi_bb.max_abs_diff(&limit.aa_pi_bb.scale(eps)))
                    .max(exact.pi_aa_bb_pi.max_abs_diff(&limit.pi_aa_bb_pi.scale(eps)))
            };
            let d1 = residual(1e-2);
            let d2 = residual(1e-3);
            if d1 > 1e-13 {
                // perfect O(ε²) scaling gives 0.01
                spont_limit.record(d2 / d1);
            }
        }

        // photon coherent traces
        if inst % 4 == 0 {
            let ph = FockSpace::bosonic(2, 9).unwrap();
            let d_amp: Vec<Complex64> = (0..2)
                .map(|_| {
                    let z = rng.complex_normal();
                    z / (1.0 + z.norm()) * 0.3
                })
                .collect();
            let (coh, _tail) = ph.coherent_state(&d_amp).unwrap();
            let rph = CMat::outer(&coh, &coh);
            let dph = OneParticleProjector::new(rng.projector(2, 1)).unwrap();
            let piph = projector_pi(&ph, &dph).unwrap();
            let c_ladders = ph.ladder_matrices().unwrap();
            // d*Dd and the three closed forms
            let dpd: Complex64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| d_amp[i].conj() * dph.matrix()[(i, j)] * d_amp[j])
                .sum();
            let absorb = 1.0 - (-dpd.re).exp();
            photon.record(
                (trace_expectation(&rph, &[&piph]).unwrap().re - absorb).abs(),
            );
            for g in 0..2 {
                let got_cr = trace_expectation(&rph, &[&piph, &c_ladders[g].dagger()])
                    .unwrap();
                let mut d_proj = Complex64::new(0.0, 0.0);
                let mut d_tilde = Complex64::new(0.0, 0.0);
                for i in 0..2 {
                    d_proj += d_amp[i].conj() * dph.matrix()[(i, g)];
                    let dtm = if i == g {
                        Complex64::new(1.0, 0.0) - dph.matrix()[(i, g)]
                    } else {
                        -dph.matrix()[(i, g)]
                    };
                    d_tilde += d_amp[i].conj() * dtm;
                }
                photon.record((got_cr - (d_proj + d_tilde * absorb)).norm());
                let got_an = trace_expectation(&rph, &[&piph, &c_ladders[g]]).unwrap();
                photon.record((got_an - d_amp[g] * absorb).norm());
            }
        }
    }

    VerifyReport {
        seed,
        checks: alloc::vec![
            reduced.result(),
            projected.result(),
            photon.result(),
            spont.result(),
            spont_limit.result(),
        ],
    }
}

/// Suite 3: first- and second-order probability closure on a
/// 3-fermion-mode × 2-photon-mode toy with an explicit interaction.
pub fn verify_probability_closure(seed: u64, draws: usize) -> VerifyReport {
    let mut rng = Rng::seed_from(seed);
    let mut stim = Tally::new("first-order stimulated chain vs oracle", 1e-10);
    let mut stim_el = Tally::new("electron-detection probability vs oracle", 1e-10);
    let mut spont = Tally::new("second-order spontaneous chain vs oracle", 1e-10);

    let n_f = 3;
    let fermion = FockSpace::fermionic(n_f).unwrap();
    let photon = FockSpace::bosonic(2, 7).unwrap();
    let dim_f = fermion.dimension().unwrap();
    let dim_p = photon.dimension().unwrap();
    let id_f = CMat::identity(dim_f);
    let id_p = CMat::identity(dim_p);
    let f_ladders = fermion.ladder_matrices().unwrap();
    let p_ladders = photon.ladder_matrices().unwrap();

    // â†_ᾱ â_α ⊗ 1 building blocks
    let build_v = |blocks: &[CMat]| -> CMat {
        let mut v = CMat::zeros(dim_f * dim_p, dim_f * dim_p);
        for (g, block) in blocks.iter().enumerate() {
            let mut fermi_part = CMat::zeros(dim_f, dim_f);
            for ab in 0..n_f {
                for a in 0..n_f {
                    let w = block[(ab, a)];
                    if w.norm_sqr() > 0.0 {
                        fermi_part =
                            fermi_part.add(&f_ladders[ab].dagger().mul(&f_ladders[a]).scale(w));
                    }
                }
            }
            v = v.add(&fermi_part.kron(&p_ladders[g].dagger()));
            v = v.sub(&fermi_part.dagger().kron(&p_ladders[g]));
        }
        v
    };

    for _ in 0..draws {
        // random state, measurement, probe, interaction
        let rho = random_density(&mut rng, n_f, 2);
        let norm = rho.normalization();
        let rho = ManyBodyDensity::mixture(&[(1.0 / norm, rho)]);
        let r_f = rho.to_fock_matrix(&fermion).unwrap();
        let de_rank = 1 + rng.usize_below(2);
        let de = OneParticleProjector::new(rng.projector(n_f, de_rank)).unwrap();
        let dt = de.complement();
        let d_amp: Vec<Complex64> = (0..2)
            .map(|_| {
                let z = rng.complex_normal();
                z / (1.0 + z.norm()) * 0.25
            })
            .collect();
        let d_ph_proj = rng.projector(2, 1);
        let scale = 0.5;
        let v0in: Vec<CMat> = (0..2)
            .map(|_| rng.gaussian_matrix(n_f, n_f).scale(Complex64::new(scale, 0.0)))
            .collect();
        let vout0: Vec<CMat> = (0..2)
            .map(|_| rng.gaussian_matrix(n_f, n_f).scale(Complex64::new(scale, 0.0)))
            .collect();
        let voutin: Vec<CMat> = v0in
            .iter()
            .zip(vout0.iter())
            .map(|(a, b)| a.add(b))
            .collect();
        let v = VBlocks {
            v_out_in: voutin,
            v_out_0: vout0.clone(),
            v_0_in: v0in.clone(),
        };
        assert!(v.check());

        // composite operators
        let (coh, _) = photon.coherent_state(&d_amp).unwrap();
        let r_ph = CMat::outer(&coh, &coh);
        let r_full = r_f.kron(&r_ph);
        let pi_de = projector_pi(&fermion, &de).unwrap().kron(&id_p);
        let pi_d_ph = id_f.kron(&projector_pi(&photon, &OneParticleProjector::new(d_ph_proj.clone()).unwrap()).unwrap());
        let v1 = build_v(&v0in);
        let v2 = build_v(&vout0);

        // oracle first-order chain: Sp(Π_D [ΠRΠ + V₂ΠRΠ + ΠV₁RΠ + ΠRV₁†Π + ΠRΠV₂†])
        let prp = pi_de.mul(&r_full).mul(&pi_de);
        let mut chain_op = prp.clone();
        chain_op = chain_op.add(&v2.mul(&prp));
        chain_op = chain_op.add(&pi_de.mul(&v1).mul(&r_full).mul(&pi_de));
        chain_op = chain_op.add(&pi_de.mul(&r_full).mul(&v1.dagger()).mul(&pi_de));
        chain_op = chain_op.add(&prp.mul(&v2.dagger()));
        let oracle_p = trace_expectation(&chain_op, &[&pi_d_ph]).unwrap().re;

        // analytic side
        let rho1 = rho.reduced(1).as_matrix();
        let rho1_proj = rho.projected(1, dt.matrix()).as_matrix();
        let rho0_proj = rho.projected(0, dt.matrix()).scalar().re;
        let probe = CoherentProbe::new(d_amp.clone(), d_ph_proj.clone()).unwrap();
        let analytic = chain_probability_stimulated(
            &rho1, &rho1_proj, rho0_proj, de.matrix(), &v, &probe,
        );
        stim.record((oracle_p - analytic).abs() / oracle_p.abs().max(1e-3));

        // electron-detection probability
        let oracle_el = {
            let mut op = pi_de.mul(&r_full);
            op = op.add(&pi_de.mul(&v1).mul(&r_full));
            op = op.add(&pi_de.mul(&r_full).mul(&v1.dagger()));
            op.trace().re
        };
        let analytic_el =
            electron_probability_stimulated(&rho1_proj, rho0_proj, de.matrix(), &v, &probe);
        stim_el.record((oracle_el - analytic_el).abs() / oracle_el.abs().max(1e-3));

        // second-order spontaneous chain with vacuum photons
        let vac = photon.vacuum().unwrap();
        let r_vac = CMat::outer(&vac, &vac);
        let r_sp = r_f.kron(&r_vac);
        let w = v2.mul(&pi_de).add(&pi_de.mul(&v1));
        let oracle_sp = trace_expectation(&r_sp, &[&w.dagger(), &pi_d_ph, &w])
            .unwrap()
            .re;
        let bundle = rho.spontaneous_traces(de.matrix());
        let analytic_sp = probability_general(&bundle, &v, &d_ph_proj, n_f).total();
        spont.record((oracle_sp - analytic_sp).abs() / oracle_sp.abs().max(1e-6));
    }

    VerifyReport {
        seed,
        checks: alloc::vec![stim.result(), stim_el.result(), spont.result()],
    }
}

/// Run all three suites with the shipped instance counts.
pub fn run_all(seed: u64) -> VerifyReport {
    let mut checks = Vec::new();
    checks.extend(verify_projector_algebra(seed, 500).checks);
    checks.extend(verify_trace_identities(seed.wrapping_add(1), 200).checks);
    checks.extend(verify_probability_closure(seed.wrapping_add(2), 50).checks);
    VerifyReport { seed, checks }
}

impl core::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}: {} (max err {:.3e}, tol {:.1e}, {} cases)",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.max_err,
            self.tolerance,
            self.cases
        )
    }
}
