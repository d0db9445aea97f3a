//! Many-body fermionic density matrices on a finite mode set.
//!
//! Coefficient tables `ρ_{α_N…α₁|ᾱ₁…ᾱ_M}` stored sparsely over sorted index
//! tuples, with the reduced `ρ^(M)`, projected `ρ^(M)_{D̃}`, and the trace
//! combinations needed by the spontaneous-radiation probability. These are
//! the closed-form contraction paths; every one of them is validated against
//! the exact Fock-space oracle in the test suite.

use alloc::collections::BTreeMap;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::fock::{FockError, FockSpace};
use crate::linalg::CMat;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityError {
    OrthogonalityViolation { overlap: f64, tolerance: f64 },
    NotNormalized { trace: f64 },
    BadShape { detail: String },
}

impl core::fmt::Display for DensityError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DensityError::OrthogonalityViolation { overlap, tolerance } => write!(
                f,
                "one-particle states overlap ({overlap:.3e} > tolerance {tolerance:.1e})"
            ),
            DensityError::NotNormalized { trace } => {
                write!(f, "density normalization is {trace:.6}, expected 1")
            }
            DensityError::BadShape { detail } => write!(f, "bad shape: {detail}"),
        }
    }
}

/// Frobenius-norm tolerance for the "orthogonal with good accuracy"
/// requirement on beam and pair constituents.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

type Key = (Vec<u8>, Vec<u8>);

/// Sparse many-body density operator over `n_modes` fermionic modes.
///
/// Sector `(N, M)` holds coefficients for sorted ket tuples `S` (N modes)
/// and bra tuples `B` (M modes); the Fock matrix element is
/// `⟨S|R|B⟩ = √(N!M!)·c[S,B]` with `|S⟩ = â†_{s₁}…â†_{s_N}|0⟩`, `s` ascending.
#[derive(Debug, Clone)]
pub struct ManyBodyDensity {
    n_modes: usize,
    sectors: BTreeMap<(usize, usize), BTreeMap<Key, Complex64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Parity of the permutation sorting `idx` ascending; `None` on repeats.
fn sort_parity(idx: &[u8]) -> Option<(Vec<u8>, f64)> {
    let mut v: Vec<u8> = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            match v[j].cmp(&v[i]) {
                core::cmp::Ordering::Less => {
                    v.swap(i, j);
                    sign = -sign;
                }
                core::cmp::Ordering::Equal => return None,
                core::cmp::Ordering::Greater => {}
            }
        }
    }
    Some((v, sign))
}

/// All ascending tuples of length `len` over `0..n_modes`.
fn sorted_tuples(n_modes: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..len as u8).collect();
    if len == 0 {
        out.push(Vec::new());
        return out;
    }
    if len > n_modes {
        return out;
    }
    loop {
        out.push(cur.clone());
        // next combination
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < (n_modes - len + i) as u8 {
                cur[i] += 1;
                for j in (i + 1)..len {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

impl ManyBodyDensity {
    pub fn new(n_modes: usize) -> Self {
        assert!(n_modes <= 12, "many-body tables are capped at 12 modes");
        Self {
            n_modes,
            sectors: BTreeMap::new(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_particles(&self) -> usize {
        self.sectors.keys().map(|&(n, _)| n).max().unwrap_or(0)
    }

    /// Insert a coefficient at sorted tuples (adds to any existing value).
    pub fn add_coefficient(&mut self, ket: &[u8], bra: &[u8], value: Complex64) {
        let (ks, ksign) = sort_parity(ket).expect("repeated ket index");
        let (bs, bsign) = sort_parity(bra).expect("repeated bra index");
        let entry = self
            .sectors
            .entry((ks.len(), bs.len()))
            .or_default()
            .entry((ks, bs))
            .or_insert(Complex64::new(0.0, 0.0));
        *entry += value * (ksign * bsign);
    }

    /// The antisymmetric coefficient `ρ` with the ket listed in creation
    /// order (`â†_{ket[0]}…â†_{ket[n-1]}|0⟩`) and the bra in ascending slot
    /// order. Zero on repeated indices.
    pub fn coefficient(&self, ket: &[u8], bra: &[u8]) -> Complex64 {
        let Some((ks, ksign)) = sort_parity(ket) else {
            return Complex64::new(0.0, 0.0);
        };
        let Some((bs, bsign)) = sort_parity(bra) else {
            return Complex64::new(0.0, 0.0);
        };
        self.sectors
            .get(&(ks.len(), bs.len()))
            .and_then(|m| m.get(&(ks, bs)))
            .map(|&c| c * (ksign * bsign))
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Pure state from amplitudes over sorted tuples: `|ψ⟩ = Σ c_S |S⟩`.
    /// Tuples of different lengths are allowed (particle-number
    /// coherences). Amplitudes are normalized internally.
    pub fn pure_state(n_modes: usize, amplitudes: &[(Vec<u8>, Complex64)]) -> Self {
        let mut canon: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (tuple, amp) in amplitudes {
            let (sorted, sign) = sort_parity(tuple).expect("repeated index in state tuple");
            *canon.entry(sorted).or_insert(Complex64::new(0.0, 0.0)) += amp * sign;
        }
        assert!(!canon.is_empty(), "empty state");
        let norm2: f64 = canon.values().map(|c| c.norm_sqr()).sum();
        let scale = 1.0 / norm2.sqrt();
        let mut rho = Self::new(n_modes);
        let entries: Vec<(Vec<u8>, Complex64)> = canon
            .into_iter()
            .map(|(k, v)| (k, v * scale))
            .collect();
        for (s, cs) in &entries {
            for (b, cb) in &entries {
                // ⟨S|R|B⟩ = c_S c_B* and the stored c = element/√(N!M!)
                let nf = (factorial(s.len()) * factorial(b.len())).sqrt();
                rho.sectors
                    .entry((s.len(), b.len()))
                    .or_default()
                    .insert((s.clone(), b.clone()), cs * cb.conj() / nf);
            }
        }
        rho
    }

    /// Statistical mixture. Weights must sum to 1.
    pub fn mixture(parts: &[(f64, ManyBodyDensity)]) -> Self {
        assert!(!parts.is_empty());
        let n_modes = parts[0].1.n_modes;
        let mut out = Self::new(n_modes);
        for (w, rho) in parts {
            assert_eq!(rho.n_modes, n_modes);
            for (&sector, table) in &rho.sectors {
                for (key, &val) in table {
                    let entry = out
                        .sectors
                        .entry(sector)
                        .or_default()
                        .entry(key.clone())
                        .or_insert(Complex64::new(0.0, 0.0));
                    *entry += val * *w;
                }
            }
        }
        out
    }

    /// Beam of `N` mutually orthogonal uncorrelated particles with
    /// one-particle density matrices `rhos` (each `n_modes × n_modes`,
    /// unit trace). Builds the antisymmetrized product state with
    /// normalization `k = 1/N!`.
    pub fn uncorrelated_beam(n_modes: usize, rhos: &[CMat]) -> Result<Self, DensityError> {
        let n = rhos.len();
        assert!(n >= 1);
        for r in rhos {
            if r.rows() != n_modes || r.cols() != n_modes {
                return Err(DensityError::BadShape {
                    detail: "one-particle matrix does not match the mode count".into(),
                });
            }
            let tr = r.trace().re;
            if (tr - 1.0).abs() > 1e-9 {
                return Err(DensityError::NotNormalized { trace: tr });
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let overlap = rhos[i].mul(&rhos[j]).frobenius();
                    if overlap > ORTHOGONALITY_TOL {
                        return Err(DensityError::OrthogonalityViolation {
                            overlap,
                            tolerance: ORTHOGONALITY_TOL,
                        });
                    }
                }
            }
        }
        // ρ_{α_N…α₁|ᾱ₁…ᾱ_N} = (1/N!) Σ_{σ,σ'} sgn(σ)sgn(σ') Π_i ρ^i_{α_{σ(i)} ᾱ_{σ'(i)}}
        let mut out = Self::new(n_modes);
        let perms = permutations(n);
        let kets = sorted_tuples(n_modes, n);
        let nf = factorial(n);
        for s in &kets {
            for b in &kets {
                let mut acc = Complex64::new(0.0, 0.0);
                for (sigma, sgn_s) in &perms {
                    for (sigma_p, sgn_p) in &perms {
                        let mut prod = Complex64::new(1.0, 0.0);
                        for i in 0..n {
                            // creation-order list for sorted S is S itself;
                            // the symbol's display order only affects a
                            // global sign convention that cancels between
                            // ket and bra blocks here
                            prod *= rhos[i][(
                                s[sigma[i]] as usize,
                                b[sigma_p[i]] as usize,
                            )];
                        }
                        acc += prod * (sgn_s * sgn_p);
                    }
                }
                if acc.norm() > 0.0 {
                    out.sectors
                        .entry((n, n))
                        .or_default()
                        .insert((s.clone(), b.clone()), acc / nf);
                }
            }
        }
        Ok(out)
    }

    /// Normalization `Σ_N ρ_{α_N…α₁|α₁…α_N} = Σ_N N!·Σ_S c[S,S]`.
    pub fn normalization(&self) -> f64 {
        let mut total = 0.0;
        for (&(n, m), table) in &self.sectors {
            if n != m {
                continue;
            }
            for ((s, b), c) in table {
                if s == b {
                    total += (c * factorial(n)).re;
                }
            }
        }
        total
    }

    /// Exact Fock-space matrix of this operator.
    pub fn to_fock_matrix(&self, space: &FockSpace) -> Result<CMat, FockError> {
        assert_eq!(space.n_modes, self.n_modes);
        let dim = space.dimension()?;
        let mut r = CMat::zeros(dim, dim);
        for (&(n, m), table) in &self.sectors {
            let scale = (factorial(n) * factorial(m)).sqrt();
            for ((s, b), &c) in table {
                let row = space.index_of(&occupations(self.n_modes, s));
                let col = space.index_of(&occupations(self.n_modes, b));
                r[(row, col)] += c * scale;
            }
        }
        Ok(r)
    }

    /// Reduced `M`-particle density matrix `ρ^(M)`.
    pub fn reduced(&self, m: usize) -> DensityTensor {
        self.projected(m, &CMat::identity(self.n_modes))
    }

    /// Projected `M`-particle density matrix `ρ^(M)_{D̃}`: the indices beyond
    /// `M` are contracted through `D̃` instead of traced.
    pub fn projected(&self, m: usize, d_tilde: &CMat) -> DensityTensor {
        assert_eq!(d_tilde.rows(), self.n_modes);
        let nm = self.n_modes;
        let mut out = DensityTensor::zeros(nm, m);
        let max_n = self.max_particles();
        let kets: Vec<Vec<u8>> = multi_indices(nm, m);
        for kset in &kets {
            for bset in &kets {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in m..=max_n {
                    if !self.sectors.contains_key(&(n, n)) {
                        continue;
                    }
                    let extra = n - m;
                    let weight = factorial(n) / factorial(n - m);
                    // sum over contracted pairs (c_i, c̄_i), i = m+1..n
                    let mut ket_full = kset.clone();
                    let mut bra_contracted = Vec::new();
                    acc += weight
                        * contract_extra(
                            self,
                            d_tilde,
                            &mut ket_full,
                            &mut bra_contracted,
                            bset,
                            extra,
                        );
                }
                out.set(kset, bset, acc);
            }
        }
        out
    }

    /// The four operator traces entering the spontaneous-radiation
    /// probability, as four-index tensors, plus their building blocks.
    pub fn spontaneous_traces(&self, de: &CMat) -> SpontaneousTraceBundle {
        let nm = self.n_modes;
        let dt = CMat::identity(nm).sub(de);
        let rho1 = self.reduced(1).as_matrix();
        let rho1d = self.projected(1, &dt).as_matrix();
        let rho2 = self.reduced(2);
        let rho2d = self.projected(2, &dt);

        let de_rho1d = de.mul(&rho1d);
        let rho1d_de = rho1d.mul(de);
        let de_rho1d_de = de.mul(&rho1d).mul(de);

        let idx = |a: usize, b: usize, ab: usize, bb: usize| (a, b, ab, bb);
        let mut t1 = FourIndex::zeros(nm);
        let mut t2 = FourIndex::zeros(nm);
        let mut t3 = FourIndex::zeros(nm);
        let mut t4 = FourIndex::zeros(nm);

        // π₂ ρ^(2)_{D̃} π₂ with π₂ = 1⊗1 - D̃⊗D̃ over pair indices
        let pi2_rho2d_pi2 = rho2d.sandwich_pairs(&dt);

        for a in 0..nm {
            for b in 0..nm {
                for ab in 0..nm {
                    for bb in 0..nm {
                        let (_, _, _, _) = idx(a, b, ab, bb);
                        let delta_abb = if a == bb { 1.0 } else { 0.0 };

                        // Sp(R a†_ᾱ a_α Π a†_β̄ a_β Π)
                        let mut v1 = (rho1[(b, ab)] - rho1d[(b, ab)]) * delta_abb
                            + de[(a, bb)] * de_rho1d[(b, ab)]
                            - rho2.rho2(a, b, ab, bb);
                        for a1 in 0..nm {
                            v1 += dt[(a, a1)] * rho2d.rho2(a1, b, ab, bb);
                            for b1 in 0..nm {
                                for bb1 in 0..nm {
                                    v1 -= dt[(a, a1)]
                                        * de[(b, b1)]
                                        * rho2d.rho2(a1, b1, ab, bb1)
                                        * de[(bb1, bb)];
                                }
                            }
                        }
                        t1.set(a, b, ab, bb, v1);

                        // Sp(R Π a†_ᾱ a_α Π a†_β̄ a_β)
                        let mut v2 = (rho1[(b, ab)] - rho1d[(b, ab)]) * delta_abb
                            + de[(a, bb)] * rho1d_de[(b, ab)]
                            - rho2.rho2(a, b, ab, bb);
                        for bb1 in 0..nm {
                            v2 += rho2d.rho2(a, b, ab, bb1) * dt[(bb1, bb)];
                            for a1 in 0..nm {
                                for ab1 in 0..nm {
                                    v2 -= de[(a, a1)]
                                        * rho2d.rho2(a1, b, ab1, bb1)
                                        * de[(ab1, ab)]
                                        * dt[(bb1, bb)];
                                }
                            }
                        }
                        t2.set(a, b, ab, bb, v2);

                        // Sp(R a†_ᾱ a_α Π a†_β̄ a_β)
                        let mut v3 = (rho1[(b, ab)] - rho1d[(b, ab)]) * delta_abb
                            + de[(a, bb)] * rho1d[(b, ab)]
                            - rho2.rho2(a, b, ab, bb);
                        for a1 in 0..nm {
                            for bb1 in 0..nm {
                                v3 += dt[(a, a1)] * rho2d.rho2(a1, b, ab, bb1) * dt[(bb1, bb)];
                            }
                        }
                        t3.set(a, b, ab, bb, v3);

                        // Sp(R Π a†_ᾱ a_α a†_β̄ a_β Π)
                        let v4 = (rho1[(b, ab)] - rho1d[(b, ab)] + de_rho1d_de[(b, ab)])
                            * delta_abb
                            - rho2.rho2(a, b, ab, bb)
                            + rho2d.rho2(a, b, ab, bb)
                            - pi2_rho2d_pi2.rho2(a, b, ab, bb);
                        t4.set(a, b, ab, bb, v4);
                    }
                }
            }
        }

        SpontaneousTraceBundle {
            aa_pi_bb_pi: t1,
            pi_aa_pi_bb: t2,
            aa_pi_bb: t3,
            pi_aa_bb_pi: t4,
        }
    }

    /// Leading `D_e → 0` asymptotics of the four spontaneous traces
    /// (linear in `D_e`).
    pub fn spontaneous_traces_de_limit(&self, de: &CMat) -> SpontaneousTraceBundle {
        let nm = self.n_modes;
        let rho1 = self.reduced(1).as_matrix();
        let rho2 = self.reduced(2);
        let rho3_de = self.reduced3_contracted(de);
        let mut t1 = FourIndex::zeros(nm);
        let mut t2 = FourIndex::zeros(nm);
        let mut t3 = FourIndex::zeros(nm);
        let mut t4 = FourIndex::zeros(nm);
        for a in 0..nm {
            for b in 0..nm {
                for ab in 0..nm {
                    for bb in 0..nm {
                        // δ_{αβ̄} ρ^(2)_{β₁β|ᾱᾱ₁}D^e_{ᾱ₁β₁}
                        let mut lead = Complex64::new(0.0, 0.0);
                        if a == bb {
                            for b1 in 0..nm {
                                for ab1 in 0..nm {
                                    lead += rho2.rho2(b1, b, ab, ab1) * de[(ab1, b1)];
                                }
                            }
                        }
                        let common = lead - rho3_de.rho2(a, b, ab, bb);
                        let mut de_rho2 = Complex64::new(0.0, 0.0);
                        for a1 in 0..nm {
                            de_rho2 += de[(a, a1)] * rho2.rho2(a1, b, ab, bb);
                        }
                        let mut rho2_de = Complex64::new(0.0, 0.0);
                        for bb1 in 0..nm {
                            rho2_de += rho2.rho2(a, b, ab, bb1) * de[(bb1, bb)];
                        }
                        t1.set(a, b, ab, bb, common - de_rho2);
                        t2.set(a, b, ab, bb, common - rho2_de);
                        t3.set(
                            a,
                            b,
                            ab,
                            bb,
                            common - de_rho2 - rho2_de
                                + de[(a, bb)] * rho1[(b, ab)],
                        );
                        t4.set(a, b, ab, bb, common);
                    }
                }
            }
        }
        SpontaneousTraceBundle {
            aa_pi_bb_pi: t1,
            pi_aa_pi_bb: t2,
            aa_pi_bb: t3,
            pi_aa_bb_pi: t4,
        }
    }

    /// `ρ^(3)_{γ₁αβ|ᾱβ̄γ̄₁} D^e_{γ̄₁γ₁}` as a four-index tensor in (α,β|ᾱ,β̄).
    pub fn reduced3_contracted(&self, de: &CMat) -> FourIndex {
        let nm = self.n_modes;
        let rho3 = self.reduced(3);
        let mut out = FourIndex::zeros(nm);
        for a in 0..nm {
            for b in 0..nm {
                for ab in 0..nm {
                    for bb in 0..nm {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for g in 0..nm {
                            for gb in 0..nm {
                                acc += rho3.rho3(g, a, b, ab, bb, gb) * de[(gb, g)];
                            }
                        }
                        out.set(a, b, ab, bb, acc);
                    }
                }
            }
        }
        out
    }
}

fn occupations(n_modes: usize, tuple: &[u8]) -> Vec<usize> {
    let mut occ = vec![0usize; n_modes];
    for &m in tuple {
        occ[m as usize] = 1;
    }
    occ
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    fn heap(k: usize, idx: &mut Vec<usize>, sign: &mut f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if k == 1 {
            out.push((idx.clone(), *sign));
            return;
        }
        for i in 0..k {
            heap(k - 1, idx, sign, out);
            if k % 2 == 0 {
                idx.swap(i, k - 1);
            } else {
                idx.swap(0, k - 1);
            }
            *sign = -*sign;
        }
    }
    let mut sign = 1.0;
    heap(n, &mut idx, &mut sign, &mut out);
    out
}

fn multi_indices(n_modes: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &out {
            for m in 0..n_modes as u8 {
                let mut p = prefix.clone();
                p.push(m);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Recursive sum over the `extra` contracted index pairs of the projected
/// density definition, with the bra display order `(c̄_N…c̄_{M+1}, ᾱ_M…ᾱ₁)`.
fn contract_extra(
    rho: &ManyBodyDensity,
    d_tilde: &CMat,
    ket_full: &mut Vec<u8>,
    bra_contracted: &mut Vec<u8>,
    bra_base: &[u8],
    extra: usize,
) -> Complex64 {
    if extra == 0 {
        // Coefficient symbol ρ_{α₁…α_M c_{M+1}…c_N | c̄_N…c̄_{M+1} ᾱ_M…ᾱ₁}.
        // `coefficient` takes the ket in creation order, which is the
        // reverse of the display list, and the bra as displayed.
        let ket: Vec<u8> = ket_full.iter().rev().copied().collect();
        let mut bra: Vec<u8> = bra_contracted.iter().rev().copied().collect();
        bra.extend(bra_base.iter().rev().copied());
        return rho.coefficient(&ket, &bra);
    }
    let nm = rho.n_modes as u8;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..nm {
        if ket_full.contains(&c) {
            continue;
        }
        for cb in 0..nm {
            let w = d_tilde[(cb as usize, c as usize)];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            ket_full.push(c);
            bra_contracted.push(cb);
            let inner = contract_extra(rho, d_tilde, ket_full, bra_contracted, bra_base, extra - 1);
            ket_full.pop();
            bra_contracted.pop();
            acc += w * inner;
        }
    }
    acc
}

/// Dense `M`-particle density tensor with accessors following the display
/// conventions `ρ^(M)_{α₁…α_M|ᾱ_M…ᾱ₁}`.
#[derive(Debug, Clone)]
pub struct DensityTensor {
    n_modes: usize,
    m: usize,
    data: Vec<Complex64>,
}

impl DensityTensor {
    fn zeros(n_modes: usize, m: usize) -> Self {
        let len = n_modes.pow(2 * m as u32).max(1);
        Self {
            n_modes,
            m,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn offset(&self, kets: &[u8], bras: &[u8]) -> usize {
        let mut off = 0usize;
        for &k in kets.iter().chain(bras.iter()) {
            off = off * self.n_modes + k as usize;
        }
        off
    }

    fn set(&mut self, kets: &[u8], bras: &[u8], v: Complex64) {
        let off = self.offset(kets, bras);
        self.data[off] = v;
    }

    /// `ρ^(M)` with kets `(α₁…α_M)` and bras `(ᾱ₁…ᾱ_M)` in ascending slot
    /// order: equals `Sp(R â†_{ᾱ_M}…â†_{ᾱ₁} â_{α₁}…â_{α_M})`.
    pub fn get(&self, kets: &[u8], bras: &[u8]) -> Complex64 {
        assert_eq!(kets.len(), self.m);
        assert_eq!(bras.len(), self.m);
        self.data[self.offset(kets, bras)]
    }

    /// Scalar value of the 0-particle tensor.
    pub fn scalar(&self) -> Complex64 {
        assert_eq!(self.m, 0);
        self.data[0]
    }

    /// One-particle tensor as a matrix `ρ^(1)[α, ᾱ]`.
    pub fn as_matrix(&self) -> CMat {
        assert_eq!(self.m, 1);
        CMat::from_fn(self.n_modes, self.n_modes, |a, ab| {
            self.get(&[a as u8], &[ab as u8])
        })
    }

    /// `ρ^(2)_{ab|āb̄} = Sp(R â†_ā â†_b̄ â_a â_b)`.
    pub fn rho2(&self, a: usize, b: usize, abar: usize, bbar: usize) -> Complex64 {
        assert_eq!(self.m, 2);
        // slots: kets (α₁,α₂) = (a,b); displayed bras (ᾱ,β̄) sit in slots
        // (ᾱ₂,ᾱ₁), i.e. ascending slot order is (β̄, ᾱ)
        self.get(&[a as u8, b as u8], &[bbar as u8, abar as u8])
    }

    /// `ρ^(3)_{abc|āb̄c̄} = Sp(R â†_ā â†_b̄ â†_c̄ â_a â_b â_c)`.
    #[allow(clippy::too_many_arguments)]
    pub fn rho3(
        &self,
        a: usize,
        b: usize,
        c: usize,
        abar: usize,
        bbar: usize,
        cbar: usize,
    ) -> Complex64 {
        assert_eq!(self.m, 3);
        self.get(
            &[a as u8, b as u8, c as u8],
            &[cbar as u8, bbar as u8, abar as u8],
        )
    }

    pub fn max_abs_diff(&self, other: &DensityTensor) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }
}

/// Dense four-index tensor `T[α,β|ᾱ,β̄]` over modes (used for the
/// spontaneous traces, which are not themselves density matrices).
#[derive(Debug, Clone)]
pub struct FourIndex {
    n_modes: usize,
    data: Vec<Complex64>,
}

impl FourIndex {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            n_modes,
            data: vec![Complex64::new(0.0, 0.0); n_modes.pow(4)],
        }
    }

    fn off(&self, a: usize, b: usize, ab: usize, bb: usize) -> usize {
        ((a * self.n_modes + b) * self.n_modes + ab) * self.n_modes + bb
    }

    pub fn set(&mut self, a: usize, b: usize, ab: usize, bb: usize, v: Complex64) {
        let o = self.off(a, b, ab, bb);
        self.data[o] = v;
    }

    pub fn rho2(&self, a: usize, b: usize, ab: usize, bb: usize) -> Complex64 {
        self.data[self.off(a, b, ab, bb)]
    }

    pub fn max_abs_diff(&self, other: &FourIndex) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    pub fn scale(&self, s: f64) -> FourIndex {
        FourIndex {
            n_modes: self.n_modes,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

impl DensityTensor {
    /// `π₂ T π₂` over pair indices, with `π₂ = 1⊗1 - D̃⊗D̃`.
    fn sandwich_pairs(&self, dt: &CMat) -> FourIndex {
        assert_eq!(self.m, 2);
        let nm = self.n_modes;
        let mut mid = FourIndex::zeros(nm);
        // left multiply: Σ_{a'b'} π₂[(a,b),(a',b')] T[(a',b'),(ᾱ,β̄)]
        for a in 0..nm {
            for b in 0..nm {
                for ab in 0..nm {
                    for bb in 0..nm {
                        let mut acc = self.rho2(a, b, ab, bb);
                        for ap in 0..nm {
                            for bp in 0..nm {
                                acc -= dt[(a, ap)] * dt[(b, bp)] * self.rho2(ap, bp, ab, bb);
                            }
                        }
                        mid.set(a, b, ab, bb, acc);
                    }
                }
            }
        }
        let mut out = FourIndex::zeros(nm);
        for a in 0..nm {
            for b in 0..nm {
                for ab in 0..nm {
                    for bb in 0..nm {
                        let mut acc = mid.rho2(a, b, ab, bb);
                        for ap in 0..nm {
                            for bp in 0..nm {
                                acc -= mid.rho2(a, b, ap, bp) * dt[(ap, ab)] * dt[(bp, bb)];
                            }
                        }
                        out.set(a, b, ab, bb, acc);
                    }
                }
            }
        }
        out
    }
}

/// The four spontaneous-radiation traces as four-index tensors, named by
/// their operator pattern (`aa` = `â†â`, `pi` = `Π_{D_e}`).
#[derive(Debug, Clone)]
pub struct SpontaneousTraceBundle {
    /// `Sp(R â†_ᾱ â_α Π â†_β̄ â_β Π)`
    pub aa_pi_bb_pi: FourIndex,
    /// `Sp(R Π â†_ᾱ â_α Π â†_β̄ â_β)`
    pub pi_aa_pi_bb: FourIndex,
    /// `Sp(R â†_ᾱ â_α Π â†_β̄ â_β)`
    pub aa_pi_bb: FourIndex,
    /// `Sp(R Π â†_ᾱ â_α â†_β̄ â_β Π)`
    pub pi_aa_bb_pi: FourIndex,
}

/// Closed-form `ρ^{(N,2)}` of an uncorrelated beam in terms of the ensemble
/// average `ρ̄` and the deviation second moment `Σ`.
pub fn beam_reduced2_closed(rhos: &[CMat]) -> FourIndex {
    let n = rhos.len();
    let nm = rhos[0].rows();
    let nf = n as f64;
    let rbar = average(rhos);
    let mut out = FourIndex::zeros(nm);
    for a1 in 0..nm {
        for a2 in 0..nm {
            for ab1 in 0..nm {
                for ab2 in 0..nm {
                    // ρ^{(N,2)}_{α₁α₂|ᾱ₂ᾱ₁} = ρ̄_{α₁[ᾱ₁}ρ̄_{α₂ᾱ₂]} - Σ_{α₁[ᾱ₁|α₂ᾱ₂]}/(N-1)
                    let anti = |f: &dyn Fn(usize, usize, usize, usize) -> Complex64| {
                        f(a1, ab1, a2, ab2) - f(a1, ab2, a2, ab1)
                    };
                    let rr = anti(&|x1, y1, x2, y2| rbar[(x1, y1)] * rbar[(x2, y2)]);
                    let sig = anti(&|x1, y1, x2, y2| {
                        let mut s = Complex64::new(0.0, 0.0);
                        for r in rhos {
                            let d1 = r[(x1, y1)] - rbar[(x1, y1)];
                            let d2 = r[(x2, y2)] - rbar[(x2, y2)];
                            s += d1 * d2;
                        }
                        s / nf
                    });
                    // store with the ρ² accessor convention: rho2(a,b,ā,b̄) has
                    // slots kets (a=α₁, b=α₂), bras (ᾱ₂=ā? ...) — here we fill
                    // T such that T.rho2(α₁,α₂,ᾱ₂,ᾱ₁)... Accessor maps display
                    // ρ_{α₁α₂|ᾱ₂ᾱ₁}: rho2(α₁,α₂, x, y) with (x,y)=(ᾱ₂,ᾱ₁)?? see
                    // DensityTensor::rho2: rho2(a,b,ā,b̄) = display ρ_{ab|āb̄}
                    // with slot order (ᾱ₂,ᾱ₁) = (ā,b̄). So display here is
                    // ρ_{α₁α₂|ᾱ₂ᾱ₁}: a=α₁,b=α₂,ā=ᾱ₂,b̄=ᾱ₁.
                    let v = rr - sig / (nf - 1.0);
                    out.set(a1, a2, ab2, ab1, v);
                }
            }
        }
    }
    out
}

/// Closed-form `ρ^{(N,3)}` of an uncorrelated beam: the antisymmetrized
/// `ρ̄ρ̄ρ̄` product with its `1/(N-1)` second-moment and `1/((N-1)(N-2))`
/// third-moment corrections. Returned as a map over index six-tuples
/// `(α₁,α₂,α₃,ᾱ₁,ᾱ₂,ᾱ₃)`.
pub fn beam_reduced3_closed(
    rhos: &[CMat],
    idx: (usize, usize, usize, usize, usize, usize),
) -> Complex64 {
    let n = rhos.len();
    let nf = n as f64;
    let rbar = average(rhos);
    let (a1, a2, a3, ab1, ab2, ab3) = idx;
    let dev = |i: usize, x: usize, y: usize| rhos[i][(x, y)] - rbar[(x, y)];
    let kets = [a1, a2, a3];
    // display order ρ_{α₁α₂α₃|ᾱ₃ᾱ₂ᾱ₁}: the listed bras (ā,b̄,c̄) occupy
    // slots (ᾱ₃,ᾱ₂,ᾱ₁), so slot order is the reverse
    let bras = [ab3, ab2, ab1];
    let perms: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([2, 1, 0], -1.0),
    ];
    let mut acc = Complex64::new(0.0, 0.0);
    for (sigma, sign) in perms {
        let pair = |slot: usize| (kets[slot], bras[sigma[slot]]);
        let (p1, p2, p3) = (pair(0), pair(1), pair(2));
        let product = rbar[p1] * rbar[p2] * rbar[p3];
        let sigma2 = |x: (usize, usize), y: (usize, usize)| -> Complex64 {
            (0..n).map(|i| dev(i, x.0, x.1) * dev(i, y.0, y.1)).sum::<Complex64>() / nf
        };
        let delta3 = (0..n)
            .map(|i| dev(i, p1.0, p1.1) * dev(i, p2.0, p2.1) * dev(i, p3.0, p3.1))
            .sum::<Complex64>()
            / nf;
        let corr2 = sigma2(p1, p2) * rbar[p3]
            + sigma2(p2, p3) * rbar[p1]
            + sigma2(p1, p3) * rbar[p2];
        acc += (product - corr2 / (nf - 1.0) + delta3 * 2.0 / ((nf - 1.0) * (nf - 2.0)))
            * sign;
    }
    acc
}

fn average(rhos: &[CMat]) -> CMat {
    let nm = rhos[0].rows();
    let mut r = CMat::zeros(nm, nm);
    for m in rhos {
        r = r.add(m);
    }
    r.scale(Complex64::new(1.0 / rhos.len() as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{projector_pi_tilde, trace_expectation, OneParticleProjector};
    use crate::rng::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_one_particle_reduced() {
        // ρ^(1) = ψψ† for a pure one-particle state
        let psi = [c(0.6, 0.0), c(0.0, 0.8)];
        let rho = ManyBodyDensity::pure_state(
            2,
            &[(vec![0], psi[0]), (vec![1], psi[1])],
        );
        assert!((rho.normalization() - 1.0).abs() < 1e-12);
        let r1 = rho.reduced(1).as_matrix();
        for a in 0..2 {
            for ab in 0..2 {
                assert!((r1[(a, ab)] - psi[a] * psi[ab].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn slater_two_particle_reduced() {
        // 2-particle Slater state of modes 0,1 in 3 modes: ρ^(1) = Σ φφ†
        let rho = ManyBodyDensity::pure_state(3, &[(vec![0, 1], c(1.0, 0.0))]);
        assert!((rho.normalization() - 1.0).abs() < 1e-12);
        let r1 = rho.reduced(1).as_matrix();
        let mut expect = CMat::zeros(3, 3);
        expect[(0, 0)] = c(1.0, 0.0);
        expect[(1, 1)] = c(1.0, 0.0);
        assert!(r1.max_abs_diff(&expect) < 1e-12);
        // diagonal pairing (α↔ᾱ, β↔β̄) gives +1, the exchange pairing -1
        let r2 = rho.reduced(2);
        assert!((r2.rho2(0, 1, 1, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r2.rho2(0, 1, 0, 1) + c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reduced_matches_oracle_trace() {
        let mut rng = Rng::seed_from(17);
        let space = FockSpace::fermionic(4).unwrap();
        // random mixed 2-particle state plus a 1-particle component
        let psi2 = ManyBodyDensity::pure_state(
            4,
            &[
                (vec![0, 1], rng.complex_normal()),
                (vec![0, 2], rng.complex_normal()),
                (vec![2, 3], rng.complex_normal()),
            ],
        );
        let psi1 = ManyBodyDensity::pure_state(
            4,
            &[(vec![1], rng.complex_normal()), (vec![3], rng.complex_normal())],
        );
        let rho = ManyBodyDensity::mixture(&[(0.7, psi2), (0.3, psi1)]);
        let r = rho.to_fock_matrix(&space).unwrap();
        assert!((r.trace().re - 1.0).abs() < 1e-12);
        let ladders = space.ladder_matrices().unwrap();
        // M = 1
        let r1 = rho.reduced(1).as_matrix();
        for a in 0..4 {
            for ab in 0..4 {
                let got =
                    trace_expectation(&r, &[&ladders[ab].dagger(), &ladders[a]]).unwrap();
                assert!((got - r1[(a, ab)]).norm() < 1e-12, "rho1[{a}{ab}]");
            }
        }
        // M = 2
        let r2 = rho.reduced(2);
        for a in 0..4 {
            for b in 0..4 {
                for ab in 0..4 {
                    for bb in 0..4 {
                        let got = trace_expectation(
                            &r,
                            &[
                                &ladders[ab].dagger(),
                                &ladders[bb].dagger(),
                                &ladders[a],
                                &ladders[b],
                            ],
                        )
                        .unwrap();
                        assert!(
                            (got - r2.rho2(a, b, ab, bb)).norm() < 1e-12,
                            "rho2[{a}{b}|{ab}{bb}]: {got} vs {}",
                            r2.rho2(a, b, ab, bb)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn projected_matches_oracle_trace() {
        let mut rng = Rng::seed_from(23);
        let space = FockSpace::fermionic(3).unwrap();
        let rho = ManyBodyDensity::pure_state(
            3,
            &[
                (vec![0, 1], rng.complex_normal()),
                (vec![0, 2], rng.complex_normal()),
                (vec![1, 2], rng.complex_normal()),
            ],
        );
        let r = rho.to_fock_matrix(&space).unwrap();
        let d = OneParticleProjector::new(rng.projector(3, 1)).unwrap();
        let dt = d.complement();
        let pt = projector_pi_tilde(&space, &d).unwrap();
        let ladders = space.ladder_matrices().unwrap();
        // ρ^(0)_{D̃} = Sp(R Π̃)
        let r0 = rho.projected(0, dt.matrix()).scalar();
        let oracle0 = trace_expectation(&r, &[&pt]).unwrap();
        assert!((r0 - oracle0).norm() < 1e-12, "{r0} vs {oracle0}");
        // ρ^(1)_{D̃} = Sp(R a†_ᾱ Π̃ a_α)
        let r1 = rho.projected(1, dt.matrix()).as_matrix();
        for a in 0..3 {
            for ab in 0..3 {
                let got = trace_expectation(
                    &r,
                    &[&ladders[ab].dagger(), &pt, &ladders[a]],
                )
                .unwrap();
                assert!(
                    (got - r1[(a, ab)]).norm() < 1e-12,
                    "rho1_D[{a}{ab}]: {got} vs {}",
                    r1[(a, ab)]
                );
            }
        }
        // ρ^(2)_{D̃} = Sp(R a†_ᾱ a†_β̄ Π̃ a_α a_β)
        let r2 = rho.projected(2, dt.matrix());
        for a in 0..3 {
            for b in 0..3 {
                for ab in 0..3 {
                    for bb in 0..3 {
                        let got = trace_expectation(
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
                        assert!(
                            (got - r2.rho2(a, b, ab, bb)).norm() < 1e-11,
                            "rho2_D[{a}{b}|{ab}{bb}]"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn projected_limits() {
        let mut rng = Rng::seed_from(31);
        let rho = ManyBodyDensity::pure_state(
            3,
            &[
                (vec![0, 1], rng.complex_normal()),
                (vec![1, 2], rng.complex_normal()),
            ],
        );
        // D̃ = 1 → reduced
        let id = CMat::identity(3);
        assert!(rho.projected(1, &id).max_abs_diff(&rho.reduced(1)) < 1e-13);
        // D̃ = 0 → M!·coefficient: ρ^(2)_{D̃=0} at kets (0,1), bras (0,1)
        // equals 2!·ρ_{α₁α₂|ᾱ₂ᾱ₁}, whose creation order is (α₂,α₁)
        let z = CMat::zeros(3, 3);
        let p2 = rho.projected(2, &z);
        let direct = rho.coefficient(&[1, 0], &[1, 0]);
        let got = p2.rho2(0, 1, 1, 0);
        assert!((got - direct * 2.0).norm() < 1e-12, "{got} vs {direct}");
        // N-particle state: ρ^(N)_{D̃} independent of D̃
        let mut rng2 = Rng::seed_from(44);
        let dt = rng2.projector(3, 1);
        assert!(rho.projected(2, &dt).max_abs_diff(&rho.reduced(2)) < 1e-12);
    }

    #[test]
    fn uncorrelated_beam_reduced_matrices() {
        // two orthogonal one-particle densities on disjoint mode blocks
        let mut r1 = CMat::zeros(4, 4);
        r1[(0, 0)] = c(0.75, 0.0);
        r1[(1, 1)] = c(0.25, 0.0);
        r1[(0, 1)] = c(0.2, 0.1);
        r1[(1, 0)] = c(0.2, -0.1);
        let mut r2 = CMat::zeros(4, 4);
        r2[(2, 2)] = c(0.5, 0.0);
        r2[(3, 3)] = c(0.5, 0.0);
        r2[(2, 3)] = c(0.0, -0.3);
        r2[(3, 2)] = c(0.0, 0.3);
        let beam = ManyBodyDensity::uncorrelated_beam(4, &[r1.clone(), r2.clone()]).unwrap();
        assert!((beam.normalization() - 1.0).abs() < 1e-12);
        // ρ^(1) = ρ¹ + ρ² (= N ρ̄)
        let got = beam.reduced(1).as_matrix();
        let expect = r1.add(&r2);
        assert!(got.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn uncorrelated_beam_rejects_overlap() {
        let mut r1 = CMat::zeros(2, 2);
        r1[(0, 0)] = c(1.0, 0.0);
        let r2 = r1.clone();
        let err = ManyBodyDensity::uncorrelated_beam(2, &[r1, r2]);
        assert!(matches!(
            err,
            Err(DensityError::OrthogonalityViolation { .. })
        ));
    }

    #[test]
    fn beam_sigma_delta_closed_form() {
        // exact N=3 construction equals the ρ̄/Σ correction structure
        let mut rng = Rng::seed_from(61);
        let mut rhos = Vec::new();
        for i in 0..3 {
            // each particle on its own 2-mode block of a 6-mode space
            let block = rng.density_matrix(2);
            let mut full = CMat::zeros(6, 6);
            for a in 0..2 {
                for b in 0..2 {
                    full[(2 * i + a, 2 * i + b)] = block[(a, b)];
                }
            }
            rhos.push(full);
        }
        let beam = ManyBodyDensity::uncorrelated_beam(6, &rhos).unwrap();
        let exact = beam.reduced(2);
        // ρ^(2) = N(N-1) ρ^{(N,2)}
        let closed = beam_reduced2_closed(&rhos).scale(3.0 * 2.0);
        assert!(exact.sub_four_index().max_abs_diff(&closed) < 1e-11);
        // three-particle reduction with the 1/N² correction structure:
        // ρ^(3) = N!/(N-3)!·ρ^{(N,3)} = 6·ρ^{(N,3)} at N = 3
        let exact3 = beam.reduced(3);
        let mut worst = 0.0f64;
        let mut rng2 = Rng::seed_from(62);
        for _ in 0..40 {
            let pick = |r: &mut Rng| r.usize_below(6);
            let idx = (
                pick(&mut rng2),
                pick(&mut rng2),
                pick(&mut rng2),
                pick(&mut rng2),
                pick(&mut rng2),
                pick(&mut rng2),
            );
            let got = exact3.rho3(idx.0, idx.1, idx.2, idx.3, idx.4, idx.5);
            let want = beam_reduced3_closed(&rhos, idx) * 6.0;
            worst = worst.max((got - want).norm());
        }
        assert!(worst < 1e-11, "rho3 closed form deviates by {worst:e}");
    }

    #[test]
    fn beam_projected_zero_matches_oracle() {
        // ρ⁰_{D̃} = Π_i (ρⁱ·D̃) for a 3-particle beam, against the exact
        // Fock-space trace on 6 modes
        let mut rng = Rng::seed_from(63);
        let mut rhos = Vec::new();
        for i in 0..3 {
            let block = rng.density_matrix(2);
            let mut full = CMat::zeros(6, 6);
            for a in 0..2 {
                for b in 0..2 {
                    full[(2 * i + a, 2 * i + b)] = block[(a, b)];
                }
            }
            rhos.push(full);
        }
        let beam = ManyBodyDensity::uncorrelated_beam(6, &rhos).unwrap();
        // the product form needs ρⁱ D̃ ρʲ ≈ 0 (i ≠ j): take D̃ block-diagonal
        // over the particles' mode blocks, as a momentum-diagonal spin
        // measurement is
        let mut dt = CMat::zeros(6, 6);
        for i in 0..3 {
            let block = rng.projector(2, 1);
            for a in 0..2 {
                for b in 0..2 {
                    dt[(2 * i + a, 2 * i + b)] = block[(a, b)];
                }
            }
        }
        let closed: Complex64 = rhos
            .iter()
            .map(|r| r.mul(&dt).trace())
            .fold(c(1.0, 0.0), |acc, v| acc * v);
        let table = beam.projected(0, &dt).scalar();
        assert!((table - closed).norm() < 1e-11, "{table} vs {closed}");
        let space = FockSpace::fermionic(6).unwrap();
        let r = beam.to_fock_matrix(&space).unwrap();
        let d = OneParticleProjector::new(CMat::identity(6).sub(&dt)).unwrap();
        let pt = projector_pi_tilde(&space, &d).unwrap();
        let oracle = trace_expectation(&r, &[&pt]).unwrap();
        assert!((oracle - closed).norm() < 1e-11, "{oracle} vs {closed}");
    }

    #[test]
    fn spontaneous_traces_match_oracle() {
        let mut rng = Rng::seed_from(77);
        let space = FockSpace::fermionic(3).unwrap();
        let rho = ManyBodyDensity::pure_state(
            3,
            &[
                (vec![0, 1], rng.complex_normal()),
                (vec![0, 2], rng.complex_normal()),
                (vec![1, 2], rng.complex_normal()),
            ],
        );
        let r = rho.to_fock_matrix(&space).unwrap();
        let d = OneParticleProjector::new(rng.projector(3, 1)).unwrap();
        let pi = crate::fock::projector_pi(&space, &d).unwrap();
        let ladders = space.ladder_matrices().unwrap();
        let bundle = rho.spontaneous_traces(d.matrix());
        for a in 0..3 {
            for b in 0..3 {
                for ab in 0..3 {
                    for bb in 0..3 {
                        let aa = ladders[ab].dagger().mul(&ladders[a]);
                        let bbm = ladders[bb].dagger().mul(&ladders[b]);
                        let o1 = trace_expectation(&r, &[&aa, &pi, &bbm, &pi]).unwrap();
                        let o2 = trace_expectation(&r, &[&pi, &aa, &pi, &bbm]).unwrap();
                        let o3 = trace_expectation(&r, &[&aa, &pi, &bbm]).unwrap();
                        let o4 = trace_expectation(&r, &[&pi, &aa, &bbm, &pi]).unwrap();
                        assert!(
                            (o1 - bundle.aa_pi_bb_pi.rho2(a, b, ab, bb)).norm() < 1e-11,
                            "trace1[{a}{b}|{ab}{bb}]"
                        );
                        assert!(
                            (o2 - bundle.pi_aa_pi_bb.rho2(a, b, ab, bb)).norm() < 1e-11,
                            "trace2[{a}{b}|{ab}{bb}]"
                        );
                        assert!(
                            (o3 - bundle.aa_pi_bb.rho2(a, b, ab, bb)).norm() < 1e-11,
                            "trace3[{a}{b}|{ab}{bb}]"
                        );
                        assert!(
                            (o4 - bundle.pi_aa_bb_pi.rho2(a, b, ab, bb)).norm() < 1e-11,
                            "trace4[{a}{b}|{ab}{bb}]"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn spontaneous_traces_vanish_at_de_zero() {
        let mut rng = Rng::seed_from(78);
        let rho = ManyBodyDensity::pure_state(
            3,
            &[(vec![0, 1], rng.complex_normal()), (vec![1, 2], rng.complex_normal())],
        );
        let z = CMat::zeros(3, 3);
        let bundle = rho.spontaneous_traces(&z);
        for t in [
            &bundle.aa_pi_bb_pi,
            &bundle.pi_aa_pi_bb,
            &bundle.aa_pi_bb,
            &bundle.pi_aa_bb_pi,
        ] {
            let zero = FourIndex::zeros(3);
            assert!(t.max_abs_diff(&zero) < 1e-12);
        }
    }

    #[test]
    fn spontaneous_trace_de_limits_are_leading_order() {
        // exact trace at εD_e minus ε·(limit formula) must shrink as O(ε²)
        let mut rng = Rng::seed_from(79);
        let rho = ManyBodyDensity::pure_state(
            4,
            &[
                (vec![0, 1, 2], rng.complex_normal()),
                (vec![0, 1, 3], rng.complex_normal()),
                (vec![1, 2, 3], rng.complex_normal()),
            ],
        );
        let d = rng.projector(4, 2);
        let limit = rho.spontaneous_traces_de_limit(&d);
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3] {
            let de = d.scale(c(eps, 0.0));
            let exact = rho.spontaneous_traces(&de);
            let diff = exact
                .aa_pi_bb_pi
                .max_abs_diff(&limit.aa_pi_bb_pi.scale(eps))
                .max(exact.pi_aa_pi_bb.max_abs_diff(&limit.pi_aa_pi_bb.scale(eps)))
                .max(exact.aa_pi_bb.max_abs_diff(&limit.aa_pi_bb.scale(eps)))
                .max(exact.pi_aa_bb_pi.max_abs_diff(&limit.pi_aa_bb_pi.scale(eps)));
            assert!(diff < prev * 0.05, "not O(ε²): {diff} after {prev}");
            prev = diff;
        }
    }

    impl DensityTensor {
        fn sub_four_index(&self) -> FourIndex {
            assert_eq!(self.m, 2);
            let nm = self.n_modes;
            let mut out = FourIndex::zeros(nm);
            for a in 0..nm {
                for b in 0..nm {
                    for ab in 0..nm {
                        for bb in 0..nm {
                            out.set(a, b, ab, bb, self.rho2(a, b, ab, bb));
                        }
                    }
                }
            }
            out
        }
    }
}
