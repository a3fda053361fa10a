//! The atom–cavity–mechanics Hamiltonian, its polaron spectrum and the joint
//! spectral density of 0 → 1 polariton transitions.
//!
//! All frequencies are in units of the mechanical frequency (`omega_m = 1` by
//! convention, though any positive value is accepted).
//!
//! The lab-frame Hamiltonian is
//!
//! ```text
//! H = ω_c a†a + (ω_a/2) σ_z + i g_ac (σ₊a − σ₋a†) + ω_m b†b − g_cm a†a (b + b†)
//! ```
//!
//! It commutes with the polariton number `N = a†a + σ₊σ₋`, so it is
//! diagonalized block by block. On resonance (`ω_a = ω_c`) each block `n ≥ 1`
//! is the polariton doublet `|±⁽ⁿ⁾⟩ = (|g, n⟩ ± i|e, n−1⟩)/√2` split by
//! `Ω⁽ⁿ⁾ = 2√n g_ac`, coupled to a mechanical mode displaced by
//! `q₀⁽ⁿ⁾ = √2 g_cm (n − ½)/ω_m`. Dropping the small `σ_x` term and the
//! counter-rotating terms leaves a Jaynes–Cummings-like ladder with energies
//!
//! ```text
//! E(n, m, ±) = (n − ½)ω_c − (ω_m/2) q₀² + (m − ½) ω_m ± ν,
//! ν² = ((Ω⁽ⁿ⁾ − ω_m)/2)² + m g_cm²/4
//! ```
//!
//! and an unpaired ground level `(n − ½)ω_c − (ω_m/2) q₀² − Ω⁽ⁿ⁾/2` at
//! `m = 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{lowering, AtomState, Elementary, HilbertSpace, Operator, C64, I, ONE, ZERO};

/// Physical constants of the model, all in units of `omega_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_m: f64,
    pub omega_c: f64,
    pub omega_a: f64,
    /// Atom–cavity (Jaynes–Cummings) coupling.
    pub g_ac: f64,
    /// Single-photon optomechanical coupling.
    pub g_cm: f64,
    /// Loss rate shared by the cavity field and the atom.
    pub gamma_ac: f64,
    pub gamma_m: f64,
    /// Thermal phonon occupation of the mechanical bath.
    pub n_th: f64,
    /// Coherent pump amplitude.
    pub f_p: f64,
    /// Coherent pump frequency.
    pub omega_p: f64,
    /// Incoherent pump rate into the 1-polariton doublet (0 = off).
    pub f_inc: f64,
}

impl Default for ModelParams {
    /// `ω_c/ω_m = 100`, resonant atom, `g_ac = ω_m/2`, `g_cm = ω_m/10`,
    /// `Q_m = Q_ac = 10⁴`, `F_p = γ_ac`, `n_th = 3.45`, pump on the lower
    /// polariton `ω_c − g_ac`.
    fn default() -> Self {
        let omega_c = 100.0;
        let gamma_ac = omega_c / 1e4;
        Self {
            omega_m: 1.0,
            omega_c,
            omega_a: omega_c,
            g_ac: 0.5,
            g_cm: 0.1,
            gamma_ac,
            gamma_m: 1.0 / 1e4,
            n_th: 3.45,
            f_p: gamma_ac,
            omega_p: omega_c - 0.5,
            f_inc: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega_m", self.omega_m),
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("g_ac", self.g_ac),
            ("g_cm", self.g_cm),
            ("gamma_ac", self.gamma_ac),
            ("gamma_m", self.gamma_m),
            ("n_th", self.n_th),
            ("f_p", self.f_p),
            ("omega_p", self.omega_p),
            ("f_inc", self.f_inc),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.omega_m <= 0.0 {
            return Err(Error::Domain("omega_m must be positive".into()));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega_a - self.omega_c).abs() <= 1e-12 * self.omega_c.abs().max(1.0)
    }

    /// Same parameters without the atom coupling.
    pub fn atomless(&self) -> Self {
        Self { g_ac: 0.0, ..*self }
    }

    /// `Q_ac = ω_c/γ_ac`.
    pub fn q_ac(&self) -> f64 {
        self.omega_c / self.gamma_ac
    }

    /// `Q_m = ω_m/γ_m`.
    pub fn q_m(&self) -> f64 {
        self.omega_m / self.gamma_m
    }

    /// Lower and upper 1-polariton frequencies `ω_c ∓ g_ac` measured from
    /// the ground state (resonant case).
    pub fn lower_polariton(&self) -> f64 {
        self.omega_c - self.g_ac
    }

    pub fn upper_polariton(&self) -> f64 {
        self.omega_c + self.g_ac
    }

    fn require_resonant(&self) -> Result<()> {
        if !self.is_resonant() {
            return Err(Error::UnsupportedRegime(format!(
                "closed-form polaron spectrum needs omega_a = omega_c (got {} vs {})",
                self.omega_a, self.omega_c
            )));
        }
        Ok(())
    }
}

/// Polariton-number operator `a†a + σ₊σ₋`.
pub fn polariton_number(s: HilbertSpace) -> Operator {
    let d = s.dim();
    let diag = DVector::from_fn(d, |i, _| {
        let (atom, k, _) = s.labels(i);
        C64::new((k + atom.index()) as f64, 0.0)
    });
    Operator::from_matrix_unchecked(s, DMatrix::from_diagonal(&diag))
}

/// Lab-frame Hamiltonian.
pub fn hamiltonian_lab(p: &ModelParams, s: HilbertSpace) -> Operator {
    let a = Operator::elementary(s, Elementary::CavAnnihilate).into_matrix();
    let b = Operator::elementary(s, Elementary::MechAnnihilate).into_matrix();
    let sz = Operator::elementary(s, Elementary::AtomSigmaZ).into_matrix();
    let sp = Operator::elementary(s, Elementary::AtomSigmaPlus).into_matrix();
    let sm = Operator::elementary(s, Elementary::AtomSigmaMinus).into_matrix();
    let ad = a.adjoint();
    let bd = b.adjoint();
    let na = &ad * &a;
    let re = |x: f64| C64::new(x, 0.0);

    let mut h = &na * re(p.omega_c);
    h += &sz * re(p.omega_a / 2.0);
    h += (&sp * &a - &sm * &ad) * (I * p.g_ac);
    h += (&bd * &b) * re(p.omega_m);
    h -= (&na * (&b + &bd)) * re(p.g_cm);
    Operator::from_matrix_unchecked(s, h)
}

/// Generator in the frame rotating at the pump frequency:
/// `H_lab − ω_p N + i F_p (a† − a)`.
pub fn hamiltonian_rotating(p: &ModelParams, s: HilbertSpace) -> Operator {
    let mut h = hamiltonian_lab(p, s).into_matrix();
    let n = polariton_number(s).into_matrix();
    h -= n * C64::new(p.omega_p, 0.0);
    let a = Operator::elementary(s, Elementary::CavAnnihilate).into_matrix();
    h += (a.adjoint() - a) * (I * p.f_p);
    Operator::from_matrix_unchecked(s, h)
}

/// `Ω⁽ⁿ⁾ = 2√n g_ac`.
pub fn polariton_splitting(n: usize, p: &ModelParams) -> Result<f64> {
    p.require_resonant()?;
    if n == 0 {
        return Err(Error::Domain("the 0-polariton level has no doublet".into()));
    }
    Ok(2.0 * (n as f64).sqrt() * p.g_ac)
}

/// Displaced mechanical equilibrium `q₀⁽ⁿ⁾ = √2 g_cm (n − ½)/ω_m`.
pub fn displaced_equilibrium(n: usize, p: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("the 0-polariton subspace is not displaced".into()));
    }
    Ok(2f64.sqrt() * p.g_cm * (n as f64 - 0.5) / p.omega_m)
}

/// Branch of a polaron doublet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
    /// Levels that are not part of a doublet (the 0-polariton ladder and
    /// the truncation-cut top block).
    None,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::None => "none",
        })
    }
}

/// Energy offset `(n − ½)ω_c − (ω_m/2) q₀²` shared by the whole `n` block.
fn block_offset(n: usize, p: &ModelParams) -> Result<f64> {
    let q0 = displaced_equilibrium(n, p)?;
    Ok((n as f64 - 0.5) * p.omega_c - 0.5 * p.omega_m * q0 * q0)
}

/// Closed-form polaron energy for `n ≥ 1` on resonance.
///
/// `m = 0` is the unpaired ground level of the block and only exists on the
/// `Minus` branch.
pub fn polaron_energy(n: usize, m: usize, branch: Branch, p: &ModelParams) -> Result<f64> {
    p.require_resonant()?;
    if n == 0 {
        return Err(Error::Domain("polaron_energy is defined for n >= 1".into()));
    }
    let omega = polariton_splitting(n, p)?;
    let offset = block_offset(n, p)?;
    if m == 0 {
        return match branch {
            Branch::Minus => Ok(offset - omega / 2.0),
            _ => Err(Error::Domain("m = 0 is a singlet on the minus branch".into())),
        };
    }
    let half_detuning = (omega - p.omega_m) / 2.0;
    let nu = (half_detuning * half_detuning + m as f64 * p.g_cm * p.g_cm / 4.0).sqrt();
    let base = offset + (m as f64 - 0.5) * p.omega_m;
    match branch {
        Branch::Plus => Ok(base + nu),
        Branch::Minus => Ok(base - nu),
        Branch::None => Err(Error::Domain("polaron levels with n >= 1 carry a branch".into())),
    }
}

/// Displaced, rotating-wave Hamiltonian of one polariton block.
///
/// Basis is `|±⁽ⁿ⁾⟩ ⊗ |l⟩` with doublet index 0 = `|+⟩`, 1 = `|−⟩` and the
/// displaced phonon number `l` running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceHamiltonian {
    pub n: usize,
    pub mech_cutoff: usize,
    pub matrix: DMatrix<C64>,
}

impl SubspaceHamiltonian {
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn effective_subspace_hamiltonian(n: usize, p: &ModelParams, mech_cutoff: usize) -> Result<SubspaceHamiltonian> {
    if mech_cutoff < 1 {
        return Err(Error::InvalidTruncation("mech_cutoff must be at least 1".into()));
    }
    let omega = polariton_splitting(n, p)?;
    let offset = block_offset(n, p)?;
    let md = mech_cutoff + 1;
    let b = lowering(md);
    let id_m = DMatrix::<C64>::identity(md, md);
    let sz = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    // σ₊ = |+⟩⟨−|
    let sp = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    let sm = sp.adjoint();
    let re = |x: f64| C64::new(x, 0.0);

    let mut h = sz.kronecker(&id_m) * re(omega / 2.0);
    h += DMatrix::<C64>::identity(2, 2).kronecker(&(b.adjoint() * &b)) * re(p.omega_m);
    h -= (sm.kronecker(&b.adjoint()) + sp.kronecker(&b)) * re(p.g_cm / 2.0);
    h += DMatrix::<C64>::identity(2 * md, 2 * md) * re(offset);
    Ok(SubspaceHamiltonian {
        n,
        mech_cutoff,
        matrix: h,
    })
}

/// One eigenstate of the full Hamiltonian with its polaron label.
#[derive(Debug, Clone, PartialEq)]
pub struct PolaronLevel {
    pub n: usize,
    pub m: usize,
    pub branch: Branch,
    pub energy: f64,
    /// Eigenvector in the full tripartite basis.
    pub vector: Option<DVector<C64>>,
}

impl PolaronLevel {
    /// Displaced phonon number carried by the polariton component named by
    /// the branch: `m − 1` on the plus branch, `m` otherwise.
    pub fn phonon_index(&self) -> usize {
        match self.branch {
            Branch::Plus => self.m - 1,
            _ => self.m,
        }
    }
}

/// Basis indices of the `n`-polariton block: `|g, n, l⟩` then `|e, n−1, l⟩`.
fn block_indices(s: HilbertSpace, n: usize) -> (Vec<usize>, bool, bool) {
    let has_g = n <= s.cav_cutoff();
    let has_e = n >= 1 && n - 1 <= s.cav_cutoff();
    let mut idx = Vec::new();
    if has_g {
        idx.extend((0..s.mech_dim()).map(|l| s.index(AtomState::Ground, n, l)));
    }
    if has_e {
        idx.extend((0..s.mech_dim()).map(|l| s.index(AtomState::Excited, n - 1, l)));
    }
    (idx, has_g, has_e)
}

/// Upper Jaynes–Cummings eigenvector of block `n` in the `(|g,n⟩, |e,n−1⟩)`
/// basis, for any detuning.
fn upper_polariton_vector(n: usize, p: &ModelParams) -> [C64; 2] {
    let eg = n as f64 * p.omega_c - p.omega_a / 2.0;
    let ee = (n as f64 - 1.0) * p.omega_c + p.omega_a / 2.0;
    let coupling = I * (p.g_ac * (n as f64).sqrt());
    let jc = DMatrix::from_row_slice(2, 2, &[C64::new(eg, 0.0), coupling.conj(), coupling, C64::new(ee, 0.0)]);
    let eig = SymmetricEigen::new(jc);
    let top = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let v = eig.eigenvectors.column(top);
    if p.g_ac == 0.0 {
        // uncoupled doublet: fall back to the resonant convention
        let r = std::f64::consts::FRAC_1_SQRT_2;
        return [C64::new(r, 0.0), C64::new(0.0, r)];
    }
    // phase convention: real positive |g⟩ amplitude
    let phase = if v[0].norm() > 1e-14 {
        v[0].conj() / v[0].norm()
    } else {
        ONE
    };
    [v[0] * phase, v[1] * phase]
}

/// Full eigendecomposition of the lab Hamiltonian, labeled `(n, m, branch)`.
///
/// Blocks of fixed polariton number are diagonalized separately. Inside a
/// block `n ≥ 1`, levels are ordered by the conserved excitation number of
/// the effective ladder, `b_n†b_n + |+⟩⟨+|` with `b_n` the displaced phonon
/// operator, and paired into doublets in that order; the first level is the
/// `m = 0` singlet. Results come sorted by `n`, then `m`, minus before plus.
pub fn eigensystem(p: &ModelParams, s: HilbertSpace) -> Result<Vec<PolaronLevel>> {
    p.validate()?;
    let h = hamiltonian_lab(p, s);
    let npol = polariton_number(s);
    let md = s.mech_dim();
    let mut levels = Vec::with_capacity(s.dim());

    for n in 0..=(s.cav_cutoff() + 1) {
        let (idx, has_g, has_e) = block_indices(s, n);
        let bd = idx.len();
        let sub = DMatrix::from_fn(bd, bd, |i, j| h.matrix()[(idx[i], idx[j])]);
        let eig = SymmetricEigen::new(sub);

        let embed = |col: usize| {
            let mut v = DVector::zeros(s.dim());
            for (r, &i) in idx.iter().enumerate() {
                v[i] = eig.eigenvectors[(r, col)];
            }
            v
        };

        let mut block: Vec<(f64, f64, DVector<C64>)> = Vec::with_capacity(bd);
        let doublet = has_g && has_e;
        let (dnum, plus_proj) = if doublet {
            let alpha = p.g_cm * (n as f64 - 0.5) / p.omega_m;
            let b = lowering(md);
            let bn = &b - DMatrix::<C64>::identity(md, md) * C64::new(alpha, 0.0);
            let nb = DMatrix::<C64>::identity(2, 2).kronecker(&(bn.adjoint() * &bn));
            let u = upper_polariton_vector(n, p);
            let proj = DMatrix::from_fn(2, 2, |i, j| u[i] * u[j].conj());
            (Some(nb), Some(proj.kronecker(&DMatrix::<C64>::identity(md, md))))
        } else {
            (None, None)
        };

        for col in 0..bd {
            let energy = eig.eigenvalues[col];
            let local = eig.eigenvectors.column(col).into_owned();
            let excitation = match (&dnum, &plus_proj) {
                (Some(nb), Some(pp)) => {
                    let nv = nb * &local;
                    let pv = pp * &local;
                    (local.dotc(&nv) + local.dotc(&pv)).re
                }
                _ => 0.0,
            };
            let v = embed(col);
            let nexp = v.dotc(&(npol.matrix() * &v)).re;
            if (nexp - nexp.round()).abs() > 1e-6 || nexp.round() as usize != n {
                return Err(Error::Classification(format!(
                    "eigenvector in block {n} has polariton number {nexp}"
                )));
            }
            block.push((excitation, energy, v));
        }

        if doublet {
            block.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut it = block.into_iter();
            let (_, e0, v0) = it.next().expect("non-empty block");
            levels.push(PolaronLevel {
                n,
                m: 0,
                branch: Branch::Minus,
                energy: e0,
                vector: Some(v0),
            });
            let mut m = 1;
            loop {
                let first = it.next();
                let second = it.next();
                match (first, second) {
                    (Some(x), Some(y)) => {
                        let (lo, hi) = if x.1 <= y.1 { (x, y) } else { (y, x) };
                        levels.push(PolaronLevel {
                            n,
                            m,
                            branch: Branch::Minus,
                            energy: lo.1,
                            vector: Some(lo.2),
                        });
                        levels.push(PolaronLevel {
                            n,
                            m,
                            branch: Branch::Plus,
                            energy: hi.1,
                            vector: Some(hi.2),
                        });
                    }
                    (Some(x), None) => {
                        // truncation leaves one unpaired level at the top
                        levels.push(PolaronLevel {
                            n,
                            m,
                            branch: Branch::Minus,
                            energy: x.1,
                            vector: Some(x.2),
                        });
                    }
                    _ => break,
                }
                m += 1;
            }
        } else {
            block.sort_by(|a, b| a.1.total_cmp(&b.1));
            for (m, (_, energy, v)) in block.into_iter().enumerate() {
                levels.push(PolaronLevel {
                    n,
                    m,
                    branch: Branch::None,
                    energy,
                    vector: Some(v),
                });
            }
        }
    }
    Ok(levels)
}

/// Which 0-polariton levels act as sources in the joint spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourcePopulation {
    /// Boltzmann weights at `n_th`, renormalized over the retained levels.
    #[default]
    Thermal,
    /// Only `|g, 0, 0⟩`.
    Ground,
}

/// Phonon-number change of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionClass {
    Reducing,
    Conserving,
    Increasing,
}

impl TransitionClass {
    pub fn from_delta(delta: i64) -> Self {
        match delta.cmp(&0) {
            std::cmp::Ordering::Less => TransitionClass::Reducing,
            std::cmp::Ordering::Equal => TransitionClass::Conserving,
            std::cmp::Ordering::Greater => TransitionClass::Increasing,
        }
    }
}

impl fmt::Display for TransitionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionClass::Reducing => "reducing",
            TransitionClass::Conserving => "conserving",
            TransitionClass::Increasing => "increasing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub e_initial: f64,
    pub e_final: f64,
    pub omega: f64,
    /// Source population times `|⟨s′|F_p a†|s⟩|²`.
    pub weight: f64,
    pub source_m: usize,
    pub target_m: usize,
    pub target_branch: Branch,
    /// Target phonon index ([`PolaronLevel::phonon_index`]) minus the source
    /// phonon number.
    pub delta_phonon: i64,
    pub class: TransitionClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsdOptions {
    /// Full width at half maximum of the Lorentzian applied to every line.
    pub broadening: f64,
    pub source: SourcePopulation,
    /// Keep only transitions with source and target polaron index `≤` this.
    pub max_polaron: Option<usize>,
}

/// Broadened spectrum plus the individual transitions behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    pub transitions: Vec<Transition>,
}

impl SpectrumTable {
    /// Sum of raw transition weights.
    pub fn total_weight(&self) -> f64 {
        self.transitions.iter().map(|t| t.weight).sum()
    }
}

/// Unit-area Lorentzian with full width `fwhm`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let hw = 0.5 * fwhm;
    hw / std::f64::consts::PI / ((x - center) * (x - center) + hw * hw)
}

/// Joint spectral density of transitions from the 0-polariton ladder to the
/// 1-polariton polarons under the upward pump operator `F_p a†`.
pub fn joint_spectral_density(
    p: &ModelParams,
    s: HilbertSpace,
    omega_grid: &[f64],
    opts: &JsdOptions,
) -> Result<SpectrumTable> {
    if omega_grid.is_empty() {
        return Err(Error::Domain("empty frequency grid".into()));
    }
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("frequency grid must be strictly increasing".into()));
    }
    if !(opts.broadening > 0.0) {
        return Err(Error::Domain("broadening must be positive".into()));
    }
    let levels = eigensystem(p, s)?;
    let sources: Vec<&PolaronLevel> = levels.iter().filter(|l| l.n == 0).collect();
    let targets: Vec<&PolaronLevel> = levels.iter().filter(|l| l.n == 1).collect();
    let keep = |m: usize| opts.max_polaron.map_or(true, |cap| m <= cap);

    let populations: Vec<f64> = match opts.source {
        SourcePopulation::Ground => sources.iter().map(|l| if l.m == 0 { 1.0 } else { 0.0 }).collect(),
        SourcePopulation::Thermal => {
            let ratio = if p.n_th > 0.0 { p.n_th / (p.n_th + 1.0) } else { 0.0 };
            let raw: Vec<f64> = sources
                .iter()
                .map(|l| if keep(l.m) { ratio.powi(l.m as i32) } else { 0.0 })
                .collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / z).collect()
        }
    };

    let adag = Operator::elementary(s, Elementary::CavAnnihilate).dagger();
    let fp = C64::new(p.f_p, 0.0);
    let mut transitions = Vec::new();
    for (src, &pop) in sources.iter().zip(&populations) {
        if pop == 0.0 || !keep(src.m) {
            continue;
        }
        let sv = src.vector.as_ref().expect("eigensystem stores vectors");
        let pumped = adag.matrix() * sv * fp;
        for tgt in targets.iter().filter(|t| keep(t.m)) {
            let tv = tgt.vector.as_ref().expect("eigensystem stores vectors");
            let amp = tv.dotc(&pumped);
            let delta = tgt.phonon_index() as i64 - src.m as i64;
            transitions.push(Transition {
                e_initial: src.energy,
                e_final: tgt.energy,
                omega: tgt.energy - src.energy,
                weight: pop * amp.norm_sqr(),
                source_m: src.m,
                target_m: tgt.m,
                target_branch: tgt.branch,
                delta_phonon: delta,
                class: TransitionClass::from_delta(delta),
            });
        }
    }

    let density = omega_grid
        .iter()
        .map(|&w| {
            transitions
                .iter()
                .map(|t| t.weight * lorentzian(w, t.omega, opts.broadening))
                .sum()
        })
        .collect();
    Ok(SpectrumTable {
        omega: omega_grid.to_vec(),
        density,
        transitions,
    })
}
