//! Truncated tensor space `atom ⊗ cavity ⊗ mechanics` and the dense operator
//! algebra living on it.
//!
//! Basis states are `|s, k, l⟩` with `s ∈ {g, e}`, photon number
//! `k ∈ 0..=cav_cutoff` and phonon number `l ∈ 0..=mech_cutoff`. The flat
//! index is
//!
//! ```text
//! index = s · (K+1)(L+1) + k · (L+1) + l,     s = 0 for |g⟩, 1 for |e⟩
//! ```
//!
//! so the mechanical index runs fastest. Every matrix built by this crate
//! follows that ordering.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Two-level atom states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomState {
    Ground,
    Excited,
}

impl AtomState {
    pub fn index(self) -> usize {
        match self {
            AtomState::Ground => 0,
            AtomState::Excited => 1,
        }
    }
}

/// Truncation of the tripartite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    cav_cutoff: usize,
    mech_cutoff: usize,
}

impl HilbertSpace {
    pub fn new(cav_cutoff: usize, mech_cutoff: usize) -> Result<Self> {
        if cav_cutoff < 1 || mech_cutoff < 1 {
            return Err(Error::InvalidTruncation(format!(
                "cutoffs must be at least 1, got cav_cutoff = {cav_cutoff}, mech_cutoff = {mech_cutoff}"
            )));
        }
        Ok(Self {
            cav_cutoff,
            mech_cutoff,
        })
    }

    pub fn atom_levels(&self) -> usize {
        2
    }

    pub fn cav_cutoff(&self) -> usize {
        self.cav_cutoff
    }

    pub fn mech_cutoff(&self) -> usize {
        self.mech_cutoff
    }

    pub fn cav_dim(&self) -> usize {
        self.cav_cutoff + 1
    }

    pub fn mech_dim(&self) -> usize {
        self.mech_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.cav_dim() * self.mech_dim()
    }

    /// Flat basis index of `|atom, k, l⟩`.
    pub fn index(&self, atom: AtomState, k: usize, l: usize) -> usize {
        debug_assert!(k <= self.cav_cutoff && l <= self.mech_cutoff);
        atom.index() * self.cav_dim() * self.mech_dim() + k * self.mech_dim() + l
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn labels(&self, index: usize) -> (AtomState, usize, usize) {
        let block = self.cav_dim() * self.mech_dim();
        let atom = if index / block == 0 {
            AtomState::Ground
        } else {
            AtomState::Excited
        };
        let rest = index % block;
        (atom, rest / self.mech_dim(), rest % self.mech_dim())
    }

    /// Same space with both cutoffs doubled.
    pub fn doubled(&self) -> Self {
        Self {
            cav_cutoff: 2 * self.cav_cutoff,
            mech_cutoff: 2 * self.mech_cutoff,
        }
    }

    fn check_same(&self, other: &HilbertSpace) -> Result<()> {
        if self != other {
            return Err(Error::IncompatibleSpace {
                left: self.to_string(),
                right: other.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "2 x {} x {} (cav_cutoff = {}, mech_cutoff = {})",
            self.cav_dim(),
            self.mech_dim(),
            self.cav_cutoff,
            self.mech_cutoff
        )
    }
}

/// Elementary single-subsystem operators, embedded with identities on the
/// other two factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elementary {
    AtomSigmaX,
    AtomSigmaY,
    AtomSigmaZ,
    AtomSigmaPlus,
    AtomSigmaMinus,
    CavAnnihilate,
    MechAnnihilate,
    Identity,
}

/// One tensor factor of the space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Atom,
    Cavity,
    Mechanics,
}

/// Truncated lowering operator `Σ √k |k−1⟩⟨k|` on `dim` Fock levels.
pub fn lowering(dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    m
}

fn atom_matrix(which: Elementary) -> DMatrix<C64> {
    // rows/cols: 0 = |g⟩, 1 = |e⟩
    let (gg, ge, eg, ee) = match which {
        Elementary::AtomSigmaX => (ZERO, ONE, ONE, ZERO),
        Elementary::AtomSigmaY => (ZERO, I, -I, ZERO),
        Elementary::AtomSigmaZ => (-ONE, ZERO, ZERO, ONE),
        Elementary::AtomSigmaPlus => (ZERO, ZERO, ONE, ZERO),
        Elementary::AtomSigmaMinus => (ZERO, ONE, ZERO, ZERO),
        _ => (ONE, ZERO, ZERO, ONE),
    };
    DMatrix::from_row_slice(2, 2, &[gg, ge, eg, ee])
}

/// Dense operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, space {space} needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_matrix_unchecked(space: HilbertSpace, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self::from_matrix_unchecked(space, DMatrix::zeros(d, d))
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self::from_matrix_unchecked(space, DMatrix::identity(d, d))
    }

    pub fn elementary(space: HilbertSpace, which: Elementary) -> Self {
        let cav_id = DMatrix::<C64>::identity(space.cav_dim(), space.cav_dim());
        let mech_id = DMatrix::<C64>::identity(space.mech_dim(), space.mech_dim());
        let atom_id = DMatrix::<C64>::identity(2, 2);
        let matrix = match which {
            Elementary::CavAnnihilate => atom_id.kronecker(&lowering(space.cav_dim())).kronecker(&mech_id),
            Elementary::MechAnnihilate => atom_id.kronecker(&cav_id).kronecker(&lowering(space.mech_dim())),
            Elementary::Identity => DMatrix::identity(space.dim(), space.dim()),
            atom => atom_matrix(atom).kronecker(&cav_id).kronecker(&mech_id),
        };
        Self::from_matrix_unchecked(space, matrix)
    }

    /// Embeds an operator on `atom ⊗ cavity` (dimension `2·(K+1)`, same
    /// ordering) as `op ⊗ 1_mech`.
    pub fn atom_cavity(space: HilbertSpace, op: &DMatrix<C64>) -> Result<Self> {
        let d = 2 * space.cav_dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::Domain(format!("atom-cavity operator must be {d}x{d}")));
        }
        let mech_id = DMatrix::<C64>::identity(space.mech_dim(), space.mech_dim());
        Ok(Self::from_matrix_unchecked(space, op.kronecker(&mech_id)))
    }

    /// Embeds a mechanical operator as `1_atom ⊗ 1_cav ⊗ op`.
    pub fn mechanics(space: HilbertSpace, op: &DMatrix<C64>) -> Result<Self> {
        let d = space.mech_dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::Domain(format!("mechanical operator must be {d}x{d}")));
        }
        let id = DMatrix::<C64>::identity(2 * space.cav_dim(), 2 * space.cav_dim());
        Ok(Self::from_matrix_unchecked(space, id.kronecker(op)))
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.space.check_same(&other.space)?;
        Ok(Self::from_matrix_unchecked(self.space, &self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.space.check_same(&other.space)?;
        Ok(Self::from_matrix_unchecked(self.space, &self.matrix - &other.matrix))
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.space.check_same(&other.space)?;
        Ok(Self::from_matrix_unchecked(self.space, &self.matrix * &other.matrix))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.space.check_same(&other.space)?;
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        Ok(Self::from_matrix_unchecked(self.space, ab - ba))
    }

    pub fn scale(&self, c: C64) -> Operator {
        Self::from_matrix_unchecked(self.space, &self.matrix * c)
    }

    pub fn dagger(&self) -> Operator {
        Self::from_matrix_unchecked(self.space, self.matrix.adjoint())
    }

    /// Largest absolute matrix element.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// `max |A − A†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    /// Entries with `|value| > tol`, row-major.
    pub fn nonzeros(&self, tol: f64) -> Vec<(usize, usize, C64)> {
        let d = self.space.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = self.matrix[(i, j)];
                if v.norm() > tol {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub(crate) fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Tolerances of the density-matrix invariants.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Residuals of the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateResiduals {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

/// Density matrix on the full tripartite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps `matrix`, checking Hermiticity, unit trace and positivity.
    pub fn new(space: HilbertSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, space needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = Self { space, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(space: HilbertSpace, matrix: DMatrix<C64>) -> Self {
        Self { space, matrix }
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(space: HilbertSpace, psi: &DVector<C64>) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::InvalidState("state vector has wrong length".into()));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Self::new(space, psi * psi.adjoint())
    }

    pub fn basis(space: HilbertSpace, atom: AtomState, k: usize, l: usize) -> Result<Self> {
        if k > space.cav_cutoff() || l > space.mech_cutoff() {
            return Err(Error::Domain(format!("|{atom:?}, {k}, {l}⟩ is outside {space}")));
        }
        let d = space.dim();
        let mut m = DMatrix::zeros(d, d);
        let i = space.index(atom, k, l);
        m[(i, i)] = ONE;
        Ok(Self::from_matrix_unchecked(space, m))
    }

    /// `ρ_ac ⊗ ρ_m` from an atom–cavity factor and a mechanical factor.
    pub fn product(space: HilbertSpace, atom_cavity: &DMatrix<C64>, mech: &DMatrix<C64>) -> Result<Self> {
        if atom_cavity.nrows() != 2 * space.cav_dim() || mech.nrows() != space.mech_dim() {
            return Err(Error::InvalidState("factor dimensions do not match the space".into()));
        }
        Self::new(space, atom_cavity.kronecker(mech))
    }

    /// `|g, 0⟩⟨g, 0| ⊗ ρ_m`, the usual initial condition.
    pub fn ground_optics(space: HilbertSpace, mech: &DMatrix<C64>) -> Result<Self> {
        let mut ac = DMatrix::zeros(2 * space.cav_dim(), 2 * space.cav_dim());
        ac[(0, 0)] = ONE;
        Self::product(space, &ac, mech)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn residuals(&self) -> StateResiduals {
        StateResiduals {
            hermiticity: hermiticity_residual(&self.matrix),
            trace: (self.trace() - ONE).norm(),
            min_eigenvalue: min_hermitian_eigenvalue(&self.matrix),
        }
    }

    pub fn validate(&self) -> Result<StateResiduals> {
        let r = self.residuals();
        if r.hermiticity > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {:e})",
                r.hermiticity
            )));
        }
        if r.trace > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace deviates from 1 by {:e}", r.trace)));
        }
        if r.min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                r.min_eigenvalue
            )));
        }
        Ok(r)
    }

    /// `Tr(Aρ)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        expectation(op, self)
    }

    /// Trace distance `½ Σ |λ_i(ρ − σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.space.check_same(&other.space)?;
        let diff = &self.matrix - &other.matrix;
        let h = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        Ok(0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn partial_trace(&self, keep: Factor) -> ReducedState {
        partial_trace(self, keep)
    }
}

/// Density matrix of a single factor, produced by [`partial_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    factor: Factor,
    matrix: DMatrix<C64>,
}

impl ReducedState {
    pub fn new(factor: Factor, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidState("reduced state must be square".into()));
        }
        Ok(Self { factor, matrix })
    }

    /// Fock state `|l⟩` on `dim` levels.
    pub fn fock(factor: Factor, dim: usize, l: usize) -> Result<Self> {
        if l >= dim {
            return Err(Error::Domain(format!("Fock level {l} needs more than {dim} levels")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(l, l)] = ONE;
        Self::new(factor, m)
    }

    /// Truncated Bose–Einstein state with mean occupation `n_th` before
    /// truncation, renormalized on `dim` levels.
    pub fn thermal(factor: Factor, dim: usize, n_th: f64) -> Result<Self> {
        if !(n_th >= 0.0) || dim == 0 {
            return Err(Error::Domain(format!("invalid thermal occupation {n_th}")));
        }
        let ratio = n_th / (n_th + 1.0);
        let weights: Vec<f64> = (0..dim).map(|l| ratio.powi(l as i32)).collect();
        let norm: f64 = weights.iter().sum();
        let m = DMatrix::from_fn(
            dim,
            dim,
            |i, j| {
                if i == j {
                    C64::new(weights[i] / norm, 0.0)
                } else {
                    ZERO
                }
            },
        );
        Self::new(factor, m)
    }

    pub fn factor(&self) -> Factor {
        self.factor
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// `Tr(Aρ)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
    op.space.check_same(&rho.space)?;
    let d = op.space.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += op.matrix[(i, j)] * rho.matrix[(j, i)];
        }
    }
    Ok(acc)
}

/// Traces out the two factors other than `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: Factor) -> ReducedState {
    let s = rho.space;
    let dims = [2, s.cav_dim(), s.mech_dim()];
    let slot = match keep {
        Factor::Atom => 0,
        Factor::Cavity => 1,
        Factor::Mechanics => 2,
    };
    let n = dims[slot];
    let mut out = DMatrix::zeros(n, n);
    let d = s.dim();
    let split = |i: usize| {
        let l = i % dims[2];
        let k = (i / dims[2]) % dims[1];
        let a = i / (dims[1] * dims[2]);
        [a, k, l]
    };
    for i in 0..d {
        let li = split(i);
        for j in 0..d {
            let lj = split(j);
            let traced_equal = (0..3).all(|f| f == slot || li[f] == lj[f]);
            if traced_equal {
                out[(li[slot], lj[slot])] += rho.matrix[(i, j)];
            }
        }
    }
    ReducedState {
        factor: keep,
        matrix: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(k: usize, l: usize) -> HilbertSpace {
        HilbertSpace::new(k, l).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(sp(3, 4).dim(), 40);
        assert_eq!(sp(1, 1).dim(), 8);
        assert_eq!(sp(4, 30).dim(), 310);
        assert!(matches!(HilbertSpace::new(0, 3), Err(Error::InvalidTruncation(_))));
        assert!(matches!(HilbertSpace::new(2, 0), Err(Error::InvalidTruncation(_))));
    }

    #[test]
    fn index_roundtrip() {
        let s = sp(2, 3);
        for i in 0..s.dim() {
            let (a, k, l) = s.labels(i);
            assert_eq!(s.index(a, k, l), i);
        }
        assert_eq!(s.index(AtomState::Excited, 0, 0), 12);
        assert_eq!(s.index(AtomState::Ground, 1, 2), 6);
    }

    #[test]
    fn cavity_lowering_elements() {
        let s = sp(2, 1);
        let a = Operator::elementary(s, Elementary::CavAnnihilate);
        for (i, j, v) in a.nonzeros(0.0) {
            let (ai, ki, li) = s.labels(i);
            let (aj, kj, lj) = s.labels(j);
            assert_eq!((ai, li), (aj, lj));
            assert_eq!(ki + 1, kj);
            assert!((v.re - (kj as f64).sqrt()).abs() < 1e-15 && v.im == 0.0);
        }
        assert_eq!(a.nonzeros(0.0).len(), 2 * 2 * 2);
    }

    #[test]
    fn sigma_z_spectrum() {
        let s = sp(2, 2);
        let z = Operator::elementary(s, Elementary::AtomSigmaZ);
        let ev = z.matrix().symmetric_eigenvalues();
        let plus = ev.iter().filter(|x| (**x - 1.0).abs() < 1e-12).count();
        let minus = ev.iter().filter(|x| (**x + 1.0).abs() < 1e-12).count();
        assert_eq!((plus, minus), (s.dim() / 2, s.dim() / 2));
    }

    #[test]
    fn phonon_number_spectrum() {
        let s = sp(1, 4);
        let b = Operator::elementary(s, Elementary::MechAnnihilate);
        let n = b.dagger().mul(&b).unwrap();
        let mut ev: Vec<f64> = n.matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let expect: Vec<f64> = (0..=4).map(|x| x as f64).collect();
        assert_eq!(ev.len(), expect.len());
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_commutator() {
        let s = sp(1, 1);
        let p = Operator::elementary(s, Elementary::AtomSigmaPlus);
        let m = Operator::elementary(s, Elementary::AtomSigmaMinus);
        let z = Operator::elementary(s, Elementary::AtomSigmaZ);
        assert!(p.commutator(&m).unwrap().sub(&z).unwrap().max_abs() < 1e-15);
        let x = Operator::elementary(s, Elementary::AtomSigmaX);
        let y = Operator::elementary(s, Elementary::AtomSigmaY);
        // [σx, σy] = 2iσz
        let lhs = x.commutator(&y).unwrap();
        assert!(lhs.sub(&z.scale(C64::new(0.0, 2.0))).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn truncated_boson_commutator() {
        let s = sp(3, 2);
        let a = Operator::elementary(s, Elementary::CavAnnihilate);
        let c = a.commutator(&a.dagger()).unwrap();
        for i in 0..s.dim() {
            let (_, k, _) = s.labels(i);
            let expect = if k == 3 { -3.0 } else { 1.0 };
            assert!((c.matrix()[(i, i)].re - expect).abs() < 1e-12);
        }
        let off = c.matrix().clone() - DMatrix::from_diagonal(&c.matrix().diagonal());
        assert!(max_abs(&off) < 1e-15);
    }

    #[test]
    fn dagger_of_scaled() {
        let s = sp(2, 2);
        let a = Operator::elementary(s, Elementary::CavAnnihilate);
        let lhs = a.scale(I).dagger();
        let rhs = a.dagger().scale(-I);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn space_mismatch() {
        let a = Operator::identity(sp(1, 1));
        let b = Operator::identity(sp(1, 2));
        assert!(matches!(a.add(&b), Err(Error::IncompatibleSpace { .. })));
        assert!(matches!(a.commutator(&b), Err(Error::IncompatibleSpace { .. })));
        let rho = DensityMatrix::basis(sp(1, 2), AtomState::Ground, 0, 0).unwrap();
        assert!(expectation(&a, &rho).is_err());
    }

    #[test]
    fn basic_expectations() {
        let s = sp(2, 3);
        let rho = DensityMatrix::basis(s, AtomState::Ground, 0, 0).unwrap();
        assert!((expectation(&Operator::identity(s), &rho).unwrap() - ONE).norm() < 1e-15);
        let z = Operator::elementary(s, Elementary::AtomSigmaZ);
        assert!((expectation(&z, &rho).unwrap() + ONE).norm() < 1e-15);
    }

    #[test]
    fn thermal_phonon_number() {
        let s = sp(1, 30);
        let n_th = 3.45;
        let mech = ReducedState::thermal(Factor::Mechanics, 31, n_th).unwrap();
        let rho = DensityMatrix::ground_optics(s, mech.matrix()).unwrap();
        let b = Operator::elementary(s, Elementary::MechAnnihilate);
        let n = expectation(&b.dagger().mul(&b).unwrap(), &rho).unwrap();
        // truncated geometric series, summed independently
        let r: f64 = n_th / (n_th + 1.0);
        let (mut num, mut den) = (0.0, 0.0);
        for l in 0..=30 {
            num += l as f64 * r.powi(l);
            den += r.powi(l);
        }
        assert!((n.re - num / den).abs() < 1e-12);
        assert!((n.re - n_th).abs() / n_th < 1e-2);
        assert!(n.im.abs() < 1e-14);
    }

    #[test]
    fn partial_trace_of_product() {
        let s = sp(2, 3);
        let rho = DensityMatrix::basis(s, AtomState::Ground, 0, 2).unwrap();
        let m = rho.partial_trace(Factor::Mechanics);
        let want = ReducedState::fock(Factor::Mechanics, 4, 2).unwrap();
        assert_eq!(m.matrix(), want.matrix());

        let mech = ReducedState::thermal(Factor::Mechanics, 4, 0.7).unwrap();
        let mut ac = DMatrix::zeros(6, 6);
        ac[(1, 1)] = C64::new(0.25, 0.0);
        ac[(4, 4)] = C64::new(0.75, 0.0);
        ac[(1, 4)] = C64::new(0.1, 0.2);
        ac[(4, 1)] = C64::new(0.1, -0.2);
        let rho = DensityMatrix::product(s, &ac, mech.matrix()).unwrap();
        let m = rho.partial_trace(Factor::Mechanics);
        assert!(max_abs(&(m.matrix() - mech.matrix())) < 1e-15);
        let atom = rho.partial_trace(Factor::Atom);
        assert!((atom.matrix()[(0, 0)].re - 0.25).abs() < 1e-15);
        assert!((atom.matrix()[(1, 1)].re - 0.75).abs() < 1e-15);
        assert!((atom.matrix()[(0, 1)] - C64::new(0.1, 0.2)).norm() < 1e-15);
        let cav = rho.partial_trace(Factor::Cavity);
        assert!((cav.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_states_rejected() {
        let s = sp(1, 1);
        let mut m = DMatrix::<C64>::identity(8, 8) * C64::new(0.125, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.01);
        assert!(DensityMatrix::new(s, m).is_err());
        let m = DMatrix::<C64>::identity(8, 8) * C64::new(0.2, 0.0);
        assert!(DensityMatrix::new(s, m).is_err());
        let mut m = DMatrix::<C64>::zeros(8, 8);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(s, m).is_err());
    }
}
