//! Master-equation generator, time evolution and steady state.
//!
//! Density matrices are column-stacked, `vec(ρ)[i + j·D] = ρ_ij`, so that
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`. The generator is assembled in the frame
//! rotating at the pump frequency:
//!
//! ```text
//! L(ρ) = −i[H_rot, ρ] + γ_ac D[a]ρ + γ_ac D[σ₋]ρ
//!        + n_th γ_m D[b†]ρ + (n_th + 1) γ_m D[b]ρ
//!        + F_inc (D[J₊]ρ + D[J₋]ρ),      J_± = |±⁽¹⁾⟩⟨g, 0| ⊗ 1_mech
//! D[o]ρ = oρo† − ½(o†oρ + ρo†o)
//! ```

pub mod integrator;
pub mod sparse;
mod steady;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Elementary, HilbertSpace, Operator, C64, I, ONE, ZERO};
use crate::model::{hamiltonian_lab, hamiltonian_rotating, ModelParams};
use crate::observables::{DiagonalObservables, G2_FLOOR};

pub use integrator::{Rhs, StepperOptions, StepperStats};
pub use sparse::CsrMatrix;
pub use steady::{
    steady_state, steady_state_with, SteadyMethod, SteadyOptions, SteadyState, DIRECT_LIMIT, STEADY_RESIDUAL_TOL,
};

/// Linear map on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    space: HilbertSpace,
    action: CsrMatrix,
}

fn sparse_entries(op: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..op.ncols() {
        for i in 0..op.nrows() {
            let v = op[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Triplets of `Bᵀ ⊗ A` (the map `ρ ↦ AρB`), scaled by `c`.
fn sandwich(a: &DMatrix<C64>, b: &DMatrix<C64>, c: C64, d: usize, out: &mut Vec<(usize, usize, C64)>) {
    let ea = sparse_entries(a);
    let eb = sparse_entries(b);
    for &(l, j, bv) in &eb {
        // (Bᵀ)_{j l} = B_{l j}
        for &(i, k, av) in &ea {
            out.push((i + j * d, k + l * d, c * bv * av));
        }
    }
}

impl Superoperator {
    pub fn zero(space: HilbertSpace) -> Self {
        let n = space.dim() * space.dim();
        Self {
            space,
            action: CsrMatrix::zeros(n, n),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.action
    }

    fn from_triplets(space: HilbertSpace, t: Vec<(usize, usize, C64)>) -> Self {
        let n = space.dim() * space.dim();
        Self {
            space,
            action: CsrMatrix::from_triplets(n, n, t),
        }
    }

    /// `ρ ↦ −i[H, ρ]`.
    pub fn hamiltonian(h: &Operator) -> Self {
        let s = h.space();
        let d = s.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let mut t = Vec::new();
        sandwich(h.matrix(), &id, -I, d, &mut t);
        sandwich(&id, h.matrix(), I, d, &mut t);
        Self::from_triplets(s, t)
    }

    /// `ρ ↦ [X, ρ]`.
    pub fn commutator_with(x: &Operator) -> Self {
        let s = x.space();
        let d = s.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let mut t = Vec::new();
        sandwich(x.matrix(), &id, ONE, d, &mut t);
        sandwich(&id, x.matrix(), -ONE, d, &mut t);
        Self::from_triplets(s, t)
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.space != other.space {
            return Err(Error::IncompatibleSpace {
                left: self.space.to_string(),
                right: other.space.to_string(),
            });
        }
        Ok(Self {
            space: self.space,
            action: self.action.add(&other.action),
        })
    }

    pub fn scale(&self, c: C64) -> Superoperator {
        Self {
            space: self.space,
            action: self.action.scale(c),
        }
    }

    pub fn apply_vec(&self, x: &[C64], y: &mut [C64]) {
        self.action.mul_vec(x, y);
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.space.dim();
        let x: Vec<C64> = rho.as_slice().to_vec();
        let mut y = vec![ZERO; d * d];
        self.apply_vec(&x, &mut y);
        DMatrix::from_vec(d, d, y)
    }
}

/// `rate · D[jump]`.
pub fn dissipator(jump: &Operator, rate: f64) -> Result<Superoperator> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!(
            "dissipation rate must be non-negative, got {rate}"
        )));
    }
    let s = jump.space();
    if rate == 0.0 {
        return Ok(Superoperator::zero(s));
    }
    let d = s.dim();
    let j = jump.matrix();
    let jd = j.adjoint();
    let jdj = &jd * j;
    let id = DMatrix::<C64>::identity(d, d);
    let r = C64::new(rate, 0.0);
    let mut t = Vec::new();
    sandwich(j, &jd, r, d, &mut t);
    sandwich(&jdj, &id, -r * 0.5, d, &mut t);
    sandwich(&id, &jdj, -r * 0.5, d, &mut t);
    Ok(Superoperator::from_triplets(s, t))
}

/// Incoherent pump jump operators `|±⁽¹⁾⟩⟨g, 0| ⊗ 1_mech` with
/// `|±⁽¹⁾⟩ = (|g, 1⟩ ± i|e, 0⟩)/√2`.
pub fn polariton_pump_jumps(s: HilbertSpace) -> [Operator; 2] {
    let ac = 2 * s.cav_dim();
    let g0 = 0;
    let g1 = 1;
    let e0 = s.cav_dim();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [1.0, -1.0].map(|sign| {
        let mut m = DMatrix::<C64>::zeros(ac, ac);
        m[(g1, g0)] = C64::new(r, 0.0);
        m[(e0, g0)] = C64::new(0.0, sign * r);
        Operator::atom_cavity(s, &m).expect("atom-cavity dimensions match")
    })
}

/// Dissipative part of the generator (identical in lab and rotating frame).
pub fn dissipators(p: &ModelParams, s: HilbertSpace) -> Result<Superoperator> {
    let a = Operator::elementary(s, Elementary::CavAnnihilate);
    let sm = Operator::elementary(s, Elementary::AtomSigmaMinus);
    let b = Operator::elementary(s, Elementary::MechAnnihilate);
    let mut l = dissipator(&a, p.gamma_ac)?;
    l = l.add(&dissipator(&sm, p.gamma_ac)?)?;
    l = l.add(&dissipator(&b.dagger(), p.n_th * p.gamma_m)?)?;
    l = l.add(&dissipator(&b, (p.n_th + 1.0) * p.gamma_m)?)?;
    if p.f_inc > 0.0 {
        for j in polariton_pump_jumps(s) {
            l = l.add(&dissipator(&j, p.f_inc)?)?;
        }
    }
    Ok(l)
}

/// Full time-independent generator in the pump rotating frame.
pub fn liouvillian(p: &ModelParams, s: HilbertSpace) -> Result<Superoperator> {
    p.validate()?;
    Superoperator::hamiltonian(&hamiltonian_rotating(p, s)).add(&dissipators(p, s)?)
}

/// Time-dependent lab-frame generator with the explicit pump
/// `V(t) = i F_p (a† e^{−iω_p t} − a e^{iω_p t})`.
///
/// Only meant for small spaces: it carries the full `ω_c` time scale.
#[derive(Debug, Clone)]
pub struct LabFrameGenerator {
    base: Superoperator,
    raise: Superoperator,
    lower: Superoperator,
    omega_p: f64,
}

impl LabFrameGenerator {
    pub fn new(p: &ModelParams, s: HilbertSpace) -> Result<Self> {
        p.validate()?;
        let base = Superoperator::hamiltonian(&hamiltonian_lab(p, s)).add(&dissipators(p, s)?)?;
        let a = Operator::elementary(s, Elementary::CavAnnihilate);
        // −i[V, ρ] = F([a†, ρ] e^{−iωt} − [a, ρ] e^{iωt})
        let raise = Superoperator::commutator_with(&a.dagger()).scale(C64::new(p.f_p, 0.0));
        let lower = Superoperator::commutator_with(&a).scale(C64::new(-p.f_p, 0.0));
        Ok(Self {
            base,
            raise,
            lower,
            omega_p: p.omega_p,
        })
    }
}

/// Anything that can drive [`evolve`].
pub trait Generator: Rhs {
    fn space(&self) -> HilbertSpace;
}

impl Rhs for Superoperator {
    fn dim(&self) -> usize {
        self.action.nrows()
    }

    fn eval(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.action.mul_vec(y, dy);
    }
}

impl Generator for Superoperator {
    fn space(&self) -> HilbertSpace {
        self.space
    }
}

impl Rhs for LabFrameGenerator {
    fn dim(&self) -> usize {
        self.base.action.nrows()
    }

    fn eval(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let n = y.len();
        self.base.action.mul_vec(y, dy);
        let mut tmp = vec![ZERO; n];
        let phase = C64::new(0.0, -self.omega_p * t).exp();
        self.raise.action.mul_vec(y, &mut tmp);
        for (d, v) in dy.iter_mut().zip(&tmp) {
            *d += v * phase;
        }
        self.lower.action.mul_vec(y, &mut tmp);
        let conj = phase.conj();
        for (d, v) in dy.iter_mut().zip(&tmp) {
            *d += v * conj;
        }
    }
}

impl Generator for LabFrameGenerator {
    fn space(&self) -> HilbertSpace {
        self.base.space
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub stepper: StepperOptions,
    /// Largest tolerated `|Tr ρ − 1|` after any step.
    pub trace_tol: f64,
    pub store_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            stepper: StepperOptions::default(),
            trace_tol: 1e-8,
            store_states: false,
        }
    }
}

/// Observables sampled along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub photon_number: Vec<f64>,
    pub phonon_number: Vec<f64>,
    pub atom_excitation: Vec<f64>,
    /// `NaN` where the phonon occupation is below the statistics floor.
    pub g2_phonon: Vec<f64>,
    pub trace_residual: Vec<f64>,
    /// Weight outside the `n ≤ 1` polariton blocks.
    pub multi_polariton_population: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
    #[serde(skip)]
    pub stats: StepperStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn vec_trace(y: &[C64], d: usize) -> C64 {
    (0..d).map(|i| y[i + i * d]).sum()
}

/// Integrates `dρ/dt = L(ρ)` from `t = times[0]`'s origin at 0 and records
/// observables at every requested time.
pub fn evolve<G: Generator>(gen: &G, rho0: &DensityMatrix, times: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let s = gen.space();
    if rho0.space() != s {
        return Err(Error::IncompatibleSpace {
            left: s.to_string(),
            right: rho0.space().to_string(),
        });
    }
    rho0.validate()?;
    if times.first().is_some_and(|&t| t < 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "times must be non-negative and strictly increasing".into(),
        ));
    }
    let d = s.dim();
    let diag = DiagonalObservables::new(s);
    let multi: Vec<usize> = (0..d)
        .filter(|&i| {
            let (atom, k, _) = s.labels(i);
            atom.index() + k >= 2
        })
        .collect();
    let mut traj = Trajectory {
        times: Vec::with_capacity(times.len()),
        photon_number: Vec::with_capacity(times.len()),
        phonon_number: Vec::with_capacity(times.len()),
        atom_excitation: Vec::with_capacity(times.len()),
        g2_phonon: Vec::with_capacity(times.len()),
        trace_residual: Vec::with_capacity(times.len()),
        multi_polariton_population: Vec::with_capacity(times.len()),
        states: Vec::new(),
        stats: StepperStats::default(),
    };
    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let trace_tol = opts.trace_tol;
    let stats = integrate_with(gen, &mut y, times, &opts.stepper, trace_tol, |t, y| {
        let populations: Vec<f64> = (0..d).map(|i| y[i + i * d].re).collect();
        let (photons, phonons, atom, factorial) = diag.means(&populations);
        traj.times.push(t);
        traj.photon_number.push(photons);
        traj.phonon_number.push(phonons);
        traj.atom_excitation.push(atom);
        traj.g2_phonon.push(if phonons > G2_FLOOR {
            factorial / (phonons * phonons)
        } else {
            f64::NAN
        });
        traj.trace_residual.push((vec_trace(y, d) - ONE).norm());
        traj.multi_polariton_population
            .push(multi.iter().map(|&i| populations[i]).sum());
        if opts.store_states {
            traj.states.push(DensityMatrix::from_matrix_unchecked(
                s,
                DMatrix::from_column_slice(d, d, y),
            ));
        }
        Ok(())
    })?;
    traj.stats = stats;
    Ok(traj)
}

fn integrate_with<G, O>(
    gen: &G,
    y: &mut Vec<C64>,
    times: &[f64],
    opts: &StepperOptions,
    trace_tol: f64,
    observe: O,
) -> Result<StepperStats>
where
    G: Generator,
    O: FnMut(f64, &[C64]) -> Result<()>,
{
    let d = gen.space().dim();
    integrator::integrate(gen, 0.0, y, times, opts, observe, |y| {
        (vec_trace(y, d) - ONE).norm() <= trace_tol
    })
}

/// Propagates `rho0` to time `t` and returns the final state.
pub fn propagate<G: Generator>(gen: &G, rho0: &DensityMatrix, t: f64, opts: &EvolveOptions) -> Result<DensityMatrix> {
    let s = gen.space();
    let d = s.dim();
    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    integrate_with(gen, &mut y, &[t], &opts.stepper, opts.trace_tol, |_, _| Ok(()))?;
    Ok(DensityMatrix::from_matrix_unchecked(
        s,
        DMatrix::from_column_slice(d, d, &y),
    ))
}

/// Population of each polariton-number block.
pub fn block_populations(rho: &DensityMatrix) -> Vec<f64> {
    let s = rho.space();
    let mut pops = vec![0.0; s.cav_cutoff() + 2];
    for i in 0..s.dim() {
        let (atom, k, _) = s.labels(i);
        pops[k + atom.index()] += rho.matrix()[(i, i)].re;
    }
    pops
}

/// Largest coherence between different polariton-number blocks.
pub fn interblock_coherence(rho: &DensityMatrix) -> f64 {
    let s = rho.space();
    let block = |i: usize| {
        let (atom, k, _) = s.labels(i);
        k + atom.index()
    };
    let mut worst = 0.0_f64;
    for i in 0..s.dim() {
        for j in 0..s.dim() {
            if block(i) != block(j) {
                worst = worst.max(rho.matrix()[(i, j)].norm());
            }
        }
    }
    worst
}
