//! Stationary state of a Liouvillian.
//!
//! Small systems use a bordered sparse LU: one row of `L` is replaced by the
//! trace functional, the system `B x = e₀` is solved and refined once.
//!
//! Above [`DIRECT_LIMIT`] unknowns the LU fill-in outgrows memory, so the
//! same bordered problem is solved by restarted GMRES, right-preconditioned
//! with an exact solve of the part of `L` that conserves the polariton-number
//! difference `N − N'` between the two sides of `ρ`. That part (everything
//! but the coherent pump) is block triangular over the `(N, N')` sectors, so
//! its solve is a sequence of small sparse LU solves.

use std::collections::BTreeSet;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::DMatrix;

use super::{CsrMatrix, Superoperator};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, C64, ONE, ZERO};

/// Required bound on `‖L(ρ)‖_max` for an accepted solution.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

/// Largest `D²` handled by the direct bordered LU in [`SteadyMethod::Auto`].
pub const DIRECT_LIMIT: usize = 12_000;

/// A traceless direction with `‖Lσ‖/‖σ‖` below this fraction of `‖L‖_∞`
/// marks the kernel as degenerate.
const DEGENERACY_RATIO: f64 = 1e-11;

const INVERSE_ITERATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteadyMethod {
    #[default]
    Auto,
    Direct,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub method: SteadyMethod,
    /// GMRES stops once `‖L(ρ)‖₂` falls below this.
    pub krylov_tol: f64,
    /// Initial GMRES restart length, lengthened automatically when a pass stalls.
    pub restart: usize,
    pub max_iterations: usize,
    /// Skip the uniqueness probe (used by callers that already checked it).
    pub check_kernel: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            method: SteadyMethod::Auto,
            krylov_tol: 1e-12,
            restart: 80,
            max_iterations: 4000,
            check_kernel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖L(ρ)‖_max`.
    pub residual: f64,
    /// `‖Lσ‖ / ‖σ‖` for the traceless direction found by inverse iteration;
    /// `NaN` when the probe was skipped.
    pub kernel_check_residual: f64,
    /// GMRES iterations, zero for the direct solve.
    pub iterations: usize,
}

fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn max_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn vec_trace(x: &[C64], d: usize) -> C64 {
    (0..d).map(|i| x[i + i * d]).sum()
}

fn all_finite(x: &[C64]) -> bool {
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

fn lu_of(n: usize, t: &[Triplet<usize, usize, C64>]) -> Result<Lu<usize, C64>> {
    let m = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, t).map_err(|e| Error::Numerical {
        message: format!("sparse assembly failed: {e:?}"),
        residual: f64::NAN,
    })?;
    m.sp_lu().map_err(|e| Error::Numerical {
        message: format!("sparse LU failed: {e:?}"),
        residual: f64::NAN,
    })
}

fn lu_solve(lu: &Lu<usize, C64>, rhs: &[C64]) -> Vec<C64> {
    let b = Mat::<C64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// Solves `L(ρ) = 0`, `Tr ρ = 1` and checks that the kernel of `L` is
/// one-dimensional.
pub fn steady_state(l: &Superoperator) -> Result<SteadyState> {
    steady_state_with(l, &SteadyOptions::default())
}

pub fn steady_state_with(l: &Superoperator, opts: &SteadyOptions) -> Result<SteadyState> {
    faer::set_global_parallelism(faer::Par::Seq);
    let n = l.matrix().nrows();
    let direct = match opts.method {
        SteadyMethod::Direct => true,
        SteadyMethod::Krylov => false,
        SteadyMethod::Auto => n <= DIRECT_LIMIT,
    };
    if direct {
        direct_solve(l, opts)
    } else {
        krylov_solve(l, opts)
    }
}

/// Hermitizes, normalizes and validates a candidate `vec(ρ)`.
fn finish(l: &Superoperator, x: &[C64]) -> Result<(DMatrix<C64>, f64)> {
    let d = l.space().dim();
    if !all_finite(x) {
        return Err(Error::Numerical {
            message: "steady-state solve produced non-finite values".into(),
            residual: f64::INFINITY,
        });
    }
    let m = DMatrix::from_column_slice(d, d, x);
    let mut m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = m.trace();
    m /= tr;
    let mut lx = vec![ZERO; d * d];
    l.apply_vec(m.as_slice(), &mut lx);
    let residual = max_norm(&lx);
    if !(residual < STEADY_RESIDUAL_TOL) {
        return Err(Error::Numerical {
            message: "steady-state residual above tolerance".into(),
            residual,
        });
    }
    Ok((m, residual))
}

fn check_degeneracy(l: &Superoperator, ratio: f64) -> Result<()> {
    if ratio < DEGENERACY_RATIO * l.matrix().norm_inf().max(1.0) {
        return Err(Error::DegenerateSteadyState { residual: ratio });
    }
    Ok(())
}

/// Deterministic generic start vector.
fn probe_vector(n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let t = k as f64 + 1.0;
            C64::new(
                (t * 0.618_033_988_749_895).fract() - 0.5,
                (t * 0.414_213_562_373_095).fract() - 0.5,
            )
        })
        .collect()
}

/// Removes the trace along `rho` so that `v` stays in the traceless subspace.
fn make_traceless(v: &mut [C64], rho: &[C64], d: usize) {
    let tr = vec_trace(v, d);
    axpy(v, -tr, rho);
}

fn direct_solve(l: &Superoperator, opts: &SteadyOptions) -> Result<SteadyState> {
    let d = l.space().dim();
    let n = d * d;
    let mut t: Vec<Triplet<usize, usize, C64>> = l
        .matrix()
        .triplets()
        .filter(|&(r, _, _)| r != 0)
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    t.extend((0..d).map(|i| Triplet::new(0, i + i * d, ONE)));
    let lu = lu_of(n, &t)?;

    let mut e0 = vec![ZERO; n];
    e0[0] = ONE;
    let mut x = lu_solve(&lu, &e0);
    if !all_finite(&x) {
        return Err(Error::Numerical {
            message: "bordered system is singular".into(),
            residual: f64::INFINITY,
        });
    }
    // one step of iterative refinement
    let mut bx = vec![ZERO; n];
    l.apply_vec(&x, &mut bx);
    bx[0] = vec_trace(&x, d);
    let r: Vec<C64> = e0.iter().zip(&bx).map(|(a, b)| a - b).collect();
    let dx = lu_solve(&lu, &r);
    axpy(&mut x, ONE, &dx);

    let (m, residual) = finish(l, &x)?;
    let x: Vec<C64> = m.as_slice().to_vec();

    let mut kernel_check_residual = f64::NAN;
    if opts.check_kernel {
        // A second stationary direction would make the bordered matrix
        // singular, so inverse iteration collapses onto it.
        let mut v = probe_vector(n);
        make_traceless(&mut v, &x, d);
        let mut lv = vec![ZERO; n];
        for _ in 0..INVERSE_ITERATIONS + 1 {
            let nv = norm2(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            v = lu_solve(&lu, &v);
            if !all_finite(&v) {
                return Err(Error::DegenerateSteadyState { residual: 0.0 });
            }
            make_traceless(&mut v, &x, d);
        }
        l.apply_vec(&v, &mut lv);
        kernel_check_residual = norm2(&lv) / norm2(&v);
        check_degeneracy(l, kernel_check_residual)?;
    }

    Ok(SteadyState {
        rho: DensityMatrix::new(l.space(), m)?,
        residual,
        kernel_check_residual,
        iterations: 0,
    })
}

/// One strongly connected group of `(N, N')` sectors of the pump-free part.
struct Block {
    indices: Vec<usize>,
    lu: Lu<usize, C64>,
    /// Local row replaced by the trace functional (closed population sector).
    gauge_row: Option<usize>,
}

/// Exact solver of `P z = r` on traceless `r`, with `Tr z = 0`, where `P`
/// keeps only the sector-conserving entries of `L`.
struct SectorPreconditioner {
    p: CsrMatrix,
    blocks: Vec<Block>,
    /// Owning block of every unknown.
    owner: Vec<usize>,
    /// Unit-trace kernel vector of `P`.
    kernel: Vec<C64>,
    d: usize,
}

/// Tarjan's algorithm; components come out dependencies first.
fn strongly_connected(adj: &[BTreeSet<usize>], active: &[bool]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [BTreeSet<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for &w in s.adj[v].iter() {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if active[v] && s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

impl SectorPreconditioner {
    fn new(l: &Superoperator) -> Result<Self> {
        let s = l.space();
        let d = s.dim();
        let n = d * d;
        let np = s.cav_cutoff() + 2;
        let npol: Vec<usize> = (0..d)
            .map(|i| {
                let (a, k, _) = s.labels(i);
                a.index() + k
            })
            .collect();
        let sector = |v: usize| npol[v % d] * np + npol[v / d];
        let delta = |v: usize| npol[v % d] as i64 - npol[v / d] as i64;

        let kept: Vec<(usize, usize, C64)> = l
            .matrix()
            .triplets()
            .filter(|&(r, c, _)| delta(r) == delta(c))
            .collect();
        let nsec = np * np;
        let mut adj = vec![BTreeSet::new(); nsec];
        let mut active = vec![false; nsec];
        for v in 0..n {
            active[sector(v)] = true;
        }
        for &(r, c, _) in &kept {
            let (sr, sc) = (sector(r), sector(c));
            if sr != sc {
                adj[sr].insert(sc);
            }
        }
        let comps = strongly_connected(&adj, &active);
        let mut comp_of = vec![usize::MAX; nsec];
        for (ci, comp) in comps.iter().enumerate() {
            for &sec in comp {
                comp_of[sec] = ci;
            }
        }
        let owner: Vec<usize> = (0..n).map(|v| comp_of[sector(v)]).collect();
        // closed components: nothing else depends on them
        let mut depended = vec![false; comps.len()];
        for (sr, deps) in adj.iter().enumerate() {
            for &sc in deps {
                if comp_of[sr] != comp_of[sc] {
                    depended[comp_of[sc]] = true;
                }
            }
        }
        let has_diagonal = |ci: usize| comps[ci].iter().any(|&sec| sec / np == sec % np);
        let closed: Vec<usize> = (0..comps.len())
            .filter(|&ci| !depended[ci] && has_diagonal(ci))
            .collect();
        if closed.len() != 1 {
            return Err(Error::Numerical {
                message: format!("sector preconditioner found {} closed population sectors", closed.len()),
                residual: f64::NAN,
            });
        }
        let sink = closed[0];

        let p = CsrMatrix::from_triplets(n, n, kept);
        let mut local = vec![usize::MAX; n];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
        for v in 0..n {
            local[v] = members[owner[v]].len();
            members[owner[v]].push(v);
        }
        let mut blocks = Vec::with_capacity(comps.len());
        for (ci, indices) in members.into_iter().enumerate() {
            let gauge_row = (ci == sink).then(|| {
                let first_diag = indices
                    .iter()
                    .copied()
                    .find(|&v| v % d == v / d)
                    .expect("sink holds populations");
                local[first_diag]
            });
            let mut t = Vec::new();
            for (li, &v) in indices.iter().enumerate() {
                if Some(li) == gauge_row {
                    for &w in &indices {
                        if w % d == w / d {
                            t.push(Triplet::new(li, local[w], ONE));
                        }
                    }
                    continue;
                }
                for (c, val) in p.row(v) {
                    if owner[c] == ci {
                        t.push(Triplet::new(li, local[c], val));
                    }
                }
            }
            let lu = lu_of(indices.len(), &t)?;
            blocks.push(Block { indices, lu, gauge_row });
        }

        let mut pre = Self {
            p,
            blocks,
            owner,
            kernel: vec![ZERO; n],
            d,
        };
        let sink_block = &pre.blocks[sink];
        let mut rhs = vec![ZERO; sink_block.indices.len()];
        rhs[sink_block.gauge_row.expect("sink is gauged")] = ONE;
        let z = lu_solve(&sink_block.lu, &rhs);
        for (&v, zi) in sink_block.indices.iter().zip(z) {
            pre.kernel[v] = zi;
        }
        if !all_finite(&pre.kernel) {
            return Err(Error::Numerical {
                message: "pump-free sector solve is singular".into(),
                residual: f64::INFINITY,
            });
        }
        Ok(pre)
    }

    fn apply(&self, r: &[C64], z: &mut [C64]) {
        z.iter_mut().for_each(|x| *x = ZERO);
        for (bi, b) in self.blocks.iter().enumerate() {
            let mut rhs: Vec<C64> = b
                .indices
                .iter()
                .map(|&v| {
                    let mut acc = r[v];
                    for (c, val) in self.p.row(v) {
                        if self.owner[c] != bi {
                            acc -= val * z[c];
                        }
                    }
                    acc
                })
                .collect();
            if let Some(g) = b.gauge_row {
                rhs[g] = ZERO;
            }
            let zb = lu_solve(&b.lu, &rhs);
            for (&v, zi) in b.indices.iter().zip(zb) {
                z[v] = zi;
            }
        }
        let tr = vec_trace(z, self.d);
        axpy(z, -tr, &self.kernel);
    }
}

struct GmresOutcome {
    x: Vec<C64>,
    iterations: usize,
    residual: f64,
}

/// Right-preconditioned restarted GMRES for `L x = b` on traceless vectors.
fn gmres(
    l: &Superoperator,
    pre: &SectorPreconditioner,
    b: &[C64],
    x0: Option<Vec<C64>>,
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresOutcome {
    let n = b.len();
    let mut w = vec![ZERO; n];
    let (mut x, mut r) = match x0 {
        Some(x) => {
            l.apply_vec(&x, &mut w);
            let r = b.iter().zip(&w).map(|(bi, wi)| bi - wi).collect();
            (x, r)
        }
        None => (vec![ZERO; n], b.to_vec()),
    };
    let mut beta = norm2(&r);
    let mut iterations = 0;
    let mut z = vec![ZERO; n];
    let mut stagnant = 0;
    while beta > tol && iterations < max_iterations {
        let m = restart.min(max_iterations - iterations).max(1);
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for j in 0..m {
            pre.apply(&v[j], &mut z);
            l.apply_vec(&z, &mut w);
            iterations += 1;
            // two passes of classical Gram–Schmidt
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(vi, &w);
                    h[i][j] += hij;
                    axpy(&mut w, -hij, vi);
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = C64::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * h[i][j] + sn[i].conj() * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                k_used = j;
                break;
            }
            cs[j] = a / den;
            sn[j] = bb / den;
            h[j][j] = C64::new(den, 0.0);
            h[j + 1][j] = ZERO;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            k_used = j + 1;
            if g[j + 1].norm() <= 0.1 * tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for kk in i + 1..k_used {
                acc -= h[i][kk] * y[kk];
            }
            y[i] = acc / h[i][i];
        }
        let mut update = vec![ZERO; n];
        for (yi, vi) in y.iter().zip(&v) {
            axpy(&mut update, *yi, vi);
        }
        pre.apply(&update, &mut z);
        axpy(&mut x, ONE, &z);
        l.apply_vec(&x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        let new_beta = norm2(&r);
        if !(new_beta < 0.5 * beta) {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        beta = new_beta;
        if stagnant >= 3 || !beta.is_finite() {
            break;
        }
    }
    GmresOutcome {
        x,
        iterations,
        residual: beta,
    }
}

/// Longest restart whose Krylov basis fits in about 2 GiB.
fn restart_cap(n: usize) -> usize {
    ((1usize << 31) / (16 * n.max(1))).saturating_sub(1)
}

fn krylov_solve(l: &Superoperator, opts: &SteadyOptions) -> Result<SteadyState> {
    let d = l.space().dim();
    let n = d * d;
    let pre = SectorPreconditioner::new(l)?;
    // ρ = ρ_P + x with L x = −L ρ_P and Tr x = 0
    let mut b = vec![ZERO; n];
    l.apply_vec(&pre.kernel, &mut b);
    b.iter_mut().for_each(|v| *v = -*v);
    // a short restart can stall on strongly driven cases; lengthen it and continue
    let mut restart = opts.restart;
    let mut out = gmres(l, &pre, &b, None, opts.krylov_tol, restart, opts.max_iterations);
    let mut iterations = out.iterations;
    while !(out.residual <= opts.krylov_tol) && out.residual.is_finite() {
        let next = (restart * 5 / 2).min(restart_cap(n));
        if next <= restart {
            break;
        }
        restart = next;
        out = gmres(l, &pre, &b, Some(out.x), opts.krylov_tol, restart, opts.max_iterations);
        iterations += out.iterations;
    }
    let mut x = pre.kernel.clone();
    axpy(&mut x, ONE, &out.x);
    let (m, residual) = finish(l, &x)?;
    let x: Vec<C64> = m.as_slice().to_vec();

    let mut kernel_check_residual = f64::NAN;
    if opts.check_kernel {
        let mut v = probe_vector(n);
        make_traceless(&mut v, &x, d);
        let mut lv = vec![ZERO; n];
        for _ in 0..INVERSE_ITERATIONS {
            let nv = norm2(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            // loose solves suffice: only the direction matters
            let solve = gmres(l, &pre, &v, None, 1e-6, restart, opts.max_iterations);
            v = solve.x;
            make_traceless(&mut v, &x, d);
        }
        l.apply_vec(&v, &mut lv);
        kernel_check_residual = norm2(&lv) / norm2(&v);
        check_degeneracy(l, kernel_check_residual)?;
    }

    Ok(SteadyState {
        rho: DensityMatrix::new(l.space(), m)?,
        residual,
        kernel_check_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomState, Elementary, Factor, HilbertSpace, Operator, ReducedState};
    use crate::lindblad::{dissipator, liouvillian};
    use crate::model::ModelParams;

    #[test]
    fn vacuum_is_stationary_for_uncoupled_decay() {
        let s = HilbertSpace::new(1, 3).unwrap();
        let p = ModelParams {
            g_ac: 0.0,
            g_cm: 0.0,
            f_p: 0.0,
            n_th: 0.0,
            ..Default::default()
        };
        let ss = steady_state(&liouvillian(&p, s).unwrap()).unwrap();
        let i0 = s.index(AtomState::Ground, 0, 0);
        assert!((ss.rho.matrix()[(i0, i0)] - ONE).norm() < 1e-10);
    }

    #[test]
    fn thermal_state_elementwise() {
        let s = HilbertSpace::new(1, 30).unwrap();
        let p = ModelParams {
            g_cm: 0.0,
            f_p: 0.0,
            ..Default::default()
        };
        for method in [SteadyMethod::Direct, SteadyMethod::Krylov] {
            let opts = SteadyOptions {
                method,
                ..Default::default()
            };
            let ss = steady_state_with(&liouvillian(&p, s).unwrap(), &opts).unwrap();
            let mech = ss.rho.partial_trace(Factor::Mechanics);
            let oracle = ReducedState::thermal(Factor::Mechanics, 31, p.n_th).unwrap();
            assert!(crate::hilbert::max_abs(&(mech.matrix() - oracle.matrix())) < 1e-8);
        }
    }

    #[test]
    fn krylov_agrees_with_direct_under_pump() {
        let s = HilbertSpace::new(1, 8).unwrap();
        let p = ModelParams {
            f_inc: 0.003,
            ..Default::default()
        };
        let l = liouvillian(&p, s).unwrap();
        let a = steady_state_with(
            &l,
            &SteadyOptions {
                method: SteadyMethod::Direct,
                ..Default::default()
            },
        )
        .unwrap();
        let b = steady_state_with(
            &l,
            &SteadyOptions {
                method: SteadyMethod::Krylov,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(a.rho.trace_distance(&b.rho).unwrap() < 1e-10);
        assert!(b.iterations > 0);
        assert!(b.kernel_check_residual > 1e-8);
    }

    #[test]
    fn two_decoupled_sectors_are_degenerate() {
        // pure mechanical damping leaves the optical populations conserved
        let s = HilbertSpace::new(1, 2).unwrap();
        let b = Operator::elementary(s, Elementary::MechAnnihilate);
        let l = dissipator(&b, 1.0).unwrap();
        assert!(matches!(
            steady_state(&l),
            Err(Error::DegenerateSteadyState { .. }) | Err(Error::Numerical { .. })
        ));
    }
}
