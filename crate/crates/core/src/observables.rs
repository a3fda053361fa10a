//! Occupations, phonon statistics, Wigner maps and cooling fits.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Factor, HilbertSpace, ReducedState, C64};
use crate::lindblad::{block_populations, Trajectory};

/// Below this mean phonon number `G₂` is reported as undefined.
pub const G2_FLOOR: f64 = 1e-8;

/// Diagonals of `a†a`, `b†b`, `σ₊σ₋` and `b†b†bb` in the product basis.
#[derive(Debug, Clone)]
pub(crate) struct DiagonalObservables {
    photons: Vec<f64>,
    phonons: Vec<f64>,
    atom: Vec<f64>,
    factorial: Vec<f64>,
}

impl DiagonalObservables {
    pub(crate) fn new(s: HilbertSpace) -> Self {
        let mut out = Self {
            photons: Vec::with_capacity(s.dim()),
            phonons: Vec::with_capacity(s.dim()),
            atom: Vec::with_capacity(s.dim()),
            factorial: Vec::with_capacity(s.dim()),
        };
        for i in 0..s.dim() {
            let (a, k, l) = s.labels(i);
            out.photons.push(k as f64);
            out.phonons.push(l as f64);
            out.atom.push(a.index() as f64);
            out.factorial.push((l * l.saturating_sub(1)) as f64);
        }
        out
    }

    /// `(⟨a†a⟩, ⟨b†b⟩, ⟨σ₊σ₋⟩, ⟨b†b†bb⟩)` from the populations.
    pub(crate) fn means(&self, populations: &[f64]) -> (f64, f64, f64, f64) {
        let dot = |w: &[f64]| w.iter().zip(populations).map(|(a, b)| a * b).sum::<f64>();
        (
            dot(&self.photons),
            dot(&self.phonons),
            dot(&self.atom),
            dot(&self.factorial),
        )
    }
}

fn populations(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.space().dim()).map(|i| rho.matrix()[(i, i)].re).collect()
}

/// `⟨b†b†bb⟩ / ⟨b†b⟩²` with the default floor.
pub fn g2_phonon(rho: &DensityMatrix) -> Result<f64> {
    g2_phonon_with_floor(rho, G2_FLOOR)
}

pub fn g2_phonon_with_floor(rho: &DensityMatrix, floor: f64) -> Result<f64> {
    let (_, n, _, f) = DiagonalObservables::new(rho.space()).means(&populations(rho));
    g2_from_moments(n, f, floor)
}

/// `G₂` of a single-mode state.
pub fn g2_reduced(rho: &ReducedState) -> Result<f64> {
    let (mut n, mut f) = (0.0, 0.0);
    for l in 0..rho.dim() {
        let p = rho.matrix()[(l, l)].re;
        n += l as f64 * p;
        f += (l * l.saturating_sub(1)) as f64 * p;
    }
    g2_from_moments(n, f, G2_FLOOR)
}

fn g2_from_moments(mean: f64, factorial: f64, floor: f64) -> Result<f64> {
    if !(mean > floor) {
        return Err(Error::UndefinedStatistics { mean, floor });
    }
    Ok(factorial / (mean * mean))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarObservables {
    pub phonon_number: f64,
    pub photon_number: f64,
    pub atom_excitation: f64,
    /// `None` when the phonon occupation is below [`G2_FLOOR`].
    pub g2_phonon: Option<f64>,
    /// Index `n` holds the weight of the polariton-number-`n` block.
    pub polariton_block_populations: Vec<f64>,
}

pub fn scalar_observables(rho: &DensityMatrix) -> ScalarObservables {
    let (photons, phonons, atom, f) = DiagonalObservables::new(rho.space()).means(&populations(rho));
    ScalarObservables {
        phonon_number: phonons,
        photon_number: photons,
        atom_excitation: atom,
        g2_phonon: g2_from_moments(phonons, f, G2_FLOOR).ok(),
        polariton_block_populations: block_populations(rho),
    }
}

/// Wigner quasi-probability on a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerMap {
    pub x_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    /// `values[(i, j)]` is `W(x_grid[i], p_grid[j])`.
    #[serde(skip)]
    pub values: DMatrix<f64>,
    pub min_value: f64,
    /// Trapezoidal integral over the grid.
    pub integral: f64,
    /// Largest imaginary part met before taking the real part.
    pub imaginary_residual: f64,
    pub warning: Option<String>,
}

/// Normalization error above which a [`WignerMap`] carries a warning.
pub const WIGNER_NORMALIZATION_TOL: f64 = 5e-2;

/// 81 points over `[−4.5, 4.5]`.
pub fn default_quadrature_grid() -> Vec<f64> {
    uniform_grid(-4.5, 4.5, 81)
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn trapezoid_weights(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (g[i + 1] - g[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Evaluates `W(x, p) = (1/π) Tr[ρ D(α) Π D(α)†]`, `α = (x + ip)/√2`.
///
/// The displacement is built in a padded Fock space from the
/// eigendecomposition of `b + b†`, so `W` integrates to one over the
/// `(x, p)` plane and the vacuum peaks at `1/π`.
pub fn wigner(rho: &ReducedState, x_grid: &[f64], p_grid: &[f64]) -> Result<WignerMap> {
    if rho.factor() == Factor::Atom {
        return Err(Error::Domain("Wigner map needs a bosonic mode".into()));
    }
    if x_grid.is_empty() || p_grid.is_empty() {
        return Err(Error::Domain("empty quadrature grid".into()));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) || p_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("quadrature grids must be strictly increasing".into()));
    }
    let dm = rho.dim();
    let to_alpha = std::f64::consts::FRAC_1_SQRT_2;
    let r_max = x_grid
        .iter()
        .flat_map(|x| p_grid.iter().map(move |p| (x * x + p * p).sqrt() * to_alpha))
        .fold(0.0, f64::max);
    let n_big = ((dm as f64).sqrt() + r_max + 3.0).powi(2).ceil() as usize + 10;
    let n_big = n_big.max(dm + 20);

    let mut quad = DMatrix::<f64>::zeros(n_big, n_big);
    for k in 0..n_big - 1 {
        let v = ((k + 1) as f64).sqrt();
        quad[(k, k + 1)] = v;
        quad[(k + 1, k)] = v;
    }
    let eig = SymmetricEigen::new(quad);
    let v = eig.eigenvectors;
    let lambda = eig.eigenvalues;
    let v_top = v.rows(0, dm).into_owned();
    let v_t = v.transpose();
    let parity: Vec<f64> = (0..n_big).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let rho_m = rho.matrix();

    let eval = |x: f64, p: f64| -> (f64, f64) {
        let r = (x * x + p * p).sqrt() * to_alpha;
        let theta = p.atan2(x);
        let phi = theta - std::f64::consts::FRAC_PI_2;
        // exp(i r (b + b†)) restricted to the first dm rows, split into re/im
        let mut a_re = v_top.clone();
        let mut a_im = v_top.clone();
        for j in 0..n_big {
            let (s, c) = (r * lambda[j]).sin_cos();
            a_re.column_mut(j).scale_mut(c);
            a_im.column_mut(j).scale_mut(s);
        }
        let m_re = &a_re * &v_t;
        let m_im = &a_im * &v_t;
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..dm {
            for m in 0..dm {
                let rho_mn = rho_m[(m, n)];
                if rho_mn == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n_big {
                    let a = C64::new(m_re[(n, k)], m_im[(n, k)]);
                    let b = C64::new(m_re[(m, k)], -m_im[(m, k)]);
                    s += a * b * parity[k];
                }
                let phase = C64::from_polar(1.0, phi * (n as f64 - m as f64));
                acc += rho_mn * phase * s;
            }
        }
        let w = acc / std::f64::consts::PI;
        (w.re, w.im.abs())
    };

    let points: Vec<(usize, usize)> = (0..x_grid.len())
        .flat_map(|i| (0..p_grid.len()).map(move |j| (i, j)))
        .collect();
    let evaluated: Vec<(f64, f64)> = points.par_iter().map(|&(i, j)| eval(x_grid[i], p_grid[j])).collect();

    let mut values = DMatrix::<f64>::zeros(x_grid.len(), p_grid.len());
    let mut imaginary_residual = 0.0_f64;
    for (&(i, j), &(w, im)) in points.iter().zip(&evaluated) {
        values[(i, j)] = w;
        imaginary_residual = imaginary_residual.max(im);
    }
    let wx = trapezoid_weights(x_grid);
    let wp = trapezoid_weights(p_grid);
    let mut integral = 0.0;
    for i in 0..x_grid.len() {
        for j in 0..p_grid.len() {
            integral += wx[i] * wp[j] * values[(i, j)];
        }
    }
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let warning = ((integral - 1.0).abs() > WIGNER_NORMALIZATION_TOL)
        .then(|| format!("grid normalizes to {integral:.4}; enlarge or refine the quadrature grid"));
    Ok(WignerMap {
        x_grid: x_grid.to_vec(),
        p_grid: p_grid.to_vec(),
        values,
        min_value,
        integral,
        imaginary_residual,
        warning,
    })
}

/// Exponential relaxation fitted to a phonon-number series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingFit {
    pub gamma_eff: f64,
    pub n_min: f64,
    /// `(t₀, t_end)`.
    pub fit_window: (f64, f64),
    /// Root-mean-square deviation over the window.
    pub residual: f64,
}

/// Relative photon-number band that marks the end of the optical transient.
const TRANSIENT_BAND: f64 = 0.05;

/// Fits `n(t) = n_min + (n(t₀) − n_min) e^{−γ_eff (t − t₀)}` after the
/// photon transient.
pub fn fit_cooling(traj: &Trajectory) -> Result<CoolingFit> {
    let n = traj.times.len();
    if n < 4 || traj.phonon_number.len() != n || traj.photon_number.len() != n {
        return Err(Error::FitRejected("need at least four samples".into()));
    }
    let final_photons = traj.photon_number[n - 1];
    let band = TRANSIENT_BAND * final_photons.abs();
    let start = traj
        .photon_number
        .iter()
        .position(|&x| (x - final_photons).abs() <= band)
        .unwrap_or(n - 1);
    if n - start < 4 {
        return Err(Error::FitRejected(
            "photon transient lasts until the end of the run".into(),
        ));
    }
    fit_relaxation(&traj.times[start..], &traj.phonon_number[start..])
}

/// Least-squares relaxation fit anchored at the first sample.
pub fn fit_relaxation(times: &[f64], values: &[f64]) -> Result<CoolingFit> {
    let n = times.len();
    if n < 4 || values.len() != n {
        return Err(Error::FitRejected("need at least four samples".into()));
    }
    let t0 = times[0];
    let n0 = values[0];
    let n_end = values[n - 1];
    let falling = values.windows(2).filter(|w| w[1] < w[0]).count();
    if !(n_end < n0) || 2 * falling < n - 1 {
        return Err(Error::FitRejected(format!(
            "phonon number is not predominantly decreasing ({n0:.4} -> {n_end:.4}); use the steady-state analysis"
        )));
    }
    let dt: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let span = dt[n - 1];
    let min_step = dt.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(span > 0.0) || !(min_step > 0.0) {
        return Err(Error::FitRejected("times must be strictly increasing".into()));
    }

    // optimal n_min at fixed rate, clamped to the physical range
    let solve = |gamma: f64| -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for (t, y) in dt.iter().zip(values) {
            let e = (-gamma * t).exp();
            num += (1.0 - e) * (y - n0 * e);
            den += (1.0 - e) * (1.0 - e);
        }
        let n_min = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
        let sse: f64 = dt
            .iter()
            .zip(values)
            .map(|(t, y)| {
                let e = (-gamma * t).exp();
                let r = y - n_min - (n0 - n_min) * e;
                r * r
            })
            .sum();
        (n_min, sse)
    };

    let lo = (1e-3 / span).ln();
    let hi = (1e3 / min_step).ln();
    let scan = 400;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=scan {
        let u = lo + (hi - lo) * i as f64 / scan as f64;
        let sse = solve(u.exp()).1;
        if sse < best.1 {
            best = (u, sse);
        }
    }
    let h = (hi - lo) / scan as f64;
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (solve(c.exp()).1, solve(d.exp()).1);
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = solve(c.exp()).1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = solve(d.exp()).1;
        }
    }
    let gamma_eff = (0.5 * (a + b)).exp();
    let (n_min, sse) = solve(gamma_eff);
    Ok(CoolingFit {
        gamma_eff,
        n_min,
        fit_window: (t0, times[n - 1]),
        residual: (sse / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::AtomState;

    fn laguerre(n: usize, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 - x);
        if n == 0 {
            return l0;
        }
        for k in 1..n {
            let l2 = ((2 * k + 1) as f64 - x) * l1 / (k + 1) as f64 - k as f64 * l0 / (k + 1) as f64;
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    #[test]
    fn g2_of_fock_states() {
        let s = HilbertSpace::new(1, 4).unwrap();
        let one = DensityMatrix::basis(s, AtomState::Ground, 0, 1).unwrap();
        let two = DensityMatrix::basis(s, AtomState::Ground, 0, 2).unwrap();
        assert_eq!(g2_phonon(&one).unwrap(), 0.0);
        assert!((g2_phonon(&two).unwrap() - 0.5).abs() < 1e-15);
        let vac = DensityMatrix::basis(s, AtomState::Ground, 0, 0).unwrap();
        assert!(matches!(g2_phonon(&vac), Err(Error::UndefinedStatistics { .. })));
    }

    #[test]
    fn g2_of_thermal_state() {
        let th = ReducedState::thermal(Factor::Mechanics, 120, 3.45).unwrap();
        assert!((g2_reduced(&th).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_observables_basis_states() {
        let s = HilbertSpace::new(2, 2).unwrap();
        let e = DensityMatrix::basis(s, AtomState::Excited, 0, 0).unwrap();
        let o = scalar_observables(&e);
        assert_eq!(o.atom_excitation, 1.0);
        assert_eq!(o.photon_number, 0.0);
        assert_eq!(o.g2_phonon, None);
        assert_eq!(o.polariton_block_populations[1], 1.0);
    }

    #[test]
    fn wigner_matches_fock_laguerre_formula() {
        let xs = uniform_grid(-3.0, 3.0, 7);
        let ps = uniform_grid(-2.0, 2.5, 5);
        for l in 0..4 {
            let rho = ReducedState::fock(Factor::Mechanics, 6, l).unwrap();
            let w = wigner(&rho, &xs, &ps).unwrap();
            for (i, x) in xs.iter().enumerate() {
                for (j, p) in ps.iter().enumerate() {
                    let r2 = x * x + p * p;
                    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                    let want = sign * (-r2).exp() * laguerre(l, 2.0 * r2) / std::f64::consts::PI;
                    assert!((w.values[(i, j)] - want).abs() < 1e-10, "l={l} x={x} p={p}");
                }
            }
            assert!(w.imaginary_residual < 1e-10);
        }
    }

    #[test]
    fn wigner_vacuum_and_normalization() {
        let g = default_quadrature_grid();
        let rho = ReducedState::fock(Factor::Mechanics, 3, 0).unwrap();
        let w = wigner(&rho, &g, &g).unwrap();
        assert!((w.values[(40, 40)] - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((w.integral - 1.0).abs() < 1e-2);
        assert!(w.warning.is_none());
        let coarse = [-0.5, 0.0, 0.5];
        assert!(wigner(&rho, &coarse, &coarse).unwrap().warning.is_some());
    }

    #[test]
    fn fit_recovers_synthetic_exponential() {
        let gm = 1e-4;
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 20.0).collect();
        let vals: Vec<f64> = times.iter().map(|t| 0.1 + 1.9 * (-18.0 * gm * t).exp()).collect();
        let fit = fit_relaxation(&times, &vals).unwrap();
        assert!((fit.gamma_eff / (18.0 * gm) - 1.0).abs() < 1e-6);
        assert!((fit.n_min - 0.1).abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_growth() {
        let times: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let vals: Vec<f64> = times.iter().map(|t| 1.0 + 0.1 * t).collect();
        assert!(matches!(fit_relaxation(&times, &vals), Err(Error::FitRejected(_))));
    }
}
