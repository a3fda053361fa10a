//! Experiment execution. Each experiment renders its output files in memory
//! together with a flat map of scalar summaries, so a truncation check can
//! rerun it and compare the summaries without touching the disk.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{
    EvolveSettings, ExperimentSettings, IncoherentSettings, InitialMech, JsdSettings, ScenarioConfig, SpectrumOptions,
    SweepAxis, SweepSettings, Truncation, WignerSettings,
};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Factor, HilbertSpace, ReducedState};
use crate::lindblad::{
    evolve, interblock_coherence, liouvillian, steady_state_with, EvolveOptions, SteadyOptions, SteadyState,
};
use crate::model::{eigensystem, joint_spectral_density, polaron_energy, JsdOptions, ModelParams};
use crate::observables::{fit_cooling, scalar_observables, uniform_grid, wigner, ScalarObservables};

/// Rendered outputs of one experiment.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub scalars: BTreeMap<String, f64>,
    /// Sweep points that ended in an error.
    pub failures: usize,
}

/// Full-precision decimal (17 significant digits).
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical {
        message: format!("csv encoding failed: {e}"),
        residual: f64::NAN,
    };
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Numerical {
        message: format!("csv encoding failed: {e}"),
        residual: f64::NAN,
    })
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("plain data serializes");
    out.push(b'\n');
    out
}

fn error_json(e: &Error) -> serde_json::Value {
    json!({ "code": e.code(), "message": e.to_string() })
}

pub fn execute(cfg: &ScenarioConfig, trunc: Truncation, pool: &rayon::ThreadPool) -> Result<Artifacts> {
    execute_with(cfg, trunc, pool, &SteadyOptions::default())
}

/// [`execute`] with explicit steady-state solver options.
pub fn execute_with(
    cfg: &ScenarioConfig,
    trunc: Truncation,
    pool: &rayon::ThreadPool,
    solver: &SteadyOptions,
) -> Result<Artifacts> {
    let s = trunc.space()?;
    let p = &cfg.params;
    match &cfg.settings {
        ExperimentSettings::Spectrum(o) => spectrum(p, s, o),
        ExperimentSettings::Jsd(o) => jsd(p, s, o),
        ExperimentSettings::Evolve(o) => evolve_experiment(p, s, o),
        ExperimentSettings::Steady => steady(p, s, trunc, solver),
        ExperimentSettings::Sweep(o) => sweep(cfg, s, o, pool, solver),
        ExperimentSettings::Wigner(o) => wigner_experiment(p, s, o, solver),
        ExperimentSettings::IncoherentSweep(o) => incoherent_sweep(cfg, s, o, pool, solver),
    }
}

fn spectrum(p: &ModelParams, s: HilbertSpace, o: &SpectrumOptions) -> Result<Artifacts> {
    let levels = eigensystem(p, s)?;
    let mut a = Artifacts::default();
    let mut rows = Vec::new();
    for lv in levels
        .iter()
        .filter(|l| l.n <= o.max_n && l.n <= s.cav_cutoff() && l.m <= o.max_m)
    {
        let analytic = if lv.n == 0 {
            Some(-0.5 * p.omega_a + lv.m as f64 * p.omega_m)
        } else {
            polaron_energy(lv.n, lv.m, lv.branch, p).ok()
        };
        a.scalars
            .insert(format!("energy[{},{},{}]", lv.n, lv.m, lv.branch), lv.energy);
        rows.push(vec![
            lv.n.to_string(),
            lv.m.to_string(),
            lv.branch.to_string(),
            num(lv.energy),
            opt(analytic),
            opt(analytic.map(|e| lv.energy - e)),
        ]);
    }
    a.files.push((
        "spectrum.csv".into(),
        csv_bytes(&["n", "m", "branch", "energy", "analytic_energy", "difference"], rows)?,
    ));
    Ok(a)
}

fn jsd(p: &ModelParams, s: HilbertSpace, o: &JsdSettings) -> Result<Artifacts> {
    let grid = uniform_grid(o.omega_min, o.omega_max, o.points);
    let opts = JsdOptions {
        broadening: o.broadening,
        source: o.source,
        max_polaron: o.max_polaron,
    };
    let t = joint_spectral_density(p, s, &grid, &opts)?;
    let mut a = Artifacts::default();
    let rows = t
        .omega
        .iter()
        .zip(&t.density)
        .map(|(w, d)| vec![num(*w), num(*d)])
        .collect();
    a.files
        .push(("jsd.csv".into(), csv_bytes(&["omega", "density"], rows)?));
    let rows = t
        .transitions
        .iter()
        .map(|tr| {
            vec![
                num(tr.e_initial),
                num(tr.e_final),
                num(tr.omega),
                num(tr.weight),
                tr.delta_phonon.to_string(),
                tr.class.to_string(),
                tr.source_m.to_string(),
                tr.target_m.to_string(),
                tr.target_branch.to_string(),
            ]
        })
        .collect();
    a.files.push((
        "transitions.csv".into(),
        csv_bytes(
            &[
                "E_initial",
                "E_final",
                "omega",
                "weight",
                "delta_phonon",
                "class",
                "source_m",
                "target_m",
                "target_branch",
            ],
            rows,
        )?,
    ));
    a.scalars.insert("total_weight".into(), t.total_weight());
    for class in ["reducing", "conserving", "increasing"] {
        let w = t
            .transitions
            .iter()
            .filter(|tr| tr.class.to_string() == class)
            .map(|tr| tr.weight)
            .sum();
        a.scalars.insert(format!("weight_{class}"), w);
    }
    Ok(a)
}

pub fn initial_state(s: HilbertSpace, init: InitialMech, n_th: f64) -> Result<DensityMatrix> {
    let mech = match init {
        InitialMech::Fock { l } => ReducedState::fock(Factor::Mechanics, s.mech_dim(), l)?,
        InitialMech::Thermal { n } => ReducedState::thermal(Factor::Mechanics, s.mech_dim(), n.unwrap_or(n_th))?,
    };
    DensityMatrix::ground_optics(s, mech.matrix())
}

fn evolve_experiment(p: &ModelParams, s: HilbertSpace, o: &EvolveSettings) -> Result<Artifacts> {
    let l = liouvillian(p, s)?;
    let rho0 = initial_state(s, o.initial, p.n_th)?;
    let mut opts = EvolveOptions::default();
    opts.stepper.rtol = o.rtol;
    opts.stepper.atol = o.atol;
    let traj = evolve(&l, &rho0, &o.times()?, &opts)?;
    let mut a = Artifacts::default();
    let rows = (0..traj.len())
        .map(|i| {
            vec![
                num(traj.times[i]),
                num(traj.photon_number[i]),
                num(traj.phonon_number[i]),
                num(traj.atom_excitation[i]),
                num(traj.g2_phonon[i]),
                num(traj.trace_residual[i]),
                num(traj.multi_polariton_population[i]),
            ]
        })
        .collect();
    a.files.push((
        "trajectory.csv".into(),
        csv_bytes(
            &[
                "time",
                "photon_number",
                "phonon_number",
                "atom_excitation",
                "g2_phonon",
                "trace_residual",
                "multi_polariton_population",
            ],
            rows,
        )?,
    ));
    let last = traj.len() - 1;
    a.scalars.insert("final_phonon_number".into(), traj.phonon_number[last]);
    a.scalars.insert("final_photon_number".into(), traj.photon_number[last]);
    let max_multi = traj.multi_polariton_population.iter().copied().fold(0.0, f64::max);
    let fit = match fit_cooling(&traj) {
        Ok(f) => {
            a.scalars.insert("gamma_eff".into(), f.gamma_eff);
            a.scalars.insert("n_min".into(), f.n_min);
            json!({
                "gamma_eff": f.gamma_eff,
                "gamma_eff_over_gamma_m": f.gamma_eff / p.gamma_m,
                "n_min": f.n_min,
                "fit_window": [f.fit_window.0, f.fit_window.1],
                "residual": f.residual,
                "max_multi_polariton_population": max_multi,
            })
        }
        Err(e) => json!({ "error": error_json(&e), "max_multi_polariton_population": max_multi }),
    };
    a.files.push(("cooling_fit.json".into(), json_bytes(&fit)));
    Ok(a)
}

fn observables_json(o: &ScalarObservables) -> serde_json::Value {
    serde_json::to_value(o).expect("plain data serializes")
}

fn insert_observables(a: &mut Artifacts, prefix: &str, o: &ScalarObservables) {
    a.scalars.insert(format!("{prefix}phonon_number"), o.phonon_number);
    a.scalars.insert(format!("{prefix}photon_number"), o.photon_number);
    a.scalars.insert(format!("{prefix}atom_excitation"), o.atom_excitation);
    if let Some(g) = o.g2_phonon {
        a.scalars.insert(format!("{prefix}g2_phonon"), g);
    }
}

fn solve(p: &ModelParams, s: HilbertSpace, solver: &SteadyOptions) -> Result<SteadyState> {
    steady_state_with(&liouvillian(p, s)?, solver)
}

fn steady(p: &ModelParams, s: HilbertSpace, trunc: Truncation, solver: &SteadyOptions) -> Result<Artifacts> {
    let ss = solve(p, s, solver)?;
    let o = scalar_observables(&ss.rho);
    let mut a = Artifacts::default();
    insert_observables(&mut a, "", &o);
    let doc = json!({
        "params": p,
        "truncation": trunc,
        "residual": ss.residual,
        "kernel_check_residual": ss.kernel_check_residual,
        "iterations": ss.iterations,
        "interblock_coherence": interblock_coherence(&ss.rho),
        "observables": observables_json(&o),
    });
    a.files.push(("steady_state.json".into(), json_bytes(&doc)));
    Ok(a)
}

/// One steady-state point of a sweep; errors are kept, not propagated.
struct Point {
    params: Result<ModelParams>,
    result: Result<(SteadyState, ScalarObservables)>,
}

fn steady_point(params: Result<ModelParams>, s: HilbertSpace, solver: &SteadyOptions) -> Point {
    let result = params.clone().and_then(|p| {
        let ss = solve(&p, s, solver)?;
        let o = scalar_observables(&ss.rho);
        Ok((ss, o))
    });
    Point { params, result }
}

const POINT_HEADER: [&str; 8] = [
    "phonon_number",
    "photon_number",
    "atom_excitation",
    "g2_phonon",
    "multi_polariton_population",
    "interblock_coherence",
    "residual",
    "error",
];

fn point_columns(pt: &Point) -> Vec<String> {
    match &pt.result {
        Ok((ss, o)) => vec![
            num(o.phonon_number),
            num(o.photon_number),
            num(o.atom_excitation),
            opt(o.g2_phonon),
            num(o.polariton_block_populations.iter().skip(2).sum()),
            num(interblock_coherence(&ss.rho)),
            num(ss.residual),
            String::new(),
        ],
        Err(e) => {
            let mut cols = vec![String::new(); POINT_HEADER.len() - 1];
            cols.push(e.code().to_string());
            cols
        }
    }
}

fn sweep(
    cfg: &ScenarioConfig,
    s: HilbertSpace,
    o: &SweepSettings,
    pool: &rayon::ThreadPool,
    solver: &SteadyOptions,
) -> Result<Artifacts> {
    let points: Vec<Point> = pool.install(|| {
        o.values
            .par_iter()
            .map(|&v| steady_point(cfg.params_input.with_axis(o.axis, v).resolve(), s, solver))
            .collect()
    });
    let mut a = Artifacts::default();
    let mut rows = Vec::new();
    for (i, (v, pt)) in o.values.iter().zip(&points).enumerate() {
        let mut row = vec![num(*v)];
        if o.axis == SweepAxis::OmegaP {
            row.push(num(v - cfg.params.omega_c));
        }
        row.extend(point_columns(pt));
        rows.push(row);
        match &pt.result {
            Ok((_, obs)) => insert_observables(&mut a, &format!("[{i}]."), obs),
            Err(_) => a.failures += 1,
        }
    }
    let mut header = vec![o.axis.name()];
    if o.axis == SweepAxis::OmegaP {
        header.push("detuning_from_omega_c");
    }
    header.extend(POINT_HEADER);
    a.files.push(("sweep.csv".into(), csv_bytes(&header, rows)?));
    Ok(a)
}

fn wigner_experiment(
    p: &ModelParams,
    s: HilbertSpace,
    o: &WignerSettings,
    solver: &SteadyOptions,
) -> Result<Artifacts> {
    let ss = solve(p, s, solver)?;
    let obs = scalar_observables(&ss.rho);
    let mech = ss.rho.partial_trace(Factor::Mechanics);
    let xs = uniform_grid(o.x_min, o.x_max, o.x_points);
    let ps = uniform_grid(o.p_min, o.p_max, o.p_points);
    let w = wigner(&mech, &xs, &ps)?;
    let mut a = Artifacts::default();
    let mut rows = Vec::with_capacity(xs.len() * ps.len());
    for (i, x) in xs.iter().enumerate() {
        for (j, q) in ps.iter().enumerate() {
            rows.push(vec![num(*x), num(*q), num(w.values[(i, j)])]);
        }
    }
    a.files.push(("wigner.csv".into(), csv_bytes(&["x", "p", "w"], rows)?));
    let doc = json!({
        "min_value": w.min_value,
        "integral": w.integral,
        "imaginary_residual": w.imaginary_residual,
        "warning": w.warning,
        "x_grid": { "min": o.x_min, "max": o.x_max, "points": o.x_points },
        "p_grid": { "min": o.p_min, "max": o.p_max, "points": o.p_points },
        "steady_residual": ss.residual,
        "observables": observables_json(&obs),
    });
    a.files.push(("wigner.json".into(), json_bytes(&doc)));
    let m = mech.matrix();
    let mut rows = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            rows.push(vec![r.to_string(), c.to_string(), num(m[(r, c)].re), num(m[(r, c)].im)]);
        }
    }
    a.files
        .push(("mech_density.csv".into(), csv_bytes(&["row", "col", "re", "im"], rows)?));
    a.scalars.insert("wigner_min".into(), w.min_value);
    a.scalars.insert("wigner_integral".into(), w.integral);
    insert_observables(&mut a, "", &obs);
    Ok(a)
}

fn incoherent_sweep(
    cfg: &ScenarioConfig,
    s: HilbertSpace,
    o: &IncoherentSettings,
    pool: &rayon::ThreadPool,
    solver: &SteadyOptions,
) -> Result<Artifacts> {
    let grid: Vec<(f64, f64)> = o
        .q_m
        .iter()
        .flat_map(|&qm| o.q_ac.iter().map(move |&qac| (qm, qac)))
        .collect();
    let points: Vec<Point> = pool.install(|| {
        grid.par_iter()
            .map(|&(qm, qac)| {
                let input = cfg
                    .params_input
                    .with_axis(SweepAxis::QM, qm)
                    .with_axis(SweepAxis::QAc, qac);
                steady_point(input.resolve(), s, solver)
            })
            .collect()
    });
    let mut a = Artifacts::default();
    let mut rows = Vec::new();
    for (i, (&(qm, qac), pt)) in grid.iter().zip(&points).enumerate() {
        let (gamma_ac, f_inc) = match &pt.params {
            Ok(p) => (p.gamma_ac, p.f_inc),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let mut row = vec![num(qm), num(qac), num(gamma_ac), num(f_inc)];
        row.extend(point_columns(pt));
        rows.push(row);
        match &pt.result {
            Ok((_, obs)) => insert_observables(&mut a, &format!("[{i}]."), obs),
            Err(_) => a.failures += 1,
        }
    }
    let mut header = vec!["q_m", "q_ac", "gamma_ac", "f_inc"];
    header.extend(POINT_HEADER);
    a.files.push(("incoherent_sweep.csv".into(), csv_bytes(&header, rows)?));
    Ok(a)
}

/// Below this both values count as zero and the drift is `0`.
pub const DRIFT_FLOOR: f64 = 1e-12;

/// `|a − b| / max(|a|, |b|)`, or `0` when both are under [`DRIFT_FLOOR`].
pub fn relative_drift(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < DRIFT_FLOOR {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares two scalar summaries key by key.
pub fn truncation_report(base: &Artifacts, doubled: &Artifacts, t: Truncation) -> serde_json::Value {
    let mut drift = BTreeMap::new();
    let mut max_drift = 0.0_f64;
    for (k, &a) in &base.scalars {
        if let Some(&b) = doubled.scalars.get(k) {
            let d = relative_drift(a, b);
            max_drift = max_drift.max(d);
            drift.insert(k.clone(), json!({ "base": a, "doubled": b, "relative_drift": d }));
        }
    }
    json!({
        "base_truncation": t,
        "doubled_truncation": t.doubled(),
        "max_relative_drift": max_drift,
        "scalars": drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_handles_vanishing_values() {
        assert_eq!(relative_drift(3.7e-32, 0.0), 0.0);
        assert_eq!(relative_drift(0.0, 0.0), 0.0);
        assert!((relative_drift(1.0, 1.01) - 0.01 / 1.01).abs() < 1e-15);
        assert_eq!(num(f64::NAN), "NaN");
    }
}
