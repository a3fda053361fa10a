//! Scenario files.
//!
//! A scenario is a TOML document. Every key is optional; the defaults are
//! the main-text parameter set. Frequencies are in units of `omega_m`, and
//! each loss rate is given either as a Q-factor or as a raw rate, never both.
//!
//! ```toml
//! [params]
//! q_ac = 1e6
//! q_m = 1e6
//! g_cm = 1e-3
//! f_p_over_gamma_ac = 100
//!
//! [truncation]
//! cav_cutoff = 2
//!
//! [sweep]
//! axis = "omega_p"
//! start = 99.3
//! stop = 100.7
//! points = 141
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::model::{ModelParams, SourcePopulation};

const DEFAULT_Q: f64 = 1e4;

/// Parameters as written in the file, before defaults are filled in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsInput {
    pub omega_m: Option<f64>,
    pub omega_c: Option<f64>,
    /// Defaults to `omega_c`.
    pub omega_a: Option<f64>,
    pub g_ac: Option<f64>,
    pub g_cm: Option<f64>,
    pub gamma_ac: Option<f64>,
    pub q_ac: Option<f64>,
    pub gamma_m: Option<f64>,
    pub q_m: Option<f64>,
    pub n_th: Option<f64>,
    pub f_p: Option<f64>,
    pub f_p_over_gamma_ac: Option<f64>,
    /// Defaults to the lower polariton `omega_c - g_ac`.
    pub omega_p: Option<f64>,
    pub f_inc: Option<f64>,
    pub f_inc_over_gamma_ac: Option<f64>,
}

fn exclusive(name: &str, a: Option<f64>, b: Option<f64>) -> Result<()> {
    if a.is_some() && b.is_some() {
        return Err(Error::Config(format!(
            "give either {name} or its alternative form, not both"
        )));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(v)
}

impl ParamsInput {
    pub fn resolve(&self) -> Result<ModelParams> {
        exclusive("gamma_ac", self.gamma_ac, self.q_ac)?;
        exclusive("gamma_m", self.gamma_m, self.q_m)?;
        exclusive("f_p", self.f_p, self.f_p_over_gamma_ac)?;
        exclusive("f_inc", self.f_inc, self.f_inc_over_gamma_ac)?;
        let d = ModelParams::default();
        let omega_m = self.omega_m.unwrap_or(d.omega_m);
        let omega_c = self.omega_c.unwrap_or(d.omega_c);
        let g_ac = self.g_ac.unwrap_or(d.g_ac);
        let gamma_ac = match (self.gamma_ac, self.q_ac) {
            (Some(g), _) => g,
            (None, Some(q)) => omega_c / positive("q_ac", q)?,
            (None, None) => omega_c / DEFAULT_Q,
        };
        let gamma_m = match (self.gamma_m, self.q_m) {
            (Some(g), _) => g,
            (None, Some(q)) => omega_m / positive("q_m", q)?,
            (None, None) => omega_m / DEFAULT_Q,
        };
        let p = ModelParams {
            omega_m,
            omega_c,
            omega_a: self.omega_a.unwrap_or(omega_c),
            g_ac,
            g_cm: self.g_cm.unwrap_or(d.g_cm),
            gamma_ac,
            gamma_m,
            n_th: self.n_th.unwrap_or(d.n_th),
            f_p: self.f_p.unwrap_or(self.f_p_over_gamma_ac.unwrap_or(1.0) * gamma_ac),
            omega_p: self.omega_p.unwrap_or(omega_c - g_ac),
            f_inc: self.f_inc.unwrap_or(self.f_inc_over_gamma_ac.unwrap_or(0.0) * gamma_ac),
        };
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    /// Copy with one sweep coordinate replaced, keeping every ratio that was
    /// specified relative to `gamma_ac`.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut p = *self;
        match axis {
            SweepAxis::OmegaP => p.omega_p = Some(value),
            SweepAxis::QAc => {
                p.q_ac = Some(value);
                p.gamma_ac = None;
            }
            SweepAxis::QM => {
                p.q_m = Some(value);
                p.gamma_m = None;
            }
            SweepAxis::FP => {
                p.f_p = Some(value);
                p.f_p_over_gamma_ac = None;
            }
            SweepAxis::FInc => {
                p.f_inc = Some(value);
                p.f_inc_over_gamma_ac = None;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationInput {
    pub cav_cutoff: Option<usize>,
    /// Defaults to 30 with a thermal bath and 15 at zero temperature.
    pub mech_cutoff: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub cav_cutoff: usize,
    pub mech_cutoff: usize,
}

impl Truncation {
    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.cav_cutoff, self.mech_cutoff)
    }

    pub fn doubled(&self) -> Self {
        Self {
            cav_cutoff: 2 * self.cav_cutoff,
            mech_cutoff: 2 * self.mech_cutoff,
        }
    }
}

impl TruncationInput {
    pub fn resolve(&self, n_th: f64) -> Truncation {
        Truncation {
            cav_cutoff: self.cav_cutoff.unwrap_or(3),
            mech_cutoff: self.mech_cutoff.unwrap_or(if n_th > 0.0 { 30 } else { 15 }),
        }
    }
}

/// Either an explicit list or an evenly spaced (optionally logarithmic) range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridInput {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

impl GridInput {
    fn range(start: f64, stop: f64, points: usize, log: bool) -> Self {
        Self {
            values: None,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            log,
        }
    }

    pub fn resolve(&self, name: &str) -> Result<Vec<f64>> {
        let values = match (&self.values, self.start, self.stop) {
            (Some(v), None, None) => v.clone(),
            (None, Some(a), Some(b)) => {
                let n = self.points.unwrap_or(2);
                if n == 0 {
                    return Err(Error::Config(format!("{name}: points must be at least 1")));
                }
                if self.log && !(a > 0.0 && b > 0.0) {
                    return Err(Error::Config(format!(
                        "{name}: a logarithmic range needs positive ends"
                    )));
                }
                (0..n)
                    .map(|i| {
                        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                        if self.log {
                            10f64.powf(a.log10() + (b.log10() - a.log10()) * t)
                        } else {
                            a + (b - a) * t
                        }
                    })
                    .collect()
            }
            _ => {
                return Err(Error::Config(format!(
                    "{name}: give either `values` or both `start` and `stop`"
                )))
            }
        };
        if values.is_empty() {
            return Err(Error::Config(format!("{name}: empty value list")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{name}: non-finite value {v}")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    OmegaP,
    QAc,
    QM,
    FP,
    FInc,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::OmegaP => "omega_p",
            SweepAxis::QAc => "q_ac",
            SweepAxis::QM => "q_m",
            SweepAxis::FP => "f_p",
            SweepAxis::FInc => "f_inc",
        }
    }
}

/// Initial mechanical state for `evolve`; the optics start in `|g, 0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialMech {
    Fock {
        l: usize,
    },
    /// `n` defaults to the bath occupation.
    Thermal {
        n: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    pub max_n: usize,
    pub max_m: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { max_n: 2, max_m: 10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JsdInput {
    /// Grid ends; default `omega_c ∓ omega_m`.
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub points: Option<usize>,
    /// Lorentzian FWHM; default `gamma_ac`.
    pub broadening: Option<f64>,
    pub source: SourcePopulation,
    pub max_polaron: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsdSettings {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub broadening: f64,
    pub source: SourcePopulation,
    pub max_polaron: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSettings {
    pub t_final: f64,
    /// Output times are `t_final · i / samples` for `i = 0..=samples`.
    pub samples: usize,
    pub initial: InitialMech,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        Self {
            t_final: 20_000.0,
            samples: 400,
            initial: InitialMech::Fock { l: 2 },
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

impl EvolveSettings {
    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) || self.samples == 0 {
            return Err(Error::Config("evolve needs t_final > 0 and samples >= 1".into()));
        }
        Ok((0..=self.samples)
            .map(|i| self.t_final * i as f64 / self.samples as f64)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepInput {
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerSettings {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_points: usize,
}

impl Default for WignerSettings {
    fn default() -> Self {
        Self {
            x_min: -6.0,
            x_max: 6.0,
            x_points: 121,
            p_min: -6.0,
            p_max: 6.0,
            p_points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncoherentInput {
    pub q_m: Option<Vec<f64>>,
    pub q_ac: Option<GridInput>,
    pub n_th: Option<f64>,
    pub f_inc_over_gamma_ac: Option<f64>,
}

/// The coherent pump is off during this experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherentSettings {
    pub q_m: Vec<f64>,
    pub q_ac: Vec<f64>,
    pub n_th: f64,
    pub f_inc_over_gamma_ac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Jsd,
    Evolve,
    Steady,
    Sweep,
    Wigner,
    IncoherentSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Jsd => "jsd",
            Experiment::Evolve => "evolve",
            Experiment::Steady => "steady",
            Experiment::Sweep => "sweep",
            Experiment::Wigner => "wigner",
            Experiment::IncoherentSweep => "incoherent-sweep",
        }
    }
}

/// The file layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioInput {
    pub experiment: Option<Experiment>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsInput,
    #[serde(default)]
    pub truncation: TruncationInput,
    pub spectrum: Option<SpectrumOptions>,
    pub jsd: Option<JsdInput>,
    pub evolve: Option<EvolveSettings>,
    pub sweep: Option<SweepInput>,
    pub wigner: Option<WignerSettings>,
    pub incoherent_sweep: Option<IncoherentInput>,
}

/// Experiment options with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentSettings {
    Spectrum(SpectrumOptions),
    Jsd(JsdSettings),
    Evolve(EvolveSettings),
    Steady,
    Sweep(SweepSettings),
    Wigner(WignerSettings),
    IncoherentSweep(IncoherentSettings),
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    pub params: ModelParams,
    pub truncation: Truncation,
    pub settings: ExperimentSettings,
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// The file's parameter block, kept for re-resolving sweep points.
    #[serde(skip)]
    pub params_input: ParamsInput,
}

impl ScenarioInput {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills in defaults for `experiment`. A file that names a different
    /// experiment is rejected.
    pub fn resolve(&self, experiment: Experiment) -> Result<ScenarioConfig> {
        if let Some(named) = self.experiment {
            if named != experiment {
                return Err(Error::Config(format!(
                    "scenario is for `{}` but `{}` was requested",
                    named.name(),
                    experiment.name()
                )));
            }
        }
        let mut params_input = self.params;
        if experiment == Experiment::IncoherentSweep {
            let inc = self.incoherent_sweep.clone().unwrap_or(IncoherentInput {
                q_m: None,
                q_ac: None,
                n_th: None,
                f_inc_over_gamma_ac: None,
            });
            params_input.n_th = Some(inc.n_th.unwrap_or(0.0));
            params_input.f_p = Some(0.0);
            params_input.f_p_over_gamma_ac = None;
            params_input.f_inc = None;
            params_input.f_inc_over_gamma_ac = Some(inc.f_inc_over_gamma_ac.unwrap_or(1.0));
        }
        let params = params_input.resolve()?;
        let truncation = self.truncation.resolve(params.n_th);
        truncation.space().map_err(|e| Error::Config(e.to_string()))?;

        let settings = match experiment {
            Experiment::Spectrum => ExperimentSettings::Spectrum(self.spectrum.unwrap_or_default()),
            Experiment::Jsd => {
                let j = self.jsd.unwrap_or_default();
                let s = JsdSettings {
                    omega_min: j.omega_min.unwrap_or(params.omega_c - params.omega_m),
                    omega_max: j.omega_max.unwrap_or(params.omega_c + params.omega_m),
                    points: j.points.unwrap_or(2001),
                    broadening: j.broadening.unwrap_or(params.gamma_ac),
                    source: j.source,
                    max_polaron: j.max_polaron.or(Some(5)),
                };
                if !(s.omega_max > s.omega_min) || s.points < 2 {
                    return Err(Error::Config("jsd needs omega_max > omega_min and points >= 2".into()));
                }
                positive("jsd.broadening", s.broadening)?;
                ExperimentSettings::Jsd(s)
            }
            Experiment::Evolve => {
                let e = self.evolve.unwrap_or_default();
                e.times()?;
                if let InitialMech::Fock { l } = e.initial {
                    if l > truncation.mech_cutoff {
                        return Err(Error::Config(format!(
                            "initial Fock state {l} exceeds mech_cutoff {}",
                            truncation.mech_cutoff
                        )));
                    }
                }
                ExperimentSettings::Evolve(e)
            }
            Experiment::Steady => ExperimentSettings::Steady,
            Experiment::Sweep => {
                let s = self
                    .sweep
                    .clone()
                    .ok_or_else(|| Error::Config("sweep needs a [sweep] section".into()))?;
                let axis = s.axis.unwrap_or(SweepAxis::OmegaP);
                let values = GridInput {
                    values: s.values,
                    start: s.start,
                    stop: s.stop,
                    points: s.points,
                    log: s.log,
                }
                .resolve("sweep")?;
                for &v in &values {
                    params_input.with_axis(axis, v).resolve()?;
                }
                ExperimentSettings::Sweep(SweepSettings { axis, values })
            }
            Experiment::Wigner => {
                let w = self.wigner.unwrap_or_default();
                if !(w.x_max > w.x_min && w.p_max > w.p_min) || w.x_points < 2 || w.p_points < 2 {
                    return Err(Error::Config(
                        "wigner grid needs max > min and at least 2 points".into(),
                    ));
                }
                ExperimentSettings::Wigner(w)
            }
            Experiment::IncoherentSweep => {
                let inc = self.incoherent_sweep.clone();
                let q_m = inc
                    .as_ref()
                    .and_then(|i| i.q_m.clone())
                    .unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
                let q_ac = inc
                    .as_ref()
                    .and_then(|i| i.q_ac.clone())
                    .unwrap_or_else(|| GridInput::range(1e1, 1e6, 11, true))
                    .resolve("incoherent_sweep.q_ac")?;
                if q_m.is_empty() {
                    return Err(Error::Config("incoherent_sweep.q_m is empty".into()));
                }
                for &qm in &q_m {
                    positive("incoherent_sweep.q_m", qm)?;
                }
                for &q in &q_ac {
                    positive("incoherent_sweep.q_ac", q)?;
                }
                ExperimentSettings::IncoherentSweep(IncoherentSettings {
                    q_m,
                    q_ac,
                    n_th: params.n_th,
                    f_inc_over_gamma_ac: params.f_inc / params.gamma_ac,
                })
            }
        };
        Ok(ScenarioConfig {
            experiment,
            params,
            truncation,
            settings,
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            params_input,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_main_text_parameters() {
        let c = ScenarioInput::parse("").unwrap().resolve(Experiment::Steady).unwrap();
        assert_eq!(c.params, ModelParams::default());
        assert_eq!(
            c.truncation,
            Truncation {
                cav_cutoff: 3,
                mech_cutoff: 30
            }
        );
    }

    #[test]
    fn rate_and_q_factor_are_exclusive() {
        let e = ScenarioInput::parse("[params]\nq_ac = 1e4\ngamma_ac = 0.01\n")
            .unwrap()
            .resolve(Experiment::Steady)
            .unwrap_err();
        assert_eq!(e.code(), "config");
    }

    #[test]
    fn ratios_follow_the_swept_quality_factor() {
        let input = ScenarioInput::parse("[params]\nf_p_over_gamma_ac = 100\n").unwrap();
        let p = input.params.with_axis(SweepAxis::QAc, 1e6).resolve().unwrap();
        assert!((p.gamma_ac - 1e-4).abs() < 1e-18);
        assert!((p.f_p - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioInput::parse("[params]\nomega_q = 1\n").is_err());
    }

    #[test]
    fn zero_temperature_uses_the_smaller_mechanical_cutoff() {
        let c = ScenarioInput::parse("[params]\nn_th = 0\n")
            .unwrap()
            .resolve(Experiment::Wigner)
            .unwrap();
        assert_eq!(c.truncation.mech_cutoff, 15);
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let g = GridInput::range(10.0, 1e6, 6, true).resolve("q").unwrap();
        assert_eq!(g.len(), 6);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[5] - 1e6).abs() < 1e-6);
        assert!((g[1] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn experiment_mismatch_is_a_config_error() {
        let e = ScenarioInput::parse("experiment = \"jsd\"\n")
            .unwrap()
            .resolve(Experiment::Evolve)
            .unwrap_err();
        assert_eq!(e.code(), "config");
    }
}
