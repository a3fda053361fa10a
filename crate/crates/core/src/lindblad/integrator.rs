//! Adaptive Dormand–Prince 8(5,3) stepper for complex vector ODEs.
//!
//! Tableau and error estimator follow Hairer & Wanner's DOP853. Requested
//! output times are hit exactly by shortening the step that would cross
//! them; the controller keeps its own proposal so the shortened step does
//! not slow the rest of the run.

use crate::error::{Error, Result};
use crate::hilbert::{C64, ZERO};

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; `None` picks one from the initial derivative.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_max: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepperStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const STAGES: usize = 12;

const A: [[f64; STAGES]; STAGES] = [
    [0.0; 12],
    [
        5.260_015_195_876_773E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        1.972_505_698_453_79E-2,
        5.917_517_095_361_37E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.958_758_547_680_685E-2,
        0.0,
        8.876_275_643_042_054E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.413_651_341_592_667E-1,
        0.0,
        -8.845_494_793_282_861E-1,
        9.248_340_032_617_92E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.703_703_703_703_703_5E-2,
        0.0,
        0.0,
        1.708_286_087_294_738_6E-1,
        1.254_676_875_668_224_2E-1,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.710_937_5E-2,
        0.0,
        0.0,
        1.702_522_110_195_440_5E-1,
        6.021_653_898_045_596E-2,
        -1.757_812_5E-2,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        3.709_200_011_850_479E-2,
        0.0,
        0.0,
        1.703_839_257_122_399_8E-1,
        1.072_620_304_463_732_8E-1,
        -1.531_943_774_862_440_2E-2,
        8.273_789_163_814_023E-3,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        6.241_109_587_160_757E-1,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -8.682_193_468_417_26E-1,
        2.759_209_969_944_671E1,
        2.015_406_755_047_789_4E1,
        -4.348_988_418_106_996E1,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        4.776_625_364_382_643_4E-1,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -5.902_908_268_368_43E-1,
        2.123_005_144_818_119_3E1,
        1.527_923_363_288_242_3E1,
        -3.328_821_096_898_486E1,
        -2.033_120_170_850_862_7E-2,
        0.0,
        0.0,
        0.0,
    ],
    [
        -9.371_424_300_859_873E-1,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -1.852_006_565_999_696E1,
        2.273_948_709_935_050_5E1,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -1.053_449_546_673_725E1,
        -2.000_872_058_224_862_5,
        -1.795_893_186_311_88E1,
        2.794_888_452_941_996E1,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        1.236_056_717_579_430_3E1,
        6.433_927_460_157_636E-1,
        0.0,
    ],
];

const C: [f64; STAGES] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

const B: [f64; STAGES] = [
    5.429_373_411_656_876_5E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1,
    2.013_654_008_040_303_4E-1,
    4.471_061_572_777_259E-2,
];

const ER: [f64; STAGES] = [
    1.312_004_499_419_488E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1,
    8.192_320_648_511_571E-2,
    -2.235_530_786_388_629_4E-2,
];

const BHH: [f64; 3] = [
    2.440_944_881_889_764E-1,
    7.338_466_882_816_118E-1,
    2.205_882_352_941_176_6E-2,
];

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

/// Integrates `f` from `(t0, y)` through every time in `outputs` (strictly
/// increasing, all `≥ t0`), calling `observe` at each. After each accepted
/// step `admissible` may veto the new state, which halves the step.
pub fn integrate<F, O, G>(
    f: &F,
    t0: f64,
    y: &mut Vec<C64>,
    outputs: &[f64],
    opts: &StepperOptions,
    mut observe: O,
    admissible: G,
) -> Result<StepperStats>
where
    F: Rhs + ?Sized,
    O: FnMut(f64, &[C64]) -> Result<()>,
    G: Fn(&[C64]) -> bool,
{
    let n = f.dim();
    assert_eq!(y.len(), n);
    let mut stats = StepperStats::default();
    let mut k: Vec<Vec<C64>> = (0..STAGES).map(|_| vec![ZERO; n]).collect();
    let mut ytmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    let mut err5 = vec![ZERO; n];

    let mut t = t0;
    f.eval(t, y, &mut k[0]);
    stats.evaluations += 1;
    let span = outputs.last().map_or(0.0, |&e| e - t0);
    let h_max = opts.h_max.unwrap_or(span.abs().max(f64::MIN_POSITIVE));
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(f, t, y, &k[0], opts, h_max, &mut stats))
        .min(h_max);

    for &target in outputs {
        if target < t {
            return Err(Error::Domain(format!("output time {target} precedes current time {t}")));
        }
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Stiffness { time: t, step: h });
            }
            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let h_step = if landing { remaining } else { h };
            if h_step < 1e-14 * t.abs().max(1.0) && !landing {
                return Err(Error::Stiffness { time: t, step: h_step });
            }

            for s in 1..STAGES {
                ytmp.copy_from_slice(y);
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j] * h_step;
                    if a != 0.0 {
                        for (yt, kv) in ytmp.iter_mut().zip(kj) {
                            *yt += kv * a;
                        }
                    }
                }
                f.eval(t + C[s] * h_step, &ytmp, &mut k[s]);
            }
            stats.evaluations += STAGES - 1;

            // 8th-order increment into ytmp, 5th-order error into err5
            ytmp.iter_mut().for_each(|v| *v = ZERO);
            err5.iter_mut().for_each(|v| *v = ZERO);
            for (s, ks) in k.iter().enumerate() {
                if B[s] != 0.0 {
                    for (acc, kv) in ytmp.iter_mut().zip(ks) {
                        *acc += kv * B[s];
                    }
                }
                if ER[s] != 0.0 {
                    for (acc, kv) in err5.iter_mut().zip(ks) {
                        *acc += kv * ER[s];
                    }
                }
            }
            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..n {
                let incr = ytmp[i];
                ynew[i] = y[i] + incr * h_step;
                let e3 = incr - k[0][i] * BHH[0] - k[8][i] * BHH[1] - k[11][i] * BHH[2];
                let sk = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
                err += (err5[i].norm() / sk).powi(2);
                err2 += (e3.norm() / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h_step.abs() * err * (1.0 / (deno * n as f64)).sqrt();

            let fac11 = err.powf(0.125);
            if err <= 1.0 && admissible(&ynew) {
                stats.accepted += 1;
                let fac = (fac11 / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let proposal = (h_step / fac).min(h_max);
                t = if landing { target } else { t + h_step };
                std::mem::swap(y, &mut ynew);
                f.eval(t, y, &mut k[0]);
                stats.evaluations += 1;
                // a landing step is artificially short; keep the old proposal
                h = if landing { h.max(proposal).min(h_max) } else { proposal };
            } else {
                stats.rejected += 1;
                let shrink = if err > 1.0 {
                    (fac11 / SAFE).min(1.0 / FAC_MIN)
                } else {
                    2.0
                };
                h = h_step / shrink.max(1.0 + 1e-3);
            }
        }
        observe(t, y)?;
    }
    Ok(stats)
}

fn norm_scaled(v: &[C64], y: &[C64], opts: &StepperOptions) -> f64 {
    let n = v.len().max(1);
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| (vi.norm() / (opts.atol + opts.rtol * yi.norm())).powi(2))
        .sum();
    (s / n as f64).sqrt()
}

/// Hairer's starting-step heuristic.
fn initial_step<F: Rhs + ?Sized>(
    f: &F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    opts: &StepperOptions,
    h_max: f64,
    stats: &mut StepperStats,
) -> f64 {
    let d0 = norm_scaled(y, y, opts);
    let d1 = norm_scaled(f0, y, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![ZERO; y.len()];
    f.eval(t + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm_scaled(&diff, y, opts) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (1e-6_f64).max(h0 * 1e-3)
    } else {
        (0.01 / dmax).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(h_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation(f64);

    impl Rhs for Rotation {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(0.0, self.0) * y[0];
        }
    }

    struct Forced;

    impl Rhs for Forced {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = y[1];
            dy[1] = -y[0] + C64::new(t.cos(), 0.0);
        }
    }

    #[test]
    fn tableau_rows_sum_to_nodes() {
        for s in 0..STAGES {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-13, "stage {s}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oscillator_is_accurate() {
        let omega = 3.0;
        let mut y = vec![C64::new(1.0, 0.0)];
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let mut worst: f64 = 0.0;
        integrate(
            &Rotation(omega),
            0.0,
            &mut y,
            &times,
            &StepperOptions {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
            |t, y| {
                let exact = C64::new(0.0, omega * t).exp();
                worst = worst.max((y[0] - exact).norm());
                Ok(())
            },
            |_| true,
        )
        .unwrap();
        assert!(worst < 1e-8, "error {worst}");
    }

    #[test]
    fn time_dependent_forcing() {
        // y'' + y = cos t with y(0) = 1, y'(0) = 0 → y = cos t + (t/2) sin t
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        integrate(
            &Forced,
            0.0,
            &mut y,
            &[10.0],
            &StepperOptions::default(),
            |_, _| Ok(()),
            |_| true,
        )
        .unwrap();
        let exact = 10f64.cos() + 5.0 * 10f64.sin();
        assert!((y[0].re - exact).abs() < 1e-6);
    }

    #[test]
    fn outputs_are_hit_exactly() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let times = [0.0, 0.1, 0.35, 2.0];
        let mut seen = Vec::new();
        integrate(
            &Rotation(1.0),
            0.0,
            &mut y,
            &times,
            &StepperOptions::default(),
            |t, _| {
                seen.push(t);
                Ok(())
            },
            |_| true,
        )
        .unwrap();
        assert_eq!(seen, times.to_vec());
    }

    #[test]
    fn step_underflow_is_reported() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let r = integrate(
            &Rotation(1.0),
            0.0,
            &mut y,
            &[1.0],
            &StepperOptions::default(),
            |_, _| Ok(()),
            |_| false,
        );
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }
}
