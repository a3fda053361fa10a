use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use polaron::hilbert::{DensityMatrix, Factor, HilbertSpace, ReducedState};
use polaron::lindblad::liouvillian;
use polaron::model::{
    hamiltonian_lab, hamiltonian_rotating, joint_spectral_density, polariton_number, polaron_energy, Branch,
    JsdOptions, ModelParams, SourcePopulation,
};
use polaron::observables::{g2_reduced, scalar_observables};

fn params() -> impl Strategy<Value = ModelParams> {
    (
        20.0..150.0f64,
        -1.0..1.0f64,
        0.0..1.0f64,
        0.0..0.3f64,
        1e-3..1e-1f64,
        1e-4..1e-2f64,
        0.0..4.0f64,
        0.0..0.2f64,
        -1.0..1.0f64,
        0.0..0.05f64,
    )
        .prop_map(
            |(omega_c, det, g_ac, g_cm, gamma_ac, gamma_m, n_th, f_p, dp, f_inc)| ModelParams {
                omega_c,
                omega_a: omega_c + det,
                g_ac,
                g_cm,
                gamma_ac,
                gamma_m,
                n_th,
                f_p,
                omega_p: omega_c + dp,
                f_inc,
                ..ModelParams::default()
            },
        )
}

/// `A A† / Tr` from a flat list of real and imaginary parts.
fn state(s: HilbertSpace, parts: &[f64]) -> DensityMatrix {
    let d = s.dim();
    let a = DMatrix::from_fn(d, d, |i, j| {
        C64::new(parts[2 * (i * d + j)], parts[2 * (i * d + j) + 1])
    });
    let mut m = &a * a.adjoint();
    let tr = m.trace();
    m /= tr;
    DensityMatrix::new(s, m).expect("positive by construction")
}

fn small_space() -> HilbertSpace {
    HilbertSpace::new(1, 2).unwrap()
}

fn state_parts() -> impl Strategy<Value = Vec<f64>> {
    let d = small_space().dim();
    prop::collection::vec(-1.0..1.0f64, 2 * d * d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lab_hamiltonian_is_hermitian_and_conserves_polaritons(p in params()) {
        let s = HilbertSpace::new(2, 4).unwrap();
        let h = hamiltonian_lab(&p, s);
        prop_assert!(h.hermiticity_residual() < 1e-12);
        prop_assert!(h.commutator(&polariton_number(s)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rotating_hamiltonian_is_hermitian(p in params()) {
        let h = hamiltonian_rotating(&p, HilbertSpace::new(2, 3).unwrap());
        prop_assert!(h.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity(p in params(), parts in state_parts()) {
        let s = small_space();
        let rho = state(s, &parts);
        let l = liouvillian(&p, s).unwrap();
        let out = l.apply(rho.matrix());
        let scale = l.matrix().norm_inf();
        prop_assert!(out.trace().norm() < 1e-12 * scale);
        prop_assert!((&out - out.adjoint()).camax() < 1e-12 * scale);
    }

    #[test]
    fn partial_traces_keep_unit_trace(parts in state_parts()) {
        let rho = state(small_space(), &parts);
        for f in [Factor::Atom, Factor::Cavity, Factor::Mechanics] {
            prop_assert!((rho.partial_trace(f).trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn occupations_are_bounded_by_the_cutoffs(parts in state_parts()) {
        let s = small_space();
        let o = scalar_observables(&state(s, &parts));
        prop_assert!(o.phonon_number >= 0.0 && o.phonon_number <= s.mech_cutoff() as f64 + 1e-12);
        prop_assert!(o.photon_number >= 0.0 && o.photon_number <= s.cav_cutoff() as f64 + 1e-12);
        prop_assert!(o.atom_excitation >= 0.0 && o.atom_excitation <= 1.0 + 1e-12);
        let total: f64 = o.polariton_block_populations.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_doublet_splits_by_root_m_g(m in 1usize..30, g_cm in 0.0..0.3f64) {
        let p = ModelParams { g_cm, ..ModelParams::default() };
        let split = polaron_energy(1, m, Branch::Plus, &p).unwrap() - polaron_energy(1, m, Branch::Minus, &p).unwrap();
        prop_assert!((split - (m as f64).sqrt() * g_cm).abs() < 1e-12);
    }

    #[test]
    fn fock_statistics(l in 2usize..20) {
        let r = ReducedState::fock(Factor::Mechanics, 25, l).unwrap();
        let g2 = g2_reduced(&r).unwrap();
        prop_assert!((g2 - (1.0 - 1.0 / l as f64)).abs() < 1e-12);
    }

    #[test]
    fn jsd_weight_matches_direct_sum(g_cm in 0.0..0.2f64, n_th in 0.0..3.0f64) {
        let p = ModelParams { g_cm, n_th, ..ModelParams::default() };
        let s = HilbertSpace::new(2, 8).unwrap();
        let opts = JsdOptions { broadening: p.gamma_ac, source: SourcePopulation::Thermal, max_polaron: None };
        let t = joint_spectral_density(&p, s, &[99.0, 101.0], &opts).unwrap();
        // a† moves |g,0,m⟩ entirely into the 1-polariton block
        prop_assert!((t.total_weight() - p.f_p * p.f_p).abs() < 1e-10 * p.f_p * p.f_p);
    }
}
