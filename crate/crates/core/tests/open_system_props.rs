use cca_transfer::ideal_protocol::{ideal_average_fidelity, perfect_schedule, transfer_function};
use cca_transfer::open_system::{
    average_outcome, quadrature_average_fidelity, run_protocol_with, DensityMatrix, RunOptions,
    HERMITICITY_TOLERANCE, POSITIVITY_TOLERANCE, TRACE_TOLERANCE,
};
use cca_transfer::{BlochState, ChainParams, ModeBasis, ProtocolSchedule};
use proptest::prelude::*;

fn setup(n: usize, s: usize, r: usize) -> (ChainParams, ProtocolSchedule) {
    let q = (n + 1) / 2;
    let basis = ModeBasis::new(n).unwrap();
    let sch = perfect_schedule(&basis, s, r, q).unwrap();
    (ChainParams::lossless(n, s, r, q), sch)
}

fn assert_physical(rho: &DensityMatrix) {
    assert!((rho.trace() - 1.0).abs() < TRACE_TOLERANCE, "trace {}", rho.trace());
    assert!(rho.hermiticity_error() < HERMITICITY_TOLERANCE);
    assert!(rho.min_eigenvalue() > -POSITIVITY_TOLERANCE);
}

#[test]
fn lossless_average_matches_closed_form_off_schedule() {
    let (params, ideal) = setup(5, 1, 5);
    let basis = ModeBasis::new(5).unwrap();
    for (d1, d2) in [(0.0, 0.0), (0.05, -0.03), (-0.2, 0.1)] {
        let sch = ideal.with_timing_errors(d1, d2);
        let f = transfer_function(&basis, 1, 5, 3, sch.effective_gt1(), sch.effective_gt2()).unwrap();
        let got = average_outcome(&params, &sch).unwrap().avg_fidelity;
        assert!((got - ideal_average_fidelity(f)).abs() < 1e-8, "{d1},{d2}: {got}");
    }
}

#[test]
fn measurement_helps_under_step1_timing_error() {
    let (params, ideal) = setup(7, 1, 7);
    let params = params.with_rates(0.004, 0.006);
    for d1 in [-0.1, -0.05, 0.05, 0.1] {
        let sch = ideal.with_timing_errors(d1, 0.0);
        let plain = average_outcome(&params, &sch).unwrap();
        let measured = average_outcome(&params, &sch.with_measurement(true)).unwrap();
        assert!(measured.avg_fidelity > plain.avg_fidelity, "dt1={d1}");
        assert!(measured.success_probability < 1.0);
        assert!(plain.success_probability == 1.0);
    }
}

#[test]
fn longer_delay_never_helps() {
    let (params, ideal) = setup(5, 1, 5);
    let params = params.with_rates(0.004, 0.006);
    let mut last = f64::INFINITY;
    for i in 0..12 {
        let f = average_outcome(&params, &ideal.with_delay(i as f64 * 0.75))
            .unwrap()
            .avg_fidelity;
        assert!(f <= last + 1e-12);
        last = f;
    }
}

#[test]
fn six_state_average_equals_quadrature() {
    let (params, ideal) = setup(7, 3, 7);
    let params = params.with_rates(0.01, 0.02);
    let sch = ideal.with_timing_errors(0.03, -0.02).with_delay(1.5);
    let six = average_outcome(&params, &sch).unwrap().avg_fidelity;
    let quad = quadrature_average_fidelity(&params, &sch, 21, 8).unwrap();
    assert!((six - quad).abs() < 1e-6, "{six} vs {quad}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_matrix_stays_physical(
        n_half in 1usize..6,
        gamma in 0.0f64..0.05,
        kappa in 0.0f64..0.05,
        d1 in -0.3f64..0.3,
        d2 in -0.3f64..0.3,
        delay in 0.0f64..5.0,
        theta in 0.0f64..=std::f64::consts::PI,
        phi in 0.0f64..6.28,
        measure in any::<bool>(),
    ) {
        let n = 2 * n_half + 1;
        let (params, ideal) = setup(n, 1, n);
        let params = params.with_rates(gamma, kappa);
        let sch = ideal.with_timing_errors(d1, d2).with_delay(delay).with_measurement(measure);
        let opts = RunOptions { sample_dt: Some(0.5) };
        let run = run_protocol_with(&params, &sch, &BlochState::new(theta, phi).unwrap(), &opts).unwrap();
        assert_physical(&run.rho_final);
        prop_assert!((0.0..=1.0).contains(&run.fidelity));
        prop_assert!((0.0..=1.0).contains(&run.avg_fidelity));
        prop_assert!((0.0..=1.0).contains(&run.success_probability));
        let timeline = run.timeline.unwrap();
        prop_assert!(timeline.windows(2).all(|w| w[1].gt > w[0].gt));
        for p in &timeline {
            let total = p.p_es + p.p_er + p.p_photon + p.p_vac;
            prop_assert!((total - 1.0).abs() < TRACE_TOLERANCE);
        }
    }
}
