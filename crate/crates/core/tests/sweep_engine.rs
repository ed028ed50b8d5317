use cca_transfer::sweep::{
    evaluate_point, find_threshold_n, read_csv, read_json, run_sweep, write_csv, write_json,
    ParamSet, Preset, Provenance, RunRecord, SweepKind, SweepOptions, SweepSpec, ThresholdResult,
};
use cca_transfer::ModeDecayScaling;
use proptest::prelude::*;

fn deterministic(workers: usize) -> SweepOptions {
    SweepOptions {
        workers,
        record_timing: false,
    }
}

fn csv_bytes(spec: &SweepSpec, records: &[RunRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, &Provenance::for_spec(spec, None), records).unwrap();
    buf
}

fn arb_record() -> impl Strategy<Value = RunRecord> {
    (
        (2usize..300, 1usize..300, 1usize..300, 1usize..300),
        (0.0f64..1e3, -1e3f64..1e3, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        (any::<bool>(), 0.0f64..50.0, 0.0f64..50.0, 0.0f64..500.0),
        (-0.99f64..0.99, -0.99f64..0.99, any::<bool>()),
        (0.0f64..=1.0, 0.0f64..=1.0, proptest::option::of(0.0f64..100.0)),
    )
        .prop_map(|(idx, rates, times, errs, out)| RunRecord {
            n_cavities: idx.0,
            sender: idx.1,
            receiver: idx.2,
            resonant_mode: idx.3,
            hop_rate_over_g: rates.0,
            detuning_over_g: rates.1,
            gamma_over_g: rates.2,
            kappa_s_over_g: rates.3,
            kappa_r_over_g: rates.4,
            mode_decay_scaling: if times.0 {
                ModeDecayScaling::Paper
            } else {
                ModeDecayScaling::Uniform
            },
            gt1: times.1,
            gt2: times.2,
            gt_delay: times.3,
            dt1_frac: errs.0,
            dt2_frac: errs.1,
            measure_after_step1: errs.2,
            avg_fidelity: out.0,
            success_probability: out.1,
            wall_time_s: out.2,
        })
}

proptest! {
    #[test]
    fn records_round_trip_through_csv_and_json(records in proptest::collection::vec(arb_record(), 0..8)) {
        let spec = SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Current);
        let prov = Provenance::for_spec(&spec, Some(Preset::Fig2Current));

        let mut buf = Vec::new();
        write_csv(&mut buf, &prov, &records).unwrap();
        prop_assert_eq!(&read_csv(buf.as_slice()).unwrap(), &records);

        let mut buf = Vec::new();
        write_json(&mut buf, &prov, &records).unwrap();
        let doc = read_json(buf.as_slice()).unwrap();
        prop_assert_eq!(&doc.records, &records);
        prop_assert_eq!(doc.provenance, prov);
    }
}

#[test]
fn output_is_identical_for_any_worker_count() {
    for preset in [Preset::Table2, Preset::Fig3] {
        let mut spec = preset.spec();
        if preset == Preset::Fig3 {
            spec.n_range = vec![5, 7];
            spec.error_grid = vec![-0.04, -0.02, 0.0, 0.02, 0.04];
        }
        let reference = csv_bytes(&spec, &run_sweep(&spec, &deterministic(1)).unwrap());
        for workers in [2, 3, 8] {
            let again = csv_bytes(&spec, &run_sweep(&spec, &deterministic(workers)).unwrap());
            assert_eq!(reference, again, "{} with {workers} workers", preset.name());
        }
    }
}

#[test]
fn stored_records_reproduce_on_reevaluation() {
    let mut spec = Preset::Fig4.spec();
    spec.n_range = vec![5, 9];
    spec.delay_grid = vec![0.0, 1.0, 7.5];
    let records = run_sweep(&spec, &deterministic(0)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &Provenance::for_spec(&spec, Some(Preset::Fig4)), &records).unwrap();
    for rec in read_csv(buf.as_slice()).unwrap() {
        let again = evaluate_point(&rec.params(), &rec.schedule(), false).unwrap();
        assert!((again.avg_fidelity - rec.avg_fidelity).abs() < 1e-9);
    }
}

#[test]
fn fidelity_falls_with_n_within_each_parity_class() {
    let spec = SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Current).with_n_range((3..=61).step_by(2));
    let records = run_sweep(&spec, &deterministic(0)).unwrap();
    for class in 0..2 {
        let series: Vec<f64> = records
            .iter()
            .filter(|r| r.resonant_mode % 2 == class)
            .map(|r| r.avg_fidelity)
            .collect();
        assert!(series.len() > 10);
        assert!(series.windows(2).all(|w| w[1] <= w[0]), "class {class}: {series:?}");
    }
}

#[test]
fn threshold_edge_cases() {
    let spec = |value: f64, hi: usize| {
        let mut s = SweepSpec::new(SweepKind::Threshold, ParamSet::Current).with_n_range((3..=hi).step_by(2));
        s.threshold_value = value;
        s
    };
    let opts = deterministic(0);

    let all = find_threshold_n(&spec(0.5, 21), &opts).unwrap();
    assert_eq!(all.result, ThresholdResult::UnboundedWithinRange(21));

    let none = find_threshold_n(&spec(0.999, 21), &opts).unwrap();
    assert_eq!(none.result, ThresholdResult::NotFound);

    let classical = find_threshold_n(&spec(2.0 / 3.0, 101), &opts).unwrap();
    assert_eq!(classical.result, ThresholdResult::Found(51));
    assert!(classical.evaluations.len() < 20);
    let f = |n: usize| classical.evaluations.iter().find(|r| r.n_cavities == n).map(|r| r.avg_fidelity);
    if let Some(v) = f(51) {
        assert!(v >= 2.0 / 3.0);
    }
}

#[test]
fn bad_specs_are_rejected() {
    let mut spec = SweepSpec::new(SweepKind::FidelityVsN, ParamSet::Current).with_n_range([3, 4, 5]);
    assert!(spec.validate().is_err());
    spec.n_range = vec![7, 5];
    assert!(spec.validate().is_err());
    spec.n_range = vec![];
    assert!(spec.validate().is_err());
}
