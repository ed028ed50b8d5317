use std::f64::consts::PI;

use cca_transfer::ideal_protocol::{
    ideal_fidelity, jc_propagator, perfect_schedule, perfect_timing, transfer_function,
    AtomModeState,
};
use cca_transfer::{BlochState, ModeBasis};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coupled_pairs(basis: &ModeBasis, q: usize) -> Vec<(usize, usize)> {
    let n = basis.n_cavities();
    let mut out = Vec::new();
    for s in 1..=n {
        for r in 1..=n {
            if s != r && basis.amplitude(s, q).unwrap() != 0.0 && basis.amplitude(r, q).unwrap() != 0.0 {
                out.push((s, r));
            }
        }
    }
    out
}

fn random_state(rng: &mut ChaCha8Rng) -> BlochState {
    // uniform on the sphere
    let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
    BlochState::new(cos_theta.acos(), rng.gen_range(0.0..2.0 * PI)).unwrap()
}

#[test]
fn perfect_schedules_give_unit_transfer() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [3, 5, 7, 9, 11] {
        let basis = ModeBasis::new(n).unwrap();
        let q = (n + 1) / 2;
        let pairs = coupled_pairs(&basis, q);
        assert!(!pairs.is_empty());
        for (s, r) in pairs {
            let sch = perfect_schedule(&basis, s, r, q).unwrap();
            let f = transfer_function(&basis, s, r, q, sch.gt1, sch.gt2).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "N={n} {s}->{r}: f={f}");
            for _ in 0..100 {
                let state = random_state(&mut rng);
                assert!((ideal_fidelity(&state, f) - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn reversed_pairs_also_transfer_perfectly() {
    for n in [3, 5, 7, 9, 11] {
        let basis = ModeBasis::new(n).unwrap();
        let q = (n + 1) / 2;
        for (s, r) in coupled_pairs(&basis, q) {
            let fwd = perfect_schedule(&basis, s, r, q).unwrap();
            let back = perfect_schedule(&basis, r, s, q).unwrap();
            let f = transfer_function(&basis, r, s, q, back.gt1, back.gt2).unwrap();
            assert!((f - 1.0).abs() < 1e-12);
            assert!(back.gt1 > 0.0 && back.gt2 > 0.0 && fwd.gt1 > 0.0);
        }
    }
}

#[test]
fn fidelity_independent_of_phase() {
    for f in [-1.0, -0.3, 0.0, 0.42, 1.0] {
        for i in 0..=20 {
            let theta = PI * i as f64 / 20.0;
            let base = ideal_fidelity(&BlochState::new(theta, 0.0).unwrap(), f);
            for j in 1..16 {
                let phi = 2.0 * PI * j as f64 / 16.0;
                let v = ideal_fidelity(&BlochState::new(theta, phi).unwrap(), f);
                assert_eq!(v, base);
            }
        }
    }
}

#[test]
fn single_excitation_sector_is_a_rotation() {
    // oracle: exp(-i θ σx) on {|e,0>, |g,1>} = cos θ I − i sin θ σx
    let basis = ModeBasis::new(3).unwrap();
    let s = basis.amplitude(1, 2).unwrap();
    for gt in [0.1, 1.0, PI / 2f64.sqrt(), 4.0] {
        let psi = AtomModeState::basis_state(1, true, 0).unwrap();
        let out = jc_propagator(&basis, 1, 2, gt, &psi).unwrap();
        let angle = s * gt;
        let e0 = out.amplitude(true, 0);
        let g1 = out.amplitude(false, 1);
        assert!((e0 - Complex64::new(angle.cos(), 0.0)).norm() < 1e-14);
        assert!((g1 - Complex64::new(0.0, -angle.sin())).norm() < 1e-14);
        assert!((out.norm() - 1.0).abs() < 1e-14);
    }
}

proptest! {
    #[test]
    fn transfer_function_is_periodic(
        n_half in 1usize..6,
        gt1 in 0.0f64..20.0,
        gt2 in 0.0f64..20.0,
        pick in 0usize..1000,
    ) {
        let n = 2 * n_half + 1;
        let q = (n + 1) / 2;
        let basis = ModeBasis::new(n).unwrap();
        let pairs = coupled_pairs(&basis, q);
        let (s, r) = pairs[pick % pairs.len()];
        let a = basis.amplitude(s, q).unwrap().abs();
        let b = basis.amplitude(r, q).unwrap().abs();
        let f = transfer_function(&basis, s, r, q, gt1, gt2).unwrap();
        let f1 = transfer_function(&basis, s, r, q, gt1 + 2.0 * PI / a, gt2).unwrap();
        let f2 = transfer_function(&basis, s, r, q, gt1, gt2 + 2.0 * PI / b).unwrap();
        prop_assert!((f - f1).abs() < 1e-10);
        prop_assert!((f - f2).abs() < 1e-10);
    }

    #[test]
    fn fidelity_within_unit_interval(theta in 0.0f64..=PI, phi in 0.0f64..6.28, f in -1.0f64..=1.0) {
        let v = ideal_fidelity(&BlochState::new(theta, phi).unwrap(), f);
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&v));
    }
}

#[test]
fn decoupled_sites_are_reported() {
    let basis = ModeBasis::new(5).unwrap();
    let err = perfect_timing(&basis, 2, 4, 3).unwrap_err();
    assert!(err.to_string().contains("decoupled from mode q=3"));
}
