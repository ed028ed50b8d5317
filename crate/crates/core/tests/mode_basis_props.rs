use std::f64::consts::PI;

use cca_transfer::mode_basis::{end_site_parity_amplitude, mode_amplitude};
use cca_transfer::ModeBasis;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

// Reference values computed independently from the sine formula, without
// going through the crate's angle reduction.
fn reference_amplitude(n: usize, site: usize, mode: usize) -> f64 {
    (2.0 / (n as f64 + 1.0)).sqrt() * ((site * mode) as f64 * PI / (n as f64 + 1.0)).sin()
}

#[test]
fn orthogonal_for_all_small_chains() {
    for n in 2..=64 {
        let basis = ModeBasis::new(n).unwrap();
        let s = basis.amplitudes();
        let defect = (s.transpose() * s - DMatrix::<f64>::identity(n, n)).amax();
        assert!(defect < 1e-12, "N={n}: |S^T S - I|max = {defect:e}");
        assert_eq!(s, &s.transpose(), "N={n} not symmetric");
    }
}

#[test]
fn amplitudes_match_sine_formula() {
    for n in [2, 3, 7, 20, 64] {
        let basis = ModeBasis::new(n).unwrap();
        for site in 1..=n {
            for mode in 1..=n {
                let got = basis.amplitude(site, mode).unwrap();
                let want = reference_amplitude(n, site, mode);
                assert!((got - want).abs() < 1e-12, "N={n} S({site},{mode})");
            }
        }
    }
}

#[test]
fn spectrum_is_symmetric_and_decreasing() {
    for n in 2..=64 {
        let basis = ModeBasis::new(n).unwrap();
        let beta = basis.frequencies();
        for k in 1..=n {
            let a = basis.frequency(k).unwrap();
            let b = basis.frequency(n + 1 - k).unwrap();
            assert!((a + b).abs() < 1e-12, "N={n} k={k}");
        }
        assert!(beta.windows(2).all(|w| w[1] < w[0]), "N={n} not strictly decreasing");
    }
}

#[test]
fn end_site_parity_for_odd_chains() {
    for n in (3..=201).step_by(2) {
        let q = (n + 1) / 2;
        let basis = ModeBasis::new(n).unwrap();
        let got = mode_amplitude(&basis, n, q).unwrap();
        let sign = if (q - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let want = sign / (q as f64).sqrt();
        assert!((got - want).abs() < 1e-12, "N={n}: {got} vs {want}");
        assert!((end_site_parity_amplitude(n).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn even_sites_decouple_from_middle_mode() {
    for n in (3..=41).step_by(2) {
        let basis = ModeBasis::new(n).unwrap();
        let q = (n + 1) / 2;
        for site in (2..=n).step_by(2) {
            assert_eq!(basis.amplitude(site, q).unwrap(), 0.0, "N={n} site {site}");
        }
    }
}

proptest! {
    #[test]
    fn transform_is_an_involution(
        n in 2usize..=64,
        seed in proptest::collection::vec(-1.0f64..1.0, 64),
    ) {
        let basis = ModeBasis::new(n).unwrap();
        let v = DVector::from_iterator(n, seed.into_iter().take(n));
        let twice = basis.to_sites(&basis.to_modes(&v));
        prop_assert!((twice.clone() - &v).amax() < 1e-12);
        // S is symmetric, so to_modes applied twice is also the identity
        let again = basis.to_modes(&basis.to_modes(&v));
        prop_assert!((again - v).amax() < 1e-12);
    }
}
