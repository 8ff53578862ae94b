use std::f64::consts::PI;

use afc_core::susceptibility::{
    chi_square_exact, chi_square_series, epsilon_broadened, epsilon_broadened_periodic,
    epsilon_peak_center, epsilon_window_center, kramers_kronig, lorentzian_convolution,
    symmetric_grid, Boundary,
};
use afc_core::{CombShape, CombSpec, Execution, MediumResponse, MediumSpec, Model};
use proptest::prelude::*;

fn shapes() -> impl Strategy<Value = CombShape> {
    prop_oneof![
        Just(CombShape::Square),
        Just(CombShape::Lorentzian),
        Just(CombShape::Harmonic)
    ]
}

proptest! {
    #[test]
    fn population_is_even_and_periodic(shape in shapes(), f in 1.5f64..20.0, x in -4.0f64..4.0) {
        let comb = CombSpec::with_finesse(shape, f).pairs(40);
        let n = |d: f64| comb.population_difference(d).unwrap();
        prop_assert!((n(x) - n(-x)).abs() < 1e-10);
        // Lorentzian tails of the finite comb break exact periodicity slightly
        let tol = if shape == CombShape::Lorentzian { 1e-3 } else { 1e-10 };
        prop_assert!((n(x) - n(x + 2.0)).abs() < tol, "{} vs {}", n(x), n(x + 2.0));
    }

    #[test]
    fn response_has_real_kernel_symmetry(f in 1.5f64..20.0, gamma in 0.001f64..0.2, nu in 0.01f64..3.0) {
        let comb = CombSpec::with_finesse(CombShape::Square, f).gamma(gamma);
        for model in [Model::Broadened, Model::BroadenedPeriodic] {
            let r = MediumResponse::new(comb, MediumSpec::new(5.0), model).unwrap();
            let (a, b) = (r.response(nu).unwrap(), r.response(-nu).unwrap());
            prop_assert!((a.absorption - b.absorption).abs() < 1e-10);
            prop_assert!((a.dispersion + b.dispersion).abs() < 1e-10);
            let h = r.transfer(nu).unwrap();
            prop_assert!(h.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn broadened_absorption_is_bounded(f in 1.5f64..20.0, gamma in 0.001f64..0.5, nu in -3.0f64..3.0) {
        let r = epsilon_broadened_periodic(nu, 1.0 / f, 1.0, gamma).unwrap();
        prop_assert!(r.absorption > 0.0 && r.absorption < 1.0);
    }
}

#[test]
fn square_duty_cycle() {
    for f in [2.0, 5.0, 10.0, 32.0] {
        let comb = CombSpec::with_finesse(CombShape::Square, f);
        let m = 200_000;
        let covered: f64 = (0..m)
            .map(|i| comb.population_difference(-1.0 + 2.0 * (i as f64 + 0.5) / m as f64).unwrap())
            .sum::<f64>()
            / m as f64;
        assert!((covered - 1.0 / f).abs() < 1e-5, "F={f}: {covered}");
    }
}

#[test]
fn finesse_and_delay() {
    let comb = CombSpec::lorentzian(2.0, 0.25);
    assert_eq!(comb.finesse(), 8.0);
    assert_eq!(comb.delay_time(), PI / 2.0);
    assert_eq!(CombSpec::harmonic(1.0).finesse(), 2.0);
    assert!(CombSpec::square(1.0, 1.5).validate().is_err());
    assert!(CombSpec::square(1.0, 0.2).gamma(-1.0).validate().is_err());
}

#[test]
fn exact_square_values() {
    let r = chi_square_exact(0.0, 0.1, 9).unwrap();
    assert_eq!(r.absorption, 0.0);
    assert!(r.dispersion.abs() < 1e-15);
    assert_eq!(chi_square_exact(1.0, 0.1, 9).unwrap().absorption, 1.0);
}

#[test]
fn broadening_ladder_is_monotone() {
    let mut last_peak = 1.0;
    let mut last_window = 0.0;
    for gamma in [0.001, 0.005, 0.01, 0.02, 0.05] {
        let peak = epsilon_broadened(1.0, 0.1, 1.0, gamma, 9).unwrap().absorption;
        let window = epsilon_broadened(0.0, 0.1, 1.0, gamma, 9).unwrap().absorption;
        assert!(peak < last_peak && window > last_window, "gamma={gamma}");
        (last_peak, last_window) = (peak, window);
    }
}

#[test]
fn peak_and_window_closed_forms_match_sums() {
    let peak = epsilon_broadened(1.0, 0.1, 1.0, 0.01, 9).unwrap().absorption;
    assert!((peak - 0.937).abs() < 0.001, "{peak}");
    assert!((epsilon_peak_center(0.1, 1.0, 0.01).unwrap() - peak).abs() < 2e-3);
    let window = epsilon_broadened(0.0, 0.1, 1.0, 0.01, 9).unwrap().absorption;
    let series = epsilon_window_center(0.1, 1.0, 0.01, 9).unwrap();
    assert!((window - series).abs() < 0.05 * series, "{window} vs {series}");
}

#[test]
fn three_broadened_forms_agree() {
    // arctangent sum, numerical Lorentzian average, infinite-comb closed form
    let comb = CombSpec::square(1.0, 0.2).gamma(0.02).pairs(60);
    for nu in [0.0, 0.5, 0.79, 0.81, 1.0, 1.7] {
        let sum = epsilon_broadened(nu, 0.2, 1.0, 0.02, 60).unwrap();
        let conv = lorentzian_convolution(&comb, nu).unwrap();
        let per = epsilon_broadened_periodic(nu, 0.2, 1.0, 0.02).unwrap();
        assert!((sum.absorption - conv.absorption).abs() < 1e-6, "nu={nu}");
        assert!((sum.dispersion - conv.dispersion).abs() < 1e-6, "nu={nu}");
        assert!((sum.absorption - per.absorption).abs() < 1e-3, "nu={nu}");
        // finite-comb dispersion off the center converges like 1/N
        assert!((sum.dispersion - per.dispersion).abs() < 2e-2 * nu.abs().max(0.05), "nu={nu}");
    }
}

#[test]
fn vanishing_gamma_recovers_indicator() {
    for nu in [0.0, 0.3, 0.85, 0.95, 1.0, 1.05, 1.5, 2.9, 3.0, -1.02] {
        let want = chi_square_exact(nu, 0.1, 9).unwrap().absorption;
        let got = epsilon_broadened(nu, 0.1, 1.0, 1e-5, 9).unwrap().absorption;
        assert!((got - want).abs() < 1e-3, "nu={nu}: {got}");
    }
}

#[test]
fn series_dispersion_matches_hilbert_transform() {
    let nu = symmetric_grid(1.0, 2049);
    let abs: Vec<f64> = nu.iter().map(|&x| chi_square_series(x, 0.2, 300).unwrap().absorption).collect();
    let kk = kramers_kronig(&abs, &nu, Boundary::Periodic, 1e-6, Execution::Sequential).unwrap();
    let rms = (nu
        .iter()
        .zip(&kk.dispersion)
        .map(|(&x, d)| (d - chi_square_series(x, 0.2, 300).unwrap().dispersion).powi(2))
        .sum::<f64>()
        / nu.len() as f64)
        .sqrt();
    assert!(rms < 1e-3, "{rms}");
}

#[test]
fn exact_dispersion_matches_hilbert_transform() {
    let nu = symmetric_grid(40.0, 8001);
    let abs: Vec<f64> = nu.iter().map(|&x| chi_square_exact(x, 0.2, 9).unwrap().absorption).collect();
    let kk = kramers_kronig(&abs, &nu, Boundary::Decaying, 1.0, Execution::default()).unwrap();
    let (mut sq, mut n) = (0.0, 0);
    for (i, &x) in nu.iter().enumerate() {
        // away from the peak edges at 0.8 and 1.2 (mod 2) and the comb's outer boundary
        let m = x.abs() % 2.0;
        let near_edge = (m - 0.8).abs() < 0.05 || (m - 1.2).abs() < 0.05;
        if x.abs() < 15.0 && !near_edge {
            let want = chi_square_exact(x, 0.2, 9).unwrap().dispersion;
            sq += (kk.dispersion[i] - want).powi(2);
            n += 1;
        }
    }
    let rms = (sq / n as f64).sqrt();
    assert!(rms < 1e-2, "{rms}");
}

#[test]
fn lorentzian_periodic_transfer_is_passive() {
    let comb = CombSpec::with_finesse(CombShape::Lorentzian, 5.0);
    let r = MediumResponse::new(comb, MediumSpec::new(20.0), Model::IdealPeriodic).unwrap();
    for i in 0..200 {
        let nu = -2.0 + 0.02 * i as f64;
        assert!(r.transfer(nu).unwrap().norm() <= 1.0);
    }
}
