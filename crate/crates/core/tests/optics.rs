mod common;

use std::f64::consts::PI;

use common::{intensity, intensity_mass, mean_shift_oracle, rel_err};
use proptest::prelude::*;
use tiltmeter::optics::*;
use tiltmeter::weak::postselection_probability;
use tiltmeter::Error;

const SIGMA: f64 = 0.25e-3;

fn beam() -> BeamParams {
    BeamParams::new(SIGMA, 780e-9).unwrap()
}

fn geom() -> Geometry {
    Geometry::new(0.02, 0.2 / SIGMA).unwrap()
}

#[test]
fn beam_wavenumber() {
    let b = beam();
    assert!((b.k0() * b.lambda() - 2.0 * PI).abs() < 1e-12);
    assert!(BeamParams::new(0.0, 780e-9).is_err());
    assert!(BeamParams::new(1e-3, -1.0).is_err());
    assert!(Geometry::new(0.0, 1.0).is_err());
    assert!(Geometry::new(0.02, -300.0).is_ok());
}

#[test]
fn tilt_to_phase_examples() {
    assert_eq!(phase_from_tilt(0.0, &geom(), &beam()).unwrap(), 0.0);
    let phi = phase_from_tilt(0.8e-9, &geom(), &beam()).unwrap();
    let by_hand = 2.0_f64.sqrt() * (2.0 * PI / 780e-9) * 0.02 * 0.8e-9;
    assert!(rel_err(phi, by_hand) < 1e-14);
    assert!((phi - 1.823e-4).abs() < 5e-8);
}

#[test]
fn operating_point_keeps_phase_and_tilt_consistent() {
    let op = OperatingPoint::from_tilt(0.8e-9, geom(), beam()).unwrap();
    assert!(rel_err(op.phi(), phase_from_tilt(0.8e-9, &geom(), &beam()).unwrap()) < 1e-15);
    let back = OperatingPoint::from_phase(op.phi(), geom(), beam()).unwrap();
    assert!(rel_err(back.theta(), 0.8e-9) < 1e-12);
    assert!((op.k_sigma() - 0.2).abs() < 1e-12);
}

#[test]
fn displacement_examples() {
    let g = geom();
    assert!((differential_displacement(200e-15, &g) - 4.0e-15).abs() < 1e-27);
    assert!((differential_displacement(56e-15, &g) - 1.1e-15).abs() < 0.05e-15);
    assert_eq!(differential_displacement(0.0, &g), 0.0);
}

#[test]
fn intensity_against_complex_magnitude() {
    assert_eq!(darkport_intensity(0.0, 0.0, 0.2 / SIGMA, SIGMA), 0.0);
    let k = 0.2 / SIGMA;
    for z in [-SIGMA, 0.0, SIGMA, 2.5 * SIGMA] {
        let a = darkport_intensity(z, 0.05, k, SIGMA);
        let b = intensity(z, 0.05, k, SIGMA);
        assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{z}: {a} vs {b}");
    }
}

#[test]
fn mean_shift_examples() {
    let k = 0.2 / SIGMA;
    assert_eq!(mean_shift_exact(0.0, k, SIGMA).unwrap(), 0.0);
    let exact = mean_shift_exact(0.05, k, SIGMA).unwrap();
    assert!(rel_err(exact, mean_shift_oracle(0.05, k, SIGMA)) < 1e-10);
    assert!((exact / SIGMA - 0.46598).abs() < 5e-6);
    let approx = mean_shift_approx(0.05, k).unwrap();
    assert!((approx / SIGMA - 0.5).abs() < 1e-12);
    let gap = (approx - exact) / approx;
    assert!((gap - 0.068).abs() < 5e-4, "{gap}");
    assert!((mean_shift_approx(0.01, k).unwrap() / SIGMA - 0.1).abs() < 1e-12);
    assert_eq!(mean_shift_approx(0.0, k).unwrap(), 0.0);
}

#[test]
fn mean_shift_degenerate_and_sign() {
    assert!(matches!(mean_shift_exact(0.0, 0.0, SIGMA), Err(Error::NoLight)));
    assert!(mean_shift_approx(0.01, 0.0).is_err());
    let op = OperatingPoint::from_tilt(1e-9, geom(), beam()).unwrap();
    assert!(op.phi() > 0.0);
    assert!(mean_shift_exact(op.phi(), op.k(), SIGMA).unwrap() > 0.0);
}

#[test]
fn library_quadrature_agrees_with_closed_form() {
    let k = 0.2 / SIGMA;
    for phi in [1e-3, 0.05, 0.3] {
        let q = mean_shift_quadrature(phi, k, SIGMA).unwrap();
        assert!(rel_err(q, mean_shift_exact(phi, k, SIGMA).unwrap()) < 1e-9);
    }
}

#[test]
fn detected_fraction_examples() {
    assert_eq!(detected_fraction(0.0, SIGMA), 0.0);
    assert!((detected_fraction(0.2 / SIGMA, SIGMA) - 0.01).abs() < 1e-15);
    assert!(rel_err(detected_fraction(0.674 / SIGMA, SIGMA), 1.0 / 8.8) < 0.01);
}

#[test]
fn misalignment_examples() {
    let k = misalignment_from_power_ratio(8.8, SIGMA).unwrap();
    assert!((k - 2697.0).abs() < 1.0, "{k}");
    assert!((k * SIGMA - 0.674).abs() < 1e-3);
    assert!((misalignment_from_power_ratio(400.0, 1.0).unwrap() - 0.1).abs() < 1e-15);
    assert!(misalignment_from_power_ratio(1.0, SIGMA).is_err());
    assert!(misalignment_from_power_ratio(0.5, SIGMA).is_err());
    assert_eq!(misalignment_angle(0.0, &beam()), 0.0);
    let angle = misalignment_angle(k, &beam());
    assert!((angle - 3.35e-4).abs() < 0.01e-4, "{angle}");
    assert!(rel_err(angle, 0.3e-3) < 0.15);
}

#[test]
fn normalization_matches_weak_probability() {
    for ks in [0.02, 0.05, 0.1, 0.2] {
        for phi in [0.0, 1e-3, 0.05, 0.2] {
            let k = ks / SIGMA;
            let ratio = intensity_mass(phi, k, SIGMA) / ((2.0 * PI).sqrt() * SIGMA);
            let four_p = 4.0 * postselection_probability(phi, k, SIGMA);
            assert!((ratio - four_p).abs() <= 0.5 * ks.powi(4), "ks={ks} phi={phi}");
        }
    }
}

#[test]
fn amplification_grows_as_misalignment_shrinks() {
    let mut last = 0.0;
    for ks in [0.4, 0.2, 0.1, 0.05, 0.02, 0.01] {
        let k = ks / SIGMA;
        let shift = mean_shift_approx(1e-3 * 0.01, k).unwrap().abs();
        assert!(shift > last);
        last = shift;
    }
}

proptest! {
    #[test]
    fn mean_shift_is_odd_in_phi(phi in -1.0f64..1.0, ks in 0.01f64..0.8) {
        let k = ks / SIGMA;
        let a = mean_shift_exact(phi, k, SIGMA).unwrap();
        let b = mean_shift_exact(-phi, k, SIGMA).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn mean_shift_flips_with_misalignment_sign(phi in 1e-4f64..1.0, ks in 0.01f64..0.8) {
        let k = ks / SIGMA;
        let a = mean_shift_exact(phi, k, SIGMA).unwrap();
        let b = mean_shift_exact(phi, -k, SIGMA).unwrap();
        prop_assert!((a + b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn tilt_phase_round_trip(theta in -1e-3f64..1e-3, l in 1e-3f64..1.0, lambda_nm in 300.0f64..2000.0) {
        let b = BeamParams::new(SIGMA, lambda_nm * 1e-9).unwrap();
        let g = Geometry::new(l, 1.0).unwrap();
        let phi = phase_from_tilt(theta, &g, &b).unwrap();
        let back = tilt_from_phase(phi, &g, &b).unwrap();
        prop_assert!((back - theta).abs() <= 1e-12 * theta.abs());
    }

    #[test]
    fn intensity_is_bounded(z in -5e-3f64..5e-3, phi in -PI..PI, ks in -1.0f64..1.0) {
        let v = darkport_intensity(z, phi, ks / SIGMA, SIGMA);
        prop_assert!((0.0..=4.0).contains(&v));
    }

    #[test]
    fn shift_below_small_signal_limit(phi in 1e-4f64..0.3, ks in 0.02f64..0.4) {
        let k = ks / SIGMA;
        let exact = mean_shift_exact(phi, k, SIGMA).unwrap();
        prop_assert!(exact > 0.0 && exact < mean_shift_approx(phi, k).unwrap());
    }
}
