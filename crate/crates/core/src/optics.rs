//! Classical optics of the misaligned Sagnac dark port.
//!
//! Sign convention: a positive mirror tilt θ produces a positive relative
//! phase φ, and for k > 0 a positive φ moves the mean of the dark-port
//! distribution towards positive z.
//!
//! All intensities are unnormalized (proportionality constant 1). Only ratios
//! of integrals are observable, so the constant never enters a result.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::quadrature::{self, GAUSSIAN_WINDOW_SIGMAS};

/// Largest kσ for which the weak-misalignment approximations are trusted.
/// Above it the approximate formulas still evaluate but a warning is logged.
pub const WEAK_MISALIGNMENT_LIMIT: f64 = 0.8;

/// Gaussian meter beam: `sigma` is half the 1/e² intensity radius, so the
/// beam diameter is 4σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamParams {
    sigma: f64,
    lambda: f64,
}

impl BeamParams {
    pub fn new(sigma: f64, lambda: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        ensure_positive("lambda", lambda)?;
        Ok(Self { sigma, lambda })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Optical wavenumber 2π/λ.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lambda
    }
}

/// Interferometer geometry: beam-separation parameter `l` at the tilted
/// mirror and the transverse misalignment kick `k` (sign gives direction).
///
/// `l` is the quantity that enters φ = √2·k₀·L·θ. The physical beam separation
/// is sometimes quoted as L/√2 instead; this type always means the former.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    l: f64,
    k: f64,
}

impl Geometry {
    pub fn new(l: f64, k: f64) -> Result<Self> {
        ensure_positive("L", l)?;
        ensure_finite("k", k)?;
        Ok(Self { l, k })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::new(self.l, k)
    }
}

/// Interferometer state. `theta` and `phi` are kept consistent through
/// φ = √2·k₀·L·θ by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    theta: f64,
    phi: f64,
    beam: BeamParams,
    geom: Geometry,
}

impl OperatingPoint {
    pub fn from_tilt(theta: f64, geom: Geometry, beam: BeamParams) -> Result<Self> {
        let phi = phase_from_tilt(theta, &geom, &beam)?;
        Ok(Self { theta, phi, beam, geom })
    }

    pub fn from_phase(phi: f64, geom: Geometry, beam: BeamParams) -> Result<Self> {
        let theta = tilt_from_phase(phi, &geom, &beam)?;
        Ok(Self { theta, phi, beam, geom })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn beam(&self) -> &BeamParams {
        &self.beam
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn k(&self) -> f64 {
        self.geom.k
    }

    pub fn sigma(&self) -> f64 {
        self.beam.sigma
    }

    /// Dimensionless misalignment kσ.
    pub fn k_sigma(&self) -> f64 {
        self.geom.k * self.beam.sigma
    }
}

/// Tilt-to-phase scale √2·k₀·L (rad of phase per rad of tilt).
pub fn tilt_to_phase_scale(geom: &Geometry, beam: &BeamParams) -> f64 {
    SQRT_2 * beam.k0() * geom.l
}

/// φ = √2·k₀·L·θ.
pub fn phase_from_tilt(theta: f64, geom: &Geometry, beam: &BeamParams) -> Result<f64> {
    ensure_finite("theta", theta)?;
    Ok(tilt_to_phase_scale(geom, beam) * theta)
}

/// θ = φ/(√2·k₀·L), the inverse of [`phase_from_tilt`].
pub fn tilt_from_phase(phi: f64, geom: &Geometry, beam: &BeamParams) -> Result<f64> {
    ensure_finite("phi", phi)?;
    Ok(phi / tilt_to_phase_scale(geom, beam))
}

/// Transverse dark-port intensity `4·sin²((φ+kz)/2)·exp(−z²/2σ²)`, which is
/// `|1 − e^{i(φ+kz)}|²` times the input Gaussian.
pub fn darkport_intensity(z: f64, phi: f64, k: f64, sigma: f64) -> f64 {
    let half = 0.5 * (phi + k * z);
    let s = half.sin();
    4.0 * s * s * (-z * z / (2.0 * sigma * sigma)).exp()
}

fn check_shift_args(phi: f64, k: f64, sigma: f64) -> Result<()> {
    ensure_finite("phi", phi)?;
    ensure_finite("k", k)?;
    ensure_positive("sigma", sigma)?;
    if phi == 0.0 && k == 0.0 {
        return Err(Error::NoLight);
    }
    Ok(())
}

/// Exact mean of the dark-port distribution,
/// `kσ²·sin φ / (e^{k²σ²/2} − cos φ)`.
///
/// The denominator is evaluated as `expm1(k²σ²/2) + 2·sin²(φ/2)` so that small
/// φ and kσ keep full relative precision.
pub fn mean_shift_exact(phi: f64, k: f64, sigma: f64) -> Result<f64> {
    check_shift_args(phi, k, sigma)?;
    let ks = k * sigma;
    let sh = (0.5 * phi).sin();
    let den = (0.5 * ks * ks).exp_m1() + 2.0 * sh * sh;
    if den == 0.0 {
        return Err(Error::NoLight);
    }
    Ok(k * sigma * sigma * phi.sin() / den)
}

/// Small-signal mean shift 2φ/k, valid for φ ≪ kσ ≪ 1.
pub fn mean_shift_approx(phi: f64, k: f64) -> Result<f64> {
    ensure_finite("phi", phi)?;
    ensure_finite("k", k)?;
    if k == 0.0 {
        return Err(Error::Domain("mean_shift_approx needs k != 0".into()));
    }
    Ok(2.0 * phi / k)
}

/// Fraction of the input power reaching the dark port in the weak-misalignment
/// limit, (kσ/2)².
pub fn detected_fraction(k: f64, sigma: f64) -> f64 {
    let ks = k * sigma;
    if ks.abs() > WEAK_MISALIGNMENT_LIMIT {
        log::warn!("k*sigma = {ks:.3} exceeds {WEAK_MISALIGNMENT_LIMIT}; (k*sigma/2)^2 is only approximate");
    }
    0.25 * ks * ks
}

/// Recovers the misalignment k from the bright-to-dark power ratio, the
/// inverse of [`detected_fraction`]: k = (2/σ)/√ratio.
pub fn misalignment_from_power_ratio(ratio: f64, sigma: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(Error::Domain(format!("power ratio must exceed 1, got {ratio}")));
    }
    Ok(2.0 / (sigma * ratio.sqrt()))
}

/// Misalignment angle k/k₀.
pub fn misalignment_angle(k: f64, beam: &BeamParams) -> f64 {
    k / beam.k0()
}

/// Differential mirror displacement θ·L.
pub fn differential_displacement(theta: f64, geom: &Geometry) -> f64 {
    theta * geom.l
}

/// ∫ I_out dz over ±8σ by adaptive quadrature.
pub fn darkport_power_quadrature(phi: f64, k: f64, sigma: f64) -> f64 {
    let w = GAUSSIAN_WINDOW_SIGMAS * sigma;
    quadrature::integrate(|z| darkport_intensity(z, phi, k, sigma), -w, w, 0.0, 1e-13)
}

/// ⟨z⟩ from quadrature of the dark-port intensity, for validating the closed form.
pub fn mean_shift_quadrature(phi: f64, k: f64, sigma: f64) -> Result<f64> {
    check_shift_args(phi, k, sigma)?;
    let w = GAUSSIAN_WINDOW_SIGMAS * sigma;
    let first = quadrature::integrate(
        |z| z * darkport_intensity(z, phi, k, sigma),
        -w,
        w,
        0.0,
        1e-13,
    );
    Ok(first / darkport_power_quadrature(phi, k, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beam() -> BeamParams {
        BeamParams::new(0.25e-3, 780e-9).unwrap()
    }

    #[test]
    fn k0_lambda_identity() {
        let b = beam();
        assert!((b.k0() * b.lambda() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(BeamParams::new(0.0, 780e-9).is_err());
        assert!(BeamParams::new(1e-3, -1.0).is_err());
        assert!(Geometry::new(0.0, 1.0).is_err());
        assert!(Geometry::new(0.02, f64::NAN).is_err());
        let g = Geometry::new(0.02, 0.0).unwrap();
        assert!(phase_from_tilt(f64::INFINITY, &g, &beam()).is_err());
    }

    #[test]
    fn phase_from_tilt_values() {
        let g = Geometry::new(0.02, 0.0).unwrap();
        assert_eq!(phase_from_tilt(0.0, &g, &beam()).unwrap(), 0.0);
        let phi = phase_from_tilt(0.8e-9, &g, &beam()).unwrap();
        let expected = 2.0_f64.sqrt() * (2.0 * PI / 780e-9) * 0.02 * 0.8e-9;
        assert!((phi / expected - 1.0).abs() < 1e-12);
        assert!((phi - 1.823e-4).abs() < 1e-7);
    }

    #[test]
    fn operating_point_consistent() {
        let g = Geometry::new(0.02, 800.0).unwrap();
        let op = OperatingPoint::from_tilt(3e-10, g, beam()).unwrap();
        let back = OperatingPoint::from_phase(op.phi(), g, beam()).unwrap();
        assert!((back.theta() / op.theta() - 1.0).abs() < 1e-12);
        assert!((op.k_sigma() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn darkport_dark_fringe_and_symmetry() {
        assert_eq!(darkport_intensity(0.0, 0.0, 0.2, 1.0), 0.0);
        for z in [0.1, 0.7, 1.9, 3.3] {
            assert_eq!(darkport_intensity(z, 0.0, 0.2, 1.0), darkport_intensity(-z, 0.0, 0.2, 1.0));
        }
    }

    #[test]
    fn darkport_matches_complex_magnitude() {
        let (phi, k, sigma, z) = (0.05, 0.2, 1.0, 1.0);
        let arg: f64 = phi + k * z;
        let re = 1.0 - arg.cos();
        let im = -arg.sin();
        let direct = (re * re + im * im) * (-z * z / (2.0 * sigma * sigma)).exp();
        assert!((darkport_intensity(z, phi, k, sigma) - direct).abs() < 1e-12);
    }

    #[test]
    fn mean_shift_exact_reference_value() {
        let s = mean_shift_exact(0.05, 0.2, 1.0).unwrap();
        assert!((s - 0.46598).abs() < 1e-5, "{s}");
        assert_eq!(mean_shift_exact(0.0, 0.2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_shift_degenerate_point() {
        assert!(matches!(mean_shift_exact(0.0, 0.0, 1.0), Err(Error::NoLight)));
        assert!(matches!(mean_shift_quadrature(0.0, 0.0, 1.0), Err(Error::NoLight)));
    }

    #[test]
    fn mean_shift_gap_to_approx() {
        let exact = mean_shift_exact(0.05, 0.2, 1.0).unwrap();
        let approx = mean_shift_approx(0.05, 0.2).unwrap();
        assert!((approx - 0.5).abs() < 1e-15);
        let gap = (approx - exact) / approx;
        assert!((gap - 0.068).abs() < 0.002, "{gap}");
    }

    #[test]
    fn mean_shift_approx_values() {
        assert_eq!(mean_shift_approx(0.0, 0.2).unwrap(), 0.0);
        assert!((mean_shift_approx(0.01, 0.2).unwrap() - 0.1).abs() < 1e-15);
        assert!(mean_shift_approx(0.01, 0.0).is_err());
    }

    #[test]
    fn detected_fraction_values() {
        assert_eq!(detected_fraction(0.0, 1.0), 0.0);
        assert!((detected_fraction(0.2, 1.0) - 0.01).abs() < 1e-15);
        assert!((1.0 / detected_fraction(0.674, 1.0) - 8.8).abs() < 0.01);
    }

    #[test]
    fn power_ratio_inversion() {
        let k = misalignment_from_power_ratio(8.8, 0.25e-3).unwrap();
        assert!((k - 2697.0).abs() < 1.0, "{k}");
        assert!((k * 0.25e-3 - 0.674).abs() < 1e-3);
        let k = misalignment_from_power_ratio(400.0, 1.0).unwrap();
        assert!((k - 0.1).abs() < 1e-15);
        for r in [2.0, 10.0, 100.0] {
            let k = misalignment_from_power_ratio(r, 0.3).unwrap();
            assert!((detected_fraction(k, 0.3) - 1.0 / r).abs() < 1e-15);
        }
        assert!(misalignment_from_power_ratio(1.0, 1.0).is_err());
        assert!(misalignment_from_power_ratio(0.5, 1.0).is_err());
    }

    #[test]
    fn misalignment_angle_values() {
        let b = beam();
        assert_eq!(misalignment_angle(0.0, &b), 0.0);
        let k = misalignment_from_power_ratio(8.8, 0.25e-3).unwrap();
        let a = misalignment_angle(k, &b);
        assert!((a - 3.35e-4).abs() < 0.01e-4, "{a}");
        assert!((misalignment_angle(2.0 * k, &b) - 2.0 * a).abs() < 1e-18);
    }

    #[test]
    fn differential_displacement_values() {
        let g = Geometry::new(0.02, 0.0).unwrap();
        assert!((differential_displacement(200e-15, &g) - 4.0e-15).abs() < 1e-27);
        assert!((differential_displacement(56e-15, &g) - 1.12e-15).abs() < 1e-27);
        assert_eq!(differential_displacement(0.0, &g), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let q = mean_shift_quadrature(0.05, 0.2, 1.0).unwrap();
        let e = mean_shift_exact(0.05, 0.2, 1.0).unwrap();
        assert!((q / e - 1.0).abs() < 1e-10);
    }
}
