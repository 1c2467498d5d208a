//! Qubit ⊗ meter description of the dark-port measurement.
//!
//! The which-path qubit is pre-selected in |i⟩ = (|↺⟩ + |↻⟩)/√2, coupled to
//! the transverse meter through exp(+i g σ₃ ⊗ ẑ) with 2g = k, and post-selected
//! on |f⟩ = (|↺⟩ − e^{iφ}|↻⟩)/√2. The global phase of |f⟩ is kept as written;
//! only |⟨f|…⟩|² is observable.

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::optics::{darkport_power_quadrature, WEAK_MISALIGNMENT_LIMIT};

type Qubit = [Complex64; 2];

fn inner(bra: &Qubit, ket: &Qubit) -> Complex64 {
    bra[0].conj() * ket[0] + bra[1].conj() * ket[1]
}

/// Pre- and post-selected qubit states for post-selection phase `phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitSelection {
    phi: f64,
}

impl QubitSelection {
    pub fn new(phi: f64) -> Result<Self> {
        ensure_finite("phi", phi)?;
        Ok(Self { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// |i⟩ in the (|↺⟩, |↻⟩) basis.
    pub fn pre(&self) -> Qubit {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        [a, a]
    }

    /// |f⟩ in the (|↺⟩, |↻⟩) basis.
    pub fn post(&self) -> Qubit {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        [Complex64::new(a, 0.0), -Complex64::from_polar(a, self.phi)]
    }

    /// ⟨f|i⟩ = (1 − e^{−iφ})/2.
    pub fn overlap(&self) -> Complex64 {
        inner(&self.post(), &self.pre())
    }

    /// ⟨f|σ₃|i⟩ = (1 + e^{−iφ})/2.
    pub fn sigma3_element(&self) -> Complex64 {
        let i = self.pre();
        inner(&self.post(), &[i[0], -i[1]])
    }

    /// Weak value computed from the explicit state vectors.
    pub fn weak_value(&self) -> Result<Complex64> {
        let overlap = self.overlap();
        if overlap.norm() < 1e-300 || is_multiple_of_two_pi(self.phi) {
            return Err(Error::OrthogonalPostSelection(self.phi));
        }
        Ok(self.sigma3_element() / overlap)
    }
}

fn is_multiple_of_two_pi(phi: f64) -> bool {
    (0.5 * phi).sin() == 0.0 || phi.rem_euclid(2.0 * std::f64::consts::PI) == 0.0
}

/// Gaussian meter |Ψ⟩ with width `sigma` and coupling g = k/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeterState {
    sigma: f64,
    g: f64,
}

impl MeterState {
    pub fn new(sigma: f64, k: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        ensure_finite("k", k)?;
        Ok(Self { sigma, g: 0.5 * k })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    /// Misalignment k = 2g.
    pub fn k(&self) -> f64 {
        2.0 * self.g
    }

    /// Unnormalized meter amplitude ⟨z|⟨f|e^{igσ₃z}|i⟩|Ψ⟩, written as
    /// `⟨f|i⟩cos(kz/2) + i sin(kz/2)⟨f|σ₃|i⟩` so it stays finite at φ = 0.
    /// The kick sign puts the dark fringe at z = −φ/k, matching the
    /// dark-port profile and the positive mean shift.
    pub fn postselected_amplitude(&self, z: f64, sel: &QubitSelection) -> Complex64 {
        let half = self.g * z;
        let envelope = (-z * z / (4.0 * self.sigma * self.sigma)).exp()
            / ((2.0 * std::f64::consts::PI).sqrt() * self.sigma).sqrt();
        let amp = sel.overlap() * half.cos()
            + Complex64::i() * half.sin() * sel.sigma3_element();
        amp * envelope
    }
}

/// −i·cot(φ/2).
pub fn weak_value(phi: f64) -> Result<Complex64> {
    ensure_finite("phi", phi)?;
    if is_multiple_of_two_pi(phi) {
        return Err(Error::OrthogonalPostSelection(phi));
    }
    let half = 0.5 * phi;
    Ok(Complex64::new(0.0, -half.cos() / half.sin()))
}

/// Exact post-selection probability `(1 − e^{−k²σ²/2}·cos φ)/2`, evaluated
/// as `(−expm1(−k²σ²/2)·cos φ + 2 sin²(φ/2))/2`.
pub fn postselection_probability_exact(phi: f64, k: f64, sigma: f64) -> f64 {
    let ks = k * sigma;
    let sh = (0.5 * phi).sin();
    0.5 * (-(-0.5 * ks * ks).exp_m1() * phi.cos() + 2.0 * sh * sh)
}

/// Post-selection probability from quadrature of the dark-port intensity,
/// normalized to the input Gaussian power.
pub fn postselection_probability_quadrature(phi: f64, k: f64, sigma: f64) -> f64 {
    let input = (2.0 * std::f64::consts::PI).sqrt() * sigma;
    darkport_power_quadrature(phi, k, sigma) / (4.0 * input)
}

/// Weak-interaction post-selection probability `sin²(φ/2) + (kσ/2)²·cos φ`.
pub fn postselection_probability(phi: f64, k: f64, sigma: f64) -> f64 {
    let ks = k * sigma;
    if ks.abs() > WEAK_MISALIGNMENT_LIMIT {
        log::warn!("k*sigma = {ks:.3} is outside the weak-interaction regime");
    }
    let sh = (0.5 * phi).sin();
    sh * sh + 0.25 * ks * ks * phi.cos()
}

/// Normalized post-selected meter density |⟨z|Ψ_f⟩|².
pub fn meter_pdf(z: f64, phi: f64, k: f64, sigma: f64) -> Result<f64> {
    let sel = QubitSelection::new(phi)?;
    let meter = MeterState::new(sigma, k)?;
    let p = postselection_probability_exact(phi, k, sigma);
    if p.is_nan() || p <= 0.0 {
        return Err(Error::NoLight);
    }
    Ok(meter.postselected_amplitude(z, &sel).norm_sqr() / p)
}

/// Post-selected mean `2kσ²·sin φ / (4 sin²(φ/2) + k²σ²·cos φ)`.
pub fn quantum_mean_shift(phi: f64, k: f64, sigma: f64) -> Result<f64> {
    ensure_finite("phi", phi)?;
    ensure_finite("k", k)?;
    ensure_positive("sigma", sigma)?;
    let ks = k * sigma;
    let sh = (0.5 * phi).sin();
    let den = 4.0 * sh * sh + ks * ks * phi.cos();
    if den == 0.0 {
        return Err(Error::NoLight);
    }
    Ok(2.0 * k * sigma * sigma * phi.sin() / den)
}

/// Inverse-weak-value mean shift `−(4/k)·Im(σ_w)/|σ_w|²`. For σ_w = −i·cot(φ/2)
/// this is 4·tan(φ/2)/k ≈ 2φ/k.
pub fn iwva_mean_shift(weak_value: Complex64, k: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::Domain("iwva_mean_shift needs k != 0".into()));
    }
    Ok(-(4.0 / k) * weak_value.im / weak_value.norm_sqr())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Inverse weak-value amplification, kσ|σ_w| ≫ 1.
    Iwva,
    /// Weak-value amplification, kσ|σ_w| ≪ 1.
    Wva,
    Intermediate,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Iwva => "IWVA",
            Regime::Wva => "WVA",
            Regime::Intermediate => "INTERMEDIATE",
        })
    }
}

/// Cut points on κ = kσ|σ_w|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeThresholds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { lo: 0.3, hi: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeReport {
    pub kappa: f64,
    pub label: Regime,
    pub thresholds: RegimeThresholds,
}

/// Classifies the operating point by κ = kσ·|cot(φ/2)|.
///
/// At φ ≡ 0 (mod 2π) the weak value diverges; κ is reported as +∞ and the
/// point is IWVA by continuity.
pub fn regime_classify(
    phi: f64,
    k: f64,
    sigma: f64,
    thresholds: RegimeThresholds,
) -> Result<RegimeReport> {
    ensure_finite("phi", phi)?;
    ensure_finite("k", k)?;
    ensure_positive("sigma", sigma)?;
    if !(thresholds.lo > 0.0 && thresholds.lo <= thresholds.hi) {
        return Err(Error::Domain(format!(
            "regime thresholds need 0 < lo <= hi, got lo={} hi={}",
            thresholds.lo, thresholds.hi
        )));
    }
    let kappa = match weak_value(phi) {
        Ok(w) => (k * sigma).abs() * w.norm(),
        Err(Error::OrthogonalPostSelection(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let label = if kappa >= thresholds.hi {
        Regime::Iwva
    } else if kappa <= thresholds.lo {
        Regime::Wva
    } else {
        Regime::Intermediate
    };
    Ok(RegimeReport { kappa, label, thresholds })
}

/// Weak-value-amplification limits: Gaussian meter shifted by 2kσ²/φ with
/// post-selection probability sin²(φ/2).
pub fn wva_predictions(phi: f64, k: f64, sigma: f64) -> Result<(f64, f64)> {
    ensure_finite("phi", phi)?;
    if phi == 0.0 {
        return Err(Error::Domain("WVA predictions need phi != 0".into()));
    }
    let report = regime_classify(phi, k, sigma, RegimeThresholds::default())?;
    if report.label != Regime::Wva {
        log::warn!("WVA predictions requested in {} regime (kappa = {:.3})", report.label, report.kappa);
    }
    let sh = (0.5 * phi).sin();
    Ok((2.0 * k * sigma * sigma / phi, sh * sh))
}
