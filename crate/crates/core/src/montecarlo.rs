//! Photon-counting Monte Carlo of split detection at the dark port, and the
//! closed-form shot-noise limits it is checked against.
//!
//! # Estimator
//!
//! A split detector reports the sign asymmetry A = (N₊ − N₋)/M of M detected
//! photons. For the dark-port density the odd part of sin²((φ+kz)/2) is
//! ½·sin φ·sin kz, so
//!
//! ```text
//! E[A] = sin φ · ∫₀^∞ sin(kz) g(z) dz / P  ≈  4φ / (√(2π)·kσ)      (φ ≪ kσ ≪ 1)
//! ```
//!
//! with g the normalized input Gaussian and P ≈ (kσ/2)². Inverting gives
//! φ̂ = (√(2π)/4)·kσ·A, equivalently ẑ = √(π/2)·σ·A and φ̂ = k·ẑ/2, which is the
//! Gaussian split-detector mean estimate fed through ⟨z⟩ ≈ 2φ/k.
//!
//! Near φ = 0 the asymmetry has Var(A) ≈ 1/M. With M ≈ N·(kσ/2)² detected out
//! of N sent photons the phase noise is
//!
//! ```text
//! Δφ = (√(2π)/4)·kσ / √(N (kσ/2)²) = √(π/2) / √N
//! ```
//!
//! independent of k and σ: amplification and lost photons cancel. Each trial
//! therefore sends N photons, draws the detected count from Binomial(N, P),
//! and samples that many positions.
//!
//! # Random numbers
//!
//! Every trial owns a ChaCha8 stream: key from `seed`, stream id = trial
//! index. Trials are independent of execution order, so parallel and
//! sequential runs produce identical reports.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{ensure_positive, Error, Result};
use crate::exec::Execution;
use crate::optics::{tilt_from_phase, OperatingPoint};
use crate::weak::postselection_probability_exact;

/// Planck constant (J·s), exact SI value.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (m/s), exact SI value.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Attempts allowed per accepted draw before the sampler gives up.
pub const MAX_ATTEMPTS_PER_DRAW: usize = 10_000;

/// |A| above which the linear inversion of the asymmetry is unreliable.
pub const LINEAR_ASYMMETRY_LIMIT: f64 = 0.3;

/// Photon flux P·λ/(h·c) for optical power in watts.
pub fn photons_per_second(optical_power: f64, lambda: f64) -> Result<f64> {
    if !(optical_power.is_finite() && optical_power >= 0.0) {
        return Err(Error::Domain(format!("optical power must be >= 0, got {optical_power}")));
    }
    ensure_positive("lambda", lambda)?;
    Ok(optical_power * lambda / (PLANCK * SPEED_OF_LIGHT))
}

/// Proposal density for rejection sampling of the dark-port distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Envelope {
    /// 4·exp(−z²/2σ²) ≥ I_out(z). Acceptance rate equals the post-selection
    /// probability P, so this is only efficient near the bright fringe.
    Gaussian,
    /// (φ² + k²z²)/2 · exp(−z²/2σ²) ≥ ¼·I_out(z), from sin²(x/2) ≤ x²/4 and
    /// (a+b)² ≤ 2a² + 2b². It is a mixture of the Gaussian and a σ·χ₃ radial
    /// law with random sign. Acceptance rate 2P/(φ² + k²σ²) ≈ ½ near the dark
    /// fringe.
    QuadraticGaussian,
}

impl Envelope {
    /// Picks the envelope with the smaller mass (higher acceptance).
    pub fn auto(phi: f64, k: f64, sigma: f64) -> Self {
        let ks = k * sigma;
        if 0.5 * (phi * phi + ks * ks) < 1.0 {
            Envelope::QuadraticGaussian
        } else {
            Envelope::Gaussian
        }
    }
}

/// Exact sampler for the normalized dark-port density.
#[derive(Clone, Copy, Debug)]
pub struct DarkPortSampler {
    phi: f64,
    k: f64,
    sigma: f64,
    envelope: Envelope,
    gaussian_weight: f64,
}

impl DarkPortSampler {
    pub fn new(phi: f64, k: f64, sigma: f64) -> Result<Self> {
        Self::with_envelope(phi, k, sigma, Envelope::auto(phi, k, sigma))
    }

    pub fn with_envelope(phi: f64, k: f64, sigma: f64, envelope: Envelope) -> Result<Self> {
        crate::error::ensure_finite("phi", phi)?;
        crate::error::ensure_finite("k", k)?;
        ensure_positive("sigma", sigma)?;
        let p = postselection_probability_exact(phi, k, sigma);
        if p.is_nan() || p <= 0.0 {
            return Err(Error::NoLight);
        }
        let ks2 = (k * sigma).powi(2);
        let gaussian_weight = phi * phi / (phi * phi + ks2);
        Ok(Self { phi, k, sigma, envelope, gaussian_weight })
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    /// Expected fraction of proposals that are accepted.
    pub fn acceptance_rate(&self) -> f64 {
        let p = postselection_probability_exact(self.phi, self.k, self.sigma);
        match self.envelope {
            Envelope::Gaussian => p,
            Envelope::QuadraticGaussian => {
                2.0 * p / (self.phi * self.phi + (self.k * self.sigma).powi(2))
            }
        }
    }

    /// Draws one transverse position.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_ATTEMPTS_PER_DRAW {
            let (z, bound) = match self.envelope {
                Envelope::Gaussian => {
                    let n: f64 = rng.sample(StandardNormal);
                    (self.sigma * n, 1.0)
                }
                Envelope::QuadraticGaussian => {
                    let z = if rng.random::<f64>() < self.gaussian_weight {
                        let n: f64 = rng.sample(StandardNormal);
                        self.sigma * n
                    } else {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        let c: f64 = rng.sample(StandardNormal);
                        let r = self.sigma * (a * a + b * b + c * c).sqrt();
                        if rng.random::<bool>() { r } else { -r }
                    };
                    let kz = self.k * z;
                    (z, 0.5 * (self.phi * self.phi + kz * kz))
                }
            };
            let s = (0.5 * (self.phi + self.k * z)).sin();
            if rng.random::<f64>() * bound < s * s {
                return Ok(z);
            }
        }
        Err(Error::SamplingExhausted(MAX_ATTEMPTS_PER_DRAW))
    }
}

/// `m` independent draws from the dark-port density, reproducible from `seed`.
pub fn sample_darkport_positions(m: usize, phi: f64, k: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let sampler = DarkPortSampler::new(phi, k, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| sampler.draw(&mut rng)).collect()
}

/// Split-detector asymmetry (N₊ − N₋)/M. Positions exactly at z = 0 count
/// towards the upper half.
pub fn split_detector_asymmetry(positions: &[f64]) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::Domain("split detector needs at least one photon".into()));
    }
    let upper = positions.iter().filter(|&&z| z >= 0.0).count() as i64;
    let lower = positions.len() as i64 - upper;
    Ok((upper - lower) as f64 / positions.len() as f64)
}

/// Split-detector calibration: φ̂ = (√(2π)/4)·kσ·A.
pub fn estimate_phase(asymmetry: f64, k: f64, sigma: f64) -> f64 {
    if asymmetry.abs() > LINEAR_ASYMMETRY_LIMIT {
        log::warn!("asymmetry {asymmetry:.3} is outside the linear regime");
    }
    (2.0 * PI).sqrt() / 4.0 * k * sigma * asymmetry
}

/// Tilt estimate θ̂ = φ̂/(√2·k₀·L) for the operating point's geometry.
pub fn estimate_tilt(asymmetry: f64, op: &OperatingPoint) -> Result<f64> {
    let phi_hat = estimate_phase(asymmetry, op.k(), op.sigma());
    tilt_from_phase(phi_hat, op.geometry(), op.beam())
}

/// Small-signal expected asymmetry 4φ/(√(2π)·kσ).
pub fn expected_asymmetry_small_signal(phi: f64, k: f64, sigma: f64) -> f64 {
    4.0 * phi / ((2.0 * PI).sqrt() * k * sigma)
}

/// Split-detection phase noise for `photons_sent` photons entering the
/// interferometer: √(π/2)/√N. Independent of k and σ.
pub fn shot_noise_phase(photons_sent: f64) -> Result<f64> {
    ensure_positive("photon count", photons_sent)?;
    Ok((PI / 2.0).sqrt() / photons_sent.sqrt())
}

/// Split-detection phase noise written in terms of detected photons:
/// (k/2)·√(π/2)·σ/√M with M = N·(kσ/2)².
pub fn shot_noise_phase_detected(photons_detected: f64, k: f64, sigma: f64) -> Result<f64> {
    ensure_positive("photon count", photons_detected)?;
    Ok(0.5 * k.abs() * (PI / 2.0).sqrt() * sigma / photons_detected.sqrt())
}

/// Shot-noise tilt sensitivity λ/(4√π·L·√N) for a photon rate N (1/s), in rad/√Hz.
pub fn shot_noise_tilt(photon_rate: f64, lambda: f64, l: f64) -> Result<f64> {
    ensure_positive("photon rate", photon_rate)?;
    ensure_positive("lambda", lambda)?;
    ensure_positive("L", l)?;
    Ok(lambda / (4.0 * PI.sqrt() * l * photon_rate.sqrt()))
}

/// Sensitivity gain √2·σ/L over a collinear Sagnac of the same beam.
pub fn collinear_penalty(sigma: f64, l: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    ensure_positive("L", l)?;
    Ok(2.0_f64.sqrt() * sigma / l)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloConfig {
    pub operating_point: OperatingPoint,
    /// Photons sent into the interferometer per trial (N).
    pub photons_per_trial: u64,
    pub trials: usize,
    pub seed: u64,
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.photons_per_trial == 0 {
            return Err(Error::Domain("photons_per_trial must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Domain("trials must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub detected: u64,
    pub asymmetry: f64,
    pub phi_hat: f64,
    pub theta_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub trials: Vec<TrialOutcome>,
    pub mean_detected: f64,
    pub mean_phi_hat: f64,
    pub std_phi_hat: f64,
    pub mean_theta_hat: f64,
    pub std_theta_hat: f64,
    /// √(π/2)/√N for the configured photons per trial.
    pub theory_phi: f64,
    pub theory_theta: f64,
    /// std(φ̂) / theory_phi.
    pub ratio: f64,
}

impl MonteCarloReport {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Standard error of the mean phase estimate.
    pub fn stderr_phi_hat(&self) -> f64 {
        self.std_phi_hat / (self.trials.len() as f64).sqrt()
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Random stream for one trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_one(config: &MonteCarloConfig, sampler: &DarkPortSampler, p: f64, trial: usize) -> Result<TrialOutcome> {
    let op = &config.operating_point;
    let mut rng = trial_rng(config.seed, trial);
    let detected = Binomial::new(config.photons_per_trial, p)
        .map_err(|e| Error::Numerical(format!("binomial: {e}")))?
        .sample(&mut rng);
    if detected == 0 {
        return Err(Error::Numerical(format!("trial {trial} detected no photons")));
    }
    let mut upper = 0u64;
    for _ in 0..detected {
        if sampler.draw(&mut rng)? >= 0.0 {
            upper += 1;
        }
    }
    let asymmetry = (2.0 * upper as f64 - detected as f64) / detected as f64;
    let phi_hat = estimate_phase(asymmetry, op.k(), op.sigma());
    let theta_hat = tilt_from_phase(phi_hat, op.geometry(), op.beam())?;
    Ok(TrialOutcome { detected, asymmetry, phi_hat, theta_hat })
}

/// Runs the configured trials with the default execution strategy.
pub fn run_trials(config: &MonteCarloConfig) -> Result<MonteCarloReport> {
    run_trials_with(config, Execution::default())
}

pub fn run_trials_with(config: &MonteCarloConfig, exec: Execution) -> Result<MonteCarloReport> {
    config.validate()?;
    let op = &config.operating_point;
    let sampler = DarkPortSampler::new(op.phi(), op.k(), op.sigma())?;
    let p = postselection_probability_exact(op.phi(), op.k(), op.sigma());
    let trials = exec.try_map_indexed(config.trials, |t| run_one(config, &sampler, p, t))?;

    let mean_detected =
        trials.iter().map(|t| t.detected as f64).sum::<f64>() / trials.len() as f64;
    let (mean_phi_hat, std_phi_hat) = mean_std(trials.iter().map(|t| t.phi_hat));
    let (mean_theta_hat, std_theta_hat) = mean_std(trials.iter().map(|t| t.theta_hat));
    let theory_phi = shot_noise_phase(config.photons_per_trial as f64)?;
    let theory_theta = tilt_from_phase(theory_phi, op.geometry(), op.beam())?;
    Ok(MonteCarloReport {
        config: *config,
        trials,
        mean_detected,
        mean_phi_hat,
        std_phi_hat,
        mean_theta_hat,
        std_theta_hat,
        theory_phi,
        theory_theta,
        ratio: std_phi_hat / theory_phi,
    })
}
