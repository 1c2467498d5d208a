//! Time-domain synthesis of the detector record: tilt waveforms, colored
//! tilt-equivalent noise, per-sample shot noise and the preamplifier filters.
//!
//! All noise is injected as tilt-equivalent radians at the detector. Physical
//! mirror motion and electronic noise are not separated.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{ensure_positive, Error, Result};
use crate::montecarlo::shot_noise_tilt;
use crate::optics::{detected_fraction, tilt_to_phase_scale, BeamParams, Geometry};

/// Fewest detected photons per sample for which the Gaussian shot-noise
/// approximation is used.
pub const MIN_DETECTED_PER_SAMPLE: f64 = 100.0;

/// What a sample value means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SignalUnit {
    /// Tilt-equivalent radians.
    TiltRad,
    /// Tilt-equivalent radians multiplied by an electronic gain.
    Amplified { gain: f64 },
}

impl SignalUnit {
    pub fn gain(&self) -> f64 {
        match *self {
            SignalUnit::TiltRad => 1.0,
            SignalUnit::Amplified { gain } => gain,
        }
    }
}

/// Uniformly sampled record.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate: f64,
    pub start_time: f64,
    pub seed: Option<u64>,
    pub unit: SignalUnit,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        ensure_positive("sample rate", sample_rate)?;
        if samples.len() < 2 {
            return Err(Error::InvalidSeries(format!("need at least 2 samples, got {}", samples.len())));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate, start_time: 0.0, seed: None, unit: SignalUnit::TiltRad })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.sample_rate
    }

    /// Sample-by-sample sum. Both series must share length and sample rate.
    pub fn add(&self, other: &TimeSeries) -> Result<TimeSeries> {
        if self.len() != other.len() || self.sample_rate != other.sample_rate {
            return Err(Error::InvalidSeries("cannot add series with different length or rate".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(TimeSeries { samples, ..self.clone() })
    }

    pub fn scaled(&self, factor: f64) -> TimeSeries {
        TimeSeries { samples: self.samples.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.len() - 1) as f64).sqrt()
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }
}

/// Piecewise power-law one-sided amplitude spectral density (rad/√Hz).
///
/// Anchors are joined by straight lines in log-log space and held flat beyond
/// the first and last anchor. An independent white `floor` adds in quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    anchors: Vec<(f64, f64)>,
    floor: f64,
}

impl NoiseSpec {
    pub fn new(anchors: Vec<(f64, f64)>, floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor >= 0.0) {
            return Err(Error::InvalidNoiseSpec(format!("floor must be >= 0, got {floor}")));
        }
        for (i, &(f, a)) in anchors.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidNoiseSpec(format!("anchor {i} frequency {f} must be positive")));
            }
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidNoiseSpec(format!("anchor {i} ASD {a} must be positive")));
            }
            if i > 0 && f <= anchors[i - 1].0 {
                return Err(Error::InvalidNoiseSpec("anchor frequencies must strictly increase".into()));
            }
        }
        Ok(Self { anchors, floor })
    }

    /// Flat spectrum at `asd` rad/√Hz.
    pub fn white(asd: f64) -> Result<Self> {
        Self::new(Vec::new(), asd)
    }

    /// Low-frequency shape of the long unattended run: 7 nrad/√Hz at 10 µHz
    /// falling to a 70 prad/√Hz plateau between 2 and 100 mHz, then down to the
    /// 200 frad/√Hz floor by 2 Hz.
    pub fn low_frequency_plateau() -> Self {
        Self::new(
            vec![(1e-5, 7e-9), (2e-3, 70e-12), (0.1, 70e-12), (2.0, 200e-15)],
            0.0,
        )
        .expect("static spec is valid")
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn is_zero(&self) -> bool {
        self.anchors.is_empty() && self.floor == 0.0
    }

    fn shaped(&self, f: f64) -> f64 {
        let a = &self.anchors;
        match a.len() {
            0 => 0.0,
            _ if f <= a[0].0 => a[0].1,
            _ if f >= a[a.len() - 1].0 => a[a.len() - 1].1,
            _ => {
                let j = a.partition_point(|&(fa, _)| fa <= f);
                let (f0, v0) = a[j - 1];
                let (f1, v1) = a[j];
                let t = (f / f0).ln() / (f1 / f0).ln();
                (v0.ln() + t * (v1 / v0).ln()).exp()
            }
        }
    }

    /// ASD at frequency `f`.
    pub fn asd(&self, f: f64) -> f64 {
        let s = self.shaped(f);
        (s * s + self.floor * self.floor).sqrt()
    }

    /// One-sided PSD at frequency `f`.
    pub fn psd(&self, f: f64) -> f64 {
        let a = self.asd(f);
        a * a
    }
}

/// `amplitude·sin(2π·frequency·t)` sampled for `duration` seconds.
pub fn sine_tilt(amplitude: f64, frequency: f64, sample_rate: f64, duration: f64) -> Result<TimeSeries> {
    ensure_positive("sample rate", sample_rate)?;
    ensure_positive("duration", duration)?;
    if !amplitude.is_finite() {
        return Err(Error::Domain("amplitude must be finite".into()));
    }
    if !(frequency.is_finite() && frequency >= 0.0 && frequency < 0.5 * sample_rate) {
        return Err(Error::Domain(format!(
            "tone at {frequency} Hz aliases at sample rate {sample_rate} Hz"
        )));
    }
    let n = (duration * sample_rate).round() as usize;
    let w = 2.0 * PI * frequency / sample_rate;
    let samples = (0..n).map(|i| amplitude * (w * i as f64).sin()).collect();
    TimeSeries::new(samples, sample_rate)
}

/// Gaussian noise with one-sided PSD `spec` synthesized in the frequency domain.
///
/// Bin k (1 ≤ k < n/2) gets an independent circular Gaussian coefficient with
/// E|X_k|² = S(f_k)·f_s·n/2, so the one-sided periodogram 2|X_k|²/(f_s·n) has
/// expectation S(f_k). The Nyquist bin is real with E|X|² = S·f_s·n. DC is zero.
/// The Hermitian spectrum is inverted to a real series.
pub fn colored_noise(spec: &NoiseSpec, n: usize, sample_rate: f64, seed: u64) -> Result<TimeSeries> {
    ensure_positive("sample rate", sample_rate)?;
    if n < 16 {
        return Err(Error::InvalidSeries(format!("colored noise needs n >= 16, got {n}")));
    }
    if spec.is_zero() {
        return Ok(TimeSeries::new(vec![0.0; n], sample_rate)?.with_seed(seed));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let df = sample_rate / n as f64;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let half = n / 2;
    for k in 1..=half {
        let s = spec.psd(k as f64 * df);
        if 2 * k == n {
            let sd = (s * sample_rate * n as f64).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            spectrum[k] = Complex64::new(sd * re, 0.0);
        } else {
            let sd = (s * sample_rate * n as f64 / 4.0).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            spectrum[k] = Complex64::new(sd * re, sd * im);
            spectrum[n - k] = spectrum[k].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let samples = spectrum.iter().map(|c| c.re * scale).collect();
    Ok(TimeSeries::new(samples, sample_rate)?.with_seed(seed))
}

/// Photon flux reaching the interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhotonRate {
    /// Photons per second.
    Finite(f64),
    /// Noiseless limit.
    Infinite,
}

/// Adds split-detector shot noise to a tilt record.
///
/// Each sample gets an independent Gaussian draw with standard deviation
/// Δθ·√(f_s/2), where Δθ = λ/(4√π·L·√N) is treated as a one-sided ASD. The
/// output stays in tilt-equivalent radians.
pub fn simulate_detector_series(
    tilt: &TimeSeries,
    beam: &BeamParams,
    geom: &Geometry,
    rate: PhotonRate,
    seed: u64,
) -> Result<TimeSeries> {
    let ks = geom.k() * beam.sigma();
    let max_tilt = tilt.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let max_phi = tilt_to_phase_scale(geom, beam) * max_tilt;
    if max_phi > 0.1 * ks.abs() {
        log::warn!("peak phase {max_phi:.3e} is not small against k*sigma = {ks:.3e}; split detection is nonlinear here");
    }
    let mut out = tilt.clone();
    out.seed = Some(seed);
    let n_rate = match rate {
        PhotonRate::Infinite => return Ok(out),
        PhotonRate::Finite(n) => n,
    };
    ensure_positive("photon rate", n_rate)?;
    let fs = tilt.sample_rate();
    let detected_per_sample = n_rate / fs * detected_fraction(geom.k(), beam.sigma());
    if detected_per_sample < MIN_DETECTED_PER_SAMPLE {
        return Err(Error::Domain(format!(
            "only {detected_per_sample:.1} detected photons per sample; use the photon Monte Carlo for exact counting"
        )));
    }
    let sd = shot_noise_tilt(n_rate, beam.lambda(), geom.l())? * (0.5 * fs).sqrt() * tilt.unit.gain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.samples.iter_mut() {
        let n: f64 = StandardNormal.sample(&mut rng);
        *v += sd * n;
    }
    Ok(out)
}

/// First-order band-pass (or low-pass) preamplifier model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub high_pass: Option<f64>,
    pub low_pass: f64,
    pub gain: f64,
}

impl FilterSpec {
    pub fn band_pass(f_lo: f64, f_hi: f64, gain: f64) -> Self {
        Self { high_pass: Some(f_lo), low_pass: f_hi, gain }
    }

    pub fn low_pass(f_hi: f64, gain: f64) -> Self {
        Self { high_pass: None, low_pass: f_hi, gain }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyquist = 0.5 * sample_rate;
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::InvalidFilter(format!("gain must be positive, got {}", self.gain)));
        }
        if !(self.low_pass.is_finite() && self.low_pass > 0.0 && self.low_pass < nyquist) {
            return Err(Error::InvalidFilter(format!(
                "low-pass corner {} Hz must lie in (0, {nyquist}) Hz",
                self.low_pass
            )));
        }
        if let Some(lo) = self.high_pass {
            if !(lo.is_finite() && lo > 0.0 && lo < self.low_pass) {
                return Err(Error::InvalidFilter(format!(
                    "high-pass corner {lo} Hz must lie in (0, {}) Hz",
                    self.low_pass
                )));
            }
        }
        Ok(())
    }

    /// Discrete sections for sample rate `fs`, high-pass first.
    pub fn sections(&self, sample_rate: f64) -> Result<Vec<FirstOrderSection>> {
        self.validate(sample_rate)?;
        let mut out = Vec::with_capacity(2);
        if let Some(lo) = self.high_pass {
            out.push(FirstOrderSection::high_pass(lo, sample_rate));
        }
        out.push(FirstOrderSection::low_pass(self.low_pass, sample_rate));
        Ok(out)
    }

    /// |H(f)| of the discretized cascade including the gain.
    pub fn magnitude(&self, f: f64, sample_rate: f64) -> Result<f64> {
        Ok(self.gain
            * self
                .sections(sample_rate)?
                .iter()
                .map(|s| s.magnitude(f, sample_rate))
                .product::<f64>())
    }
}

/// y[n] = b0·x[n] + b1·x[n−1] − a1·y[n−1]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstOrderSection {
    pub b0: f64,
    pub b1: f64,
    pub a1: f64,
}

impl FirstOrderSection {
    /// Bilinear transform of ω_c/(s + ω_c) with the corner prewarped.
    pub fn low_pass(corner: f64, sample_rate: f64) -> Self {
        let k = (PI * corner / sample_rate).tan();
        Self { b0: k / (1.0 + k), b1: k / (1.0 + k), a1: (k - 1.0) / (k + 1.0) }
    }

    /// Bilinear transform of s/(s + ω_c) with the corner prewarped.
    pub fn high_pass(corner: f64, sample_rate: f64) -> Self {
        let k = (PI * corner / sample_rate).tan();
        Self { b0: 1.0 / (1.0 + k), b1: -1.0 / (1.0 + k), a1: (k - 1.0) / (k + 1.0) }
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1) / (1.0 + self.a1)
    }

    pub fn magnitude(&self, f: f64, sample_rate: f64) -> f64 {
        let z = Complex64::from_polar(1.0, -2.0 * PI * f / sample_rate);
        ((self.b0 + self.b1 * z) / (1.0 + self.a1 * z)).norm()
    }

    /// Filters in place, starting from the steady state for a constant input
    /// equal to the first sample.
    pub fn run(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut x_prev = first;
        let mut y_prev = self.dc_gain() * first;
        for v in x.iter_mut() {
            let y = self.b0 * *v + self.b1 * x_prev - self.a1 * y_prev;
            x_prev = *v;
            y_prev = y;
            *v = y;
        }
    }
}

/// Runs `series` through the preamplifier model.
pub fn apply_filter(series: &TimeSeries, filter: &FilterSpec) -> Result<TimeSeries> {
    let sections = filter.sections(series.sample_rate())?;
    let mut samples = series.samples().to_vec();
    for s in &sections {
        s.run(&mut samples);
    }
    for v in samples.iter_mut() {
        *v *= filter.gain;
    }
    let mut out = series.clone();
    out.samples = samples;
    out.unit = SignalUnit::Amplified { gain: series.unit.gain() * filter.gain };
    Ok(out)
}
