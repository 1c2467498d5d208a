//! One-sided amplitude spectral density estimation, smoothing and readout of
//! noise floors and reference peaks.
//!
//! Normalization: for a length-n segment x with window w and W = mean(w²),
//! the one-sided PSD at bin k is `2|X_k|²/(f_s·n·W)` (the Nyquist bin is not
//! doubled) and the ASD is its square root. With a rectangular window the
//! PSD summed over all non-DC bins times Δf equals the variance of x.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optics::{tilt_to_phase_scale, BeamParams, Geometry};
use crate::signal::TimeSeries;

/// Shortest record accepted by the estimators.
pub const MIN_SAMPLES: usize = 16;

/// Fewest bins a noise-floor band must contain.
pub const MIN_FLOOR_BINS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    pub fn name(&self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }

    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rectangular" | "rect" | "boxcar" => Ok(Window::Rectangular),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(Error::Parse(format!("unknown window '{other}'"))),
        }
    }
}

/// What the ASD values measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumUnit {
    TiltRadPerRtHz,
    PhaseRadPerRtHz,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEstimate {
    /// Bin frequencies k·Δf for k = 1..=n/2 (DC excluded).
    pub freqs: Vec<f64>,
    pub asd: Vec<f64>,
    pub resolution: f64,
    pub window: Window,
    /// Moving-average width applied to `asd` (1 = unsmoothed).
    pub smoothing: usize,
    /// Number of averaged segments.
    pub segments: usize,
    pub unit: SpectrumUnit,
}

impl SpectrumEstimate {
    pub fn len(&self) -> usize {
        self.asd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.asd.is_empty()
    }

    pub fn psd(&self) -> Vec<f64> {
        self.asd.iter().map(|a| a * a).collect()
    }

    /// Index of the bin closest to `f`.
    pub fn bin_of(&self, f: f64) -> Option<usize> {
        if self.is_empty() || !f.is_finite() {
            return None;
        }
        let i = (f / self.resolution).round() as i64 - 1;
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }
}

fn one_sided_psd(segment: &[f64], taper: &[f64], sample_rate: f64, power_norm: f64) -> Vec<f64> {
    let n = segment.len();
    let mut buf: Vec<Complex64> = segment
        .iter()
        .zip(taper)
        .map(|(x, w)| Complex64::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (sample_rate * n as f64 * power_norm);
    (1..=n / 2)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if 2 * k == n { p } else { 2.0 * p }
        })
        .collect()
}

fn check_len(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidSpectrum(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    Ok(())
}

/// Single periodogram over the whole record.
pub fn periodogram_asd(series: &TimeSeries, window: Window) -> Result<SpectrumEstimate> {
    check_len(series.len())?;
    averaged_asd_with(series, series.len(), 0, window, Execution::Sequential)
}

/// Welch average over segments of `segment_length` samples overlapping by
/// `overlap` samples, with the default execution strategy.
pub fn averaged_asd(
    series: &TimeSeries,
    segment_length: usize,
    overlap: usize,
    window: Window,
) -> Result<SpectrumEstimate> {
    averaged_asd_with(series, segment_length, overlap, window, Execution::default())
}

pub fn averaged_asd_with(
    series: &TimeSeries,
    segment_length: usize,
    overlap: usize,
    window: Window,
    exec: Execution,
) -> Result<SpectrumEstimate> {
    check_len(segment_length)?;
    if segment_length > series.len() {
        return Err(Error::InvalidSpectrum(format!(
            "segment length {segment_length} exceeds record length {}",
            series.len()
        )));
    }
    if overlap >= segment_length {
        return Err(Error::InvalidSpectrum("overlap must be shorter than the segment".into()));
    }
    let step = segment_length - overlap;
    let segments = (series.len() - segment_length) / step + 1;
    let taper = window.coefficients(segment_length);
    let power_norm = taper.iter().map(|w| w * w).sum::<f64>() / segment_length as f64;
    let fs = series.sample_rate();
    let x = series.samples();

    let per_segment = exec.map_indexed(segments, |s| {
        let start = s * step;
        one_sided_psd(&x[start..start + segment_length], &taper, fs, power_norm)
    });
    let mut mean = vec![0.0; segment_length / 2];
    for psd in &per_segment {
        for (m, p) in mean.iter_mut().zip(psd) {
            *m += p;
        }
    }
    let resolution = fs / segment_length as f64;
    Ok(SpectrumEstimate {
        freqs: (1..=segment_length / 2).map(|k| k as f64 * resolution).collect(),
        asd: mean.iter().map(|p| (p / segments as f64).sqrt()).collect(),
        resolution,
        window,
        smoothing: 1,
        segments,
        unit: SpectrumUnit::TiltRadPerRtHz,
    })
}

/// Centered moving average of the ASD. Near the ends the window shrinks
/// symmetrically (1, 3, 5, … points) so the length is preserved.
pub fn moving_average_smooth(spectrum: &SpectrumEstimate, w: usize) -> Result<SpectrumEstimate> {
    if w == 0 || w.is_multiple_of(2) {
        return Err(Error::InvalidSpectrum(format!("smoothing width must be odd and >= 1, got {w}")));
    }
    let n = spectrum.len();
    let half = w / 2;
    let asd = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            if h == 0 {
                return spectrum.asd[i];
            }
            spectrum.asd[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect();
    Ok(SpectrumEstimate { asd, smoothing: spectrum.smoothing * w, ..spectrum.clone() })
}

/// Ratio Γ((ν+1)/2)/Γ(ν/2) for integer ν ≥ 1.
fn gamma_half_ratio(nu: usize) -> f64 {
    let (mut r, mut v) = if nu % 2 == 1 {
        (1.0 / PI.sqrt(), 1usize)
    } else {
        (PI.sqrt() / 2.0, 2usize)
    };
    while v < nu {
        r *= (v as f64 + 1.0) / v as f64;
        v += 2;
    }
    r
}

/// Factor relating the band median of an estimated ASD to the true ASD.
///
/// Per-bin PSD estimates of Gaussian noise are S·χ²_ν/ν with ν = 2·segments
/// (overlapping Hann segments make this approximate). Unsmoothed spectra use
/// the χ² median: √(ln 2) for ν = 2, Wilson–Hilferty √((1 − 2/(9ν))³) beyond.
/// Smoothed spectra average ASD values, so the median tends to the mean
/// E[√(χ²_ν/ν)] = √(2/ν)·Γ((ν+1)/2)/Γ(ν/2).
pub fn median_bias(segments: usize, smoothing: usize) -> f64 {
    let nu = 2 * segments.max(1);
    if smoothing > 1 {
        (2.0 / nu as f64).sqrt() * gamma_half_ratio(nu)
    } else if nu == 2 {
        std::f64::consts::LN_2.sqrt()
    } else {
        (1.0 - 2.0 / (9.0 * nu as f64)).powi(3).sqrt()
    }
}

/// Median ASD over bins in `[f_min, f_max]`, corrected for the χ² median bias.
pub fn noise_floor(spectrum: &SpectrumEstimate, f_min: f64, f_max: f64) -> Result<f64> {
    let mut band: Vec<f64> = spectrum
        .freqs
        .iter()
        .zip(&spectrum.asd)
        .filter(|(f, _)| **f >= f_min && **f <= f_max)
        .map(|(_, a)| *a)
        .collect();
    if band.is_empty() {
        return Err(Error::InvalidSpectrum(format!("no bins in [{f_min}, {f_max}] Hz")));
    }
    if band.len() < MIN_FLOOR_BINS {
        return Err(Error::InvalidSpectrum(format!(
            "band [{f_min}, {f_max}] Hz holds {} bins, need {MIN_FLOOR_BINS}",
            band.len()
        )));
    }
    band.sort_by(f64::total_cmp);
    let m = band.len();
    let median = if m % 2 == 1 { band[m / 2] } else { 0.5 * (band[m / 2 - 1] + band[m / 2]) };
    // a constant spectrum carries no estimator noise; leave it as is
    if band[0] == band[m - 1] {
        return Ok(median);
    }
    Ok(median / median_bias(spectrum.segments, spectrum.smoothing))
}

/// Amplitude of a sinusoid near `f0` from the power in the bins within
/// `half_width_bins` of it, after removing the local noise background.
///
/// The background is the bias-corrected median PSD of up to 20 bins on each
/// side just outside the peak region.
pub fn peak_amplitude(spectrum: &SpectrumEstimate, f0: f64, half_width_bins: usize) -> Result<f64> {
    const SIDE_BINS: usize = 20;
    let centre = spectrum
        .bin_of(f0)
        .ok_or_else(|| Error::InvalidSpectrum(format!("{f0} Hz is outside the spectrum")))?;
    let n = spectrum.len();
    let lo = centre.saturating_sub(half_width_bins);
    let hi = (centre + half_width_bins).min(n - 1);
    let psd = spectrum.psd();
    let peak_power: f64 = psd[lo..=hi].iter().sum::<f64>() * spectrum.resolution;

    let mut side: Vec<f64> = psd[lo.saturating_sub(SIDE_BINS)..lo]
        .iter()
        .chain(&psd[(hi + 1).min(n)..(hi + 1 + SIDE_BINS).min(n)])
        .copied()
        .collect();
    let background = if side.is_empty() {
        0.0
    } else {
        side.sort_by(f64::total_cmp);
        let bias = median_bias(spectrum.segments, spectrum.smoothing);
        side[side.len() / 2] / (bias * bias)
    };
    let signal = peak_power - background * spectrum.resolution * (hi - lo + 1) as f64;
    Ok((2.0 * signal.max(0.0)).sqrt())
}

/// Converts a tilt ASD to a phase ASD with the factor √2·k₀·L.
pub fn phase_scale(spectrum: &SpectrumEstimate, geom: &Geometry, beam: &BeamParams) -> SpectrumEstimate {
    let scale = tilt_to_phase_scale(geom, beam);
    SpectrumEstimate {
        asd: spectrum.asd.iter().map(|a| a * scale).collect(),
        unit: SpectrumUnit::PhaseRadPerRtHz,
        ..spectrum.clone()
    }
}
