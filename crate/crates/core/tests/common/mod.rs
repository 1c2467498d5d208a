//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Dark-port intensity written out from its definition, |1 − e^{i(φ+kz)}|²·e^{−z²/2σ²}.
pub fn intensity(z: f64, phi: f64, k: f64, sigma: f64) -> f64 {
    let a = phi + k * z;
    let re = 1.0 - a.cos();
    let im = -a.sin();
    (re * re + im * im) * (-z * z / (2.0 * sigma * sigma)).exp()
}

/// Mean of the dark-port profile over [−8σ, 8σ].
pub fn mean_shift_oracle(phi: f64, k: f64, sigma: f64) -> f64 {
    let f0 = |z: f64| intensity(z, phi, k, sigma);
    let f1 = |z: f64| z * intensity(z, phi, k, sigma);
    let (a, b) = (-8.0 * sigma, 8.0 * sigma);
    let mass = simpson(&f0, a, b, 1e-15 * sigma);
    simpson(&f1, a, b, 1e-15 * sigma * sigma) / mass
}

/// Normalizing mass of the dark-port profile over [−8σ, 8σ].
pub fn intensity_mass(phi: f64, k: f64, sigma: f64) -> f64 {
    let f0 = |z: f64| intensity(z, phi, k, sigma);
    simpson(&f0, -8.0 * sigma, 8.0 * sigma, 1e-15 * sigma)
}

pub fn gaussian_pdf(z: f64, sigma: f64) -> f64 {
    (-z * z / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Least-squares line through (x, y); returns (slope, intercept, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}

/// Amplitude of the sinusoid at `f` by direct projection onto sin and cos.
pub fn tone_amplitude(x: &[f64], f: f64, fs: f64) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let w = 2.0 * PI * f * i as f64 / fs;
        s += v * w.sin();
        c += v * w.cos();
    }
    2.0 * (s * s + c * c).sqrt() / x.len() as f64
}

/// Empirical CDF distance to a reference CDF (Kolmogorov–Smirnov statistic).
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Prints and returns one acceptance line.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!("[acceptance {id:>2}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
