//! Run configuration: command-line flags merged over an optional
//! `key = value` config file, merged over per-command defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::error::{Error, Result};
use crate::optics::{misalignment_from_power_ratio, phase_from_tilt, BeamParams, Geometry};

/// Physical and run parameters shared by every subcommand.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct ParamFlags {
    /// Config file with `key = value` lines (keys are flag names without `--`); flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Laser wavelength in nm [default: 780, the tunable diode laser of the setup]
    #[arg(long = "lambda-nm", global = true)]
    pub lambda_nm: Option<f64>,

    /// Gaussian width σ in mm, a quarter of the beam diameter [default: 0.25, from the ~1 mm diameter]
    #[arg(long = "sigma-mm", global = true)]
    pub sigma_mm: Option<f64>,

    /// Beam-separation parameter L at the tilted mirror, in cm [default: 2.0]
    #[arg(long = "L-cm", global = true)]
    pub l_cm: Option<f64>,

    /// Misalignment kσ (exclusive with --power-ratio) [default: 0.2 for profile/shift-scan/regime/montecarlo]
    #[arg(long = "k-sigma", global = true, allow_hyphen_values = true)]
    pub k_sigma: Option<f64>,

    /// Bright-to-dark power ratio giving k = (2/σ)/√ratio [default: 8.8 for simulate/spectrum, the measured ratio]
    #[arg(long = "power-ratio", global = true)]
    pub power_ratio: Option<f64>,

    /// Relative phase φ in rad (exclusive with --theta-rad)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi: Option<f64>,

    /// Mirror tilt θ in rad, converted with φ = √2·k₀·L·θ (exclusive with --phi)
    #[arg(long = "theta-rad", global = true, allow_hyphen_values = true)]
    pub theta_rad: Option<f64>,

    /// Optical power into the interferometer in mW [default: 1.2, the fiber-coupled cw power]
    #[arg(long = "power-mw", global = true)]
    pub power_mw: Option<f64>,

    /// Acquisition rate in Hz [default: 1000, the oscilloscope rate of the 10-minute run]
    #[arg(long = "fs-hz", global = true)]
    pub fs_hz: Option<f64>,

    /// Record length in s [default: 600, the 10-minute run]
    #[arg(long = "duration-s", global = true)]
    pub duration_s: Option<f64>,

    /// PRNG seed [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Moving-average width for plotted spectra, odd [default: 5]
    #[arg(long = "smooth-w", global = true)]
    pub smooth_w: Option<usize>,

    /// Output path for CSV data (stdout if omitted)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

const KNOWN_KEYS: [&str; 13] = [
    "lambda-nm",
    "sigma-mm",
    "L-cm",
    "k-sigma",
    "power-ratio",
    "phi",
    "theta-rad",
    "power-mw",
    "fs-hz",
    "duration-s",
    "seed",
    "smooth-w",
    "out",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", n + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", n + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("bad value '{v}' for '{key}'"))))
        .transpose()
}

impl ParamFlags {
    pub fn from_config_text(text: &str) -> Result<Self> {
        let m = parse_config_text(text)?;
        Ok(Self {
            config: None,
            lambda_nm: parse_value(&m, "lambda-nm")?,
            sigma_mm: parse_value(&m, "sigma-mm")?,
            l_cm: parse_value(&m, "L-cm")?,
            k_sigma: parse_value(&m, "k-sigma")?,
            power_ratio: parse_value(&m, "power-ratio")?,
            phi: parse_value(&m, "phi")?,
            theta_rad: parse_value(&m, "theta-rad")?,
            power_mw: parse_value(&m, "power-mw")?,
            fs_hz: parse_value(&m, "fs-hz")?,
            duration_s: parse_value(&m, "duration-s")?,
            seed: parse_value(&m, "seed")?,
            smooth_w: parse_value(&m, "smooth-w")?,
            out: m.get("out").map(PathBuf::from),
        })
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_config_text(&text)
    }
}

/// How the misalignment is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Misalignment {
    KSigma(f64),
    PowerRatio(f64),
}

/// How the operating phase is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phase {
    Phi(f64),
    Theta(f64),
}

/// Per-subcommand fallbacks for the grouped parameters.
#[derive(Clone, Copy, Debug)]
pub struct CommandDefaults {
    pub misalignment: Misalignment,
    pub phase: Phase,
}

/// Fully resolved, validated run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub beam: BeamParams,
    pub geom: Geometry,
    pub misalignment: Misalignment,
    pub phase: Phase,
    /// Resolved relative phase φ.
    pub phi: f64,
    pub power_w: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub seed: u64,
    pub smooth_w: usize,
    pub out: Option<PathBuf>,
}

fn group<T>(flag_a: Option<f64>, flag_b: Option<f64>, names: (&str, &str), a: fn(f64) -> T, b: fn(f64) -> T, source: &str) -> Result<Option<T>> {
    match (flag_a, flag_b) {
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "give only one of --{} and --{} ({source})",
            names.0, names.1
        ))),
        (Some(v), None) => Ok(Some(a(v))),
        (None, Some(v)) => Ok(Some(b(v))),
        (None, None) => Ok(None),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("--{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Merges `flags` over `file` over `defaults`.
    pub fn resolve(flags: &ParamFlags, file: &ParamFlags, defaults: CommandDefaults) -> Result<Self> {
        let names_k = ("k-sigma", "power-ratio");
        let names_p = ("phi", "theta-rad");
        let misalignment = match group(flags.k_sigma, flags.power_ratio, names_k, Misalignment::KSigma, Misalignment::PowerRatio, "flags")? {
            Some(m) => m,
            None => group(file.k_sigma, file.power_ratio, names_k, Misalignment::KSigma, Misalignment::PowerRatio, "config file")?
                .unwrap_or(defaults.misalignment),
        };
        let phase = match group(flags.phi, flags.theta_rad, names_p, Phase::Phi, Phase::Theta, "flags")? {
            Some(p) => p,
            None => group(file.phi, file.theta_rad, names_p, Phase::Phi, Phase::Theta, "config file")?
                .unwrap_or(defaults.phase),
        };

        let lambda_nm = positive("lambda-nm", flags.lambda_nm.or(file.lambda_nm).unwrap_or(780.0))?;
        let sigma_mm = positive("sigma-mm", flags.sigma_mm.or(file.sigma_mm).unwrap_or(0.25))?;
        let l_cm = positive("L-cm", flags.l_cm.or(file.l_cm).unwrap_or(2.0))?;
        let power_mw = positive("power-mw", flags.power_mw.or(file.power_mw).unwrap_or(1.2))?;
        let sample_rate = positive("fs-hz", flags.fs_hz.or(file.fs_hz).unwrap_or(1000.0))?;
        let duration = positive("duration-s", flags.duration_s.or(file.duration_s).unwrap_or(600.0))?;
        let seed = flags.seed.or(file.seed).unwrap_or(1);
        let smooth_w = flags.smooth_w.or(file.smooth_w).unwrap_or(5);
        if smooth_w == 0 || smooth_w.is_multiple_of(2) {
            return Err(Error::Config(format!("--smooth-w must be odd and >= 1, got {smooth_w}")));
        }

        let beam = BeamParams::new(sigma_mm * 1e-3, lambda_nm * 1e-9).map_err(|e| Error::Config(e.to_string()))?;
        let k = match misalignment {
            Misalignment::KSigma(ks) => {
                if !ks.is_finite() {
                    return Err(Error::Config(format!("--k-sigma must be finite, got {ks}")));
                }
                ks / beam.sigma()
            }
            Misalignment::PowerRatio(r) => {
                misalignment_from_power_ratio(r, beam.sigma()).map_err(|e| Error::Config(e.to_string()))?
            }
        };
        let geom = Geometry::new(l_cm * 1e-2, k).map_err(|e| Error::Config(e.to_string()))?;
        let phi = match phase {
            Phase::Phi(p) => p,
            Phase::Theta(t) => phase_from_tilt(t, &geom, &beam).map_err(|e| Error::Config(e.to_string()))?,
        };
        if !phi.is_finite() {
            return Err(Error::Config(format!("phase must be finite, got {phi}")));
        }
        Ok(Self {
            beam,
            geom,
            misalignment,
            phase,
            phi,
            power_w: power_mw * 1e-3,
            sample_rate,
            duration,
            seed,
            smooth_w,
            out: flags.out.clone().or_else(|| file.out.clone()),
        })
    }

    pub fn k(&self) -> f64 {
        self.geom.k()
    }

    pub fn sigma(&self) -> f64 {
        self.beam.sigma()
    }

    pub fn k_sigma(&self) -> f64 {
        self.geom.k() * self.beam.sigma()
    }

    /// Static mirror tilt corresponding to the resolved phase.
    pub fn theta(&self) -> f64 {
        match self.phase {
            Phase::Theta(t) => t,
            Phase::Phi(p) => p / crate::optics::tilt_to_phase_scale(&self.geom, &self.beam),
        }
    }
}
