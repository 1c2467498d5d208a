//! `tiltmeter` command-line front end.
//!
//! Each subcommand writes CSV plot data (to `--out`, or stdout) and a short
//! text summary (to stdout when `--out` is given, else stderr).
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! failure.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{self, Table};
use crate::montecarlo::{
    photons_per_second, run_trials, shot_noise_phase, shot_noise_tilt, MonteCarloConfig,
};
use crate::optics::{
    detected_fraction, mean_shift_approx, mean_shift_exact, misalignment_angle, tilt_to_phase_scale,
    OperatingPoint,
};
use crate::signal::{
    apply_filter, colored_noise, simulate_detector_series, sine_tilt, FilterSpec, NoiseSpec,
    PhotonRate, TimeSeries,
};
use crate::spectral::{
    averaged_asd, moving_average_smooth, noise_floor, peak_amplitude, periodogram_asd, Window,
};
use crate::weak::{
    iwva_mean_shift, meter_pdf, postselection_probability, postselection_probability_exact,
    quantum_mean_shift, regime_classify, weak_value, wva_predictions, RegimeThresholds,
};

pub use config::{CommandDefaults, Misalignment, ParamFlags, Phase, RunConfig};

/// Shot-noise tilt sensitivity quoted for the experiment, rad/√Hz.
pub const QUOTED_SHOT_NOISE_TILT: f64 = 56e-15;

#[derive(Parser, Debug)]
#[command(name = "tiltmeter", version, about = "Inverse weak-value tilt meter simulator and analysis toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub params: ParamFlags,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transverse dark-port profiles for φ = 0 and the configured φ
    Profile(ProfileArgs),
    /// Mean shift versus φ from the exact, quantum and small-signal formulas
    ShiftScan(ShiftScanArgs),
    /// Weak value, post-selection probability and IWVA/WVA classification
    Regime(RegimeArgs),
    /// Photon-counting Monte Carlo of split detection against the shot-noise limit
    Montecarlo(MonteCarloArgs),
    /// Synthesize a detector time series (tone + colored noise + shot noise)
    Simulate(SynthArgs),
    /// Synthesize, filter and estimate the amplitude spectral density
    Spectrum(SpectrumArgs),
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Number of grid points
    #[arg(long, default_value_t = 4096)]
    pub points: usize,
    /// Half-width of the grid in units of σ
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
}

#[derive(Args, Debug)]
pub struct ShiftScanArgs {
    /// Largest φ in the table
    #[arg(long = "phi-max", default_value_t = 0.3)]
    pub phi_max: f64,
    /// Number of φ values from 0 to --phi-max
    #[arg(long, default_value_t = 61)]
    pub steps: usize,
}

#[derive(Args, Debug)]
pub struct RegimeArgs {
    /// κ at or below which the point is WVA
    #[arg(long, default_value_t = 0.3)]
    pub lo: f64,
    /// κ at or above which the point is IWVA
    #[arg(long, default_value_t = 3.0)]
    pub hi: f64,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    /// Photons sent into the interferometer per trial
    #[arg(long, default_value_t = 1_000_000)]
    pub photons: u64,
    /// Number of trials
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Reference tone amplitude in rad (0.8 nrad = the 1.6 nrad peak-to-peak reference)
    #[arg(long = "tone-amp-rad", default_value_t = 0.8e-9)]
    pub tone_amp_rad: f64,
    /// Reference tone frequency in Hz
    #[arg(long = "tone-hz", default_value_t = 30.0)]
    pub tone_hz: f64,
    /// White tilt-noise floor in rad/√Hz
    #[arg(long = "floor-rad", default_value_t = 200e-15)]
    pub floor_rad: f64,
    /// Use the low-frequency plateau noise shape (70 prad/√Hz at 2-100 mHz) instead of a white floor
    #[arg(long)]
    pub plateau: bool,
    /// Leave out photon shot noise
    #[arg(long = "no-shot-noise")]
    pub no_shot_noise: bool,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// High-pass corner of the preamplifier in Hz (band-pass when given with --filter-hi-hz)
    #[arg(long = "filter-lo-hz")]
    pub filter_lo_hz: Option<f64>,
    /// Low-pass corner of the preamplifier in Hz; enables the filter model
    #[arg(long = "filter-hi-hz")]
    pub filter_hi_hz: Option<f64>,
    /// Preamplifier gain
    #[arg(long = "filter-gain", default_value_t = 100.0)]
    pub filter_gain: f64,
    /// Welch segments (1 = single periodogram)
    #[arg(long, default_value_t = 1)]
    pub segments: usize,
    /// Window: rectangular or hann [default: rectangular for 1 segment, hann otherwise]
    #[arg(long)]
    pub window: Option<Window>,
    /// Lower edge of the noise-floor band in Hz
    #[arg(long = "band-lo-hz", default_value_t = 5.0)]
    pub band_lo_hz: f64,
    /// Upper edge of the noise-floor band in Hz
    #[arg(long = "band-hi-hz", default_value_t = 25.0)]
    pub band_hi_hz: f64,
}

/// Output of one subcommand before it is written anywhere.
#[derive(Debug)]
pub struct CommandOutput {
    pub data: Vec<u8>,
    pub summary: String,
}

fn defaults_for(cmd: &Command) -> CommandDefaults {
    let ks = Misalignment::KSigma(0.2);
    let pr = Misalignment::PowerRatio(8.8);
    match cmd {
        Command::Profile(_) | Command::Regime(_) => CommandDefaults { misalignment: ks, phase: Phase::Phi(0.05) },
        Command::ShiftScan(_) => CommandDefaults { misalignment: ks, phase: Phase::Phi(0.0) },
        Command::Montecarlo(_) => CommandDefaults { misalignment: ks, phase: Phase::Phi(1e-3) },
        Command::Simulate(_) | Command::Spectrum(_) => CommandDefaults { misalignment: pr, phase: Phase::Theta(0.0) },
    }
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// results. Returns the process exit code.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let file = match &cli.params.config {
        Some(path) => ParamFlags::from_config_file(path)?,
        None => ParamFlags::default(),
    };
    let cfg = RunConfig::resolve(&cli.params, &file, defaults_for(&cli.command))?;
    let output = execute(&cli.command, &cfg)?;
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &output.data)?;
            stdout.write_all(output.summary.as_bytes())?;
        }
        None => {
            stdout.write_all(&output.data)?;
            stderr.write_all(output.summary.as_bytes())?;
        }
    }
    Ok(())
}

pub fn execute(cmd: &Command, cfg: &RunConfig) -> Result<CommandOutput> {
    match cmd {
        Command::Profile(a) => cmd_profile(cfg, a),
        Command::ShiftScan(a) => cmd_shift_scan(cfg, a),
        Command::Regime(a) => cmd_regime(cfg, a),
        Command::Montecarlo(a) => cmd_montecarlo(cfg, a),
        Command::Simulate(a) => cmd_simulate(cfg, a),
        Command::Spectrum(a) => cmd_spectrum(cfg, a),
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn operating_point(cfg: &RunConfig) -> Result<OperatingPoint> {
    OperatingPoint::from_phase(cfg.phi, cfg.geom, cfg.beam)
}

/// Normalized transverse profiles (densities in units of 1/σ) on a z/σ grid.
pub fn cmd_profile(cfg: &RunConfig, args: &ProfileArgs) -> Result<CommandOutput> {
    if args.points < 2 {
        return Err(config_err("--points must be >= 2"));
    }
    if !(args.extent.is_finite() && args.extent > 0.0) {
        return Err(config_err("--extent must be positive"));
    }
    let (k, sigma, phi) = (cfg.k(), cfg.sigma(), cfg.phi);
    let phis = [0.0, phi];
    let mut table = Table::new(&["z_over_sigma", "input", "dark_phi_a", "dark_phi_b"])
        .meta("k_sigma", format!("{:e}", cfg.k_sigma()))
        .meta("phi_a", format!("{:e}", phis[0]))
        .meta("phi_b", format!("{:e}", phis[1]))
        .meta("density_unit", "1/sigma");
    let step = 2.0 * args.extent / (args.points - 1) as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    for i in 0..args.points {
        let u = -args.extent + i as f64 * step;
        let mut row = vec![u, norm * (-0.5 * u * u).exp()];
        for p in phis {
            row.push(meter_pdf(u * sigma, p, k, sigma)? * sigma);
        }
        table.rows.push(row);
    }
    let mut s = String::new();
    writeln!(s, "k_sigma = {:.6}", cfg.k_sigma()).unwrap();
    for p in phis {
        let shift = mean_shift_exact(p, k, sigma)?;
        let prob = postselection_probability_exact(p, k, sigma);
        writeln!(s, "phi = {p:e}: <z>/sigma = {:.6}, post-selection probability = {prob:.6e}", shift / sigma).unwrap();
    }
    Ok(CommandOutput { data: table.to_bytes(), summary: s })
}

pub fn cmd_shift_scan(cfg: &RunConfig, args: &ShiftScanArgs) -> Result<CommandOutput> {
    if args.steps < 2 {
        return Err(config_err("--steps must be >= 2"));
    }
    if !(args.phi_max.is_finite() && args.phi_max > 0.0) {
        return Err(config_err("--phi-max must be positive"));
    }
    let (k, sigma) = (cfg.k(), cfg.sigma());
    let mut table = Table::new(&[
        "phi",
        "exact_over_sigma",
        "quantum_over_sigma",
        "approx_over_sigma",
        "probability_weak",
        "probability_exact",
        "kappa",
    ])
    .meta("k_sigma", format!("{:e}", cfg.k_sigma()));
    for i in 0..args.steps {
        let phi = args.phi_max * i as f64 / (args.steps - 1) as f64;
        let report = regime_classify(phi, k, sigma, RegimeThresholds::default())?;
        table.rows.push(vec![
            phi,
            mean_shift_exact(phi, k, sigma)? / sigma,
            quantum_mean_shift(phi, k, sigma)? / sigma,
            mean_shift_approx(phi, k)? / sigma,
            postselection_probability(phi, k, sigma),
            postselection_probability_exact(phi, k, sigma),
            report.kappa,
        ]);
    }
    let summary = format!(
        "k_sigma = {:.6}, {} phase values in [0, {}]\n",
        cfg.k_sigma(),
        args.steps,
        args.phi_max
    );
    Ok(CommandOutput { data: table.to_bytes(), summary })
}

pub fn cmd_regime(cfg: &RunConfig, args: &RegimeArgs) -> Result<CommandOutput> {
    let (k, sigma, phi) = (cfg.k(), cfg.sigma(), cfg.phi);
    let thresholds = RegimeThresholds { lo: args.lo, hi: args.hi };
    let report = regime_classify(phi, k, sigma, thresholds).map_err(|e| match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    })?;
    let mut s = String::new();
    writeln!(s, "phi = {phi:e}").unwrap();
    writeln!(s, "k_sigma = {:e}", cfg.k_sigma()).unwrap();
    match weak_value(phi) {
        Ok(w) => {
            writeln!(s, "weak_value = {:e}i", w.im).unwrap();
            if k != 0.0 {
                writeln!(s, "iwva_shift_over_sigma = {:e}", iwva_mean_shift(w, k)? / sigma).unwrap();
            }
        }
        Err(_) => writeln!(s, "weak_value = divergent").unwrap(),
    }
    writeln!(s, "kappa = {:e}", report.kappa).unwrap();
    writeln!(s, "thresholds = {} {}", thresholds.lo, thresholds.hi).unwrap();
    writeln!(s, "regime = {}", report.label).unwrap();
    writeln!(s, "probability_weak = {:e}", postselection_probability(phi, k, sigma)).unwrap();
    writeln!(s, "probability_exact = {:e}", postselection_probability_exact(phi, k, sigma)).unwrap();
    if let Ok(shift) = mean_shift_exact(phi, k, sigma) {
        writeln!(s, "shift_exact_over_sigma = {:e}", shift / sigma).unwrap();
    }
    if let Ok(shift) = quantum_mean_shift(phi, k, sigma) {
        writeln!(s, "shift_quantum_over_sigma = {:e}", shift / sigma).unwrap();
    }
    if phi != 0.0 && report.label != crate::weak::Regime::Iwva {
        let (shift, p) = wva_predictions(phi, k, sigma)?;
        writeln!(s, "wva_shift_over_sigma = {:e}", shift / sigma).unwrap();
        writeln!(s, "wva_probability = {p:e}").unwrap();
    }
    // the report is the data for this command
    Ok(CommandOutput { data: s.clone().into_bytes(), summary: String::new() })
}

pub fn cmd_montecarlo(cfg: &RunConfig, args: &MonteCarloArgs) -> Result<CommandOutput> {
    if args.photons == 0 || args.trials == 0 {
        return Err(config_err("--photons and --trials must be >= 1"));
    }
    let mc = MonteCarloConfig {
        operating_point: operating_point(cfg)?,
        photons_per_trial: args.photons,
        trials: args.trials,
        seed: cfg.seed,
    };
    let report = run_trials(&mc)?;
    let mut table = Table::new(&io::MONTECARLO_HEADER)
        .meta("seed", cfg.seed)
        .meta("phi", format!("{:e}", cfg.phi))
        .meta("k_sigma", format!("{:e}", cfg.k_sigma()))
        .meta("photons_per_trial", args.photons)
        .meta("trials", args.trials);
    table.rows = report
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i as f64, t.phi_hat, t.theta_hat])
        .collect();
    let mut s = String::new();
    writeln!(s, "seed = {}", report.seed()).unwrap();
    writeln!(s, "phi = {:e}, k_sigma = {:.4}", cfg.phi, cfg.k_sigma()).unwrap();
    writeln!(s, "photons sent per trial = {}, trials = {}", args.photons, args.trials).unwrap();
    writeln!(s, "mean detected per trial = {:.1}", report.mean_detected).unwrap();
    writeln!(s, "mean phi_hat = {:e} +/- {:e}", report.mean_phi_hat, report.stderr_phi_hat()).unwrap();
    writeln!(s, "std phi_hat = {:e}", report.std_phi_hat).unwrap();
    writeln!(s, "shot-noise limit sqrt(pi/2)/sqrt(N) = {:e}", report.theory_phi).unwrap();
    writeln!(s, "ratio std/limit = {:.4}", report.ratio).unwrap();
    writeln!(s, "std theta_hat = {:e} (limit {:e})", report.std_theta_hat, report.theory_theta).unwrap();
    Ok(CommandOutput { data: table.to_bytes(), summary: s })
}

/// Seeds for the independent noise sources of one synthesized record.
fn noise_seeds(seed: u64) -> (u64, u64) {
    (seed, seed ^ 0x9e37_79b9_7f4a_7c15)
}

/// Tone + static offset + colored noise, then shot noise at the detector.
pub fn synthesize(cfg: &RunConfig, args: &SynthArgs) -> Result<TimeSeries> {
    let (noise_seed, shot_seed) = noise_seeds(cfg.seed);
    // without a tone its frequency is irrelevant
    let tone_hz = if args.tone_amp_rad == 0.0 { 0.0 } else { args.tone_hz };
    let mut tilt = sine_tilt(args.tone_amp_rad, tone_hz, cfg.sample_rate, cfg.duration)
        .map_err(|e| config_err(e.to_string()))?;
    let offset = cfg.theta();
    if offset != 0.0 {
        tilt = TimeSeries::new(tilt.samples().iter().map(|v| v + offset).collect(), cfg.sample_rate)?;
    }
    let spec = if args.plateau {
        NoiseSpec::low_frequency_plateau()
    } else {
        NoiseSpec::white(args.floor_rad).map_err(|e| config_err(e.to_string()))?
    };
    let noise = colored_noise(&spec, tilt.len(), cfg.sample_rate, noise_seed)?;
    let tilt = tilt.add(&noise)?;
    let rate = if args.no_shot_noise {
        PhotonRate::Infinite
    } else {
        PhotonRate::Finite(photons_per_second(cfg.power_w, cfg.beam.lambda())?)
    };
    let mut out = simulate_detector_series(&tilt, &cfg.beam, &cfg.geom, rate, shot_seed)?;
    out.seed = Some(cfg.seed);
    Ok(out)
}

fn shot_noise_line(cfg: &RunConfig) -> Result<f64> {
    shot_noise_tilt(photons_per_second(cfg.power_w, cfg.beam.lambda())?, cfg.beam.lambda(), cfg.geom.l())
}

pub fn cmd_simulate(cfg: &RunConfig, args: &SynthArgs) -> Result<CommandOutput> {
    let series = synthesize(cfg, args)?;
    let mut table = io::timeseries_table(&series)
        .meta("tone_amp_rad", format!("{:e}", args.tone_amp_rad))
        .meta("tone_hz", format!("{:e}", args.tone_hz))
        .meta("noise", if args.plateau { "plateau".to_string() } else { format!("white {:e}", args.floor_rad) })
        .meta("shot_noise", !args.no_shot_noise);
    table.meta.sort_by(|a, b| a.0.cmp(&b.0));
    let mut s = String::new();
    writeln!(s, "samples = {}, fs = {} Hz, seed = {}", series.len(), series.sample_rate(), cfg.seed).unwrap();
    writeln!(s, "std = {:e} rad", series.std()).unwrap();
    writeln!(s, "k_sigma = {:.4}, misalignment angle = {:e} rad", cfg.k_sigma(), misalignment_angle(cfg.k(), &cfg.beam)).unwrap();
    if !args.no_shot_noise {
        writeln!(s, "shot-noise ASD = {:e} rad/rtHz", shot_noise_line(cfg)?).unwrap();
    }
    Ok(CommandOutput { data: table.to_bytes(), summary: s })
}

pub fn cmd_spectrum(cfg: &RunConfig, args: &SpectrumArgs) -> Result<CommandOutput> {
    if args.segments == 0 {
        return Err(config_err("--segments must be >= 1"));
    }
    let mut series = synthesize(cfg, &args.synth)?;
    let filter = match (args.filter_lo_hz, args.filter_hi_hz) {
        (lo, Some(hi)) => Some(FilterSpec { high_pass: lo, low_pass: hi, gain: args.filter_gain }),
        (Some(_), None) => return Err(config_err("--filter-lo-hz needs --filter-hi-hz")),
        (None, None) => None,
    };
    if let Some(f) = &filter {
        f.validate(cfg.sample_rate).map_err(|e| config_err(e.to_string()))?;
        // calibrate the amplified record back to tilt-equivalent radians
        series = apply_filter(&series, f)?.scaled(1.0 / f.gain);
    }
    let window = args.window.unwrap_or(if args.segments == 1 { Window::Rectangular } else { Window::Hann });
    let raw = if args.segments == 1 {
        periodogram_asd(&series, window)?
    } else {
        let seg = series.len() / args.segments;
        averaged_asd(&series, seg, 0, window).map_err(|e| config_err(e.to_string()))?
    };
    let floor = noise_floor(&raw, args.band_lo_hz, args.band_hi_hz)?;
    let half_width = if window == Window::Hann { 2 } else { 0 };
    let peak = if args.synth.tone_amp_rad != 0.0 {
        Some(peak_amplitude(&raw, args.synth.tone_hz, half_width)?)
    } else {
        None
    };
    let smoothed = moving_average_smooth(&raw, cfg.smooth_w)?;
    let scale = tilt_to_phase_scale(&cfg.geom, &cfg.beam);
    let line = shot_noise_line(cfg)?;
    let table = io::spectrum_table(&smoothed, scale);

    let mut s = String::new();
    writeln!(s, "samples = {}, fs = {} Hz, resolution = {:e} Hz, window = {}, segments = {}, w = {}",
        series.len(), cfg.sample_rate, raw.resolution, window.name(), raw.segments, cfg.smooth_w).unwrap();
    writeln!(s, "noise floor [{}, {}] Hz = {:e} rad/rtHz ({:e} rad/rtHz phase)",
        args.band_lo_hz, args.band_hi_hz, floor, floor * scale).unwrap();
    if let Some(p) = peak {
        writeln!(s, "peak amplitude at {} Hz = {:e} rad (injected {:e})", args.synth.tone_hz, p, args.synth.tone_amp_rad).unwrap();
        if let Some(i) = raw.bin_of(args.synth.tone_hz) {
            writeln!(s, "peak ASD raw = {:e}, smoothed (w={}) = {:e} rad/rtHz", raw.asd[i], cfg.smooth_w, smoothed.asd[i]).unwrap();
        }
    }
    writeln!(s, "shot-noise line lambda/(4 sqrt(pi) L sqrt(N)) = {:e} rad/rtHz ({:e} rad/rtHz phase)", line, line * scale).unwrap();
    writeln!(s, "quoted shot-noise sensitivity = {:e} rad/rtHz (ratio to formula {:.3})",
        QUOTED_SHOT_NOISE_TILT, QUOTED_SHOT_NOISE_TILT / line).unwrap();
    writeln!(s, "detected fraction (k sigma/2)^2 = {:.4}", detected_fraction(cfg.k(), cfg.sigma())).unwrap();
    writeln!(s, "shot-noise phase sqrt(pi/2)/sqrt(N per s) = {:e} rad/rtHz",
        shot_noise_phase(photons_per_second(cfg.power_w, cfg.beam.lambda())?)?).unwrap();
    Ok(CommandOutput { data: table.to_bytes(), summary: s })
}
