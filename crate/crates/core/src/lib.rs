//! Simulation and analysis toolkit for an inverse weak-value tilt meter: a
//! misaligned Sagnac interferometer whose dark port is read out by a split
//! detector.
//!
//! * [`optics`]: closed-form dark-port intensity, mean shift and detected power.
//! * [`weak`]: the qubit ⊗ meter picture, weak value, post-selection and regimes.
//! * [`montecarlo`]: photon-counting split detection and shot-noise limits.
//! * [`signal`]: tilt waveforms, colored noise, shot noise and filter models.
//! * [`spectral`]: amplitude spectral densities, smoothing, floors and peaks.
//! * [`cli`]: the `tiltmeter` command-line front end.

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod montecarlo;
pub mod optics;
pub mod quadrature;
pub mod signal;
pub mod spectral;
pub mod weak;

pub use error::{Error, Result};
pub use exec::Execution;
