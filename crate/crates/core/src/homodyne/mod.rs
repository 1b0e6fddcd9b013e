//! Time-domain Langevin simulation of the OPO with balanced homodyne
//! detection and Welch spectral estimation.
//!
//! Quadratures follow X = a + a†, Y = i(a† − a), so vacuum has unit
//! two-sided PSD. A photocurrent record is `gain·√(P_LO/1 mW)·X_θ` plus
//! electronic noise, giving a one-sided shot-noise PSD of
//! `2·gain²·P_LO/1 mW` in the Welch convention of [`welch`].
//!
//! Every run owns a ChaCha8 stream selected by `(seed, run index)`, so
//! parallel sweeps reproduce serial ones bit for bit.

mod detection;
mod integrator;
mod sweep;
mod welch;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::model::CavityParams;

pub use detection::{balanced_detect, Detector};
pub use integrator::{drift_matrix, stationary_covariance, simulate_cavity, CavitySimulator};
pub use sweep::{
    measure_band, measure_quadratures, phase_sweep, record_psd, shotnoise_sweep, squeezed_lo_phase, BandMeasurement,
    PhaseSweep, PhaseSweepRow, QuadratureMeasurement, RunRequest, ShotSweep, ShotSweepRow,
};
pub use welch::{welch_psd, WelchAccumulator};

/// Reference LO power for photocurrent scaling (W).
pub const LO_REFERENCE_POWER: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact OU update with exactly sampled increments.
    #[default]
    Exact,
    EulerMaruyama,
}

/// Optional low-frequency technical noise on the detected quadrature with a
/// Lorentzian PSD `level/(1 + (f/corner)²)` relative to shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcessNoise {
    pub level: f64,
    pub corner_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Time step (s). Defaults to the coarsest allowed, 0.01·2π/κ.
    pub dt: Option<f64>,
    /// Recorded duration (s) after the transient. Defaults to `segments`
    /// Welch segments.
    pub duration: Option<f64>,
    pub segments: usize,
    pub seed: u64,
    pub lo_power: f64,
    pub lo_phase: f64,
    pub v_pi: f64,
    pub detector_gain: f64,
    /// Electronic-noise PSD relative to the shot noise at `electronic_reference_lo_power`.
    pub electronic_noise_rel: f64,
    pub electronic_reference_lo_power: f64,
    /// Single-pole photocurrent bandwidth (Hz); `None` disables the filter.
    pub detector_bandwidth_hz: Option<f64>,
    pub rbw_hz: f64,
    pub overlap: f64,
    /// Welch segment length; defaults to the next power of two of fs/RBW.
    pub segment_length: Option<usize>,
    /// Discarded transient (s); defaults to max(10/κ, 10/λ_min).
    pub transient: Option<f64>,
    pub integrator: Integrator,
    pub excess_noise: Option<ExcessNoise>,
    /// Frequency range kept in emitted spectra (Hz).
    pub output_min_hz: f64,
    pub output_max_hz: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: None,
            duration: None,
            segments: 200,
            seed: 0,
            lo_power: 1.3e-3,
            lo_phase: 0.0,
            v_pi: 35.0,
            detector_gain: 1.0,
            electronic_noise_rel: 1.0 / 3.3,
            electronic_reference_lo_power: 1.3e-3,
            detector_bandwidth_hz: Some(450e6),
            rbw_hz: 100e3,
            overlap: 0.5,
            segment_length: None,
            transient: None,
            integrator: Integrator::Exact,
            excess_noise: None,
            output_min_hz: 0.0,
            output_max_hz: 500e6,
        }
    }
}

/// Minimum number of Welch segments a run must provide.
pub const MIN_SEGMENTS: usize = 100;

/// SimConfig resolved against a cavity: step, lengths and sample counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub dt: f64,
    pub segment_length: usize,
    pub hop: usize,
    pub samples: usize,
    pub transient_steps: usize,
}

impl Resolved {
    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn segments(&self) -> usize {
        if self.samples < self.segment_length {
            0
        } else {
            (self.samples - self.segment_length) / self.hop + 1
        }
    }
}

impl SimConfig {
    /// Largest admissible step for `cavity`.
    pub fn max_dt(cavity: &CavityParams) -> f64 {
        0.01 * 2.0 * std::f64::consts::PI / cavity.total_rate()
    }

    /// θ = π·V/V_π + lo_phase.
    pub fn theta_from_voltage(&self, voltage: f64) -> f64 {
        std::f64::consts::PI * voltage / self.v_pi + self.lo_phase
    }

    /// One-sided shot-noise PSD at LO power `p_lo`.
    pub fn shot_level(&self, p_lo: f64) -> f64 {
        2.0 * self.detector_gain.powi(2) * p_lo / LO_REFERENCE_POWER
    }

    /// One-sided electronic-noise PSD.
    pub fn electronic_level(&self) -> f64 {
        self.electronic_noise_rel * self.shot_level(self.electronic_reference_lo_power)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("sim.lo_power", self.lo_power)?;
        ensure_positive("sim.v_pi", self.v_pi)?;
        ensure_positive("sim.detector_gain", self.detector_gain)?;
        ensure_non_negative("sim.electronic_noise_rel", self.electronic_noise_rel)?;
        ensure_positive("sim.electronic_reference_lo_power", self.electronic_reference_lo_power)?;
        ensure_positive("sim.rbw_hz", self.rbw_hz)?;
        if let Some(bw) = self.detector_bandwidth_hz {
            ensure_positive("sim.detector_bandwidth_hz", bw)?;
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!("sim.overlap = {} must be in [0, 1)", self.overlap)));
        }
        if let Some(e) = self.excess_noise {
            ensure_non_negative("sim.excess_noise.level", e.level)?;
            ensure_positive("sim.excess_noise.corner_hz", e.corner_hz)?;
        }
        if !(self.output_max_hz > self.output_min_hz) {
            return Err(Error::Config("sim.output_max_hz must exceed sim.output_min_hz".into()));
        }
        Ok(())
    }

    /// Resolve step and record lengths; `slowest_rate` is the smallest decay
    /// rate of the drift (rad/s), used for the default transient.
    pub fn resolve(&self, cavity: &CavityParams, slowest_rate: f64) -> Result<Resolved> {
        self.validate().map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })?;
        let max_dt = Self::max_dt(cavity);
        let dt = self.dt.unwrap_or(max_dt);
        if !(dt > 0.0) {
            return Err(Error::Config(format!("sim.dt = {dt} must be > 0")));
        }
        if dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::Stability(format!(
                "dt = {dt:e} s exceeds 0.01·2π/κ = {max_dt:e} s"
            )));
        }
        let fs = 1.0 / dt;
        let segment_length = match self.segment_length {
            Some(n) if n >= 8 => n,
            Some(n) => return Err(Error::Config(format!("sim.segment_length = {n} is too short"))),
            None => ((fs / self.rbw_hz).ceil() as usize).next_power_of_two(),
        };
        if fs / segment_length as f64 > self.rbw_hz * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "segment length {segment_length} gives bins wider than the {} Hz RBW",
                self.rbw_hz
            )));
        }
        let hop = ((segment_length as f64) * (1.0 - self.overlap)).round().max(1.0) as usize;
        let samples = match self.duration {
            Some(d) => {
                ensure_positive("sim.duration", d).map_err(|e| Error::Config(e.to_string()))?;
                (d / dt).round() as usize
            }
            None => segment_length + hop * self.segments.saturating_sub(1),
        };
        let floor_rate = slowest_rate.min(cavity.total_rate());
        let transient = self.transient.unwrap_or(10.0 / floor_rate);
        if transient < 10.0 / cavity.total_rate() * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "sim.transient = {transient:e} s is shorter than 10/κ"
            )));
        }
        let r = Resolved {
            dt,
            segment_length,
            hop,
            samples,
            transient_steps: (transient / dt).ceil() as usize,
        };
        if r.segments() < MIN_SEGMENTS {
            return Err(Error::Config(format!(
                "record yields {} Welch segments; at least {MIN_SEGMENTS} are required",
                r.segments()
            )));
        }
        Ok(r)
    }
}

/// Output-field quadratures sampled as boxcar averages over each step.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTrace {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl QuadratureTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }
}

/// RNG for run `run` of a seeded experiment.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}
