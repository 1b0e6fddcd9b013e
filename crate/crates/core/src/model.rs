//! Physical parameters shared by every module.
//!
//! Values are immutable after construction. Constructors validate the
//! invariants so downstream code can rely on them without re-checking.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, ensure_unit_interval, Error, Result};
use crate::units::{self, hz_to_angular, wavelength_to_angular};

/// FSR used when the caller does not supply one (Hz).
pub const DEFAULT_FSR_HZ: f64 = 5.7e9;

/// How an ambiguous (Q_tot, Q_int) pair from a transmission fit is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// The second Q is the intrinsic Q.
    Undercoupled,
    /// The second Q is the external (coupling) Q.
    Overcoupled,
}

/// Single cavity mode: loss rates, detuning and free spectral range.
///
/// `total_rate` is stored as `external_rate + intrinsic_rate`, so the sum
/// identity holds exactly for every construction path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    resonance_wavelength: f64,
    total_rate: f64,
    external_rate: f64,
    intrinsic_rate: f64,
    detuning: f64,
    fsr: f64,
}

impl CavityParams {
    /// Build from the two partial loss rates (rad/s).
    pub fn from_rates(resonance_wavelength: f64, external_rate: f64, intrinsic_rate: f64) -> Result<Self> {
        ensure_positive("resonance_wavelength", resonance_wavelength)?;
        ensure_non_negative("external_rate", external_rate)?;
        ensure_non_negative("intrinsic_rate", intrinsic_rate)?;
        let total_rate = external_rate + intrinsic_rate;
        ensure_positive("total_rate", total_rate)?;
        Ok(Self {
            resonance_wavelength,
            total_rate,
            external_rate,
            intrinsic_rate,
            detuning: 0.0,
            fsr: hz_to_angular(DEFAULT_FSR_HZ),
        })
    }

    /// Lossless good-cavity mode with total rate `kappa` (rad/s), all of it external.
    pub fn lossless(resonance_wavelength: f64, kappa: f64) -> Result<Self> {
        Self::from_rates(resonance_wavelength, kappa, 0.0)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Result<Self> {
        if !detuning.is_finite() {
            return Err(Error::Domain(format!("detuning = {detuning} must be finite")));
        }
        self.detuning = detuning;
        Ok(self)
    }

    pub fn with_fsr(mut self, fsr: f64) -> Result<Self> {
        ensure_positive("fsr", fsr)?;
        self.fsr = fsr;
        Ok(self)
    }

    pub fn with_fsr_hz(self, fsr_hz: f64) -> Result<Self> {
        self.with_fsr(hz_to_angular(fsr_hz))
    }

    pub fn resonance_wavelength(&self) -> f64 {
        self.resonance_wavelength
    }

    /// Resonance angular frequency ω₀ (rad/s).
    pub fn resonance_frequency(&self) -> f64 {
        wavelength_to_angular(self.resonance_wavelength)
    }

    /// κ (rad/s).
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// κ_e (rad/s).
    pub fn external_rate(&self) -> f64 {
        self.external_rate
    }

    /// κ_i (rad/s).
    pub fn intrinsic_rate(&self) -> f64 {
        self.intrinsic_rate
    }

    /// Δ (rad/s).
    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Ω (rad/s).
    pub fn fsr(&self) -> f64 {
        self.fsr
    }

    /// Escape efficiency ρ = κ_e/κ.
    pub fn escape_efficiency(&self) -> f64 {
        self.external_rate / self.total_rate
    }

    pub fn total_q(&self) -> f64 {
        self.resonance_frequency() / self.total_rate
    }

    pub fn intrinsic_q(&self) -> f64 {
        self.resonance_frequency() / self.intrinsic_rate
    }

    /// Cold-cavity FWHM in Hz.
    pub fn linewidth_hz(&self) -> f64 {
        units::angular_to_hz(self.total_rate)
    }
}

/// Loss rates from loaded and intrinsic quality factors.
///
/// With [`Coupling::Undercoupled`] the second factor is the intrinsic Q, so
/// κ = ω₀/Q_tot, κ_i = ω₀/Q_int and κ_e = κ − κ_i. The overcoupled reading
/// swaps the roles of κ_i and κ_e.
pub fn derive_rates(q_tot: f64, q_int: f64, resonance_wavelength: f64, coupling: Coupling) -> Result<CavityParams> {
    ensure_positive("q_tot", q_tot)?;
    ensure_positive("q_int", q_int)?;
    if q_tot > q_int {
        return Err(Error::InvalidCoupling(format!(
            "loaded Q {q_tot} exceeds intrinsic Q {q_int}"
        )));
    }
    let omega0 = wavelength_to_angular(resonance_wavelength);
    let kappa = omega0 / q_tot;
    let second = omega0 / q_int;
    let remainder = (kappa - second).max(0.0);
    let (external, intrinsic) = match coupling {
        Coupling::Undercoupled => (remainder, second),
        Coupling::Overcoupled => (second, remainder),
    };
    CavityParams::from_rates(resonance_wavelength, external, intrinsic)
}

/// Pump field of the degenerate OPO.
///
/// `|β|²` is the pump photon flux (photons/s) so the nonlinear rate `g`
/// carries units of √Hz. The pump ratio x = 4g|β|/κ is stored with respect
/// to the cavity passed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpState {
    nonlinear_rate: f64,
    pump_magnitude: f64,
    pump_phase: f64,
    pump_ratio: f64,
    sh_power: f64,
}

impl PumpState {
    /// From nonlinear rate g (√Hz), on-chip SH power (W) and pump phase.
    pub fn new(cavity: &CavityParams, nonlinear_rate: f64, sh_power: f64, pump_phase: f64) -> Result<Self> {
        ensure_non_negative("nonlinear_rate", nonlinear_rate)?;
        ensure_non_negative("sh_power", sh_power)?;
        let energy = units::photon_energy(cavity.resonance_wavelength() / 2.0);
        let pump_magnitude = (sh_power / energy).sqrt();
        Ok(Self {
            nonlinear_rate,
            pump_magnitude,
            pump_phase,
            pump_ratio: 4.0 * nonlinear_rate * pump_magnitude / cavity.total_rate(),
            sh_power,
        })
    }

    /// Pump described only by its ratio to threshold.
    ///
    /// Uses a nominal g = 1 √Hz; only the product g|β| enters the dynamics.
    pub fn from_ratio(cavity: &CavityParams, pump_ratio: f64, pump_phase: f64) -> Result<Self> {
        ensure_non_negative("pump_ratio", pump_ratio)?;
        let g = 1.0;
        let beta = pump_ratio * cavity.total_rate() / (4.0 * g);
        let energy = units::photon_energy(cavity.resonance_wavelength() / 2.0);
        Ok(Self {
            nonlinear_rate: g,
            pump_magnitude: beta,
            pump_phase,
            pump_ratio,
            sh_power: beta * beta * energy,
        })
    }

    pub fn nonlinear_rate(&self) -> f64 {
        self.nonlinear_rate
    }

    pub fn pump_magnitude(&self) -> f64 {
        self.pump_magnitude
    }

    pub fn pump_phase(&self) -> f64 {
        self.pump_phase
    }

    pub fn pump_ratio(&self) -> f64 {
        self.pump_ratio
    }

    pub fn sh_power(&self) -> f64 {
        self.sh_power
    }

    /// g|β| (rad/s).
    pub fn parametric_rate(&self) -> f64 {
        self.nonlinear_rate * self.pump_magnitude
    }

    pub(crate) fn require_sub_threshold(&self) -> Result<()> {
        if self.pump_ratio < 1.0 {
            Ok(())
        } else {
            Err(Error::AboveThreshold { ratio: self.pump_ratio })
        }
    }
}

/// Chain of beamsplitter-equivalent losses between the cavity and the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossChain {
    pub escape_efficiency: f64,
    pub path_transmission: f64,
    pub detector_qe: f64,
    #[serde(default)]
    pub extra_factors: BTreeMap<String, f64>,
}

impl LossChain {
    pub fn new(escape_efficiency: f64, path_transmission: f64, detector_qe: f64) -> Result<Self> {
        let chain = Self {
            escape_efficiency,
            path_transmission,
            detector_qe,
            extra_factors: BTreeMap::new(),
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Chain whose escape efficiency is the cavity's κ_e/κ.
    pub fn for_cavity(cavity: &CavityParams, path_transmission: f64, detector_qe: f64) -> Result<Self> {
        Self::new(cavity.escape_efficiency(), path_transmission, detector_qe)
    }

    /// On-chip chain: escape efficiency only.
    pub fn on_chip(escape_efficiency: f64) -> Result<Self> {
        Self::new(escape_efficiency, 1.0, 1.0)
    }

    pub fn lossless() -> Self {
        Self {
            escape_efficiency: 1.0,
            path_transmission: 1.0,
            detector_qe: 1.0,
            extra_factors: BTreeMap::new(),
        }
    }

    pub fn with_factor(mut self, name: impl Into<String>, value: f64) -> Result<Self> {
        ensure_unit_interval("extra factor", value)?;
        self.extra_factors.insert(name.into(), value);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_unit_interval("escape_efficiency", self.escape_efficiency)?;
        ensure_unit_interval("path_transmission", self.path_transmission)?;
        ensure_unit_interval("detector_qe", self.detector_qe)?;
        for (name, &v) in &self.extra_factors {
            ensure_unit_interval(name, v)?;
        }
        Ok(())
    }

    /// Efficiency of everything after the cavity boundary (T·ε·∏extra).
    pub fn post_cavity_efficiency(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.path_transmission * self.detector_qe * self.extra_factors.values().product::<f64>())
    }
}

/// η_tot = ρ·T·ε·∏extra.
pub fn total_efficiency(chain: &LossChain) -> Result<f64> {
    Ok(chain.escape_efficiency * chain.post_cavity_efficiency()?)
}

/// Laser with white frequency noise and optional excess intensity noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserNoiseModel {
    /// Two-sided white frequency-noise PSD level C (rad²/s).
    pub white_freq_noise: f64,
    /// MZI path length difference L (m).
    pub mzi_path_diff: f64,
    pub group_index: f64,
    /// Optical angular frequency ω_L (rad/s).
    pub optical_freq: f64,
    /// Excess intensity-noise PSD S_NN (1/Hz); zero for an ideal laser.
    pub excess_intensity_psd: f64,
}

impl LaserNoiseModel {
    pub fn from_linewidth_hz(linewidth_hz: f64, wavelength: f64) -> Result<Self> {
        ensure_non_negative("linewidth", linewidth_hz)?;
        Ok(Self {
            white_freq_noise: 2.0 * PI * linewidth_hz,
            mzi_path_diff: 0.0,
            group_index: units::DEFAULT_GROUP_INDEX,
            optical_freq: wavelength_to_angular(wavelength),
            excess_intensity_psd: 0.0,
        })
    }

    /// Linewidth in Hz (= C/2π).
    pub fn linewidth_hz(&self) -> f64 {
        self.white_freq_noise / (2.0 * PI)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("white_freq_noise", self.white_freq_noise)?;
        ensure_non_negative("mzi_path_diff", self.mzi_path_diff)?;
        ensure_non_negative("group_index", self.group_index)?;
        ensure_non_negative("optical_freq", self.optical_freq)?;
        ensure_non_negative("excess_intensity_psd", self.excess_intensity_psd)
    }
}

/// Normalisation attached to a [`SpectrumTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumUnit {
    RawPsd,
    ShotNormalizedLinear,
    ShotNormalizedDb,
}

/// Frequency grid (Hz) plus PSD values and provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    freqs: Vec<f64>,
    values: Vec<f64>,
    unit: SpectrumUnit,
    pub metadata: BTreeMap<String, String>,
}

impl SpectrumTrace {
    pub fn new(freqs: Vec<f64>, values: Vec<f64>, unit: SpectrumUnit) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::InconsistentData(format!(
                "{} frequencies but {} values",
                freqs.len(),
                values.len()
            )));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InconsistentData("frequency grid must be strictly increasing".into()));
        }
        if unit == SpectrumUnit::ShotNormalizedLinear && values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("shot-normalized linear values must be > 0".into()));
        }
        Ok(Self {
            freqs,
            values,
            unit,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> SpectrumUnit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn to_db(&self) -> Result<Self> {
        match self.unit {
            SpectrumUnit::ShotNormalizedDb => Ok(self.clone()),
            SpectrumUnit::ShotNormalizedLinear => Ok(Self {
                freqs: self.freqs.clone(),
                values: self.values.iter().map(|&v| units::to_db(v)).collect(),
                unit: SpectrumUnit::ShotNormalizedDb,
                metadata: self.metadata.clone(),
            }),
            SpectrumUnit::RawPsd => Err(Error::Domain("raw PSD has no shot-noise reference for dB".into())),
        }
    }

    pub fn to_linear(&self) -> Result<Self> {
        match self.unit {
            SpectrumUnit::ShotNormalizedDb => Self::new(
                self.freqs.clone(),
                self.values.iter().map(|&v| units::from_db(v)).collect(),
                SpectrumUnit::ShotNormalizedLinear,
            )
            .map(|t| Self {
                metadata: self.metadata.clone(),
                ..t
            }),
            _ => Ok(self.clone()),
        }
    }

    /// Mean of the values whose frequency lies in `[f_lo, f_hi]`.
    pub fn band_mean(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        let (sum, n) = self
            .freqs
            .iter()
            .zip(&self.values)
            .filter(|(&f, _)| f >= f_lo && f <= f_hi)
            .fold((0.0, 0usize), |(s, n), (_, &v)| (s + v, n + 1));
        if n == 0 {
            return Err(Error::InsufficientData(format!(
                "no bins between {f_lo} Hz and {f_hi} Hz"
            )));
        }
        Ok(sum / n as f64)
    }
}
