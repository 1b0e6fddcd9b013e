//! Laser intensity and phase noise: white-frequency-noise lineshape, direct
//! detection PSD, and the unbalanced-MZI phase-noise measurement.
//!
//! PSDs are two-sided here. Exported traces double them (one-sided).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, ensure_unit_interval, Error, Result};
use crate::model::{SpectrumTrace, SpectrumUnit};
use crate::units::{hz_to_angular, SPEED_OF_LIGHT};

/// ⟨(φ(t) − φ(0))²⟩ = C|t|.
pub fn phase_variance(c: f64, t: f64) -> Result<f64> {
    ensure_non_negative("C", c)?;
    Ok(c * t.abs())
}

/// S_αα(ω) = |α|²·4C/(C² + 4ω²), Lorentzian with FWHM C (rad/s).
pub fn lineshape_white_noise(c: f64, omega: f64, power: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain("C must be > 0; C = 0 is a delta-function line".into()));
    }
    Ok(power * 4.0 * c / (c * c + 4.0 * omega * omega))
}

/// Direct-detection photocurrent PSD η²|α|² + η²|α|⁴S_NN, times gain².
pub fn intensity_psd(eta: f64, flux: f64, s_nn: f64, gain: f64) -> Result<f64> {
    ensure_unit_interval("eta", eta)?;
    ensure_non_negative("flux", flux)?;
    ensure_non_negative("S_NN", s_nn)?;
    Ok(gain * gain * eta * eta * (flux + flux * flux * s_nn))
}

/// Unbalanced Mach-Zehnder interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MziSetup {
    /// Path length difference L (m).
    pub path_diff: f64,
    pub group_index: f64,
    /// ω_L·L/c (rad); quadrature (π/2) by default.
    pub operating_point: f64,
}

impl MziSetup {
    pub fn new(path_diff: f64, group_index: f64) -> Result<Self> {
        ensure_positive("path_diff", path_diff)?;
        ensure_positive("group_index", group_index)?;
        Ok(Self {
            path_diff,
            group_index,
            operating_point: PI / 2.0,
        })
    }

    /// Setup with a measured FSR; the group index follows from c/(n·L).
    pub fn from_fsr_hz(fsr_hz: f64, path_diff: f64) -> Result<Self> {
        ensure_positive("fsr", fsr_hz)?;
        Self::new(path_diff, SPEED_OF_LIGHT / (fsr_hz * path_diff))
    }

    pub fn with_operating_point(mut self, op: f64) -> Self {
        self.operating_point = op;
        self
    }

    /// Differential delay n·L/c (s).
    pub fn delay(&self) -> f64 {
        self.group_index * self.path_diff / SPEED_OF_LIGHT
    }

    pub fn fsr_hz(&self) -> f64 {
        1.0 / self.delay()
    }

    /// sin²(ω_L L/2c): shot-reference transfer.
    pub fn shot_transfer(&self) -> f64 {
        (self.operating_point / 2.0).sin().powi(2)
    }

    /// 16·sin²(ω_L L/c); zero means no phase sensitivity.
    pub fn sensitivity(&self) -> f64 {
        16.0 * self.operating_point.sin().powi(2)
    }

    /// sin²(Ω·τ/2) at angular frequency Ω.
    pub fn delay_transfer(&self, omega: f64) -> f64 {
        (omega * self.delay() / 2.0).sin().powi(2)
    }
}

/// Shot level η²|α|²sin²(ω_L L/2c).
pub fn mzi_shot_level(setup: &MziSetup, flux: f64, eta: f64) -> f64 {
    eta * eta * flux * setup.shot_transfer()
}

/// MZI photocurrent PSD at Ω (rad/s) for phase-noise PSD `s_phi` (rad²/Hz).
pub fn mzi_phase_psd(setup: &MziSetup, s_phi: f64, flux: f64, eta: f64, omega: f64) -> Result<f64> {
    ensure_unit_interval("eta", eta)?;
    ensure_non_negative("flux", flux)?;
    Ok(mzi_shot_level(setup, flux, eta)
        + eta * eta * flux * flux * setup.sensitivity() * setup.delay_transfer(omega) * s_phi)
}

/// S_φφ(Ω) = C/Ω² for white frequency noise.
pub fn white_phase_psd(c: f64, omega: f64) -> f64 {
    c / (omega * omega)
}

/// Outcome of [`extract_phase_psd`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseExtraction {
    pub phase_psd: SpectrumTrace,
    /// Frequencies (Hz) dropped inside the guard band around FSR multiples.
    pub masked_hz: Vec<f64>,
}

/// Invert [`mzi_phase_psd`] for S_φφ on every bin outside `guard_hz` of an
/// FSR multiple. `flux` is the photon flux incident on the MZI.
pub fn extract_phase_psd(
    measured: &SpectrumTrace,
    shot_ref: f64,
    setup: &MziSetup,
    flux: f64,
    guard_hz: f64,
) -> Result<PhaseNoiseExtraction> {
    ensure_positive("shot_ref", shot_ref)?;
    ensure_positive("flux", flux)?;
    ensure_non_negative("guard", guard_hz)?;
    if setup.sensitivity() < 1e-12 {
        return Err(Error::Domain("operating point has zero phase sensitivity".into()));
    }
    if setup.shot_transfer() < 1e-12 {
        return Err(Error::Domain("operating point blocks the shot reference".into()));
    }
    // η² from the shot reference, so only the flux needs to be known.
    let eta_sq = shot_ref / (flux * setup.shot_transfer());
    let fsr = setup.fsr_hz();
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    let mut masked = Vec::new();
    for (&f, &s) in measured.freqs().iter().zip(measured.values()) {
        let nearest = (f / fsr).round() * fsr;
        if (f - nearest).abs() <= guard_hz || f <= 0.0 {
            masked.push(f);
            continue;
        }
        let omega = hz_to_angular(f);
        let transfer = eta_sq * flux * flux * setup.sensitivity() * setup.delay_transfer(omega);
        freqs.push(f);
        values.push((s - shot_ref) / transfer);
    }
    let phase_psd = SpectrumTrace::new(freqs, values, SpectrumUnit::RawPsd)?.with_meta("quantity", "S_phiphi");
    Ok(PhaseNoiseExtraction {
        phase_psd,
        masked_hz: masked,
    })
}

/// Linewidth (Hz) from an S_φφ trace under the C/Ω² model: C is the mean of
/// the per-bin estimates S_φφ·Ω².
pub fn linewidth_from_phase_psd(phase_psd: &SpectrumTrace) -> Result<f64> {
    if phase_psd.is_empty() {
        return Err(Error::InsufficientData("empty phase-noise trace".into()));
    }
    let c = phase_psd
        .freqs()
        .iter()
        .zip(phase_psd.values())
        .map(|(&f, &s)| s * hz_to_angular(f).powi(2))
        .sum::<f64>()
        / phase_psd.len() as f64;
    Ok(c / (2.0 * PI))
}
