//! Pump-power bookkeeping: fundamental-harmonic input → SH pump → pump ratio.
//!
//! The nonlinear rate g is calibrated from a measured threshold SH power, so
//! the OPA coupling constant never needs to be known explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::model::{CavityParams, LossChain, PumpState};
use crate::squeezing::{measured_spectrum, QuadraturePair};
use crate::units::{photon_energy, to_nm};

/// Quadratic SHG conversion P_SH = η_norm(λ)·P_FH².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShgModel {
    /// Peak normalised efficiency (1/W); 10 /W is 1000 %/W.
    pub normalized_efficiency: f64,
    /// (wavelength in nm, relative response) pairs. Empty means a flat
    /// response of 1 at every wavelength.
    #[serde(default)]
    pub relative_response: Vec<(f64, f64)>,
    /// Poled-section length (m), informational.
    #[serde(default)]
    pub length: f64,
}

impl ShgModel {
    pub fn new(normalized_efficiency: f64) -> Result<Self> {
        let m = Self {
            normalized_efficiency,
            relative_response: Vec::new(),
            length: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_response(mut self, mut table: Vec<(f64, f64)>) -> Result<Self> {
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.relative_response = table;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("normalized_efficiency", self.normalized_efficiency)?;
        for &(nm, r) in &self.relative_response {
            ensure_positive("response wavelength", nm)?;
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Domain(format!("relative response {r} at {nm} nm is outside [0, 1]")));
            }
        }
        if self.relative_response.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Domain("response wavelengths must be distinct".into()));
        }
        Ok(())
    }

    /// Relative response at `wavelength` (m), linearly interpolated.
    pub fn response_at(&self, wavelength: f64) -> Result<f64> {
        let table = &self.relative_response;
        if table.is_empty() {
            return Ok(1.0);
        }
        let nm = to_nm(wavelength);
        let (lo, hi) = (table[0].0, table[table.len() - 1].0);
        let tol = 1e-9 * hi;
        if nm < lo - tol || nm > hi + tol {
            return Err(Error::MissingResponse {
                wavelength_nm: nm,
                min_nm: lo,
                max_nm: hi,
            });
        }
        if table.len() == 1 || nm <= lo {
            return Ok(table[0].1);
        }
        if nm >= hi {
            return Ok(table[table.len() - 1].1);
        }
        let k = table.partition_point(|p| p.0 <= nm);
        let (a, b) = (table[k - 1], table[k]);
        Ok(a.1 + (b.1 - a.1) * (nm - a.0) / (b.0 - a.0))
    }

    /// η_norm(λ) in 1/W.
    pub fn efficiency_at(&self, wavelength: f64) -> Result<f64> {
        Ok(self.normalized_efficiency * self.response_at(wavelength)?)
    }
}

/// SH power (W) for FH power `p_fh` (W) at FH wavelength `wavelength` (m).
pub fn shg_power(model: &ShgModel, p_fh: f64, wavelength: f64) -> Result<f64> {
    ensure_non_negative("p_fh", p_fh)?;
    Ok(model.efficiency_at(wavelength)? * p_fh * p_fh)
}

/// Threshold calibration: |β|_thr = √(P_th/ħω_p), g = κ/(4|β|_thr).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub p_th_sh: f64,
    pub kappa_ref: f64,
    pub nonlinear_rate: f64,
    pub pump_photon_energy: f64,
}

impl ThresholdModel {
    /// SH threshold power for a cavity of total rate `kappa` at the calibrated g.
    pub fn threshold_for_rate(&self, kappa: f64) -> f64 {
        let beta_thr = kappa / (4.0 * self.nonlinear_rate);
        self.pump_photon_energy * beta_thr * beta_thr
    }

    pub fn threshold_for(&self, cavity: &CavityParams) -> f64 {
        self.threshold_for_rate(cavity.total_rate())
    }

    /// Threshold re-evaluated for a different cavity and a nonlinearity
    /// scaled by `g_scale`, keeping p_th ∝ (κ/g)².
    pub fn project(&self, cavity: &CavityParams, g_scale: f64) -> Result<Self> {
        ensure_positive("g_scale", g_scale)?;
        let projected = Self {
            p_th_sh: 0.0,
            kappa_ref: cavity.total_rate(),
            nonlinear_rate: self.nonlinear_rate * g_scale,
            pump_photon_energy: self.pump_photon_energy,
        };
        Ok(Self {
            p_th_sh: projected.threshold_for(cavity),
            ..projected
        })
    }

    /// Pump state for SH power `p_sh` into the calibration cavity.
    pub fn pump_state(&self, cavity: &CavityParams, p_sh: f64, phase: f64) -> Result<PumpState> {
        PumpState::new(cavity, self.nonlinear_rate, p_sh, phase)
    }
}

pub fn calibrate_threshold(p_th_sh: f64, cavity: &CavityParams, pump_photon_energy: f64) -> Result<ThresholdModel> {
    ensure_positive("p_th_sh", p_th_sh)?;
    ensure_positive("pump_photon_energy", pump_photon_energy)?;
    let beta_thr = (p_th_sh / pump_photon_energy).sqrt();
    Ok(ThresholdModel {
        p_th_sh,
        kappa_ref: cavity.total_rate(),
        nonlinear_rate: cavity.total_rate() / (4.0 * beta_thr),
        pump_photon_energy,
    })
}

/// Calibration with the pump photon at half the cavity wavelength.
pub fn calibrate_for_cavity(p_th_sh: f64, cavity: &CavityParams) -> Result<ThresholdModel> {
    calibrate_threshold(p_th_sh, cavity, photon_energy(cavity.resonance_wavelength() / 2.0))
}

/// x = √(P_SH/P_th). Values ≥ 1 are returned as-is; callers flag them.
pub fn pump_ratio(p_sh: f64, threshold: &ThresholdModel) -> Result<f64> {
    ensure_non_negative("p_sh", p_sh)?;
    Ok((p_sh / threshold.p_th_sh).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSweepRow {
    pub p_fh: f64,
    pub p_sh: f64,
    pub pump_ratio: f64,
    /// `None` at or above threshold.
    pub spectrum: Option<QuadraturePair>,
}

impl PowerSweepRow {
    pub fn above_threshold(&self) -> bool {
        self.pump_ratio >= 1.0
    }
}

/// shg_power → pump_ratio → measured_spectrum for every FH power.
pub fn power_sweep_curve(
    fh_powers: &[f64],
    shg: &ShgModel,
    threshold: &ThresholdModel,
    cavity: &CavityParams,
    chain: &LossChain,
    omega: f64,
) -> Result<Vec<PowerSweepRow>> {
    fh_powers
        .iter()
        .map(|&p_fh| {
            let p_sh = shg_power(shg, p_fh, cavity.resonance_wavelength())?;
            let x = pump_ratio(p_sh, threshold)?;
            let spectrum = if x < 1.0 {
                Some(measured_spectrum(cavity, x, chain, omega)?)
            } else {
                None
            };
            Ok(PowerSweepRow {
                p_fh,
                p_sh,
                pump_ratio: x,
                spectrum,
            })
        })
        .collect()
}
