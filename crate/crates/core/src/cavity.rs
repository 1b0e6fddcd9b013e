//! Cavity transmission with and without intracavity parametric gain.
//!
//! The probe amplitude is t(Δ) = 1 + κ_e(iΔ − κ/2)/(Δ² + κ²/4 − g²|β|²).
//! At g|β| = 0 this is the cold-cavity Lorentzian 1 − κ_e/(κ/2 + iΔ), whose
//! on-resonance extinction happens at critical coupling κ_e = κ_i.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::model::CavityParams;
use crate::units::SPEED_OF_LIGHT;

/// Transmittance and amplitude phase over a detuning grid (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub detunings: Vec<f64>,
    pub transmittance: Vec<f64>,
    pub amplitude_phase: Vec<f64>,
}

impl TransmissionCurve {
    pub fn new(detunings: Vec<f64>, transmittance: Vec<f64>, amplitude_phase: Vec<f64>) -> Result<Self> {
        if detunings.len() != transmittance.len() || detunings.len() != amplitude_phase.len() {
            return Err(Error::InconsistentData("transmission arrays differ in length".into()));
        }
        if transmittance.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::Domain("transmittance must be >= 0".into()));
        }
        Ok(Self {
            detunings,
            transmittance,
            amplitude_phase,
        })
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Total excursion (max − min) of the unwrapped phase.
    pub fn phase_excursion(&self) -> f64 {
        let unwrapped = unwrap_phase(&self.amplitude_phase);
        let lo = unwrapped.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = unwrapped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Gain/loss ratio G = g|β|/(κ/2): 1 where the DC pole of the transmission
/// denominator reaches zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainLossRatio(f64);

impl GainLossRatio {
    pub fn new(g: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&g) {
            return Err(Error::Domain(format!("gain/loss ratio {g} must be in [0, 1)")));
        }
        Ok(Self(g))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// g|β| (rad/s) that realises this ratio in `cavity`.
    pub fn parametric_rate(&self, cavity: &CavityParams) -> f64 {
        self.0 * cavity.total_rate() / 2.0
    }

    pub fn from_parametric_rate(cavity: &CavityParams, g_beta: f64) -> Result<Self> {
        Self::new(2.0 * g_beta / cavity.total_rate())
    }
}

/// Complex probe transmission amplitude at detuning `delta` (rad/s).
pub fn transmission_amplitude(cavity: &CavityParams, g_beta: f64, delta: f64) -> Result<Complex64> {
    let half = cavity.total_rate() / 2.0;
    if !(g_beta >= 0.0) {
        return Err(Error::Domain(format!("g|beta| = {g_beta} must be >= 0")));
    }
    if g_beta >= half {
        return Err(Error::AboveThreshold {
            ratio: g_beta / half,
        });
    }
    let denom = delta * delta + half * half - g_beta * g_beta;
    Ok(1.0 + cavity.external_rate() * Complex64::new(-half, delta) / denom)
}

/// (transmittance, phase) at detuning `delta`.
pub fn transmission_with_gain(cavity: &CavityParams, g_beta: f64, delta: f64) -> Result<(f64, f64)> {
    let t = transmission_amplitude(cavity, g_beta, delta)?;
    Ok((t.norm_sqr(), t.arg()))
}

/// Cold-cavity transmittance 1 − κ_e κ_i/(Δ² + κ²/4).
pub fn cold_transmittance(cavity: &CavityParams, delta: f64) -> f64 {
    let half = cavity.total_rate() / 2.0;
    1.0 - cavity.external_rate() * cavity.intrinsic_rate() / (delta * delta + half * half)
}

/// Evaluate the transmission over a detuning grid.
pub fn transmission_curve(cavity: &CavityParams, g_beta: f64, detunings: &[f64]) -> Result<TransmissionCurve> {
    let mut trans = Vec::with_capacity(detunings.len());
    let mut phase = Vec::with_capacity(detunings.len());
    for &d in detunings {
        let (t, p) = transmission_with_gain(cavity, g_beta, d)?;
        trans.push(t);
        phase.push(p);
    }
    TransmissionCurve::new(detunings.to_vec(), trans, phase)
}

/// Evenly spaced grid of `n` points over [−half_span, half_span].
pub fn symmetric_grid(half_span: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| -half_span + 2.0 * half_span * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (k, &p) in phase.iter().enumerate() {
        if k > 0 {
            let jump = p - phase[k - 1];
            if jump > PI {
                offset -= 2.0 * PI;
            } else if jump < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Four-point Lagrange interpolation of `y` near grid index `i`.
fn interp(x: &[f64], y: &[f64], i: usize, at: f64) -> f64 {
    let n = x.len();
    let lo = i.saturating_sub(1).min(n.saturating_sub(4));
    let hi = (lo + 4).min(n);
    let mut acc = 0.0;
    for j in lo..hi {
        let mut w = 1.0;
        for m in lo..hi {
            if m != j {
                w *= (at - x[m]) / (x[j] - x[m]);
            }
        }
        acc += w * y[j];
    }
    acc
}

/// Crossing of `level` between grid points i and i+1, refined by bisection
/// on the local cubic interpolant.
fn crossing(x: &[f64], y: &[f64], i: usize, level: f64) -> f64 {
    let (mut a, mut b) = (x[i], x[i + 1]);
    let fa = interp(x, y, i, a) - level;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let fm = interp(x, y, i, mid) - level;
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Full width at half depth (dip) or half excess over unity (peak), in the
/// detuning units of the curve.
pub fn fwhm_numeric(curve: &TransmissionCurve) -> Result<f64> {
    let x = &curve.detunings;
    let dev: Vec<f64> = curve.transmittance.iter().map(|t| t - 1.0).collect();
    if dev.len() < 5 {
        return Err(Error::AmbiguousLineshape("fewer than 5 points".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InconsistentData("detuning grid must be strictly increasing".into()));
    }
    let (imax, &extremum) = dev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    if extremum.abs() < 1e-12 {
        return Err(Error::AmbiguousLineshape("flat transmission, no extremum".into()));
    }
    let level = extremum / 2.0;
    // Work with s > 0 inside the feature, s < 0 outside.
    let s: Vec<f64> = dev.iter().map(|d| (d - level) * extremum.signum()).collect();
    let significant = (1..dev.len() - 1)
        .filter(|&i| {
            let (a, b, c) = (dev[i - 1], dev[i], dev[i + 1]);
            let is_max = b > a && b >= c;
            let is_min = b < a && b <= c;
            (is_max || is_min) && b.abs() >= level.abs()
        })
        .count();
    if significant != 1 {
        return Err(Error::AmbiguousLineshape(format!("{significant} extrema above half level")));
    }
    let left = (0..imax).rev().find(|&i| s[i] <= 0.0);
    let right = (imax + 1..s.len()).find(|&i| s[i] <= 0.0);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::AmbiguousLineshape("feature not bracketed by the grid".into()));
    };
    let shifted: Vec<f64> = dev.iter().map(|d| d - level).collect();
    let xl = crossing(x, &shifted, l, 0.0);
    let xr = crossing(x, &shifted, r - 1, 0.0);
    Ok(xr - xl)
}

/// G = √(1 − (hot/cold)²) under the pole model κ_eff = κ√(1 − G²).
pub fn gain_loss_from_linewidth(cold_fwhm: f64, hot_fwhm: f64) -> Result<GainLossRatio> {
    ensure_positive("cold_fwhm", cold_fwhm)?;
    if !(hot_fwhm >= 0.0) {
        return Err(Error::Domain(format!("hot_fwhm = {hot_fwhm} must be >= 0")));
    }
    if hot_fwhm > cold_fwhm {
        return Err(Error::InconsistentData(format!(
            "pumped linewidth {hot_fwhm} exceeds cold linewidth {cold_fwhm}"
        )));
    }
    let r = hot_fwhm / cold_fwhm;
    let g = (1.0 - r * r).sqrt();
    // hot → 0 is the threshold limit; report it as the largest ratio below 1.
    Ok(GainLossRatio(g.min(1.0 - f64::EPSILON)))
}

/// Loaded Q and linewidth (Hz) from a wavelength linewidth.
pub fn q_from_linewidth(lambda0: f64, delta_lambda: f64) -> Result<(f64, f64)> {
    ensure_positive("wavelength", lambda0)?;
    ensure_positive("linewidth", delta_lambda)?;
    let dnu = SPEED_OF_LIGHT * delta_lambda / (lambda0 * lambda0);
    Ok((SPEED_OF_LIGHT / lambda0 / dnu, dnu))
}

/// Detuning produced by a TEC temperature change, wrapped to (−Ω/2, Ω/2].
///
/// `degrees_per_fsr` is the temperature change that shifts the resonance by
/// one full FSR.
pub fn detuning_from_temperature(t: f64, t0: f64, degrees_per_fsr: f64, fsr: f64) -> Result<f64> {
    ensure_positive("degrees_per_fsr", degrees_per_fsr)?;
    ensure_positive("fsr", fsr)?;
    let turns = (t - t0) / degrees_per_fsr;
    let wrapped = turns - (turns - 0.5).ceil();
    Ok(wrapped * fsr)
}
