//! Output-field and quadrature spectra of the sub-threshold degenerate OPO.
//!
//! Spectra are normalised to shot noise (vacuum = 1). The transfer
//! coefficients assume the good-cavity convention κ = κ_e; intrinsic loss is
//! accounted for afterwards through the escape efficiency of a [`LossChain`].
//!
//! The pump term inside the transfer coefficients is 4g²|β|² (= (2g|β|)²).
//! That is the only dimensionally consistent reading, and it is what makes
//! |u|² − |v|² = 1 hold.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_non_negative, Error, Result};
use crate::model::{total_efficiency, CavityParams, LossChain, PumpState, SpectrumTrace, SpectrumUnit};
use crate::units::{hz_to_angular, to_db};

/// Bogoliubov coefficients: a_out(ω) = u·a_in(ω) + v·a_in†(−ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPair {
    pub u: Complex64,
    pub v: Complex64,
}

impl TransferPair {
    /// |u|² − |v|², identically 1 for a lossless cavity.
    pub fn symplectic_form(&self) -> f64 {
        self.u.norm_sqr() - self.v.norm_sqr()
    }
}

/// Squeezed (S₋) and anti-squeezed (S₊) quadrature spectra at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraturePair {
    pub squeezed: f64,
    pub anti_squeezed: f64,
}

impl QuadraturePair {
    pub fn squeezed_db(&self) -> f64 {
        to_db(self.squeezed)
    }

    pub fn anti_squeezed_db(&self) -> f64 {
        to_db(self.anti_squeezed)
    }

    pub fn product(&self) -> f64 {
        self.squeezed * self.anti_squeezed
    }
}

fn check_ratio(x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("pump ratio {x} must be >= 0")));
    }
    if x >= 1.0 {
        return Err(Error::AboveThreshold { ratio: x });
    }
    Ok(())
}

/// Transfer pair of the lossless cavity at sideband frequency `omega` (rad/s).
pub fn output_transfer(cavity: &CavityParams, pump: &PumpState, omega: f64) -> Result<TransferPair> {
    pump.require_sub_threshold()?;
    let half = cavity.total_rate() / 2.0;
    let gain = 2.0 * pump.parametric_rate();
    let gain_sq = gain * gain;
    let denom = Complex64::new(half, -omega).powi(2) - gain_sq;
    let u = Complex64::new(half * half + omega * omega + gain_sq, 0.0) / denom;
    // −2igβκ with β = |β|e^{iφ_β}
    let v = Complex64::new(0.0, -gain * cavity.total_rate()) * Complex64::from_polar(1.0, pump.pump_phase()) / denom;
    Ok(TransferPair { u, v })
}

/// Symmetrised spectrum of X_φ = e^{iφ}a_out + e^{−iφ}a_out†, computed from
/// the transfer pair at ±ω: an independent route to [`quadrature_spectrum`].
pub fn quadrature_spectrum_from_transfer(
    cavity: &CavityParams,
    pump: &PumpState,
    phi_out: f64,
    omega: f64,
) -> Result<f64> {
    let plus = output_transfer(cavity, pump, omega)?;
    let minus = output_transfer(cavity, pump, -omega)?;
    let rot = Complex64::from_polar(1.0, phi_out);
    let c1 = rot * plus.u + rot.conj() * minus.v.conj();
    let c2 = rot * plus.v + rot.conj() * minus.u.conj();
    Ok(0.5 * (c1.norm_sqr() + c2.norm_sqr()))
}

/// Quadrature spectrum S_XX(ω) at output phase `phi_out`.
///
/// Extremised where sin(2φ_out + φ_β) = ±1.
pub fn quadrature_spectrum(cavity: &CavityParams, pump: &PumpState, phi_out: f64, omega: f64) -> Result<f64> {
    pump.require_sub_threshold()?;
    let kappa = cavity.total_rate();
    let gb = pump.parametric_rate();
    let a = gb * kappa / ((kappa / 2.0 - 2.0 * gb).powi(2) + omega * omega);
    let b = gb * kappa / ((kappa / 2.0 + 2.0 * gb).powi(2) + omega * omega);
    let s = (2.0 * phi_out + pump.pump_phase()).sin();
    Ok(1.0 + a * (2.0 + 2.0 * s) + b * (-2.0 + 2.0 * s))
}

/// Output phase that maximises (`anti = true`) or minimises the spectrum.
pub fn extremal_phase(pump: &PumpState, anti: bool) -> f64 {
    let target = if anti { PI / 2.0 } else { -PI / 2.0 };
    (target - pump.pump_phase()) / 2.0
}

/// Lossless S₋ and S₊ at pump ratio `x`.
pub fn squeeze_antisqueeze(cavity: &CavityParams, x: f64, omega: f64) -> Result<QuadraturePair> {
    check_ratio(x)?;
    let w = omega / cavity.total_rate();
    let q = 4.0 * w * w;
    Ok(QuadraturePair {
        squeezed: 1.0 - 4.0 * x / ((1.0 + x).powi(2) + q),
        anti_squeezed: 1.0 + 4.0 * x / ((1.0 - x).powi(2) + q),
    })
}

/// Beamsplitter mixing with vacuum: η·S + (1 − η).
pub fn apply_efficiency(eta: f64, lossless: QuadraturePair) -> QuadraturePair {
    QuadraturePair {
        squeezed: eta * lossless.squeezed + (1.0 - eta),
        anti_squeezed: eta * lossless.anti_squeezed + (1.0 - eta),
    }
}

/// Spectra after the loss chain.
pub fn measured_spectrum(cavity: &CavityParams, x: f64, chain: &LossChain, omega: f64) -> Result<QuadraturePair> {
    let eta = total_efficiency(chain)?;
    Ok(apply_efficiency(eta, squeeze_antisqueeze(cavity, x, omega)?))
}

/// Pair of shot-normalised traces (squeezed, anti-squeezed) over `freqs_hz`.
pub fn spectrum_curve(
    cavity: &CavityParams,
    x: f64,
    chain: &LossChain,
    freqs_hz: &[f64],
) -> Result<(SpectrumTrace, SpectrumTrace)> {
    if freqs_hz.is_empty() {
        return Err(Error::InsufficientData("empty frequency grid".into()));
    }
    for &f in freqs_hz {
        ensure_non_negative("frequency", f)?;
    }
    let points = freqs_hz
        .iter()
        .map(|&f| measured_spectrum(cavity, x, chain, hz_to_angular(f)))
        .collect::<Result<Vec<_>>>()?;
    let eta = total_efficiency(chain)?;
    let tag = |t: SpectrumTrace, quad: &str| {
        t.with_meta("source", "closed_form")
            .with_meta("quadrature", quad)
            .with_meta("pump_ratio", x)
            .with_meta("eta_tot", eta)
    };
    let squeezed = SpectrumTrace::new(
        freqs_hz.to_vec(),
        points.iter().map(|p| p.squeezed).collect(),
        SpectrumUnit::ShotNormalizedLinear,
    )?;
    let anti = SpectrumTrace::new(
        freqs_hz.to_vec(),
        points.iter().map(|p| p.anti_squeezed).collect(),
        SpectrumUnit::ShotNormalizedLinear,
    )?;
    Ok((tag(squeezed, "squeezed"), tag(anti, "anti_squeezed")))
}

/// Pump ratio at which the lossy squeezed spectrum at `omega` reaches
/// `target` (linear, < 1). Solved in closed form; `None` when unreachable
/// below threshold.
pub fn ratio_for_squeezing(cavity: &CavityParams, eta: f64, omega: f64, target: f64) -> Option<f64> {
    if !(target > 0.0 && target < 1.0) || !(eta > 0.0 && eta <= 1.0) {
        return None;
    }
    // 4x/((1+x)² + q) = y  →  y x² + (2y − 4) x + y(1 + q) = 0
    let y = (1.0 - target) / eta;
    let w = omega / cavity.total_rate();
    let q = 4.0 * w * w;
    let b = 2.0 * y - 4.0;
    let disc = b * b - 4.0 * y * y * (1.0 + q);
    if disc < 0.0 {
        return None;
    }
    let x = (-b - disc.sqrt()) / (2.0 * y);
    (x >= 0.0 && x < 1.0).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_rates, Coupling};
    use crate::units::{from_db, nm};
    use proptest::prelude::*;

    fn device_cavity() -> CavityParams {
        derive_rates(550e3, 950e3, nm(1544.4), Coupling::Undercoupled).unwrap()
    }

    fn lossless() -> CavityParams {
        CavityParams::lossless(nm(1544.4), hz_to_angular(352.9e6)).unwrap()
    }

    #[test]
    fn cold_cavity_is_identity_on_resonance() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.0, 0.0).unwrap();
        let t = output_transfer(&c, &p, 0.0).unwrap();
        assert!((t.u - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(t.v.norm(), 0.0);
    }

    #[test]
    fn symplectic_at_half_threshold() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.5, 0.3).unwrap();
        let t = output_transfer(&c, &p, 0.0).unwrap();
        assert!((t.symplectic_form() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn far_detuned_limit() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.7, 0.0).unwrap();
        let t = output_transfer(&c, &p, 1e6 * c.total_rate()).unwrap();
        assert!((t.u - Complex64::new(-1.0, 0.0)).norm() < 1e-5 || (t.u.norm() - 1.0).abs() < 1e-5);
        assert!(t.v.norm() < 1e-5);
    }

    #[test]
    fn above_threshold_rejected() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 1.0, 0.0).unwrap();
        assert!(matches!(output_transfer(&c, &p, 0.0), Err(Error::AboveThreshold { .. })));
        assert!(matches!(quadrature_spectrum(&c, &p, 0.0, 0.0), Err(Error::AboveThreshold { .. })));
        assert!(matches!(squeeze_antisqueeze(&c, 1.2, 0.0), Err(Error::AboveThreshold { .. })));
        assert!(matches!(squeeze_antisqueeze(&c, -0.1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn vacuum_is_phase_independent() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.0, 0.4).unwrap();
        for k in 0..16 {
            let phi = k as f64 * 0.4;
            assert_eq!(quadrature_spectrum(&c, &p, phi, 1e8).unwrap(), 1.0);
        }
    }

    #[test]
    fn half_threshold_extrema_by_phase_scan() {
        // Oracle: brute-force scan of the phase-resolved spectrum.
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.5, 0.0).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..=100_000 {
            let phi = k as f64 * PI / 100_000.0;
            let s = quadrature_spectrum(&c, &p, phi, 0.0).unwrap();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        assert!((hi - 9.0).abs() < 1e-6);
        assert!((lo - 1.0 / 9.0).abs() < 1e-6);
        let s = squeeze_antisqueeze(&c, 0.5, 0.0).unwrap();
        assert!((s.anti_squeezed - 9.0).abs() < 1e-12);
        assert!((s.squeezed - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn phase_sweep_has_two_maxima_and_two_minima() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.4, 0.7).unwrap();
        let n = 720;
        let vals: Vec<f64> = (0..n)
            .map(|k| quadrature_spectrum(&c, &p, 2.0 * PI * k as f64 / n as f64, 1e8).unwrap())
            .collect();
        let count = |pred: &dyn Fn(f64, f64, f64) -> bool| {
            (0..n)
                .filter(|&k| pred(vals[(k + n - 1) % n], vals[k], vals[(k + 1) % n]))
                .count()
        };
        assert_eq!(count(&|a, b, c| b > a && b >= c), 2);
        assert_eq!(count(&|a, b, c| b < a && b <= c), 2);
        for k in 0..n / 2 {
            assert!((vals[k] - vals[k + n / 2]).abs() < 1e-12);
        }
    }

    #[test]
    fn extremal_phase_picks_extrema() {
        let c = lossless();
        let p = PumpState::from_ratio(&c, 0.6, 1.1).unwrap();
        let omega = 0.3 * c.total_rate();
        let pair = squeeze_antisqueeze(&c, 0.6, omega).unwrap();
        let hi = quadrature_spectrum(&c, &p, extremal_phase(&p, true), omega).unwrap();
        let lo = quadrature_spectrum(&c, &p, extremal_phase(&p, false), omega).unwrap();
        assert!((hi - pair.anti_squeezed).abs() < 1e-12 * hi);
        assert!((lo - pair.squeezed).abs() < 1e-12);
    }

    #[test]
    fn lossless_pair_at_analysis_band() {
        // Desk evaluation: x = √(2.4/25), ω/κ = 59/352.9, 4(ω/κ)² = 0.11180.
        let c = lossless();
        let x = (2.4f64 / 25.0).sqrt();
        let s = squeeze_antisqueeze(&c, x, hz_to_angular(59e6)).unwrap();
        assert!((s.squeezed - 0.3218).abs() < 5e-5);
        assert!((s.anti_squeezed - 3.107).abs() < 5e-4);
    }

    #[test]
    fn measured_pair_with_device_losses() {
        let c = device_cavity();
        let chain = LossChain::for_cavity(&c, 0.70, 0.75).unwrap();
        let x = (2.4f64 / 25.0).sqrt();
        let s = measured_spectrum(&c, x, &chain, hz_to_angular(59e6)).unwrap();
        assert!((s.squeezed_db() + 0.70).abs() < 0.01);
        assert!((s.anti_squeezed_db() - 1.66).abs() < 0.01);
    }

    #[test]
    fn loss_limits() {
        let c = device_cavity();
        let none = LossChain::new(0.0, 1.0, 1.0).unwrap();
        let s = measured_spectrum(&c, 0.6, &none, 1e8).unwrap();
        assert_eq!((s.squeezed, s.anti_squeezed), (1.0, 1.0));
        let lossless = measured_spectrum(&c, 0.6, &LossChain::lossless(), 1e8).unwrap();
        assert_eq!(lossless, squeeze_antisqueeze(&c, 0.6, 1e8).unwrap());
        let pump_off = squeeze_antisqueeze(&c, 0.0, 3e8).unwrap();
        assert_eq!((pump_off.squeezed, pump_off.anti_squeezed), (1.0, 1.0));
    }

    #[test]
    fn squeezing_vanishes_toward_threshold() {
        let c = lossless();
        let s = squeeze_antisqueeze(&c, 1.0 - 1e-9, 0.0).unwrap();
        assert!(s.squeezed < 1e-9);
    }

    #[test]
    fn spectrum_curve_shapes() {
        let c = device_cavity();
        let chain = LossChain::for_cavity(&c, 0.70, 0.75).unwrap();
        let x = (2.4f64 / 25.0).sqrt();
        let grid: Vec<f64> = (0..=80).map(|k| 60e6 + 1e6 * k as f64).collect();
        let (sq, anti) = spectrum_curve(&c, x, &chain, &grid).unwrap();
        assert_eq!(sq.len(), 81);
        let first = 1.0 - sq.values()[0];
        let last = 1.0 - sq.values()[80];
        assert!(first > last);
        assert!(anti.values()[0] > anti.values()[80]);
        let (one, _) = spectrum_curve(&c, x, &chain, &[59e6]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(spectrum_curve(&c, x, &chain, &[]).is_err());
    }

    #[test]
    fn broad_cavity_flattens_spectrum() {
        let wide = CavityParams::lossless(nm(1544.4), 1e15).unwrap();
        let a = squeeze_antisqueeze(&wide, 0.4, hz_to_angular(60e6)).unwrap();
        let b = squeeze_antisqueeze(&wide, 0.4, hz_to_angular(140e6)).unwrap();
        assert!((a.squeezed - b.squeezed).abs() < 1e-9);
    }

    #[test]
    fn ratio_inversion_matches_improved_projection() {
        let c = CavityParams::lossless(nm(1544.4), 1e9).unwrap();
        let x = ratio_for_squeezing(&c, 0.98, 0.0, from_db(-16.0)).unwrap();
        let s = apply_efficiency(0.98, squeeze_antisqueeze(&c, x, 0.0).unwrap());
        assert!((s.squeezed_db() + 16.0).abs() < 1e-9);
        assert!((s.anti_squeezed_db() - 22.73).abs() < 0.01);
        assert!(ratio_for_squeezing(&c, 0.5, 0.0, from_db(-16.0)).is_none());
    }

    proptest! {
        #[test]
        fn symplectic_identity(x in 0.0f64..0.99, w in 0.0f64..10.0, phase in -PI..PI) {
            let c = lossless();
            let p = PumpState::from_ratio(&c, x, phase).unwrap();
            let t = output_transfer(&c, &p, w * c.total_rate()).unwrap();
            prop_assert!((t.symplectic_form() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn minimum_uncertainty_product(x in 0.0f64..0.99, w in 0.0f64..10.0) {
            let c = lossless();
            let s = squeeze_antisqueeze(&c, x, w * c.total_rate()).unwrap();
            prop_assert!((s.product() - 1.0).abs() < 1e-10);
            prop_assert!(s.squeezed > 0.0 && s.squeezed <= 1.0 && s.anti_squeezed >= 1.0);
        }

        #[test]
        fn lossy_product_bound(x in 0.0f64..0.99, w in 0.0f64..5.0, eta in 0.0f64..=1.0) {
            let c = lossless();
            let ideal = squeeze_antisqueeze(&c, x, w * c.total_rate()).unwrap();
            let lossy = apply_efficiency(eta, ideal);
            let expected = 1.0 + eta * (1.0 - eta) * (ideal.anti_squeezed - 1.0) * (1.0 - ideal.squeezed);
            prop_assert!((lossy.product() - expected).abs() < 1e-10 * expected);
            prop_assert!(lossy.product() >= 1.0 - 1e-12);
        }

        #[test]
        fn phase_extrema_match_closed_form(x in 0.0f64..0.95, w in 0.0f64..5.0, phase in -PI..PI) {
            let c = lossless();
            let p = PumpState::from_ratio(&c, x, phase).unwrap();
            let omega = w * c.total_rate();
            let pair = squeeze_antisqueeze(&c, x, omega).unwrap();
            let hi = quadrature_spectrum(&c, &p, extremal_phase(&p, true), omega).unwrap();
            let lo = quadrature_spectrum(&c, &p, extremal_phase(&p, false), omega).unwrap();
            prop_assert!(((hi - pair.anti_squeezed) / pair.anti_squeezed).abs() < 1e-10);
            prop_assert!(((lo - pair.squeezed) / pair.squeezed).abs() < 1e-10);
        }

        #[test]
        fn transfer_route_agrees_with_closed_form(x in 0.0f64..0.95, w in -5.0f64..5.0, phase in -PI..PI, phi in -PI..PI) {
            let c = lossless();
            let p = PumpState::from_ratio(&c, x, phase).unwrap();
            let omega = w * c.total_rate();
            let a = quadrature_spectrum(&c, &p, phi, omega).unwrap();
            let b = quadrature_spectrum_from_transfer(&c, &p, phi, omega).unwrap();
            prop_assert!(((a - b) / a).abs() < 1e-10);
        }

        #[test]
        fn measured_monotone_in_ratio(x in 0.0f64..0.9, dx in 1e-3f64..0.09, w in 0.0f64..3.0, eta in 0.05f64..=1.0) {
            let c = lossless();
            let omega = w * c.total_rate();
            let a = apply_efficiency(eta, squeeze_antisqueeze(&c, x, omega).unwrap());
            let b = apply_efficiency(eta, squeeze_antisqueeze(&c, x + dx, omega).unwrap());
            prop_assert!(b.anti_squeezed > a.anti_squeezed);
            prop_assert!(b.squeezed < a.squeezed);
        }
    }
}
