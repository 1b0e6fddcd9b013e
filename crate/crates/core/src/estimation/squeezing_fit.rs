use serde::{Deserialize, Serialize};

use super::lm::{minimize, numeric_jacobian, Bounds};
use super::{assemble, FitResult};
use crate::error::{Error, Result};
use crate::model::{SpectrumTrace, SpectrumUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Squeezed,
    AntiSqueezed,
}

impl std::str::FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squeezed" | "minus" | "-" => Ok(Self::Squeezed),
            "anti_squeezed" | "antisqueezed" | "plus" | "+" => Ok(Self::AntiSqueezed),
            other => Err(Error::InconsistentData(format!("unknown quadrature label '{other}'"))),
        }
    }
}

/// One shot-normalised (linear) spectrum value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingDatum {
    pub freq_hz: f64,
    pub quadrature: Quadrature,
    pub value: f64,
    /// 1σ uncertainty; used for inverse-variance weights when every datum
    /// has one.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaMode {
    /// Total linewidth κ/2π (Hz) held fixed.
    Fixed(f64),
    /// Linewidth fitted, starting from the given value (Hz).
    Free(f64),
}

/// S∓ = 1 ∓ η·4x/((1 ± x)² + 4f²/κ²) with κ as a linewidth in Hz.
pub fn squeezing_model(quadrature: Quadrature, freq_hz: f64, x: f64, eta: f64, kappa_hz: f64) -> f64 {
    let w = freq_hz / kappa_hz;
    let q = 4.0 * w * w;
    match quadrature {
        Quadrature::Squeezed => 1.0 - eta * 4.0 * x / ((1.0 + x).powi(2) + q),
        Quadrature::AntiSqueezed => 1.0 + eta * 4.0 * x / ((1.0 - x).powi(2) + q),
    }
}

/// Flatten labelled spectrum traces into fit data.
///
/// Each trace needs a `quadrature` metadata entry. When it also records a
/// Welch `segments` count, each bin gets σ = S/√segments.
pub fn squeezing_data_from_traces(traces: &[SpectrumTrace]) -> Result<Vec<SqueezingDatum>> {
    let mut out = Vec::new();
    for t in traces {
        let quad: Quadrature = t
            .metadata
            .get("quadrature")
            .ok_or_else(|| Error::InconsistentData("trace lacks a 'quadrature' label".into()))?
            .parse()?;
        let linear = match t.unit() {
            SpectrumUnit::ShotNormalizedLinear => t.clone(),
            SpectrumUnit::ShotNormalizedDb => t.to_linear()?,
            SpectrumUnit::RawPsd => {
                return Err(Error::InconsistentData(
                    "squeezing fits need shot-normalised spectra".into(),
                ))
            }
        };
        let segments: Option<f64> = t.metadata.get("segments").and_then(|s| s.parse().ok());
        for (&f, &v) in linear.freqs().iter().zip(linear.values()) {
            out.push(SqueezingDatum {
                freq_hz: f,
                quadrature: quad,
                value: v,
                sigma: segments.map(|k| v / k.sqrt()),
            });
        }
    }
    Ok(out)
}

/// Closed-form inversion of the two band extrema at their mean frequency.
fn initial_guess(data: &[SqueezingDatum], kappa_hz: f64) -> (f64, f64) {
    let mean = |q: Quadrature| {
        let sel: Vec<&SqueezingDatum> = data.iter().filter(|d| d.quadrature == q).collect();
        let n = sel.len() as f64;
        (
            sel.iter().map(|d| d.value).sum::<f64>() / n,
            sel.iter().map(|d| d.freq_hz).sum::<f64>() / n,
        )
    };
    let (s_minus, f_minus) = mean(Quadrature::Squeezed);
    let (s_plus, f_plus) = mean(Quadrature::AntiSqueezed);
    let w = 0.5 * (f_minus + f_plus) / kappa_hz;
    let q = 4.0 * w * w;
    let (up, down) = (s_plus - 1.0, 1.0 - s_minus);
    if !(up > 0.0 && down > 0.0) {
        return (1e-3, 0.5);
    }
    let r = up / down;
    if r <= 1.0 + 1e-12 {
        return (1e-3, 0.5);
    }
    let disc = ((r + 1.0).powi(2) - (r - 1.0).powi(2) * (1.0 + q)).max(0.0);
    let x = ((r + 1.0 - disc.sqrt()) / (r - 1.0)).clamp(1e-6, 0.999);
    let eta = (up * ((1.0 - x).powi(2) + q) / (4.0 * x)).clamp(1e-6, 1.0);
    (x, eta)
}

/// Weighted least squares of the closed-form spectra over `data`.
///
/// Parameters `x` ∈ [0, 1) and `eta_tot` ∈ [0, 1], plus `kappa_hz` when free.
pub fn fit_squeezing_model(data: &[SqueezingDatum], kappa: KappaMode) -> Result<FitResult> {
    let has = |q: Quadrature| data.iter().any(|d| d.quadrature == q);
    if !has(Quadrature::Squeezed) || !has(Quadrature::AntiSqueezed) {
        return Err(Error::Underdetermined(
            "both squeezed and anti-squeezed data are required".into(),
        ));
    }
    for d in data {
        if !(d.value.is_finite() && d.value > 0.0 && d.freq_hz.is_finite() && d.freq_hz >= 0.0) {
            return Err(Error::Domain(format!("invalid datum {d:?}")));
        }
    }
    let (kappa0, free) = match kappa {
        KappaMode::Fixed(k) => (k, false),
        KappaMode::Free(k) => (k, true),
    };
    if !(kappa0 > 0.0 && kappa0.is_finite()) {
        return Err(Error::Domain(format!("linewidth {kappa0} Hz must be > 0")));
    }
    if free {
        let mut fs: Vec<f64> = data.iter().map(|d| d.freq_hz).collect();
        fs.sort_by(f64::total_cmp);
        fs.dedup();
        if fs.len() < 2 {
            return Err(Error::Underdetermined(
                "a free linewidth needs data at two or more frequencies".into(),
            ));
        }
    } else {
        // Reachable region for x < 1, η ≤ 1.
        for d in data {
            let w = d.freq_hz / kappa0;
            let q = 4.0 * w * w;
            let (lo, hi) = (1.0 - 4.0 / (4.0 + q), if q > 0.0 { 1.0 + 4.0 / q } else { f64::INFINITY });
            let bad = match d.quadrature {
                Quadrature::Squeezed => d.value < lo,
                Quadrature::AntiSqueezed => d.value > hi,
            };
            if bad {
                return Err(Error::Infeasible(format!(
                    "{:?} value {} at {} Hz lies outside [{lo}, {hi}] reachable below threshold",
                    d.quadrature, d.value, d.freq_hz
                )));
            }
        }
    }
    let weights: Vec<f64> = if data.iter().all(|d| d.sigma.is_some_and(|s| s > 0.0)) {
        data.iter().map(|d| 1.0 / d.sigma.unwrap()).collect()
    } else {
        vec![1.0; data.len()]
    };
    let (x0, eta0) = initial_guess(data, kappa0);
    let resid = |p: &[f64]| -> Vec<f64> {
        let k = if free { p[2] } else { kappa0 };
        data.iter()
            .zip(&weights)
            .map(|(d, w)| w * (d.value - squeezing_model(d.quadrature, d.freq_hz, p[0], p[1], k)))
            .collect()
    };
    let (p0, bounds, names): (Vec<f64>, Bounds, &[&str]) = if free {
        (
            vec![x0, eta0, kappa0],
            Bounds {
                lower: vec![0.0, 0.0, kappa0 * 1e-3],
                upper: vec![1.0 - 1e-9, 1.0, kappa0 * 1e3],
                typical: vec![1e-2, 1e-2, kappa0],
            },
            &["x", "eta_tot", "kappa_hz"],
        )
    } else {
        (
            vec![x0, eta0],
            Bounds {
                lower: vec![0.0, 0.0],
                upper: vec![1.0 - 1e-9, 1.0],
                typical: vec![1e-2, 1e-2],
            },
            &["x", "eta_tot"],
        )
    };
    let scale: f64 = data.iter().zip(&weights).map(|(d, w)| (w * d.value).powi(2)).sum();
    let out = minimize(&resid, |p: &[f64]| numeric_jacobian(&resid, p, &bounds), &p0, &bounds, scale);
    let y: Vec<f64> = data.iter().map(|d| d.value).collect();
    let mut fit = assemble(
        "squeezing",
        names,
        &out.params,
        &out.jacobian,
        &out.residuals,
        &y,
        &weights,
        out.iterations,
        out.converged,
    );
    if !free {
        fit.derived.insert("kappa_hz".into(), kappa0);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(x: f64, eta: f64, kappa: f64) -> Vec<SqueezingDatum> {
        let mut d = Vec::new();
        for k in 0..9 {
            let f = 60e6 + 10e6 * k as f64;
            for q in [Quadrature::Squeezed, Quadrature::AntiSqueezed] {
                d.push(SqueezingDatum {
                    freq_hz: f,
                    quadrature: q,
                    value: squeezing_model(q, f, x, eta, kappa),
                    sigma: None,
                });
            }
        }
        d
    }

    #[test]
    fn exact_data_recovered() {
        let fit = fit_squeezing_model(&synth(0.3098, 0.2211, 352.9e6), KappaMode::Fixed(352.9e6)).unwrap();
        assert!(fit.converged);
        assert!((fit.value("x").unwrap() / 0.3098 - 1.0).abs() < 1e-6);
        assert!((fit.value("eta_tot").unwrap() / 0.2211 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn free_linewidth_recovered() {
        let fit = fit_squeezing_model(&synth(0.6, 0.7, 300e6), KappaMode::Free(250e6)).unwrap();
        assert!((fit.value("kappa_hz").unwrap() / 300e6 - 1.0).abs() < 1e-6);
        assert!((fit.value("x").unwrap() / 0.6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shot_noise_only_gives_zero_ratio() {
        let d: Vec<SqueezingDatum> = synth(0.0, 0.5, 352.9e6);
        let fit = fit_squeezing_model(&d, KappaMode::Fixed(352.9e6)).unwrap();
        assert!(fit.value("x").unwrap() < 1e-6);
    }

    #[test]
    fn identifiability_guards() {
        let one = [SqueezingDatum {
            freq_hz: 59e6,
            quadrature: Quadrature::Squeezed,
            value: 0.9,
            sigma: None,
        }];
        assert!(matches!(fit_squeezing_model(&one, KappaMode::Fixed(3e8)), Err(Error::Underdetermined(_))));
        let mut d = synth(0.3, 0.3, 3e8);
        d[1].value = 1e3;
        assert!(matches!(fit_squeezing_model(&d, KappaMode::Fixed(3e8)), Err(Error::Infeasible(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn self_consistent_over_draws(x in 0.05..0.9f64, eta in 0.05..1.0f64) {
            let fit = fit_squeezing_model(&synth(x, eta, 352.9e6), KappaMode::Fixed(352.9e6)).unwrap();
            prop_assert!((fit.value("x").unwrap() / x - 1.0).abs() < 1e-6);
            prop_assert!((fit.value("eta_tot").unwrap() / eta - 1.0).abs() < 1e-6);
        }
    }
}
