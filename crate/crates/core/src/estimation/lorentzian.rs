use nalgebra::DMatrix;

use super::lm::{minimize, Bounds};
use super::{assemble, check_finite, sort_order, FitResult};
use crate::cavity::q_from_linewidth;
use crate::error::{Error, Result};
use crate::model::Coupling;
use crate::units::SPEED_OF_LIGHT;

/// b − d / (1 + ((f − f0)/(γ/2))²).
pub fn lorentzian(f: f64, center: f64, fwhm: f64, depth: f64, baseline: f64) -> f64 {
    let u = 2.0 * (f - center) / fwhm;
    baseline - depth / (1.0 + u * u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianOptions {
    /// Optical frequency (Hz) the abscissa is measured from. With it the
    /// fit reports Q values; `None` leaves them out.
    pub carrier_hz: Option<f64>,
    /// Coupling branch used to turn the dip depth into κ_e/κ.
    pub coupling: Coupling,
}

impl Default for LorentzianOptions {
    fn default() -> Self {
        Self {
            carrier_hz: None,
            coupling: Coupling::Undercoupled,
        }
    }
}

fn initial_guess(f: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    let n = f.len();
    let edge = (n / 10).max(1);
    let baseline = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>()) / (2 * edge) as f64;
    let (k, dev) = y
        .iter()
        .map(|v| v - baseline)
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty");
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if dev.abs() <= 1e-9 * scale {
        return Err(Error::NoConvergence {
            iterations: 0,
            reason: "trace is flat: no resonance feature to fit".into(),
        });
    }
    let half = dev.abs() / 2.0;
    let left = (0..k).rev().find(|&i| (y[i] - baseline).abs() < half);
    let right = (k + 1..n).find(|&i| (y[i] - baseline).abs() < half);
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => f[r] - f[l],
        (Some(l), None) => 2.0 * (f[k] - f[l]),
        (None, Some(r)) => 2.0 * (f[r] - f[k]),
        (None, None) => {
            return Err(Error::NoConvergence {
                iterations: 0,
                reason: "half-depth crossings not found in the window".into(),
            })
        }
    };
    Ok([f[k], fwhm.max(f64::MIN_POSITIVE), -dev, baseline])
}

/// Fit a single Lorentzian resonance (dip or peak).
///
/// Parameters: `center`, `fwhm`, `depth`, `baseline` in the units of the
/// input. With a carrier frequency the derived block carries `q_tot`,
/// `q_int`, `rho` (κ_e/κ under the chosen coupling branch) and the
/// linewidth in wavelength.
pub fn fit_lorentzian(freqs: &[f64], values: &[f64], opts: LorentzianOptions) -> Result<FitResult> {
    if freqs.len() != values.len() {
        return Err(Error::InconsistentData(format!(
            "{} abscissae for {} values",
            freqs.len(),
            values.len()
        )));
    }
    if freqs.len() < 5 {
        return Err(Error::InsufficientData(format!("{} points; a Lorentzian needs ≥ 5", freqs.len())));
    }
    check_finite("frequencies", freqs)?;
    check_finite("values", values)?;
    let order = sort_order(freqs);
    let f: Vec<f64> = order.iter().map(|&i| freqs[i]).collect();
    let y: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let p0 = initial_guess(&f, &y)?;
    let span = f[f.len() - 1] - f[0];

    let resid = |p: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(&y)
            .map(|(&fi, &yi)| yi - lorentzian(fi, p[0], p[1], p[2], p[3]))
            .collect()
    };
    // Jacobian of the residual (data − model).
    let jac = |p: &[f64]| -> DMatrix<f64> {
        let (c, g, d) = (p[0], p[1], p[2]);
        DMatrix::from_fn(f.len(), 4, |i, j| {
            let u = 2.0 * (f[i] - c) / g;
            let l = 1.0 / (1.0 + u * u);
            match j {
                0 => d * l * l * 2.0 * u * 2.0 / g,
                1 => d * l * l * 2.0 * u * u / g,
                2 => l,
                _ => -1.0,
            }
        })
    };
    let bounds = Bounds {
        lower: vec![f64::NEG_INFINITY, span * 1e-9, f64::NEG_INFINITY, f64::NEG_INFINITY],
        upper: vec![f64::INFINITY; 4],
        typical: vec![p0[1], p0[1], p0[2].abs(), p0[3].abs()],
    };
    let out = minimize(&resid, &jac, &p0, &bounds, y.iter().map(|v| v * v).sum());
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            reason: format!(
                "{} (best so far: center {:e}, fwhm {:e}, depth {:e}, baseline {:e})",
                out.reason, out.params[0], out.params[1], out.params[2], out.params[3]
            ),
        });
    }
    let w = vec![1.0; y.len()];
    let mut fit = assemble(
        "lorentzian",
        &["center", "fwhm", "depth", "baseline"],
        &out.params,
        &out.jacobian,
        &out.residuals,
        &y,
        &w,
        out.iterations,
        true,
    );
    let (center, fwhm, depth, baseline) = (out.params[0], out.params[1].abs(), out.params[2], out.params[3]);
    if let Some(nu) = opts.carrier_hz {
        let nu0 = nu + center;
        let lambda0 = SPEED_OF_LIGHT / nu0;
        let dlambda = lambda0 * fwhm / nu0;
        let (q_tot, _) = q_from_linewidth(lambda0, dlambda)?;
        fit.derived.insert("q_tot".into(), q_tot);
        fit.derived.insert("linewidth_pm".into(), dlambda * 1e12);
        let t_min = (baseline - depth) / baseline;
        if depth > 0.0 && (0.0..=1.0).contains(&t_min) {
            let s = t_min.sqrt();
            let rho = match opts.coupling {
                Coupling::Undercoupled => (1.0 - s) / 2.0,
                Coupling::Overcoupled => (1.0 + s) / 2.0,
            };
            fit.derived.insert("rho".into(), rho);
            fit.derived.insert("q_int".into(), q_tot / (1.0 - rho));
            fit.derived.insert("q_ext".into(), q_tot / rho);
        }
    }
    Ok(fit)
}
