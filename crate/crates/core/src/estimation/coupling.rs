use std::f64::consts::PI;

use serde::Serialize;

use super::lm::{minimize, numeric_jacobian, Bounds};
use super::{assemble, check_finite, sort_order, FitResult};
use crate::cavity::unwrap_phase;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRegime {
    Undercoupled,
    Overcoupled,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingDiagnosis {
    pub regime: CouplingRegime,
    /// 1 − rss_best/rss_other, in [0, 1].
    pub confidence: f64,
    /// Max − min of the unwrapped measured phase (rad).
    pub phase_excursion: f64,
    pub undercoupled_fit: FitResult,
    pub overcoupled_fit: FitResult,
}

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// arg(1 − r/(1/2 + i(Δ − Δ₀)/κ)) + φ₀: the cold-cavity amplitude phase with
/// r = κ_e/κ.
fn model_phase(d: f64, r: f64, kappa: f64, d0: f64, phi0: f64) -> f64 {
    let u = (d - d0) / kappa;
    // (1/2 − r + iu)/(1/2 + iu)
    (u.atan2(0.5 - r) - u.atan2(0.5)) + phi0
}

fn fit_branch(d: &[f64], phase: &[f64], lo: f64, hi: f64, grid: &[(f64, f64)]) -> FitResult {
    let resid = |p: &[f64]| -> Vec<f64> {
        d.iter()
            .zip(phase)
            .map(|(&di, &ph)| wrap(ph - model_phase(di, p[0], p[1], p[2], p[3])))
            .collect()
    };
    let offset = |r: f64, k: f64, d0: f64| -> f64 {
        let (s, c) = d.iter().zip(phase).fold((0.0, 0.0), |(s, c), (&di, &ph)| {
            let e = ph - model_phase(di, r, k, d0, 0.0);
            (s + e.sin(), c + e.cos())
        });
        s.atan2(c)
    };
    let mut best = (f64::INFINITY, vec![0.0; 4]);
    for i in 0..=16 {
        let r = lo + (hi - lo) * i as f64 / 16.0;
        for &(k, d0) in grid {
            let phi0 = offset(r, k, d0);
            let p = vec![r, k, d0, phi0];
            let c: f64 = resid(&p).iter().map(|v| v * v).sum();
            if c < best.0 {
                best = (c, p);
            }
        }
    }
    let k0 = best.1[1];
    let bounds = Bounds {
        lower: vec![lo, k0 * 1e-3, f64::NEG_INFINITY, f64::NEG_INFINITY],
        upper: vec![hi, k0 * 1e3, f64::INFINITY, f64::INFINITY],
        typical: vec![1e-2, k0, k0, 1e-2],
    };
    let scale: f64 = phase.iter().map(|v| v * v).sum::<f64>().max(d.len() as f64);
    let out = minimize(&resid, |p: &[f64]| numeric_jacobian(&resid, p, &bounds), &best.1, &bounds, scale);
    let w = vec![1.0; d.len()];
    assemble(
        "coupling_phase",
        &["rho", "kappa", "center", "phase_offset"],
        &out.params,
        &out.jacobian,
        &out.residuals,
        phase,
        &w,
        out.iterations,
        out.converged,
    )
}

/// Decide the coupling regime from the transmitted-amplitude phase across a
/// resonance.
///
/// The phase model is fitted on both branches, κ_e/κ ≤ 1/2 and ≥ 1/2. The
/// branch with the lower residual wins; residuals within 1% of each other,
/// or a winning κ_e/κ within 1% of 1/2, report `Critical`. Detuning units
/// are arbitrary; the fitted `kappa` and `center` share them.
pub fn coupling_diagnostic(detunings: &[f64], phase: &[f64]) -> Result<CouplingDiagnosis> {
    if detunings.len() != phase.len() {
        return Err(Error::InconsistentData("detuning and phase arrays differ in length".into()));
    }
    if detunings.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} phase points; at least 8 are required",
            detunings.len()
        )));
    }
    check_finite("detuning", detunings)?;
    check_finite("phase", phase)?;
    let order = sort_order(detunings);
    let d: Vec<f64> = order.iter().map(|&i| detunings[i]).collect();
    let ph: Vec<f64> = order.iter().map(|&i| phase[i]).collect();
    let span = d[d.len() - 1] - d[0];
    if !(span > 0.0) {
        return Err(Error::InsufficientData("detunings do not span an interval".into()));
    }
    let unwrapped = unwrap_phase(&ph);
    let excursion = unwrapped.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - unwrapped.iter().copied().fold(f64::INFINITY, f64::min);

    // Starting centre: steepest phase change; widths on a log grid.
    let steep = (1..d.len())
        .max_by(|&a, &b| {
            let sa = ((unwrapped[a] - unwrapped[a - 1]) / (d[a] - d[a - 1]).max(f64::MIN_POSITIVE)).abs();
            let sb = ((unwrapped[b] - unwrapped[b - 1]) / (d[b] - d[b - 1]).max(f64::MIN_POSITIVE)).abs();
            sa.total_cmp(&sb)
        })
        .unwrap_or(d.len() / 2);
    let c0 = 0.5 * (d[steep] + d[steep - 1]);
    let mut grid = Vec::new();
    for j in 0..24 {
        let k = span * 1e-3 * (2e3f64).powf(j as f64 / 23.0);
        for s in [-0.2, 0.0, 0.2] {
            grid.push((k, c0 + s * k));
        }
    }
    let under = fit_branch(&d, &ph, 0.0, 0.5, &grid);
    let over = fit_branch(&d, &ph, 0.5, 1.0, &grid);
    let (ru, ro) = (under.residual_norm.powi(2), over.residual_norm.powi(2));
    let (best_rss, other_rss, best) = if ru <= ro { (ru, ro, &under) } else { (ro, ru, &over) };
    let rho = best.value("rho").unwrap_or(0.5);
    let confidence = if other_rss > 0.0 { (1.0 - best_rss / other_rss).clamp(0.0, 1.0) } else { 0.0 };
    let regime = if other_rss - best_rss <= 0.01 * other_rss || (rho - 0.5).abs() <= 0.005 {
        CouplingRegime::Critical
    } else if ru <= ro {
        CouplingRegime::Undercoupled
    } else {
        CouplingRegime::Overcoupled
    };
    Ok(CouplingDiagnosis {
        regime,
        confidence,
        phase_excursion: excursion,
        undercoupled_fit: under,
        overcoupled_fit: over,
    })
}
