//! Least-squares fitters for resonance, SHG, shot-noise, squeezing and
//! coupling-phase data.
//!
//! Nonlinear models go through a damped Gauss–Newton (Levenberg–Marquardt)
//! solver in [`lm`]; models linear in their parameters are solved in closed
//! form. Covariances are `s²(JᵀWJ)⁻¹` with `s² = χ²/(n − p)`.

mod coupling;
mod linear;
mod lm;
mod lorentzian;
mod squeezing_fit;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

pub use coupling::{coupling_diagnostic, CouplingDiagnosis, CouplingRegime};
pub use linear::{fit_linear, fit_shg_quadratic};
pub use lm::MAX_ITERATIONS;
pub use lorentzian::{fit_lorentzian, lorentzian, LorentzianOptions};
pub use squeezing_fit::{
    fit_squeezing_model, squeezing_data_from_traces, squeezing_model, KappaMode, Quadrature, SqueezingDatum,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// 1σ from the covariance diagonal.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: String,
    pub params: Vec<FitParam>,
    pub covariance: Vec<Vec<f64>>,
    /// √(Σ wᵢ rᵢ²).
    pub residual_norm: f64,
    pub r_squared: f64,
    /// ‖Jᵀ W r‖ at the solution.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub points: usize,
    pub derived: BTreeMap<String, f64>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.sigma)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("FitResult serialises")
    }
}

/// Assemble a result from a weighted design at the solution.
///
/// `residuals` are already weighted; `y` and `weights` give the weighted
/// coefficient of determination.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    model: &str,
    names: &[&str],
    values: &[f64],
    jacobian: &DMatrix<f64>,
    residuals: &[f64],
    y: &[f64],
    weights: &[f64],
    iterations: usize,
    converged: bool,
) -> FitResult {
    let n = residuals.len();
    let p = values.len();
    let chi2: f64 = residuals.iter().map(|r| r * r).sum();
    let s2 = if n > p { chi2 / (n - p) as f64 } else { 0.0 };
    let jtj = jacobian.transpose() * jacobian;
    let inv = jtj
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| jtj.pseudo_inverse(1e-14).unwrap_or_else(|_| DMatrix::zeros(p, p)));
    let cov = inv * s2;
    let covariance: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| cov[(i, j)]).collect()).collect();
    let params = names
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (name, &value))| FitParam {
            name: (*name).to_string(),
            value,
            sigma: cov[(i, i)].max(0.0).sqrt(),
        })
        .collect();
    let r = nalgebra::DVector::from_column_slice(residuals);
    let gradient_norm = (jacobian.transpose() * r).norm();
    FitResult {
        model: model.to_string(),
        params,
        covariance,
        residual_norm: chi2.sqrt(),
        r_squared: r_squared(y, weights, chi2),
        gradient_norm,
        converged,
        iterations,
        points: n,
        derived: BTreeMap::new(),
    }
}

/// 1 − χ²/SST with SST the weighted spread about the weighted mean.
pub(crate) fn r_squared(y: &[f64], weights: &[f64], chi2: f64) -> f64 {
    let w2: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let wsum: f64 = w2.iter().sum();
    let mean = y.iter().zip(&w2).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let sst: f64 = y.iter().zip(&w2).map(|(y, w)| w * (y - mean).powi(2)).sum();
    if sst > 0.0 {
        1.0 - chi2 / sst
    } else if chi2 == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Indices that sort `x` ascending.
pub(crate) fn sort_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    idx
}

pub(crate) fn check_finite(name: &str, v: &[f64]) -> crate::Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::Domain(format!("{name} contains non-finite values")))
    }
}
