use nalgebra::DMatrix;

use super::{assemble, check_finite, FitResult};
use crate::error::{Error, Result};

/// Ordinary least squares `y = slope·x (+ intercept)`, solved in closed form.
pub fn fit_linear(x: &[f64], y: &[f64], through_origin: bool) -> Result<FitResult> {
    let (names, cols): (&[&str], usize) = if through_origin {
        (&["slope"], 1)
    } else {
        (&["slope", "intercept"], 2)
    };
    fit_design(if through_origin { "linear_origin" } else { "linear" }, names, cols, x, y, |xi, j| {
        if j == 0 {
            xi
        } else {
            1.0
        }
    })
}

/// `P_SH = η·P_FH²` without linear or constant term. Reports `eta_norm`
/// in 1/W.
pub fn fit_shg_quadratic(p_fh: &[f64], p_sh: &[f64]) -> Result<FitResult> {
    if p_fh.iter().chain(p_sh).any(|&v| v < 0.0) {
        return Err(Error::Domain("SHG powers must be non-negative".into()));
    }
    if p_fh.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} points; the SHG fit needs ≥ 3",
            p_fh.len()
        )));
    }
    let mut fit = fit_design("shg_quadratic", &["eta_norm"], 1, p_fh, p_sh, |p, _| p * p)?;
    if let Some(eta) = fit.value("eta_norm") {
        fit.derived.insert("eta_norm_percent_per_w".into(), 100.0 * eta);
    }
    Ok(fit)
}

fn fit_design<F>(model: &str, names: &[&str], cols: usize, x: &[f64], y: &[f64], basis: F) -> Result<FitResult>
where
    F: Fn(f64, usize) -> f64,
{
    if x.len() != y.len() {
        return Err(Error::InconsistentData(format!("{} x values for {} y values", x.len(), y.len())));
    }
    if x.len() < cols.max(2) {
        return Err(Error::InsufficientData(format!("{} points for a {cols}-parameter line", x.len())));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let a = DMatrix::from_fn(x.len(), cols, |i, j| basis(x[i], j));
    let degenerate = if cols == 2 {
        x.iter().all(|&v| v == x[0])
    } else {
        a.column(0).iter().all(|&v| v == 0.0)
    };
    if degenerate {
        return Err(Error::Rank(format!("{model}: abscissae do not span the design")));
    }
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Rank(format!("{model}: {e}")))?;
    let fitted = &a * &coef;
    let residuals: Vec<f64> = b.iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    // Jacobian of (data − model) is −A; the sign does not affect JᵀJ.
    let values: Vec<f64> = coef.iter().copied().collect();
    let w = vec![1.0; y.len()];
    Ok(assemble(model, names, &values, &(-a), &residuals, y, &w, 1, true))
}
