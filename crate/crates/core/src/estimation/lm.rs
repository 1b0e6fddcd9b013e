use nalgebra::{DMatrix, DVector};

pub const MAX_ITERATIONS: usize = 200;
const TOL: f64 = 1e-10;

pub(crate) struct Outcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reason: String,
}

pub(crate) struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Typical magnitude of each parameter; sets the finite-difference step
    /// when the current value is near zero.
    pub typical: Vec<f64>,
}

impl Bounds {
    #[cfg(test)]
    pub fn free(p: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; p],
            upper: vec![f64::INFINITY; p],
            typical: vec![1.0; p],
        }
    }

    fn project(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Central-difference Jacobian of `f` at `p`.
pub(crate) fn numeric_jacobian<F>(f: &F, p: &[f64], bounds: &Bounds) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let r0 = f(p);
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(bounds.typical[j]);
        let up = (p[j] + h).min(bounds.upper[j]);
        let dn = (p[j] - h).max(bounds.lower[j]);
        if up <= dn {
            continue;
        }
        q[j] = up;
        let a = f(&q);
        q[j] = dn;
        let b = f(&q);
        q[j] = p[j];
        for i in 0..r0.len() {
            jac[(i, j)] = (a[i] - b[i]) / (up - dn);
        }
    }
    jac
}

/// Largest |cos| between the residual and a Jacobian column. Invariant to
/// parameter scaling, so it works for columns of very different magnitude.
fn scaled_gradient(jm: &DMatrix<f64>, grad: &DVector<f64>, c: f64) -> f64 {
    let rn = c.sqrt();
    (0..jm.ncols())
        .map(|j| {
            let cn = jm.column(j).norm();
            if cn == 0.0 || rn == 0.0 {
                0.0
            } else {
                grad[j].abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimise ‖f(p)‖² from `p0` within box bounds.
///
/// Converges when the relative step and the relative cost change are both
/// below 1e-10, when the residual vanishes to rounding relative to
/// `data_scale` (Σ of squared weighted observations), or when the gradient
/// columns are orthogonal to the residual to 1e-9 (a stationary point the damping
/// cannot improve on).
pub(crate) fn minimize<F, J>(f: F, jac: J, p0: &[f64], bounds: &Bounds, data_scale: f64) -> Outcome
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut p = p0.to_vec();
    bounds.project(&mut p);
    let mut r = f(&p);
    let mut c = cost(&r);
    let mut jm = jac(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut reason = String::from("iteration limit reached");
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if !c.is_finite() {
            reason = "non-finite residual".into();
            break;
        }
        if c <= 1e-28 * data_scale || c == 0.0 {
            converged = true;
            reason = "residual vanished".into();
            break;
        }
        let jt = jm.transpose();
        let jtj = &jt * &jm;
        let rv = DVector::from_column_slice(&r);
        let mut grad = &jt * &rv;
        // Variables pinned at a bound with the descent direction pointing
        // outward are frozen for this iteration.
        let active: Vec<bool> = (0..p.len())
            .map(|j| (p[j] <= bounds.lower[j] && grad[j] > 0.0) || (p[j] >= bounds.upper[j] && grad[j] < 0.0))
            .collect();
        for (j, &a) in active.iter().enumerate() {
            if a {
                grad[j] = 0.0;
            }
        }
        let gcos = scaled_gradient(&jm, &grad, c);
        if gcos <= 1e-9 {
            converged = true;
            reason = "stationary point".into();
            break;
        }
        let dmax = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        let mut improved = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for i in 0..p.len() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * dmax);
                if active[i] {
                    for k in 0..p.len() {
                        a[(i, k)] = 0.0;
                        a[(k, i)] = 0.0;
                    }
                    a[(i, i)] = 1.0;
                }
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            bounds.project(&mut trial);
            let rt = f(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let dp: f64 = trial.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let pn: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_step = dp / pn.max(f64::MIN_POSITIVE);
                let rel_cost = (c - ct) / c;
                p = trial;
                r = rt;
                c = ct;
                jm = jac(&p);
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                if rel_step < TOL && rel_cost < TOL {
                    converged = true;
                    reason = "relative step and cost change below tolerance".into();
                }
                break;
            }
            lambda *= 2.0;
        }
        if converged {
            break;
        }
        if !improved {
            // No descent at any damping: a minimum to rounding precision if
            // the gradient is already small compared with the residual.
            converged = gcos <= 1e-6;
            reason = if converged {
                "no further descent at rounding precision".into()
            } else {
                "damping exhausted without descent".into()
            };
            break;
        }
    }
    Outcome {
        params: p,
        residuals: r,
        jacobian: jm,
        iterations,
        converged,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_as_least_squares() {
        let f = |p: &[f64]| vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]];
        let b = Bounds::free(2);
        let out = minimize(f, |p| numeric_jacobian(&f, p, &Bounds::free(2)), &[-1.2, 1.0], &b, 1.0);
        assert!(out.converged, "{}", out.reason);
        assert!((out.params[0] - 1.0).abs() < 1e-8);
        assert!((out.params[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bounds_are_respected() {
        // Unconstrained minimum at p = −1.
        let f = |p: &[f64]| vec![p[0] + 1.0];
        let b = Bounds {
            lower: vec![0.0],
            upper: vec![1.0],
            typical: vec![1.0],
        };
        let out = minimize(f, |p| numeric_jacobian(&f, p, &Bounds::free(1)), &[0.5], &b, 1.0);
        assert_eq!(out.params[0], 0.0);
        assert!(out.converged);
    }
}
