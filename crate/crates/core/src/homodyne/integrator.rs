//! Linear quantum Langevin equation in quadrature form.
//!
//! With ε = 2g|β| and φ = φ_β,
//!
//! ```text
//! dX = [−κ/2·X + ΔY + ε(sinφ·X − cosφ·Y)] dt + √κ_e dW_eX + √κ_i dW_iX
//! dY = [−κ/2·Y − ΔX − ε(cosφ·X + sinφ·Y)] dt + √κ_e dW_eY + √κ_i dW_iY
//! ```
//!
//! so φ_β = π/2 amplifies X and squeezes Y. Each output sample is the
//! boxcar average of X_out = √κ_e·X − X_in over one step, which keeps the
//! sampled record white at shot noise for any step size.

use nalgebra::{Matrix2, Matrix3, Matrix4, SMatrix, SymmetricEigen, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{run_rng, Integrator, QuadratureTrace, SimConfig};
use crate::error::{Error, Result};
use crate::model::{CavityParams, PumpState};

/// Drift matrix M of d(X, Y)ᵀ = M·(X, Y)ᵀ dt + noise.
pub fn drift_matrix(cavity: &CavityParams, pump: &PumpState) -> Matrix2<f64> {
    let half = cavity.total_rate() / 2.0;
    let eps = 2.0 * pump.parametric_rate();
    let (s, c) = pump.pump_phase().sin_cos();
    let d = cavity.detuning();
    Matrix2::new(-half + eps * s, d - eps * c, -d - eps * c, -half - eps * s)
}

/// Smallest decay rate −Re λ of the drift.
fn slowest_rate(m: &Matrix2<f64>) -> f64 {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr / 4.0 - det;
    let re = if disc >= 0.0 { tr / 2.0 + disc.sqrt() } else { tr / 2.0 };
    -re
}

/// Stationary covariance P solving M·P + P·Mᵀ + κ·I = 0.
pub fn stationary_covariance(cavity: &CavityParams, pump: &PumpState) -> Result<Matrix2<f64>> {
    pump.require_sub_threshold()?;
    let m = drift_matrix(cavity, pump);
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let k = cavity.total_rate();
    let lhs = Matrix3::new(2.0 * a, 2.0 * b, 0.0, c, a + d, b, 0.0, 2.0 * c, 2.0 * d);
    let p = lhs
        .lu()
        .solve(&Vector3::new(-k, 0.0, -k))
        .ok_or_else(|| Error::Stability("singular Lyapunov system".into()))?;
    Ok(Matrix2::new(p[0], p[1], p[1], p[2]))
}

/// exp([[M u, I u], [0, 0]]) = [[e^{Mu}, Ψ(u)], [0, I]].
fn propagators(m: &Matrix2<f64>, u: f64) -> (Matrix2<f64>, Matrix2<f64>) {
    let mut aug = Matrix4::zeros();
    aug.fixed_view_mut::<2, 2>(0, 0).copy_from(&(m * u));
    aug[(0, 2)] = u;
    aug[(1, 3)] = u;
    let e = aug.exp();
    (e.fixed_view::<2, 2>(0, 0).into_owned(), e.fixed_view::<2, 2>(0, 2).into_owned())
}

enum Stepper {
    /// Φ, Ψ and a factor L with L·Lᵀ = Cov[I₁, I₂, ΔW_e].
    Exact {
        phi: [f64; 4],
        psi: [f64; 4],
        factor: [[f64; 6]; 6],
    },
    Euler {
        m: [f64; 4],
        sqrt_ke: f64,
        sqrt_ki: f64,
    },
}

/// Streaming integrator for the output quadratures.
pub struct CavitySimulator {
    stepper: Stepper,
    state: [f64; 2],
    dt: f64,
    sqrt_ke: f64,
}

impl CavitySimulator {
    /// Build the one-step propagator and draw the initial state from the
    /// stationary distribution.
    pub fn new<R: Rng>(cavity: &CavityParams, pump: &PumpState, dt: f64, integrator: Integrator, rng: &mut R) -> Result<Self> {
        pump.require_sub_threshold()?;
        if !(dt > 0.0) {
            return Err(Error::Stability(format!("dt = {dt} must be > 0")));
        }
        let m = drift_matrix(cavity, pump);
        let sqrt_ke = cavity.external_rate().sqrt();
        let sqrt_ki = cavity.intrinsic_rate().sqrt();
        let stepper = match integrator {
            Integrator::Exact => exact_stepper(&m, dt, sqrt_ke, sqrt_ki)?,
            Integrator::EulerMaruyama => {
                let spectral = m.symmetric_part().norm() + m.norm();
                if spectral * dt > 0.5 {
                    return Err(Error::Stability(format!("Euler–Maruyama step {dt:e} s is too coarse")));
                }
                Stepper::Euler {
                    m: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
                    sqrt_ke,
                    sqrt_ki,
                }
            }
        };
        let p = stationary_covariance(cavity, pump)?;
        let chol = p
            .cholesky()
            .ok_or_else(|| Error::Stability("stationary covariance is not positive definite".into()))?;
        let z = Vector2::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
        let s0 = chol.l() * z;
        Ok(Self {
            stepper,
            state: [s0[0], s0[1]],
            dt,
            sqrt_ke,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Intracavity state (X, Y).
    pub fn state(&self) -> (f64, f64) {
        (self.state[0], self.state[1])
    }

    /// Advance one step; returns the boxcar-averaged output (X_out, Y_out).
    #[inline]
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> (f64, f64) {
        let [x, y] = self.state;
        match &self.stepper {
            Stepper::Exact { phi, psi, factor } => {
                let mut z = [0.0; 6];
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let mut n = [0.0; 6];
                for (i, row) in factor.iter().enumerate() {
                    n[i] = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                }
                let ix = psi[0] * x + psi[1] * y + n[2];
                let iy = psi[2] * x + psi[3] * y + n[3];
                self.state = [phi[0] * x + phi[1] * y + n[0], phi[2] * x + phi[3] * y + n[1]];
                ((self.sqrt_ke * ix - n[4]) / self.dt, (self.sqrt_ke * iy - n[5]) / self.dt)
            }
            Stepper::Euler { m, sqrt_ke, sqrt_ki } => {
                let sdt = self.dt.sqrt();
                let mut w = [0.0; 4];
                for v in w.iter_mut() {
                    *v = sdt * rng.sample::<f64, _>(StandardNormal);
                }
                let out = (
                    (sqrt_ke * x * self.dt - w[0]) / self.dt,
                    (sqrt_ke * y * self.dt - w[1]) / self.dt,
                );
                self.state = [
                    x + (m[0] * x + m[1] * y) * self.dt + sqrt_ke * w[0] + sqrt_ki * w[2],
                    y + (m[2] * x + m[3] * y) * self.dt + sqrt_ke * w[1] + sqrt_ki * w[3],
                ];
                out
            }
        }
    }
}

fn exact_stepper(m: &Matrix2<f64>, h: f64, sqrt_ke: f64, sqrt_ki: f64) -> Result<Stepper> {
    // B maps (dW_eX, dW_eY, dW_iX, dW_iY) onto the state.
    let mut b = SMatrix::<f64, 2, 4>::zeros();
    b[(0, 0)] = sqrt_ke;
    b[(1, 1)] = sqrt_ke;
    b[(0, 2)] = sqrt_ki;
    b[(1, 3)] = sqrt_ki;
    let mut sel = SMatrix::<f64, 2, 4>::zeros();
    sel[(0, 0)] = 1.0;
    sel[(1, 1)] = 1.0;
    // Scale rows to O(1) before factorising: I₁ ~ √(κh), I₂ ~ √κ·h^{3/2}, ΔW ~ √h.
    let rk = (sqrt_ke * sqrt_ke + sqrt_ki * sqrt_ki).sqrt();
    let (s1, s2, s3) = (rk * h.sqrt(), rk * h.powf(1.5), h.sqrt());
    let scale = [s1, s1, s2, s2, s3, s3];
    let f = |u: f64| -> SMatrix<f64, 6, 4> {
        let (e, psi) = propagators(m, u);
        let mut out = SMatrix::<f64, 6, 4>::zeros();
        out.fixed_view_mut::<2, 4>(0, 0).copy_from(&(e * b));
        out.fixed_view_mut::<2, 4>(2, 0).copy_from(&(psi * b));
        out.fixed_view_mut::<2, 4>(4, 0).copy_from(&sel);
        for (r, s) in scale.iter().enumerate() {
            for c in 0..4 {
                out[(r, c)] /= s;
            }
        }
        out
    };
    // Composite Simpson over [0, h]; the integrand is smooth on the step.
    let intervals = 64;
    let du = h / intervals as f64;
    let mut cov = SMatrix::<f64, 6, 6>::zeros();
    for k in 0..=intervals {
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let fk = f(k as f64 * du);
        cov += fk * fk.transpose() * w;
    }
    cov *= du / 3.0;
    cov = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(cov);
    let mut factor_scaled = eig.eigenvectors;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for i in 0..6 {
            factor_scaled[(i, j)] *= s;
        }
    }
    let mut factor = [[0.0; 6]; 6];
    for (i, row) in factor.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = factor_scaled[(i, j)] * scale[i];
        }
    }
    let (phi, psi) = propagators(m, h);
    if !phi.iter().chain(psi.iter()).all(|v| v.is_finite()) {
        return Err(Error::Stability("non-finite propagator".into()));
    }
    Ok(Stepper::Exact {
        phi: [phi[(0, 0)], phi[(0, 1)], phi[(1, 0)], phi[(1, 1)]],
        psi: [psi[(0, 0)], psi[(0, 1)], psi[(1, 0)], psi[(1, 1)]],
        factor,
    })
}

/// Default transient: max(10/κ, 10/λ_min).
pub(crate) fn slowest_decay(cavity: &CavityParams, pump: &PumpState) -> f64 {
    slowest_rate(&drift_matrix(cavity, pump))
}

/// Collect a full output record (after the transient) for run 0 of `cfg.seed`.
pub fn simulate_cavity(cavity: &CavityParams, pump: &PumpState, cfg: &SimConfig) -> Result<QuadratureTrace> {
    pump.require_sub_threshold()?;
    let r = cfg.resolve(cavity, slowest_decay(cavity, pump))?;
    let mut rng = run_rng(cfg.seed, 0);
    let mut sim = CavitySimulator::new(cavity, pump, r.dt, cfg.integrator, &mut rng)?;
    for _ in 0..r.transient_steps {
        sim.step(&mut rng);
    }
    let mut times = Vec::with_capacity(r.samples);
    let mut xs = Vec::with_capacity(r.samples);
    let mut ys = Vec::with_capacity(r.samples);
    for k in 0..r.samples {
        let (x, y) = sim.step(&mut rng);
        times.push(k as f64 * r.dt);
        xs.push(x);
        ys.push(y);
    }
    Ok(QuadratureTrace { times, x: xs, y: ys })
}
