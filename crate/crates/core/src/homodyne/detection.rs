use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{run_rng, QuadratureTrace, SimConfig, LO_REFERENCE_POWER};
use crate::error::{ensure_non_negative, Result};
use crate::model::LossChain;

/// Balanced homodyne detector acting on the output quadratures.
///
/// Only the efficiency after the cavity boundary is applied here: the escape
/// efficiency is already realised by κ_i inside the cavity simulation.
pub struct Detector {
    cos: f64,
    sin: f64,
    sqrt_eta: f64,
    sqrt_loss: f64,
    amp: f64,
    vac_sigma: f64,
    el_sigma: f64,
    lowpass: Option<f64>,
    lp_state: f64,
    excess: Option<(f64, f64)>,
    ex_state: f64,
}

impl Detector {
    pub fn new<R: Rng>(chain: &LossChain, cfg: &SimConfig, theta: f64, lo_power: f64, dt: f64, rng: &mut R) -> Result<Self> {
        ensure_non_negative("lo_power", lo_power)?;
        let eta = chain.post_cavity_efficiency()?;
        let amp = cfg.detector_gain * (lo_power / LO_REFERENCE_POWER).sqrt();
        let fs = 1.0 / dt;
        let el_sigma = (cfg.electronic_level() / 2.0 * fs).sqrt();
        let lowpass = cfg
            .detector_bandwidth_hz
            .map(|bw| 1.0 - (-2.0 * PI * bw * dt).exp());
        let excess = cfg.excess_noise.filter(|e| e.level > 0.0).map(|e| {
            let rate = 2.0 * PI * e.corner_hz;
            let a = (-rate * dt).exp();
            let sigma = (e.level * amp * amp * rate / 2.0).sqrt();
            (a, sigma)
        });
        let ex_state = match excess {
            Some((_, sigma)) => sigma * rng.sample::<f64, _>(StandardNormal),
            None => 0.0,
        };
        Ok(Self {
            cos: theta.cos(),
            sin: theta.sin(),
            sqrt_eta: eta.sqrt(),
            sqrt_loss: (1.0 - eta).sqrt(),
            amp,
            vac_sigma: dt.sqrt().recip(),
            el_sigma,
            lowpass,
            lp_state: 0.0,
            excess,
            ex_state,
        })
    }

    /// Samples to discard while the low-pass state settles.
    pub fn warmup_samples(&self) -> usize {
        self.lowpass.map_or(0, |a| (20.0 / a).ceil() as usize)
    }

    /// One photocurrent-difference sample from output quadratures (X, Y).
    #[inline]
    pub fn process<R: Rng>(&mut self, x_out: f64, y_out: f64, rng: &mut R) -> f64 {
        let signal = self.cos * x_out + self.sin * y_out;
        let vac: f64 = rng.sample(StandardNormal);
        let detected = self.sqrt_eta * signal + self.sqrt_loss * self.vac_sigma * vac;
        let mut current = self.amp * detected;
        if self.el_sigma > 0.0 {
            current += self.el_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        if let Some((a, sigma)) = self.excess {
            self.ex_state = a * self.ex_state + sigma * (1.0 - a * a).sqrt() * rng.sample::<f64, _>(StandardNormal);
            current += self.ex_state;
        }
        match self.lowpass {
            Some(alpha) => {
                self.lp_state += alpha * (current - self.lp_state);
                self.lp_state
            }
            None => current,
        }
    }
}

/// Photocurrent-difference series for a recorded output trace at LO phase θ.
pub fn balanced_detect(trace: &QuadratureTrace, chain: &LossChain, cfg: &SimConfig, theta: f64) -> Result<Vec<f64>> {
    let mut rng = run_rng(cfg.seed, u64::MAX);
    let mut det = Detector::new(chain, cfg, theta, cfg.lo_power, trace.dt(), &mut rng)?;
    Ok(trace
        .x
        .iter()
        .zip(&trace.y)
        .map(|(&x, &y)| det.process(x, y, &mut rng))
        .collect())
}
