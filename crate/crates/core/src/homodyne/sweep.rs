use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::detection::Detector;
use super::integrator::{slowest_decay, CavitySimulator};
use super::welch::WelchAccumulator;
use super::{run_rng, SimConfig};
use crate::error::{Error, Result};
use crate::estimation::{fit_linear, FitResult};
use crate::model::{CavityParams, LossChain, PumpState, SpectrumTrace};
use crate::units::to_db;

/// One photocurrent record: pump, LO phase and power, RNG stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRequest {
    pub pump: PumpState,
    pub theta: f64,
    pub lo_power: f64,
    pub run_index: u64,
}

/// LO phase θ that detects the squeezed quadrature.
pub fn squeezed_lo_phase(pump: &PumpState) -> f64 {
    (pump.pump_phase() + PI / 2.0) / 2.0
}

fn check_chain(cavity: &CavityParams, chain: &LossChain) -> Result<()> {
    chain.validate()?;
    if (chain.escape_efficiency - cavity.escape_efficiency()).abs() > 1e-9 {
        return Err(Error::InconsistentData(format!(
            "loss chain escape efficiency {} differs from the cavity's κ_e/κ = {}",
            chain.escape_efficiency,
            cavity.escape_efficiency()
        )));
    }
    Ok(())
}

/// Simulate one record and return its one-sided Welch PSD over the
/// configured output range.
pub fn record_psd(cavity: &CavityParams, chain: &LossChain, cfg: &SimConfig, req: &RunRequest) -> Result<SpectrumTrace> {
    req.pump.require_sub_threshold()?;
    let r = cfg.resolve(cavity, slowest_decay(cavity, &req.pump))?;
    let mut rng = run_rng(cfg.seed, req.run_index);
    let mut det = Detector::new(chain, cfg, req.theta, req.lo_power, r.dt, &mut rng)?;
    let mut welch = WelchAccumulator::new(r.segment_length, cfg.overlap, r.sample_rate())?;
    let warmup = det.warmup_samples();
    if req.lo_power > 0.0 {
        let mut sim = CavitySimulator::new(cavity, &req.pump, r.dt, cfg.integrator, &mut rng)?;
        for _ in 0..r.transient_steps {
            sim.step(&mut rng);
        }
        for k in 0..warmup + r.samples {
            let (x, y) = sim.step(&mut rng);
            let i = det.process(x, y, &mut rng);
            if k >= warmup {
                welch.push(i);
            }
        }
    } else {
        // No LO: the field does not reach the photocurrent.
        for k in 0..warmup + r.samples {
            let i = det.process(0.0, 0.0, &mut rng);
            if k >= warmup {
                welch.push(i);
            }
        }
    }
    Ok(welch
        .finish_range(cfg.output_min_hz, cfg.output_max_hz)?
        .with_meta("seed", cfg.seed)
        .with_meta("run", req.run_index)
        .with_meta("theta_rad", req.theta)
        .with_meta("lo_power_w", req.lo_power)
        .with_meta("pump_ratio", req.pump.pump_ratio())
        .with_meta("dt_s", r.dt)
        .with_meta("source", "homodyne_sim"))
}

fn run_all(cavity: &CavityParams, chain: &LossChain, cfg: &SimConfig, reqs: &[RunRequest]) -> Result<Vec<SpectrumTrace>> {
    reqs.par_iter().map(|r| record_psd(cavity, chain, cfg, r)).collect()
}

/// Band-averaged PSDs of the electronic-only record, the x = 0 shot
/// reference and every signal record, plus the normalised signal levels
/// (P − P_el)/(P_shot − P_el).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandMeasurement {
    pub electronic: f64,
    pub shot: f64,
    pub signals: Vec<f64>,
    pub normalized: Vec<f64>,
}

/// Electronic (run 0), shot reference (run 1) and one record per `theta`
/// (runs 2, 3, …).
pub fn measure_band(
    cavity: &CavityParams,
    pump: &PumpState,
    chain: &LossChain,
    cfg: &SimConfig,
    thetas: &[f64],
    band: (f64, f64),
) -> Result<BandMeasurement> {
    check_chain(cavity, chain)?;
    let vacuum = PumpState::from_ratio(cavity, 0.0, pump.pump_phase())?;
    let electronic_on = cfg.electronic_level() > 0.0;
    let mut reqs = Vec::with_capacity(thetas.len() + 2);
    if electronic_on {
        reqs.push(RunRequest {
            pump: vacuum,
            theta: 0.0,
            lo_power: 0.0,
            run_index: 0,
        });
    }
    reqs.push(RunRequest {
        pump: vacuum,
        theta: 0.0,
        lo_power: cfg.lo_power,
        run_index: 1,
    });
    for (k, &theta) in thetas.iter().enumerate() {
        reqs.push(RunRequest {
            pump: *pump,
            theta,
            lo_power: cfg.lo_power,
            run_index: 2 + k as u64,
        });
    }
    let traces = run_all(cavity, chain, cfg, &reqs)?;
    let means = traces
        .iter()
        .map(|t| t.band_mean(band.0, band.1))
        .collect::<Result<Vec<_>>>()?;
    let (electronic, rest) = if electronic_on { (means[0], &means[1..]) } else { (0.0, &means[..]) };
    let shot = rest[0];
    let signals = rest[1..].to_vec();
    if !(shot - electronic > 0.0) {
        return Err(Error::InconsistentData("shot reference does not exceed electronic noise".into()));
    }
    let normalized = signals.iter().map(|p| (p - electronic) / (shot - electronic)).collect();
    Ok(BandMeasurement {
        electronic,
        shot,
        signals,
        normalized,
    })
}

/// Simulated squeezed and anti-squeezed levels (linear, shot = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureMeasurement {
    pub squeezed: f64,
    pub anti_squeezed: f64,
}

pub fn measure_quadratures(
    cavity: &CavityParams,
    pump: &PumpState,
    chain: &LossChain,
    cfg: &SimConfig,
    band: (f64, f64),
) -> Result<QuadratureMeasurement> {
    let theta = squeezed_lo_phase(pump);
    let m = measure_band(cavity, pump, chain, cfg, &[theta, theta + PI / 2.0], band)?;
    Ok(QuadratureMeasurement {
        squeezed: m.normalized[0],
        anti_squeezed: m.normalized[1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSweepRow {
    pub voltage: f64,
    pub theta: f64,
    pub psd_rel_shot: f64,
    pub psd_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSweep {
    pub rows: Vec<PhaseSweepRow>,
    pub electronic: f64,
    pub shot: f64,
}

impl PhaseSweep {
    pub fn min_db(&self) -> f64 {
        self.rows.iter().map(|r| r.psd_db).fold(f64::INFINITY, f64::min)
    }

    pub fn max_db(&self) -> f64 {
        self.rows.iter().map(|r| r.psd_db).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Band-averaged, shot-normalised, electronic-subtracted PSD per LO voltage.
pub fn phase_sweep(
    cavity: &CavityParams,
    pump: &PumpState,
    chain: &LossChain,
    cfg: &SimConfig,
    voltages: &[f64],
    band: (f64, f64),
) -> Result<PhaseSweep> {
    let thetas: Vec<f64> = voltages.iter().map(|&v| cfg.theta_from_voltage(v)).collect();
    let m = measure_band(cavity, pump, chain, cfg, &thetas, band)?;
    let rows = voltages
        .iter()
        .zip(&thetas)
        .zip(&m.normalized)
        .map(|((&voltage, &theta), &s)| PhaseSweepRow {
            voltage,
            theta,
            psd_rel_shot: s,
            psd_db: to_db(s),
        })
        .collect();
    Ok(PhaseSweep {
        rows,
        electronic: m.electronic,
        shot: m.shot,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotSweepRow {
    pub lo_power: f64,
    pub psd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotSweep {
    pub rows: Vec<ShotSweepRow>,
    /// Electronic-only band level (LO blocked).
    pub electronic: f64,
    /// Line with intercept through (P_LO, PSD).
    pub fit: FitResult,
    /// Fitted shot level at the electronic reference LO power over the
    /// measured electronic level.
    pub shot_to_electronic: f64,
}

/// x = 0 LO power sweep (runs 1, 2, …) with an electronic-only record (run 0).
pub fn shotnoise_sweep(
    cavity: &CavityParams,
    chain: &LossChain,
    cfg: &SimConfig,
    lo_powers: &[f64],
    band: (f64, f64),
) -> Result<ShotSweep> {
    check_chain(cavity, chain)?;
    let vacuum = PumpState::from_ratio(cavity, 0.0, 0.0)?;
    let mut reqs = vec![RunRequest {
        pump: vacuum,
        theta: 0.0,
        lo_power: 0.0,
        run_index: 0,
    }];
    reqs.extend(lo_powers.iter().enumerate().map(|(k, &p)| RunRequest {
        pump: vacuum,
        theta: 0.0,
        lo_power: p,
        run_index: 1 + k as u64,
    }));
    let traces = run_all(cavity, chain, cfg, &reqs)?;
    let means = traces
        .iter()
        .map(|t| t.band_mean(band.0, band.1))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ShotSweepRow> = lo_powers
        .iter()
        .zip(&means[1..])
        .map(|(&lo_power, &psd)| ShotSweepRow { lo_power, psd })
        .collect();
    let x: Vec<f64> = rows.iter().map(|r| r.lo_power).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.psd).collect();
    let fit = fit_linear(&x, &y, false)?;
    let slope = fit.value("slope").unwrap_or(f64::NAN);
    Ok(ShotSweep {
        rows,
        electronic: means[0],
        shot_to_electronic: slope * cfg.electronic_reference_lo_power / means[0],
        fit,
    })
}
