//! Command bodies. Each builds its output files in memory; writing and the
//! manifest are handled by the caller.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use sqzlab_core::cavity::{fwhm_numeric, symmetric_grid, transmission_curve, GainLossRatio};
use sqzlab_core::config::RunConfig;
use sqzlab_core::estimation::{
    coupling_diagnostic, fit_lorentzian, fit_linear, fit_shg_quadratic, fit_squeezing_model, FitResult, KappaMode,
    LorentzianOptions, Quadrature, SqueezingDatum,
};
use sqzlab_core::homodyne::{phase_sweep, record_psd, shotnoise_sweep, squeezed_lo_phase, RunRequest};
use sqzlab_core::laser_noise::{
    extract_phase_psd, linewidth_from_phase_psd, mzi_phase_psd, mzi_shot_level, white_phase_psd, MziSetup,
};
use sqzlab_core::pump::{power_sweep_curve, ShgModel};
use sqzlab_core::squeezing::{measured_spectrum, ratio_for_squeezing, spectrum_curve};
use sqzlab_core::units::{from_db, hz_to_angular, nm, photon_energy, to_db, SPEED_OF_LIGHT};
use sqzlab_core::{derive_rates, total_efficiency, Coupling, Error, LossChain, PumpState, SpectrumUnit};

use crate::args::{
    parse_power_grid, Command, CouplingArg, FitArgs, FitModel, FixtureArgs, ProjectArgs, SimMode, SpectrumArgs,
};
use crate::csvio::{read_strict, Table};
use crate::error::{CliError, CliResult};
use crate::fixtures;
use crate::output::{sha256_hex, FileDigest};

/// In-memory result of one command.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub inputs: Vec<FileDigest>,
    pub results: BTreeMap<String, f64>,
    /// Human-readable summary lines for stdout.
    pub messages: Vec<String>,
}

impl Outputs {
    fn csv(&mut self, name: &str, t: &Table) {
        self.files.push((name.to_string(), t.to_bytes()));
    }

    fn json(&mut self, name: &str, text: String) {
        let mut b = text.into_bytes();
        b.push(b'\n');
        self.files.push((name.to_string(), b));
    }

    /// Non-finite values are left out: JSON has no encoding for them.
    fn result(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.results.insert(key.to_string(), v);
        }
    }
}

/// Run `cmd`. Commands that read a configuration receive it resolved.
pub fn execute(cmd: &Command, cfg: Option<&RunConfig>) -> CliResult<Outputs> {
    let need = || cfg.ok_or_else(|| CliError::Config("this command requires --config".into()));
    match cmd {
        Command::Spectrum(a) => spectrum(a, need()?),
        Command::Simulate(a) => match a.mode {
            SimMode::PhaseSweep => simulate_phase_sweep(need()?),
            SimMode::ShotSweep => simulate_shot_sweep(need()?),
            SimMode::Spectrum => simulate_spectrum(need()?),
        },
        Command::Fit(a) => fit(a),
        Command::Project(a) => project(a, need()?),
        Command::Transmission(_) => transmission(need()?),
        Command::LaserNoise(_) => laser_noise(need()?),
        Command::Fixture(a) => fixture(a),
        Command::Replay(_) => Err(CliError::Config("replay cannot be nested".into())),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Linear band average of the closed-form spectra, sampled on 21 points.
fn band_average(cfg: &RunConfig) -> CliResult<(f64, f64)> {
    let c = cfg.cavity()?;
    let chain = cfg.chain(&c)?;
    let x = cfg.pump_state(&c)?.pump_ratio();
    let (lo, hi) = cfg.band_hz();
    let pts = linspace(lo, hi, if hi > lo { 21 } else { 1 });
    let (mut s, mut a) = (0.0, 0.0);
    for &f in &pts {
        let p = measured_spectrum(&c, x, &chain, hz_to_angular(f))?;
        s += p.squeezed;
        a += p.anti_squeezed;
    }
    Ok((s / pts.len() as f64, a / pts.len() as f64))
}

fn spectrum(a: &SpectrumArgs, cfg: &RunConfig) -> CliResult<Outputs> {
    let fmin = a.fmin.unwrap_or(cfg.spectrum.fmin_mhz);
    let fmax = a.fmax.unwrap_or(cfg.spectrum.fmax_mhz);
    if !(fmin >= 0.0 && fmax >= fmin) {
        return Err(CliError::Config(format!("--fmin {fmin} / --fmax {fmax} do not form an interval")));
    }
    let points = if fmax == fmin { 1 } else { a.points.unwrap_or(cfg.spectrum.points) };
    if points < 2 && fmax > fmin {
        return Err(CliError::Config("--points must be ≥ 2 for a frequency interval".into()));
    }
    let c = cfg.cavity()?;
    let chain = cfg.chain(&c)?;
    let x = cfg.pump_state(&c)?.pump_ratio();
    let freqs: Vec<f64> = linspace(fmin * 1e6, fmax * 1e6, points);
    let (sq, anti) = spectrum_curve(&c, x, &chain, &freqs)?;
    let mut t = Table::new(&["freq_hz", "s_minus", "s_plus", "s_minus_db", "s_plus_db"]);
    for ((&f, &s), &p) in freqs.iter().zip(sq.values()).zip(anti.values()) {
        t.push(vec![f.into(), s.into(), p.into(), to_db(s).into(), to_db(p).into()]);
    }
    let mut out = Outputs::default();
    out.csv("spectrum.csv", &t);
    let eta = total_efficiency(&chain)?;
    let (bs, ba) = band_average(cfg)?;
    out.result("pump_ratio", x);
    out.result("eta_tot", eta);
    out.result("band_s_minus_db", to_db(bs));
    out.result("band_s_plus_db", to_db(ba));
    let [lo, hi] = cfg.analysis.band_mhz;
    out.messages.push(format!("pump ratio x = {x:.6}, eta_tot = {eta:.6}"));
    out.messages.push(format!(
        "band {lo}-{hi} MHz: squeezing {:.3} dB, anti-squeezing {:+.3} dB",
        to_db(bs),
        to_db(ba)
    ));
    Ok(out)
}

fn simulate_phase_sweep(cfg: &RunConfig) -> CliResult<Outputs> {
    let c = cfg.cavity()?;
    let chain = cfg.chain(&c)?;
    let pump = cfg.pump_state(&c)?;
    let sweep = phase_sweep(&c, &pump, &chain, &cfg.sim, &cfg.simulate.voltages, cfg.band_hz())?;
    let mut t = Table::new(&["voltage_v", "theta_rad", "psd_rel_shot", "psd_db"]);
    for r in &sweep.rows {
        t.push(vec![r.voltage.into(), r.theta.into(), r.psd_rel_shot.into(), r.psd_db.into()]);
    }
    let (bs, ba) = band_average(cfg)?;
    let mut out = Outputs::default();
    out.csv("phase_sweep.csv", &t);
    out.result("min_db", sweep.min_db());
    out.result("max_db", sweep.max_db());
    out.result("electronic_psd", sweep.electronic);
    out.result("shot_psd", sweep.shot);
    out.result("pump_ratio", pump.pump_ratio());
    out.result("theory_s_minus_db", to_db(bs));
    out.result("theory_s_plus_db", to_db(ba));
    out.messages.push(format!(
        "phase sweep: min {:.3} dB, max {:+.3} dB (closed form {:.3} / {:+.3} dB)",
        sweep.min_db(),
        sweep.max_db(),
        to_db(bs),
        to_db(ba)
    ));
    Ok(out)
}

fn simulate_shot_sweep(cfg: &RunConfig) -> CliResult<Outputs> {
    let c = cfg.cavity()?;
    let chain = cfg.chain(&c)?;
    let powers: Vec<f64> = cfg.simulate.lo_powers_mw.iter().map(|p| p * 1e-3).collect();
    let s = shotnoise_sweep(&c, &chain, &cfg.sim, &powers, cfg.band_hz())?;
    let mut t = Table::new(&["lo_power_w", "psd"]);
    for r in &s.rows {
        t.push(vec![r.lo_power.into(), r.psd.into()]);
    }
    let mut out = Outputs::default();
    out.csv("shot_sweep.csv", &t);
    out.json("shot_sweep_fit.json", s.fit.to_json());
    out.result("r_squared", s.fit.r_squared);
    out.result("slope", s.fit.value("slope").unwrap_or(f64::NAN));
    out.result("intercept", s.fit.value("intercept").unwrap_or(f64::NAN));
    out.result("electronic_psd", s.electronic);
    out.result("shot_to_electronic", s.shot_to_electronic);
    out.messages.push(format!(
        "shot sweep: R² = {:.6}, shot/electronic at {} mW = {:.3}",
        s.fit.r_squared,
        cfg.sim.electronic_reference_lo_power * 1e3,
        s.shot_to_electronic
    ));
    Ok(out)
}

fn simulate_spectrum(cfg: &RunConfig) -> CliResult<Outputs> {
    let c = cfg.cavity()?;
    let chain = cfg.chain(&c)?;
    let pump = cfg.pump_state(&c)?;
    let vacuum = PumpState::from_ratio(&c, 0.0, 0.0)?;
    let theta = squeezed_lo_phase(&pump);
    let lo = cfg.sim.lo_power;
    let with_el = cfg.sim.electronic_level() > 0.0;
    let mut reqs = vec![
        RunRequest { pump: vacuum, theta: 0.0, lo_power: lo, run_index: 1 },
        RunRequest { pump, theta, lo_power: lo, run_index: 2 },
        RunRequest { pump, theta: theta + PI / 2.0, lo_power: lo, run_index: 3 },
    ];
    if with_el {
        reqs.push(RunRequest { pump: vacuum, theta: 0.0, lo_power: 0.0, run_index: 0 });
    }
    let traces = reqs
        .par_iter()
        .map(|r| record_psd(&c, &chain, &cfg.sim, r))
        .collect::<Result<Vec<_>, Error>>()?;
    let (fmin, fmax) = (cfg.spectrum.fmin_mhz * 1e6, cfg.spectrum.fmax_mhz * 1e6);
    let mut t = Table::new(&["freq_hz", "s_minus", "s_plus", "theory_s_minus", "theory_s_plus"]);
    let x = pump.pump_ratio();
    for (i, &f) in traces[0].freqs().iter().enumerate() {
        if f < fmin || f > fmax {
            continue;
        }
        let el = if with_el { traces[3].values()[i] } else { 0.0 };
        let shot = traces[0].values()[i] - el;
        let norm = |k: usize| (traces[k].values()[i] - el) / shot;
        let th = measured_spectrum(&c, x, &chain, hz_to_angular(f))?;
        t.push(vec![f.into(), norm(1).into(), norm(2).into(), th.squeezed.into(), th.anti_squeezed.into()]);
    }
    if t.rows.is_empty() {
        return Err(CliError::Config(format!(
            "no simulated bins between {fmin} and {fmax} Hz; check spectrum and sim.output ranges"
        )));
    }
    let mut out = Outputs::default();
    out.csv("sim_spectrum.csv", &t);
    out.result("pump_ratio", x);
    out.result("bins", t.rows.len() as f64);
    out.result("segments", traces[0].metadata.get("segments").and_then(|s| s.parse().ok()).unwrap_or(f64::NAN));
    out.messages.push(format!("simulated spectrum: {} bins", t.rows.len()));
    Ok(out)
}

fn require_converged(fit: FitResult) -> CliResult<FitResult> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NoConvergence {
            iterations: fit.iterations,
            reason: format!("{} fit stopped before meeting its convergence tests", fit.model),
        }
        .into())
    }
}

fn fit(a: &FitArgs) -> CliResult<Outputs> {
    let kind = match a.model {
        FitModel::Lorentzian => crate::args::FixtureKind::Lorentzian,
        FitModel::Shg => crate::args::FixtureKind::Shg,
        FitModel::Linear => crate::args::FixtureKind::Linear,
        FitModel::Squeezing => crate::args::FixtureKind::Squeezing,
        FitModel::Coupling => crate::args::FixtureKind::Coupling,
    };
    let (data, bytes) = read_strict(&a.input, fixtures::column_names(kind))?;
    let mut out = Outputs::default();
    out.inputs.push(FileDigest {
        path: a.input.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    let json = match a.model {
        FitModel::Lorentzian => {
            if !(a.wavelength_nm > 0.0) {
                return Err(CliError::Config("--wavelength-nm must be > 0".into()));
            }
            let opts = LorentzianOptions {
                carrier_hz: Some(SPEED_OF_LIGHT / nm(a.wavelength_nm)),
                coupling: match a.coupling {
                    CouplingArg::Under => Coupling::Undercoupled,
                    CouplingArg::Over => Coupling::Overcoupled,
                },
            };
            let f = fit_lorentzian(&data.numbers("detuning_hz")?, &data.numbers("transmittance")?, opts)?;
            let f = require_converged(f)?;
            for (k, v) in &f.derived {
                out.result(k, *v);
            }
            out.messages.push(format!("lorentzian: Q_tot = {:.1}", f.derived.get("q_tot").copied().unwrap_or(f64::NAN)));
            f.to_json()
        }
        FitModel::Shg => {
            let f = require_converged(fit_shg_quadratic(&data.numbers("p_fh_w")?, &data.numbers("p_sh_w")?)?)?;
            let eta = f.value("eta_norm").unwrap_or(f64::NAN);
            out.result("eta_norm", eta);
            out.messages.push(format!("shg: eta_norm = {eta:.6} /W"));
            f.to_json()
        }
        FitModel::Linear => {
            let f = require_converged(fit_linear(&data.numbers("x")?, &data.numbers("y")?, a.through_origin)?)?;
            out.result("r_squared", f.r_squared);
            for p in &f.params {
                out.result(&p.name, p.value);
            }
            out.messages.push(format!("linear: R² = {:.6}", f.r_squared));
            f.to_json()
        }
        FitModel::Squeezing => {
            let freqs = data.numbers("freq_hz")?;
            let values = data.numbers("s_linear")?;
            let quads = data
                .strings("quadrature")?
                .iter()
                .enumerate()
                .map(|(i, s)| s.parse::<Quadrature>().map_err(|e| CliError::Data(format!("row {}: {e}", i + 2))))
                .collect::<CliResult<Vec<_>>>()?;
            let d: Vec<SqueezingDatum> = freqs
                .iter()
                .zip(&quads)
                .zip(&values)
                .map(|((&freq_hz, &quadrature), &value)| SqueezingDatum { freq_hz, quadrature, value, sigma: None })
                .collect();
            let kappa = match a.kappa_hz {
                Some(k) => k,
                None => SPEED_OF_LIGHT / nm(a.wavelength_nm) / a.q_tot,
            };
            let mode = if a.free_kappa { KappaMode::Free(kappa) } else { KappaMode::Fixed(kappa) };
            let f = require_converged(fit_squeezing_model(&d, mode)?)?;
            for p in &f.params {
                out.result(&p.name, p.value);
            }
            out.messages.push(format!(
                "squeezing: x = {:.6}, eta_tot = {:.6}",
                f.value("x").unwrap_or(f64::NAN),
                f.value("eta_tot").unwrap_or(f64::NAN)
            ));
            f.to_json()
        }
        FitModel::Coupling => {
            let d = coupling_diagnostic(&data.numbers("detuning_hz")?, &data.numbers("phase_rad")?)?;
            out.result("confidence", d.confidence);
            out.result("phase_excursion", d.phase_excursion);
            out.messages.push(format!("coupling: {:?} (confidence {:.3})", d.regime, d.confidence));
            serde_json::to_string_pretty(&d).expect("diagnosis serialises")
        }
    };
    out.json("fit.json", json);
    Ok(out)
}

fn project(a: &ProjectArgs, cfg: &RunConfig) -> CliResult<Outputs> {
    let p = &cfg.project;
    let powers_mw = match &a.power_grid {
        Some(g) => parse_power_grid(g).map_err(CliError::Config)?,
        None => p.fh_powers_mw.clone(),
    };
    if powers_mw.iter().any(|v| !(*v >= 0.0)) {
        return Err(CliError::Config("FH powers must be ≥ 0".into()));
    }
    let base = cfg.cavity()?;
    let wavelength = base.resonance_wavelength();
    let improved = derive_rates(p.q_tot, p.q_int, wavelength, Coupling::Undercoupled)
        .map_err(|e| CliError::Config(format!("project: {e}")))?;
    let rho = improved.escape_efficiency();
    let chain = LossChain::on_chip(rho)?;
    // g² scales with the normalised SHG efficiency of the same nonlinear overlap.
    let g_scale = (p.shg_efficiency_per_w / cfg.pump.shg_efficiency_per_w).sqrt();
    let threshold = cfg.threshold(&base)?.project(&improved, g_scale)?;
    let shg = ShgModel::new(p.shg_efficiency_per_w).map_err(|e| CliError::Config(format!("project: {e}")))?;
    let omega = hz_to_angular(p.frequency_hz);
    let fh: Vec<f64> = powers_mw.iter().map(|v| v * 1e-3).collect();
    let rows = power_sweep_curve(&fh, &shg, &threshold, &improved, &chain, omega)?;

    let mut t = Table::new(&["p_fh_mw", "p_sh_mw", "pump_ratio", "above_threshold", "s_minus_db", "s_plus_db"]);
    let mut above = 0usize;
    for (r, &p_mw) in rows.iter().zip(&powers_mw) {
        above += r.above_threshold() as usize;
        t.push(vec![
            p_mw.into(),
            (r.p_sh * 1e3).into(),
            r.pump_ratio.into(),
            r.above_threshold().into(),
            r.spectrum.map(|s| s.squeezed_db()).into(),
            r.spectrum.map(|s| s.anti_squeezed_db()).into(),
        ]);
    }
    let mut out = Outputs::default();
    out.csv("project.csv", &t);
    let p_th_fh = (threshold.p_th_sh / p.shg_efficiency_per_w).sqrt();
    out.result("rho", rho);
    out.result("threshold_sh_mw", threshold.p_th_sh * 1e3);
    out.result("threshold_fh_mw", p_th_fh * 1e3);
    out.result("above_threshold_points", above as f64);
    out.messages.push(format!(
        "threshold: {:.3} mW SH, {:.3} mW FH; {above} grid point(s) at or above threshold not computed",
        threshold.p_th_sh * 1e3,
        p_th_fh * 1e3
    ));
    match ratio_for_squeezing(&improved, rho, omega, from_db(p.target_squeezing_db)) {
        Some(x) => {
            let pair = measured_spectrum(&improved, x, &chain, omega)?;
            let p_fh = (x * x * threshold.p_th_sh / p.shg_efficiency_per_w).sqrt();
            out.result("consistency_pump_ratio", x);
            out.result("consistency_s_minus_db", pair.squeezed_db());
            out.result("consistency_s_plus_db", pair.anti_squeezed_db());
            out.result("consistency_fh_mw", p_fh * 1e3);
            out.messages.push(format!(
                "consistency: x = {x:.6} gives {:.2} dB squeezing and {:+.2} dB anti-squeezing (FH {:.3} mW)",
                pair.squeezed_db(),
                pair.anti_squeezed_db(),
                p_fh * 1e3
            ));
        }
        None => out.messages.push(format!(
            "consistency: {} dB is not reachable below threshold with rho = {rho}",
            p.target_squeezing_db
        )),
    }
    Ok(out)
}

fn transmission(cfg: &RunConfig) -> CliResult<Outputs> {
    let c = cfg.cavity()?;
    let tr = &cfg.transmission;
    if tr.points < 5 || !(tr.span_linewidths > 0.0) {
        return Err(CliError::Config("transmission needs points ≥ 5 and span_linewidths > 0".into()));
    }
    let kappa = c.total_rate();
    let grid = symmetric_grid(tr.span_linewidths * kappa, tr.points);
    let mut curves = Table::new(&["gain_loss_ratio", "detuning_hz", "transmittance", "phase_rad"]);
    let mut summary = Table::new(&["gain_loss_ratio", "fwhm_hz", "pole_model_fwhm_hz", "t_on_resonance"]);
    for &g in &tr.gain_loss_ratios {
        let gl = GainLossRatio::new(g).map_err(|e| CliError::Config(format!("transmission.gain_loss_ratios: {e}")))?;
        let curve = transmission_curve(&c, gl.parametric_rate(&c), &grid)?;
        for i in 0..curve.len() {
            curves.push(vec![
                g.into(),
                (curve.detunings[i] / (2.0 * PI)).into(),
                curve.transmittance[i].into(),
                curve.amplitude_phase[i].into(),
            ]);
        }
        // Ambiguous shapes (double dip, vanished dip) get an empty width.
        let fwhm = fwhm_numeric(&curve).ok().map(|w| w / (2.0 * PI));
        let centre = curve.transmittance[tr.points / 2];
        summary.push(vec![
            g.into(),
            fwhm.into(),
            (c.linewidth_hz() * (1.0 - g * g).sqrt()).into(),
            centre.into(),
        ]);
    }
    let mut out = Outputs::default();
    out.csv("transmission.csv", &curves);
    out.csv("transmission_summary.csv", &summary);
    out.result("rho", c.escape_efficiency());
    out.result("extinction_gain_loss_ratio", (1.0 - 2.0 * c.escape_efficiency()).max(0.0).sqrt());
    out.result("unity_on_resonance_gain_loss_ratio", (1.0 - c.escape_efficiency()).sqrt());
    out.messages.push(format!("transmission: {} curves", tr.gain_loss_ratios.len()));
    Ok(out)
}

fn laser_noise(cfg: &RunConfig) -> CliResult<Outputs> {
    let l = &cfg.laser;
    if l.points == 0 || !(l.fmin_hz > 0.0 && l.fmax_hz >= l.fmin_hz) {
        return Err(CliError::Config("laser: need points ≥ 1 and 0 < fmin_hz ≤ fmax_hz".into()));
    }
    let wavelength = cfg.cavity()?.resonance_wavelength();
    let setup = MziSetup::from_fsr_hz(l.mzi_fsr_hz, l.mzi_path_diff_m)
        .map_err(|e| CliError::Config(format!("laser: {e}")))?;
    let flux = l.optical_power_mw * 1e-3 / photon_energy(wavelength);
    let c_rad = 2.0 * PI * l.linewidth_hz;
    let eta = l.detection_efficiency;
    let freqs = linspace(l.fmin_hz, l.fmax_hz, l.points);
    let psd = freqs
        .iter()
        .map(|&f| {
            let w = hz_to_angular(f);
            mzi_phase_psd(&setup, white_phase_psd(c_rad, w), flux, eta, w)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let shot = mzi_shot_level(&setup, flux, eta);
    let trace = sqzlab_core::SpectrumTrace::new(freqs.clone(), psd.clone(), SpectrumUnit::RawPsd)?;
    let ex = extract_phase_psd(&trace, shot, &setup, flux, l.guard_hz)?;
    let recovered = linewidth_from_phase_psd(&ex.phase_psd)?;
    let mut t = Table::new(&["freq_hz", "mzi_psd", "shot_psd", "phase_psd"]);
    let mut k = 0;
    for (&f, &p) in freqs.iter().zip(&psd) {
        let phase = if ex.phase_psd.freqs().get(k) == Some(&f) {
            k += 1;
            Some(ex.phase_psd.values()[k - 1])
        } else {
            None
        };
        t.push(vec![f.into(), p.into(), shot.into(), phase.into()]);
    }
    let mut out = Outputs::default();
    out.csv("laser_noise.csv", &t);
    out.result("linewidth_injected_hz", l.linewidth_hz);
    out.result("linewidth_recovered_hz", recovered);
    out.result("group_index", setup.group_index);
    out.result("masked_bins", ex.masked_hz.len() as f64);
    out.messages.push(format!(
        "laser noise: injected {} Hz, recovered {recovered:.3} Hz ({} bins masked near FSR multiples)",
        l.linewidth_hz,
        ex.masked_hz.len()
    ));
    Ok(out)
}

fn fixture(a: &FixtureArgs) -> CliResult<Outputs> {
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        return Err(CliError::Config("--noise must be ≥ 0".into()));
    }
    let t = fixtures::generate(a.kind, a.seed, a.noise)?;
    let mut out = Outputs::default();
    out.csv(fixtures::file_name(a.kind), &t);
    out.result("rows", t.rows.len() as f64);
    Ok(out)
}
