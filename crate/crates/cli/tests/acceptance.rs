//! Acceptance checks, one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use rand::Rng;
use rand_distr::StandardNormal;
use sqzlab_cli::output::RunManifest;
use sqzlab_cli::{run, Cli};
use sqzlab_core::cavity::{fwhm_numeric, symmetric_grid, transmission_curve, GainLossRatio};
use sqzlab_core::estimation::*;
use sqzlab_core::homodyne::{record_psd, run_rng, shotnoise_sweep, squeezed_lo_phase, RunRequest, SimConfig};
use sqzlab_core::laser_noise::{
    extract_phase_psd, lineshape_white_noise, linewidth_from_phase_psd, mzi_phase_psd, mzi_shot_level,
    white_phase_psd, MziSetup,
};
use sqzlab_core::pump::{calibrate_for_cavity, pump_ratio, shg_power, ShgModel};
use sqzlab_core::squeezing::{measured_spectrum, output_transfer, ratio_for_squeezing, squeeze_antisqueeze};
use sqzlab_core::units::{from_db, hz_to_angular, nm, photon_energy, to_db};
use sqzlab_core::{derive_rates, CavityParams, Coupling, LossChain, PumpState, SpectrumTrace, SpectrumUnit};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&self, text: String) {
        println!("     {text}");
    }
}

fn device() -> CavityParams {
    derive_rates(550e3, 950e3, nm(1544.4), Coupling::Undercoupled).unwrap()
}

fn grid_100() -> impl Iterator<Item = (f64, f64)> {
    (0..100).flat_map(|i| (0..100).map(move |j| (0.95 * i as f64 / 99.0, 5.0 * j as f64 / 99.0)))
}

fn criterion_1(r: &mut Report) {
    let t0 = Instant::now();
    let c = device();
    let chain = LossChain::for_cavity(&c, 0.70, 0.75).unwrap();
    let shg = ShgModel::new(10.0).unwrap().with_response(vec![(1544.4, 0.6)]).unwrap();
    let thr = calibrate_for_cavity(25e-3, &c).unwrap();
    let x = pump_ratio(shg_power(&shg, 20e-3, nm(1544.4)).unwrap(), &thr).unwrap();
    let (mut s, mut a) = (0.0, 0.0);
    let n = 21;
    for k in 0..n {
        let f = 58e6 + 2e6 * k as f64 / (n - 1) as f64;
        let p = measured_spectrum(&c, x, &chain, hz_to_angular(f)).unwrap();
        s += p.squeezed / n as f64;
        a += p.anti_squeezed / n as f64;
    }
    let (sdb, adb) = (-to_db(s), to_db(a));
    let dt = t0.elapsed().as_secs_f64();
    let pass = (sdb - 0.55).abs() <= 0.35 && (adb - 1.55).abs() <= 0.35 && dt < 1.0;
    r.line(
        "1",
        pass,
        format!(
            "squeezing {sdb:.3} dB vs 0.55 ± 0.35, anti-squeezing {adb:.3} dB vs 1.55 ± 0.35 (x = {x:.6}), {:.1} ms",
            dt * 1e3
        ),
    );
}

fn criterion_2(r: &mut Report) {
    let t0 = Instant::now();
    let c = device();
    let chain = LossChain::for_cavity(&c, 0.70, 0.75).unwrap();
    let (mut worst, mut min_lossy) = (0.0f64, f64::INFINITY);
    for (x, w) in grid_100() {
        let omega = w * c.total_rate();
        let p = squeeze_antisqueeze(&c, x, omega).unwrap();
        worst = worst.max((p.product() - 1.0).abs());
        min_lossy = min_lossy.min(measured_spectrum(&c, x, &chain, omega).unwrap().product());
    }
    let dt = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && min_lossy >= 1.0 && dt < 1.0;
    r.line(
        "2",
        pass,
        format!(
            "max |S+S- - 1| = {worst:.2e} (≤ 1e-10), min lossy product = {min_lossy:.12} (≥ 1), {:.1} ms",
            dt * 1e3
        ),
    );
}

fn criterion_3(r: &mut Report) {
    let c = device();
    let mut worst = 0.0f64;
    for (x, w) in grid_100() {
        let pump = PumpState::from_ratio(&c, x, PI / 2.0).unwrap();
        let t = output_transfer(&c, &pump, w * c.total_rate()).unwrap();
        let form = t.u.norm_sqr() - t.v.norm_sqr();
        worst = worst.max((form - 1.0).abs());
    }
    r.line("3", worst <= 1e-10, format!("max ||u|² − |v|² − 1| = {worst:.2e} (≤ 1e-10)"));
}

fn criterion_4(r: &mut Report) {
    let t0 = Instant::now();
    let mut rng = run_rng(2024, 99);
    let mut worst = 0.0f64;
    let mut min_segments = usize::MAX;
    let mut lines = Vec::new();
    for k in 0..10u64 {
        let x: f64 = rng.random_range(0.05..0.8);
        let rho: f64 = rng.random_range(0.2..0.95);
        let post: f64 = rng.random_range(0.3..1.0);
        let centre: f64 = rng.random_range(20e6..300e6);
        let kappa = hz_to_angular(352.9e6);
        let c = CavityParams::from_rates(nm(1544.4), rho * kappa, (1.0 - rho) * kappa).unwrap();
        let chain = LossChain::new(rho, post, 1.0).unwrap();
        let pump = PumpState::from_ratio(&c, x, PI / 2.0).unwrap();
        let cfg = SimConfig {
            seed: 40 + k,
            rbw_hz: 500e3,
            segments: 250,
            electronic_noise_rel: 0.0,
            detector_bandwidth_hz: None,
            output_max_hz: 320e6,
            ..SimConfig::default()
        };
        let theta = squeezed_lo_phase(&pump);
        let band = (centre - 5e6, centre + 5e6);
        for (q, th, quad) in [(0u64, theta, "squeezed"), (1, theta + PI / 2.0, "anti-squeezed")] {
            let req = RunRequest {
                pump,
                theta: th,
                lo_power: cfg.lo_power,
                run_index: 2 * k + q,
            };
            let trace = record_psd(&c, &chain, &cfg, &req).unwrap();
            min_segments = min_segments.min(trace.metadata["segments"].parse().unwrap());
            let sim = trace.band_mean(band.0, band.1).unwrap() / cfg.shot_level(cfg.lo_power);
            let in_band: Vec<f64> = trace.freqs().iter().copied().filter(|f| *f >= band.0 && *f <= band.1).collect();
            let theory = in_band
                .iter()
                .map(|&f| {
                    let p = measured_spectrum(&c, x, &chain, hz_to_angular(f)).unwrap();
                    if q == 0 { p.squeezed } else { p.anti_squeezed }
                })
                .sum::<f64>()
                / in_band.len() as f64;
            let rel = sim / theory - 1.0;
            worst = worst.max(rel.abs());
            lines.push(format!(
                "x={x:.3} rho={rho:.3} post={post:.3} f={:.1} MHz {quad}: sim {sim:.4} theory {theory:.4} ({:+.2}%)",
                centre / 1e6,
                rel * 100.0
            ));
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    let pass = worst <= 0.05 && min_segments >= 200 && dt < 300.0;
    r.line(
        "4",
        pass,
        format!(
            "worst relative deviation {:.2}% (≤ 5%) over 10 triples × 2 quadratures, ≥ {min_segments} segments, {dt:.1} s (< 300 s)",
            worst * 100.0
        ),
    );
    for l in lines {
        r.info(l);
    }
}

fn criterion_5(r: &mut Report) {
    let c = device();
    let chain = LossChain::for_cavity(&c, 0.70, 0.75).unwrap();
    let cfg = SimConfig {
        rbw_hz: 2e6,
        segments: 400,
        output_max_hz: 150e6,
        ..SimConfig::default()
    };
    let powers: Vec<f64> = (1..=8).map(|k| 0.2e-3 * k as f64).collect();
    let s = shotnoise_sweep(&c, &chain, &cfg, &powers, (20e6, 120e6)).unwrap();
    let ratio = s.shot_to_electronic;
    let pass = s.fit.r_squared >= 0.999 && (ratio / 3.3 - 1.0).abs() <= 0.05;
    r.line(
        "5",
        pass,
        format!(
            "R² = {:.6} (≥ 0.999), shot/electronic at 1.3 mW = {ratio:.3} (3.3 ± 5%)",
            s.fit.r_squared
        ),
    );
}

fn on_resonance_t(c: &CavityParams, g: f64) -> f64 {
    let gl = GainLossRatio::new(g).unwrap();
    transmission_curve(c, gl.parametric_rate(c), &[0.0]).unwrap().transmittance[0]
}

fn criterion_6(r: &mut Report) {
    let kappa = hz_to_angular(352.9e6);
    let rho = 0.42;
    let c = CavityParams::from_rates(nm(1544.4), rho * kappa, (1.0 - rho) * kappa).unwrap();
    let g_unity = (1.0f64 - rho).sqrt();
    let t_cold = on_resonance_t(&c, 0.0);
    let t_vanish = on_resonance_t(&c, g_unity);
    let peak = {
        let gl = GainLossRatio::new(0.9).unwrap();
        let curve = transmission_curve(&c, gl.parametric_rate(&c), &symmetric_grid(3.0 * kappa, 601)).unwrap();
        curve.transmittance.iter().copied().fold(f64::MIN, f64::max)
    };
    // Past extinction the on-resonance value rises monotonically through 1.
    let g0 = (1.0f64 - 2.0 * rho).sqrt();
    let rising = (0..=50)
        .map(|k| on_resonance_t(&c, g0 + (0.95 - g0) * k as f64 / 50.0))
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] > w[0]);
    let pass_a = t_cold < 1.0 && (t_vanish - 1.0).abs() < 1e-9 && peak > 1.0 && rising;
    r.line(
        "6a",
        pass_a,
        format!(
            "kappa_e/kappa = 0.42: T(0) = {t_cold:.4} at G = 0 (dip), {t_vanish:.12} at G = {g_unity:.4} (dip vanished), peak {peak:.3} at G = 0.9"
        ),
    );

    let fwhm_errors = |rho: f64| -> Vec<(f64, Option<f64>)> {
        let c = CavityParams::from_rates(nm(1544.4), rho * kappa, (1.0 - rho) * kappa).unwrap();
        (1..=9)
            .map(|k| {
                let g = 0.1 * k as f64;
                let gl = GainLossRatio::new(g).unwrap();
                let curve = transmission_curve(&c, gl.parametric_rate(&c), &symmetric_grid(3.0 * kappa, 6001)).unwrap();
                let want = kappa * (1.0 - g * g).sqrt();
                (g, fwhm_numeric(&curve).ok().map(|w| w / want - 1.0))
            })
            .collect()
    };
    let weak = fwhm_errors(1e-3);
    let worst = weak
        .iter()
        .map(|(_, e)| e.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    r.line(
        "6b",
        worst <= 0.01,
        format!(
            "numerical FWHM vs kappa·sqrt(1 − G²) for G = 0.1…0.9 at kappa_e/kappa = 1e-3: worst {:.3}% (≤ 1%)",
            worst * 100.0
        ),
    );
    let strong: Vec<String> = fwhm_errors(rho)
        .iter()
        .map(|(g, e)| match e {
            Some(e) => format!("G={g:.1}: {:+.1}%", e * 100.0),
            None => format!("G={g:.1}: no single feature"),
        })
        .collect();
    r.info(format!("informational, kappa_e/kappa = 0.42 (width law not expected to hold): {}", strong.join(", ")));
}

fn criterion_7(r: &mut Report) {
    let flat = ShgModel::new(10.0).unwrap();
    let p = shg_power(&flat, 50e-3, nm(1544.4)).unwrap();
    let c = device();
    let shg = flat.clone().with_response(vec![(1544.4, 0.6)]).unwrap();
    let thr = calibrate_for_cavity(p, &c).unwrap();
    let x = pump_ratio(shg_power(&shg, 20e-3, nm(1544.4)).unwrap(), &thr).unwrap();
    let pass = (p - 25e-3).abs() <= 1e-15 && (x - 0.310).abs() <= 0.001;
    r.line(
        "7",
        pass,
        format!("50 mW FH → {:.15} mW SH; pump_ratio(20 mW FH) = {x:.6} (0.310 ± 0.001)", p * 1e3),
    );
}

/// Numerical Fourier transform of the field correlation e^{−C|t|/2}, by
/// composite Simpson on [0, T] with T = 60/C.
fn ft_correlation(c: f64, omega: f64) -> f64 {
    let t_max = 60.0 / c;
    let n = 200_000;
    let h = t_max / n as f64;
    let f = |t: f64| (-c * t / 2.0).exp() * (omega * t).cos();
    let mut s = f(0.0) + f(t_max);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

fn criterion_8(r: &mut Report) {
    let c = 2.0 * PI * 100.0;
    let peak = ft_correlation(c, 0.0);
    // Half-maximum crossing by bisection in ω.
    let (mut lo, mut hi) = (0.0, 5.0 * c);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ft_correlation(c, mid) > peak / 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fwhm = lo + hi;
    let shape_err = [0.0, 0.3, 1.0, 3.0]
        .iter()
        .map(|m| {
            let w = m * c;
            (ft_correlation(c, w) / lineshape_white_noise(c, w, 1.0).unwrap() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let fwhm_err = fwhm / c - 1.0;

    let setup = MziSetup::from_fsr_hz(67e6, 3.0).unwrap();
    let flux = 1e-3 / photon_energy(nm(1544.4));
    let eta = 0.8;
    let mut rng = run_rng(8, 0);
    let freqs: Vec<f64> = (0..300).map(|k| 1e6 + 299e6 * k as f64 / 299.0).collect();
    // 5% multiplicative estimator noise on every bin.
    let psd: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let w = hz_to_angular(f);
            mzi_phase_psd(&setup, white_phase_psd(c, w), flux, eta, w).unwrap()
                * (1.0 + 0.05 * rng.sample::<f64, _>(StandardNormal))
        })
        .collect();
    let trace = SpectrumTrace::new(freqs, psd, SpectrumUnit::RawPsd).unwrap();
    let ex = extract_phase_psd(&trace, mzi_shot_level(&setup, flux, eta), &setup, flux, 3e6).unwrap();
    let lw = linewidth_from_phase_psd(&ex.phase_psd).unwrap();
    let pass = fwhm_err.abs() <= 0.01 && shape_err <= 0.01 && (lw / 100.0 - 1.0).abs() <= 0.10;
    r.line(
        "8",
        pass,
        format!(
            "FT FWHM / C − 1 = {:.2e}, max lineshape deviation {:.2e} (≤ 1%); MZI round trip {lw:.2} Hz for 100 Hz (± 10%)",
            fwhm_err, shape_err
        ),
    );
}

fn criterion_9(r: &mut Report) {
    let wav = nm(1544.4);
    let c = derive_rates(200e3, 10e6, wav, Coupling::Undercoupled).unwrap();
    let rho = c.escape_efficiency();
    let chain = LossChain::on_chip(rho).unwrap();
    let x = ratio_for_squeezing(&c, rho, 0.0, from_db(-16.0)).unwrap();
    let p = measured_spectrum(&c, x, &chain, 0.0).unwrap();
    let pass = (p.squeezed_db() + 16.0).abs() < 1e-9 && (p.anti_squeezed_db() - 23.0).abs() <= 0.5;
    r.line(
        "9",
        pass,
        format!(
            "rho = {rho:.3}, x = {x:.6}: squeezing {:.3} dB, anti-squeezing {:.3} dB (23 ± 0.5)",
            p.squeezed_db(),
            p.anti_squeezed_db()
        ),
    );
    let thr = calibrate_for_cavity(25e-3, &device()).unwrap().project(&c, 2.0).unwrap();
    let x26 = (40.0 * 0.026f64.powi(2) / thr.p_th_sh).sqrt();
    let p26 = measured_spectrum(&c, x26, &chain, 0.0).unwrap();
    r.info(format!(
        "not reproduced: projected threshold {:.2} mW SH; 26 mW FH gives x = {x26:.3}, {:.2} / {:+.2} dB",
        thr.p_th_sh * 1e3,
        p26.squeezed_db(),
        p26.anti_squeezed_db()
    ));
}

fn criterion_10(r: &mut Report) {
    let mut exact = Vec::new();
    let c = device();
    let nu = c.resonance_frequency() / (2.0 * PI);
    let f = symmetric_grid(3.0 * c.linewidth_hz(), 1001);
    let t: Vec<f64> = f
        .iter()
        .map(|&d| sqzlab_core::cavity::cold_transmittance(&c, hz_to_angular(d)))
        .collect();
    let opts = LorentzianOptions {
        carrier_hz: Some(nu),
        coupling: Coupling::Undercoupled,
    };
    let lor = fit_lorentzian(&f, &t, opts).unwrap();
    exact.push(("lorentzian Q_tot", lor.derived["q_tot"] / 550e3 - 1.0));
    exact.push(("lorentzian Q_int", lor.derived["q_int"] / 950e3 - 1.0));
    let p: Vec<f64> = (1..=50).map(|k| 1e-3 * k as f64).collect();
    let sh: Vec<f64> = p.iter().map(|v| 10.0 * v * v).collect();
    exact.push(("shg eta", fit_shg_quadratic(&p, &sh).unwrap().value("eta_norm").unwrap() / 10.0 - 1.0));
    let y: Vec<f64> = p.iter().map(|v| 3.0 * v + 0.5).collect();
    let lin = fit_linear(&p, &y, false).unwrap();
    exact.push(("linear slope", lin.value("slope").unwrap() / 3.0 - 1.0));
    let kappa_hz = c.linewidth_hz();
    let (x0, eta0) = (0.3098, 0.2211);
    let sq_data = |noise: f64, seed: u64| -> Vec<SqueezingDatum> {
        let mut rng = run_rng(seed, 2);
        let mut d = Vec::new();
        for k in 0..41 {
            let fr = 60e6 + 2e6 * k as f64;
            for q in [Quadrature::Squeezed, Quadrature::AntiSqueezed] {
                d.push(SqueezingDatum {
                    freq_hz: fr,
                    quadrature: q,
                    value: squeezing_model(q, fr, x0, eta0, kappa_hz) * (1.0 + noise * rng.sample::<f64, _>(StandardNormal)),
                    sigma: None,
                });
            }
        }
        d
    };
    let sq = fit_squeezing_model(&sq_data(0.0, 0), KappaMode::Fixed(kappa_hz)).unwrap();
    exact.push(("squeezing x", sq.value("x").unwrap() / x0 - 1.0));
    exact.push(("squeezing eta", sq.value("eta_tot").unwrap() / eta0 - 1.0));
    let curve = transmission_curve(&c, 0.0, &symmetric_grid(4.0 * c.total_rate(), 301)).unwrap();
    let diag = coupling_diagnostic(&curve.detunings, &curve.amplitude_phase).unwrap();
    exact.push(("coupling rho", diag.undercoupled_fit.value("rho").unwrap() / c.escape_efficiency() - 1.0));
    let worst_exact = exact.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
    let branch_ok = diag.regime == CouplingRegime::Undercoupled;

    let (mut wq, mut we, mut wx, mut wn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100 {
        let mut rng = run_rng(seed, 0);
        let noisy: Vec<f64> = t.iter().map(|v| v + 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
        wq = wq.max((fit_lorentzian(&f, &noisy, opts).unwrap().derived["q_tot"] / 550e3 - 1.0).abs());
        let mut rng = run_rng(seed, 1);
        let shn: Vec<f64> = sh.iter().map(|v| v * (1.0 + 0.05 * rng.sample::<f64, _>(StandardNormal))).collect();
        we = we.max((fit_shg_quadratic(&p, &shn).unwrap().value("eta_norm").unwrap() / 10.0 - 1.0).abs());
        let fit = fit_squeezing_model(&sq_data(0.02, seed), KappaMode::Fixed(kappa_hz)).unwrap();
        wx = wx.max((fit.value("x").unwrap() / x0 - 1.0).abs());
        wn = wn.max((fit.value("eta_tot").unwrap() / eta0 - 1.0).abs());
    }
    let pass = worst_exact <= 1e-6 && branch_ok && wq <= 0.01 && we <= 0.05 && wx <= 0.10 && wn <= 0.10;
    r.line(
        "10",
        pass,
        format!(
            "exact-model worst {worst_exact:.1e} (≤ 1e-6); worst of 100 noisy draws: Q {:.2}% (≤ 1%), eta_SHG {:.2}% (≤ 5%), x {:.2}% / eta_tot {:.2}% (≤ 10%)",
            wq * 100.0,
            we * 100.0,
            wx * 100.0,
            wn * 100.0
        ),
    );
}

fn cli(args: &[&str]) -> sqzlab_cli::Report {
    let mut full = vec!["sqzlab"];
    full.extend(args);
    run(Cli::try_parse_from(full).unwrap()).unwrap()
}

fn criterion_11(r: &mut Report) {
    let root = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/device.json");
    let cfg = cfg.to_str().unwrap();
    let quick = [
        "--set", "sim.rbw_hz=2e6", "--set", "sim.segments=100", "--set", "simulate.voltages=[0,10,20,30]",
        "--set", "simulate.lo_powers_mw=[0.4,0.8,1.2]", "--set", "analysis.band_mhz=[40,80]",
    ];
    let mut all_match = true;
    let mut count = 0;
    for mode in ["phase-sweep", "shot-sweep", "spectrum"] {
        let a = root.path().join(format!("{mode}-a"));
        let b = root.path().join(format!("{mode}-b"));
        let mut args = vec!["simulate", "--mode", mode, "--config", cfg, "--out", a.to_str().unwrap(), "--seed", "11"];
        args.extend(quick);
        let first = cli(&args).manifest;
        let replayed = sqzlab_cli::replay(&a.join("manifest.json"), &b);
        let ok = match replayed {
            Ok(rep) => {
                let on_disk = RunManifest::read(&b.join("manifest.json")).unwrap();
                // Byte comparison of every output file, beyond the digests.
                rep.manifest.outputs == first.outputs
                    && on_disk.outputs == first.outputs
                    && first
                        .outputs
                        .iter()
                        .all(|o| std::fs::read(a.join(&o.path)).unwrap() == std::fs::read(b.join(&o.path)).unwrap())
            }
            Err(_) => false,
        };
        count += first.outputs.len();
        all_match &= ok;
    }
    r.line(
        "11",
        all_match,
        format!("replayed phase-sweep, shot-sweep and spectrum manifests: {count} output file(s) byte-identical"),
    );
}

fn main() {
    let only: Option<String> = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut r = Report { failures: 0 };
    let all: [(&str, fn(&mut Report)); 11] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
        ("11", criterion_11),
    ];
    for (id, f) in all {
        if only.as_deref().is_none_or(|o| o == id) {
            f(&mut r);
        }
    }
    if r.failures > 0 {
        println!("{} criterion line(s) failed", r.failures);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
