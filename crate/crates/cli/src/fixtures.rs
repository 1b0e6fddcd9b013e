//! Synthetic input traces computed from the model, in the column layout
//! `sqzlab fit` expects.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use sqzlab_core::cavity::{cold_transmittance, symmetric_grid, transmission_curve};
use sqzlab_core::estimation::{squeezing_model, Quadrature};
use sqzlab_core::homodyne::run_rng;
use sqzlab_core::units::{angular_to_hz, hz_to_angular, nm};
use sqzlab_core::{derive_rates, total_efficiency, CavityParams, Coupling, LossChain};

use crate::args::FixtureKind;
use crate::csvio::{Cell, Table};
use crate::error::CliResult;

/// Operating point of the reference device.
pub const Q_TOT: f64 = 550e3;
pub const Q_INT: f64 = 950e3;
pub const WAVELENGTH_NM: f64 = 1544.4;
pub const SHG_EFFICIENCY: f64 = 10.0;
pub const LINE_SLOPE: f64 = 2.5;
pub const LINE_INTERCEPT: f64 = 0.7;

pub fn reference_cavity() -> CavityParams {
    derive_rates(Q_TOT, Q_INT, nm(WAVELENGTH_NM), Coupling::Undercoupled).expect("reference cavity")
}

/// x and η_tot at 20 mW FH with the reference loss chain.
pub fn reference_squeezing_point() -> (f64, f64) {
    let c = reference_cavity();
    let chain = LossChain::for_cavity(&c, 0.70, 0.75).expect("reference chain");
    ((2.4f64 / 25.0).sqrt(), total_efficiency(&chain).expect("efficiency"))
}

pub fn column_names(kind: FixtureKind) -> &'static [&'static str] {
    match kind {
        FixtureKind::Lorentzian => &["detuning_hz", "transmittance"],
        FixtureKind::Shg => &["p_fh_w", "p_sh_w"],
        FixtureKind::Linear => &["x", "y"],
        FixtureKind::Squeezing => &["freq_hz", "quadrature", "s_linear"],
        FixtureKind::Coupling => &["detuning_hz", "phase_rad"],
    }
}

pub fn file_name(kind: FixtureKind) -> &'static str {
    match kind {
        FixtureKind::Lorentzian => "lorentzian.csv",
        FixtureKind::Shg => "shg.csv",
        FixtureKind::Linear => "linear.csv",
        FixtureKind::Squeezing => "squeezing.csv",
        FixtureKind::Coupling => "coupling.csv",
    }
}

pub fn generate(kind: FixtureKind, seed: u64, noise: f64) -> CliResult<Table> {
    let mut rng = run_rng(seed, kind as u64);
    let mut n = move || noise * rng.sample::<f64, _>(StandardNormal);
    let mut t = Table::new(column_names(kind));
    match kind {
        FixtureKind::Lorentzian => {
            // Laser sweep over ±3 linewidths of the cold resonance.
            let c = reference_cavity();
            for d in symmetric_grid(3.0 * c.linewidth_hz(), 1001) {
                let v = cold_transmittance(&c, hz_to_angular(d)) + n();
                t.push(vec![d.into(), v.into()]);
            }
        }
        FixtureKind::Shg => {
            for k in 1..=50 {
                let p = 1e-3 * k as f64;
                t.push(vec![p.into(), (SHG_EFFICIENCY * p * p * (1.0 + n())).into()]);
            }
        }
        FixtureKind::Linear => {
            for k in 0..=20 {
                let x = 0.1 * k as f64;
                t.push(vec![x.into(), (LINE_SLOPE * x + LINE_INTERCEPT + n()).into()]);
            }
        }
        FixtureKind::Squeezing => {
            let (x, eta) = reference_squeezing_point();
            let kappa_hz = reference_cavity().linewidth_hz();
            for k in 0..41 {
                let f = 60e6 + 2e6 * k as f64;
                for (q, label) in [(Quadrature::Squeezed, "squeezed"), (Quadrature::AntiSqueezed, "anti_squeezed")] {
                    let v = squeezing_model(q, f, x, eta, kappa_hz) * (1.0 + n());
                    t.push(vec![f.into(), label.into(), v.into()]);
                }
            }
        }
        FixtureKind::Coupling => {
            let c = reference_cavity();
            let grid = symmetric_grid(4.0 * c.total_rate(), 301);
            let curve = transmission_curve(&c, 0.0, &grid)?;
            for (d, p) in curve.detunings.iter().zip(&curve.amplitude_phase) {
                let v = p + n();
                // Keep the wrapped (−π, π] convention of a phase detector.
                let w = (v + PI).rem_euclid(2.0 * PI) - PI;
                t.push(vec![angular_to_hz(*d).into(), Cell::Num(w)]);
            }
        }
    }
    Ok(t)
}
