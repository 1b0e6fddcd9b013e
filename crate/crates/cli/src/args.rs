use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "sqzlab", version, about = "Squeezed-light OPO model, simulator and fitters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command that reads a run configuration.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config key by dotted path, e.g. `--set sim.segments=400`.
    #[arg(long = "set", value_name = "KEY.PATH=VALUE")]
    pub set: Vec<String>,
    /// Simulation seed; overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Closed-form squeezing and anti-squeezing spectra after the loss chain.
    Spectrum(SpectrumArgs),
    /// Time-domain homodyne simulation.
    Simulate(SimulateArgs),
    /// Fit a model to a CSV trace.
    Fit(FitArgs),
    /// On-chip projection for an improved device versus FH power.
    Project(ProjectArgs),
    /// Probe transmission with parametric gain.
    Transmission(PlainArgs),
    /// Laser phase-noise chain through an unbalanced MZI.
    LaserNoise(PlainArgs),
    /// Synthetic input traces generated from the model.
    Fixture(FixtureArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Project(_) => "project",
            Command::Transmission(_) => "transmission",
            Command::LaserNoise(_) => "laser-noise",
            Command::Fixture(_) => "fixture",
            Command::Replay(_) => "replay",
        }
    }

    pub fn config_args(&self) -> Option<&ConfigArgs> {
        match self {
            Command::Spectrum(a) => Some(&a.cfg),
            Command::Simulate(a) => Some(&a.cfg),
            Command::Project(a) => Some(&a.cfg),
            Command::Transmission(a) | Command::LaserNoise(a) => Some(&a.cfg),
            Command::Fit(_) | Command::Fixture(_) | Command::Replay(_) => None,
        }
    }

    pub fn out_dir(&self) -> &PathBuf {
        match self {
            Command::Spectrum(a) => &a.out.out,
            Command::Simulate(a) => &a.out.out,
            Command::Fit(a) => &a.out.out,
            Command::Project(a) => &a.out.out,
            Command::Transmission(a) | Command::LaserNoise(a) => &a.out.out,
            Command::Fixture(a) => &a.out.out,
            Command::Replay(a) => &a.out.out,
        }
    }

    pub fn set_out_dir(&mut self, dir: PathBuf) {
        let slot = match self {
            Command::Spectrum(a) => &mut a.out.out,
            Command::Simulate(a) => &mut a.out.out,
            Command::Fit(a) => &mut a.out.out,
            Command::Project(a) => &mut a.out.out,
            Command::Transmission(a) | Command::LaserNoise(a) => &mut a.out.out,
            Command::Fixture(a) => &mut a.out.out,
            Command::Replay(a) => &mut a.out.out,
        };
        *slot = dir;
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PlainArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Lowest frequency (MHz); defaults to `spectrum.fmin_mhz`.
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Highest frequency (MHz); defaults to `spectrum.fmax_mhz`.
    #[arg(long)]
    pub fmax: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    PhaseSweep,
    ShotSweep,
    Spectrum,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum)]
    pub mode: SimMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    Lorentzian,
    Shg,
    Linear,
    Squeezing,
    Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingArg {
    Under,
    Over,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum)]
    pub model: FitModel,
    /// Input CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Carrier wavelength for Q and linewidth conversions (lorentzian).
    #[arg(long, default_value_t = 1544.4)]
    pub wavelength_nm: f64,
    /// Coupling branch used to split the fitted Q (lorentzian).
    #[arg(long, value_enum, default_value_t = CouplingArg::Under)]
    pub coupling: CouplingArg,
    /// Total linewidth κ/2π (squeezing); defaults to the one implied by `--q-tot`.
    #[arg(long)]
    pub kappa_hz: Option<f64>,
    #[arg(long, default_value_t = 550e3)]
    pub q_tot: f64,
    /// Fit the linewidth too (squeezing).
    #[arg(long)]
    pub free_kappa: bool,
    /// Line through the origin (linear).
    #[arg(long)]
    pub through_origin: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// FH powers in mW: `start:stop:step` or a comma list. Defaults to
    /// `project.fh_powers_mw`.
    #[arg(long)]
    pub power_grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    Lorentzian,
    Shg,
    Linear,
    Squeezing,
    Coupling,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FixtureArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum)]
    pub kind: FixtureKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise level: additive for lorentzian/coupling/linear, relative for
    /// shg/squeezing.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Parse a `--power-grid` value (mW).
pub fn parse_power_grid(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| -> Result<f64, String> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("'{s}' is not a number"))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, s] = parts[..] else {
            return Err(format!("power grid '{text}' must be start:stop:step"));
        };
        let (a, b, s) = (num(a)?, num(b)?, num(s)?);
        if !(s > 0.0) || b < a {
            return Err(format!("power grid '{text}' needs stop ≥ start and step > 0"));
        }
        let n = ((b - a) / s + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| a + s * k as f64).collect())
    } else {
        text.split(',').map(num).collect()
    }
}
