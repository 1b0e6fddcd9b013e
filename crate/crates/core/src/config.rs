//! JSON run configuration: one document, one section per subsystem.
//!
//! Unknown keys are rejected and errors carry the dotted path of the
//! offending key. Overrides of the form `a.b.c=value` are applied to the raw
//! JSON before it is typed, so they go through the same validation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::homodyne::SimConfig;
use crate::model::{derive_rates, CavityParams, Coupling, LossChain, PumpState};
use crate::pump::{calibrate_for_cavity, shg_power, ShgModel, ThresholdModel};
use crate::units::{hz_to_angular, nm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub resonance_wavelength_nm: f64,
    pub q_tot: f64,
    /// Intrinsic Q when undercoupled, external Q when overcoupled.
    pub q_int: f64,
    pub coupling: Coupling,
    #[serde(default)]
    pub detuning_hz: f64,
    #[serde(default)]
    pub fsr_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub path_transmission: f64,
    pub detector_qe: f64,
    #[serde(default)]
    pub extra_factors: BTreeMap<String, f64>,
}

fn half_pi() -> f64 {
    PI / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    /// Peak normalised SHG efficiency (1/W).
    pub shg_efficiency_per_w: f64,
    /// (FH wavelength nm, relative response); empty = flat.
    #[serde(default)]
    pub shg_response: Vec<(f64, f64)>,
    pub threshold_sh_mw: f64,
    pub fh_power_mw: f64,
    #[serde(default = "half_pi")]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub band_mhz: [f64; 2],
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { band_mhz: [58.0, 60.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub fmin_mhz: f64,
    pub fmax_mhz: f64,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            fmin_mhz: 60.0,
            fmax_mhz: 140.0,
            points: 81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// LO phase-shifter voltages for the phase sweep (V).
    pub voltages: Vec<f64>,
    /// LO powers for the shot-noise sweep (mW).
    pub lo_powers_mw: Vec<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            voltages: (0..=28).map(|k| 2.5 * k as f64).collect(),
            lo_powers_mw: (1..=8).map(|k| 0.2 * k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserSection {
    pub linewidth_hz: f64,
    pub mzi_fsr_hz: f64,
    pub mzi_path_diff_m: f64,
    /// Optical power at the MZI detector (mW).
    pub optical_power_mw: f64,
    pub detection_efficiency: f64,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub points: usize,
    /// Bins closer than this to an FSR multiple are excluded (Hz).
    pub guard_hz: f64,
}

impl Default for LaserSection {
    fn default() -> Self {
        Self {
            linewidth_hz: 100.0,
            mzi_fsr_hz: 67e6,
            mzi_path_diff_m: 3.0,
            optical_power_mw: 1.0,
            detection_efficiency: 0.8,
            fmin_hz: 1e6,
            fmax_hz: 300e6,
            points: 300,
            guard_hz: 3e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectSection {
    pub q_tot: f64,
    pub q_int: f64,
    pub shg_efficiency_per_w: f64,
    pub fh_powers_mw: Vec<f64>,
    pub target_squeezing_db: f64,
    pub frequency_hz: f64,
}

impl Default for ProjectSection {
    fn default() -> Self {
        Self {
            q_tot: 200e3,
            q_int: 10e6,
            shg_efficiency_per_w: 40.0,
            fh_powers_mw: (0..=60).map(|k| k as f64).collect(),
            target_squeezing_db: -16.0,
            frequency_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmissionSection {
    pub gain_loss_ratios: Vec<f64>,
    /// Half-span of the detuning grid in cold linewidths.
    pub span_linewidths: f64,
    pub points: usize,
}

impl Default for TransmissionSection {
    fn default() -> Self {
        Self {
            gain_loss_ratios: vec![0.0, 0.2, 0.4, 0.6, 0.7, 0.8, 0.9],
            span_linewidths: 3.0,
            points: 601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cavity: CavitySection,
    pub loss: LossSection,
    pub pump: PumpSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub laser: LaserSection,
    #[serde(default)]
    pub project: ProjectSection,
    #[serde(default)]
    pub transmission: TransmissionSection,
}

/// Parse JSON text, reporting syntax errors with line and column.
pub fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))
}

/// Apply `path=value` to a JSON document. `value` is read as JSON when it
/// parses, else as a string. Intermediate objects are created as needed.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not of the form key.path=value")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override '{assignment}' has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("object")
            }
            _ => {
                return Err(Error::Config(format!(
                    "override '{path}': '{}' is not an object",
                    keys[..i].join(".")
                )))
            }
        };
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry((*key).to_string()).or_insert(Value::Null);
    }
    unreachable!("loop returns on the last key")
}

impl RunConfig {
    /// Type a JSON document; errors name the dotted key path.
    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("{path}: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_value(parse_value(text)?)
    }

    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc = parse_value(text)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Self::from_value(doc)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// Build every derived object once so bad values fail at load time.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Domain(m) | Error::InvalidCoupling(m) => Error::Config(m),
            other => other,
        };
        let cavity = self.cavity().map_err(as_config)?;
        self.chain(&cavity).map_err(as_config)?;
        self.shg().map_err(as_config)?;
        self.threshold(&cavity).map_err(as_config)?;
        let [lo, hi] = self.analysis.band_mhz;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::Config(format!("analysis.band_mhz = [{lo}, {hi}] is not an interval")));
        }
        if !(self.spectrum.fmin_mhz >= 0.0 && self.spectrum.fmax_mhz >= self.spectrum.fmin_mhz) {
            return Err(Error::Config("spectrum.fmin_mhz/fmax_mhz do not form an interval".into()));
        }
        if self.spectrum.points == 0 {
            return Err(Error::Config("spectrum.points must be ≥ 1".into()));
        }
        self.sim.validate().map_err(as_config)?;
        Ok(())
    }

    pub fn cavity(&self) -> Result<CavityParams> {
        let c = &self.cavity;
        let mut cav = derive_rates(c.q_tot, c.q_int, nm(c.resonance_wavelength_nm), c.coupling)?
            .with_detuning(hz_to_angular(c.detuning_hz))?;
        if let Some(fsr) = c.fsr_hz {
            cav = cav.with_fsr_hz(fsr)?;
        }
        Ok(cav)
    }

    pub fn chain(&self, cavity: &CavityParams) -> Result<LossChain> {
        let mut chain = LossChain::for_cavity(cavity, self.loss.path_transmission, self.loss.detector_qe)?;
        for (k, &v) in &self.loss.extra_factors {
            chain = chain.with_factor(k.clone(), v)?;
        }
        Ok(chain)
    }

    pub fn shg(&self) -> Result<ShgModel> {
        ShgModel::new(self.pump.shg_efficiency_per_w)?.with_response(self.pump.shg_response.clone())
    }

    pub fn threshold(&self, cavity: &CavityParams) -> Result<ThresholdModel> {
        calibrate_for_cavity(self.pump.threshold_sh_mw * 1e-3, cavity)
    }

    /// SH power (W) from the configured FH power.
    pub fn sh_power(&self, cavity: &CavityParams) -> Result<f64> {
        shg_power(&self.shg()?, self.pump.fh_power_mw * 1e-3, cavity.resonance_wavelength())
    }

    pub fn pump_state(&self, cavity: &CavityParams) -> Result<PumpState> {
        self.threshold(cavity)?
            .pump_state(cavity, self.sh_power(cavity)?, self.pump.phase_rad)
    }

    pub fn band_hz(&self) -> (f64, f64) {
        let [lo, hi] = self.analysis.band_mhz;
        (lo * 1e6, hi * 1e6)
    }
}
