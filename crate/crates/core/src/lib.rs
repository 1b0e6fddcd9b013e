//! Analytical and stochastic model of a sub-threshold χ⁽²⁾ optical parametric
//! oscillator used as a squeezed-vacuum source.
//!
//! The crate is organised by physical subsystem:
//!
//! * [`model`] and [`units`]: parameter types, unit conventions, loss chain.
//! * [`squeezing`]: closed-form output-field transfer and quadrature spectra.
//! * [`cavity`]: cavity transmission with intracavity parametric gain.
//! * [`pump`]: SHG conversion, threshold calibration and pump ratio.
//! * [`laser_noise`]: white-frequency-noise lineshape, intensity and MZI
//!   phase-noise photocurrent spectra.
//! * [`homodyne`]: time-domain Langevin simulation with balanced homodyne
//!   detection and Welch spectral estimation.
//! * [`estimation`]: least-squares fitters for traces produced by the above.
//! * [`config`]: the JSON run-configuration schema.
//!
//! All angular frequencies are in rad/s internally. Public constructors that
//! take Hz or nm say so in their names.

pub mod cavity;
pub mod config;
pub mod error;
pub mod estimation;
pub mod homodyne;
pub mod laser_noise;
pub mod model;
pub mod pump;
pub mod squeezing;
pub mod units;

pub use error::{Error, Result};
pub use model::{
    derive_rates, total_efficiency, CavityParams, Coupling, LaserNoiseModel, LossChain, PumpState,
    SpectrumTrace, SpectrumUnit,
};
