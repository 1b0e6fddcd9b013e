//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Group index of the thin-film waveguide geometry.
pub const DEFAULT_GROUP_INDEX: f64 = 2.2;

pub fn hz_to_angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Optical angular frequency (rad/s) of a vacuum wavelength (m).
pub fn wavelength_to_angular(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

/// Inverse of [`wavelength_to_angular`].
pub fn angular_to_wavelength(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

pub fn nm(value_nm: f64) -> f64 {
    value_nm * 1e-9
}

pub fn to_nm(value_m: f64) -> f64 {
    value_m * 1e9
}

/// Photon energy ħω (J) at a vacuum wavelength (m).
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Noise-power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn telecom_wavelength_frequency() {
        let f = angular_to_hz(wavelength_to_angular(nm(1544.4)));
        assert!((f - 194.116_e12).abs() / f < 1e-5);
    }

    #[test]
    fn db_conventions() {
        assert_eq!(to_db(1.0), 0.0);
        assert!((to_db(2.0) - 3.0103).abs() < 1e-4);
        assert!((from_db(-16.0) - 0.025_118_864).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn wavelength_round_trip(lambda_nm in 200.0f64..20_000.0) {
            let lambda = nm(lambda_nm);
            let back = angular_to_wavelength(wavelength_to_angular(lambda));
            prop_assert!(((back - lambda) / lambda).abs() < 1e-12);
        }

        #[test]
        fn hz_round_trip(f in 1e-3f64..1e16) {
            let back = angular_to_hz(hz_to_angular(f));
            prop_assert!(((back - f) / f).abs() < 1e-12);
        }
    }
}
