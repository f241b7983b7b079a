//! Heat-bath localization of a single electron in the hybrid
//! bound-state / conduction-band picture.
//!
//! Units: `hbar = k_B = 1`. The localization operator is
//! `A = x / lambda + lambda d/dx` with `lambda = 1 / sqrt(4 m T)`.

mod density;
mod feedback;
mod grid;
mod master;

pub use density::HybridDensityMatrix;
pub use feedback::{evolve_feedback_nlse, FeedbackKernel, FeedbackRun};
pub use grid::{derivative, kinetic, position, wavenumber_quantum, Grid, LocalizationModel, LocalizationOperator, Stencil};
pub use master::{blockdiag_distance, dissipator, evolve_master, evolve_master_sampled, MasterRun, Snapshot};

#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BathError {
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("gamma must be non-negative, got {0}")]
    BadGamma(f64),
    #[error("mass must be positive, got {0}")]
    BadMass(f64),
    #[error("grid spacing {dx} exceeds lambda/4 = {}", lambda / 4.0)]
    GridTooCoarse { dx: f64, lambda: f64 },
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("state does not match the grid ({0})")]
    GridMismatch(usize),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("conduction block is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("negative population {0:e} on the diagonal")]
    NegativePopulation(f64),
    #[error("wavefunction norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("master equation integration failed (stiff or singular): {0}")]
    Stiff(#[from] NumericsError),
}

/// Bath parameters in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BathSpec {
    pub temperature: f64,
    pub gamma: f64,
    pub mass: f64,
}

impl BathSpec {
    pub fn new(temperature: f64, gamma: f64, mass: f64) -> Result<Self, BathError> {
        let s = Self { temperature, gamma, mass };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), BathError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(BathError::BadTemperature(self.temperature));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(BathError::BadGamma(self.gamma));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(BathError::BadMass(self.mass));
        }
        Ok(())
    }

    /// Localization length `1 / sqrt(4 m T)`.
    pub fn lambda(&self) -> f64 {
        1.0 / (4.0 * self.mass * self.temperature).sqrt()
    }

    /// `1 / T`.
    pub fn thermal_time(&self) -> f64 {
        1.0 / self.temperature
    }
}

impl Default for BathSpec {
    /// `T = 1`, `gamma = 1`, `m = 1/4`, so `lambda = 1`.
    fn default() -> Self {
        Self { temperature: 1.0, gamma: 1.0, mass: 0.25 }
    }
}

/// SI constants (exact values of the 2019 SI plus CODATA 2018 electron mass).
pub mod si {
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = PLANCK / (2.0 * core::f64::consts::PI);
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Particle {
    /// Rest mass in kg.
    Massive { mass: f64 },
    /// Propagation speed in m/s.
    Massless { speed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThermalScales {
    /// Thermal wavelength, m.
    pub lambda_th: f64,
    /// `hbar / (k_B T)`, s.
    pub t_th: f64,
}

/// Thermal wavelength and thermal time in SI units, `temperature` in kelvin.
pub fn thermal_scales(temperature: f64, particle: Particle) -> Result<ThermalScales, BathError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(BathError::BadTemperature(temperature));
    }
    let kt = si::BOLTZMANN * temperature;
    let lambda_th = match particle {
        Particle::Massive { mass } => {
            if !(mass > 0.0) {
                return Err(BathError::BadMass(mass));
            }
            si::PLANCK / (2.0 * core::f64::consts::PI * mass * kt).sqrt()
        }
        Particle::Massless { speed } => core::f64::consts::PI.powf(2.0 / 3.0) * si::HBAR * speed / kt,
    };
    Ok(ThermalScales { lambda_th, t_th: si::HBAR / kt })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_is_one_for_defaults() {
        assert!((BathSpec::default().lambda() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(BathSpec::new(0.0, 1.0, 1.0).is_err());
        assert!(BathSpec::new(1.0, -1.0, 1.0).is_err());
        assert!(BathSpec::new(1.0, 0.0, 0.0).is_err());
        assert!(BathSpec::new(1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn massive_wavelength_halves_at_four_times_temperature() {
        let p = Particle::Massive { mass: si::ELECTRON_MASS };
        let a = thermal_scales(75.0, p).unwrap();
        let b = thermal_scales(300.0, p).unwrap();
        assert!((a.lambda_th / b.lambda_th - 2.0).abs() < 1e-12);
    }

    #[test]
    fn electron_at_room_temperature() {
        let s = thermal_scales(300.0, Particle::Massive { mass: si::ELECTRON_MASS }).unwrap();
        // h / sqrt(2 pi m k T) evaluated independently
        let expected = 6.62607015e-34 / (2.0 * core::f64::consts::PI * 9.1093837015e-31 * 1.380649e-23 * 300.0f64).sqrt();
        assert!((s.lambda_th - expected).abs() / expected < 1e-12);
        assert!((s.lambda_th - 4.3e-9).abs() < 0.05e-9);
        assert!((s.t_th - 2.546e-14).abs() < 0.01e-14);
    }

    #[test]
    fn massless_scale_and_bad_temperature() {
        let s = thermal_scales(300.0, Particle::Massless { speed: si::SPEED_OF_LIGHT }).unwrap();
        let expected = core::f64::consts::PI.powf(2.0 / 3.0) * si::HBAR * si::SPEED_OF_LIGHT / (si::BOLTZMANN * 300.0);
        assert!((s.lambda_th / expected - 1.0).abs() < 1e-14);
        assert!(thermal_scales(0.0, Particle::Massless { speed: 1.0 }).is_err());
        assert!(thermal_scales(-5.0, Particle::Massive { mass: 1.0 }).is_err());
    }
}
