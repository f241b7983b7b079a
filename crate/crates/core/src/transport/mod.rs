//! Homogeneous semiclassical transport of conduction electrons in one
//! dimension.
//!
//! Units: `hbar = k_B = 1` and unit carrier charge `e = 1`. Electrons feel
//! the force `-e E`, so `dk/dt = -e E`, the drift velocity is `-e E tau / m`
//! and the current `j = -e sum v_k f_k dk` is parallel to `E`.

mod phonon;
mod rta;

pub use phonon::{collision_integral_phonon, free_entropy, momentum_relaxation_time, PhononBath, MAX_POINTS};
pub use rta::{current_field_table, equilibrium_for, relax_to_steady_state, step_boltzmann_rta, RtaParams, RtaRun};

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("upwind CFL number {0} exceeds 1")]
    Cfl(f64),
    #[error("dt = {dt} must be below tau / 10 = {}", tau / 10.0)]
    StepTooLarge { dt: f64, tau: f64 },
    #[error("k-grid of {0} points is too large for the pairwise collision integral (max 256)")]
    GridTooLarge(usize),
    #[error("distributions live on different grids")]
    GridMismatch,
    #[error("occupation {0} outside [0, 1]")]
    BadOccupation(f64),
}

/// `sigma = n e^2 tau / m` with `e = 1`.
pub fn drude_conductivity(density: f64, tau: f64, mass: f64) -> Result<f64, TransportError> {
    for (name, v) in [("density", density), ("tau", tau), ("mass", mass)] {
        if !(v > 0.0) {
            return Err(TransportError::NonPositive(name));
        }
    }
    Ok(density * tau / mass)
}

/// Symmetric momentum grid `k_i = (i - (N - 1)/2) dk`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KGrid {
    pub points: usize,
    pub dk: f64,
}

impl KGrid {
    /// `points` values spanning `[-k_max, k_max]`.
    pub fn spanning(points: usize, k_max: f64) -> Self {
        Self { points, dk: 2.0 * k_max / (points - 1) as f64 }
    }

    pub fn k(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.points - 1) as f64) * self.dk
    }

    pub fn k_max(&self) -> f64 {
        self.k(self.points - 1)
    }
}

/// Fermi-Dirac occupation `1 / (exp((e - mu) / T) + 1)`, `T = 0` giving a
/// step.
pub fn fermi_dirac(energy: f64, mu: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return if energy < mu { 1.0 } else if energy > mu { 0.0 } else { 0.5 };
    }
    let x = (energy - mu) / temperature;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Occupations on a [`KGrid`] with dispersion `k^2 / 2m`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistributionFunction {
    pub grid: KGrid,
    pub mass: f64,
    pub values: Vec<f64>,
}

impl DistributionFunction {
    pub fn new(grid: KGrid, mass: f64, values: Vec<f64>) -> Result<Self, TransportError> {
        if !(mass > 0.0) {
            return Err(TransportError::NonPositive("mass"));
        }
        if values.len() != grid.points {
            return Err(TransportError::GridMismatch);
        }
        if let Some(&bad) = values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(TransportError::BadOccupation(bad));
        }
        Ok(Self { grid, mass, values })
    }

    pub fn fermi_dirac(grid: KGrid, mass: f64, mu: f64, temperature: f64) -> Self {
        let values = (0..grid.points).map(|i| fermi_dirac(dispersion(grid.k(i), mass), mu, temperature)).collect();
        Self { grid, mass, values }
    }

    pub fn energy(&self, i: usize) -> f64 {
        dispersion(self.grid.k(i), self.mass)
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.grid.k(i) / self.mass
    }

    /// `sum f dk`
    pub fn density(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dk
    }

    /// `sum v f dk / sum f dk`
    pub fn drift_velocity(&self) -> f64 {
        let n: f64 = self.values.iter().sum();
        if n <= 0.0 {
            return 0.0;
        }
        self.values.iter().enumerate().map(|(i, f)| self.velocity(i) * f).sum::<f64>() / n
    }

    /// `j = -e sum v f dk`
    pub fn current(&self) -> f64 {
        -self.values.iter().enumerate().map(|(i, f)| self.velocity(i) * f).sum::<f64>() * self.grid.dk
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    /// `k -> -k`
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..self.clone() }
    }
}

pub fn dispersion(k: f64, mass: f64) -> f64 {
    k * k / (2.0 * mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drude_is_linear_in_tau() {
        assert_eq!(drude_conductivity(1.0, 1.0, 1.0).unwrap(), 1.0);
        let a = drude_conductivity(2.5, 0.3, 0.7).unwrap();
        let b = drude_conductivity(2.5, 0.6, 0.7).unwrap();
        assert!((b / a - 2.0).abs() < 1e-15);
        assert!(drude_conductivity(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn grid_is_symmetric() {
        let g = KGrid::spanning(64, 6.0);
        for i in 0..64 {
            assert!((g.k(i) + g.k(63 - i)).abs() < 1e-12);
        }
        assert!((g.k_max() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn fermi_dirac_limits() {
        assert_eq!(fermi_dirac(1.0, 0.0, 0.0), 0.0);
        assert_eq!(fermi_dirac(-1.0, 0.0, 0.0), 1.0);
        assert!((fermi_dirac(0.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(fermi_dirac(800.0, 0.0, 1.0) >= 0.0);
        assert!(fermi_dirac(-800.0, 0.0, 1.0) <= 1.0);
    }

    #[test]
    fn occupations_validated() {
        let g = KGrid::spanning(4, 1.0);
        assert!(matches!(DistributionFunction::new(g, 1.0, alloc::vec![0.0, 1.2, 0.0, 0.0]), Err(TransportError::BadOccupation(_))));
        assert!(DistributionFunction::new(g, 1.0, alloc::vec![0.0; 3]).is_err());
    }
}
