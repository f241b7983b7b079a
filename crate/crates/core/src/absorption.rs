//! Photon absorption: coherent exchange of amplitude between the state with
//! the photon present and all electrons bound (`alpha`) and the states where
//! one detector site holds an excited electron (`betas`).
//!
//! With energy conservation imposed and the momentum continuum folded into a
//! single effective amplitude, every configuration reduces to
//!
//! ```text
//! i d(alpha)/dt  = sum_n conj(g_n) beta_n
//! i d(beta_n)/dt = g_n alpha
//! ```
//!
//! (hbar = 1). `N` equivalent electrons enter through `g = sqrt(N) g_1`, and a
//! detector array through one coupling per site.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::{integrate_ode, NumericsError, Tolerance, C64};

/// Tolerance on `|alpha|^2 + sum |beta_n|^2 - 1` for inputs.
pub const NORM_TOLERANCE: f64 = 1e-9;

const ODE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AbsorptionError {
    #[error("state is not normalized (|alpha|^2 + sum|beta|^2 = {0})")]
    NotNormalized(f64),
    #[error("state has {state} detector sites but the coupling has {coupling}")]
    SiteMismatch { state: usize, coupling: usize },
    #[error("two-level evolution needs exactly one site, got {0}")]
    NotSingleSite(usize),
    #[error("number of equivalent electrons must be at least 1")]
    NoElectrons,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Amplitudes of the photon-detector superposition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmplitudeState {
    /// Photon present, every electron bound.
    pub alpha: C64,
    /// One excited electron at detector site `n`.
    pub betas: Vec<C64>,
}

impl AmplitudeState {
    /// Photon present, `sites` empty detector sites.
    pub fn photon(sites: usize) -> Self {
        Self { alpha: C64::new(1.0, 0.0), betas: vec![C64::new(0.0, 0.0); sites] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.betas.iter().map(|b| b.norm_sqr()).sum::<f64>()
    }

    pub fn check_normalized(&self) -> Result<(), AbsorptionError> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(AbsorptionError::NotNormalized(n));
        }
        Ok(())
    }

    /// `|beta_n|^2`: the probability weight of each detector block.
    pub fn click_weights(&self) -> Vec<f64> {
        self.betas.iter().map(|b| b.norm_sqr()).collect()
    }

    /// `|alpha|^2`: weight of the photon surviving unabsorbed.
    pub fn no_click_weight(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Effective couplings of the photon to each detector site.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CouplingModel {
    /// `g~_n` (energy units).
    pub g_tilde: Vec<C64>,
    /// Interaction window.
    pub tau: f64,
    /// Photon frequency, bound and excited level energies. Energy conservation
    /// removes them from the dynamics; they are carried for reporting.
    pub omega_k: f64,
    pub eps_g: f64,
    pub eps_e: f64,
}

impl CouplingModel {
    pub fn single(g: C64, tau: f64) -> Self {
        Self { g_tilde: vec![g], tau, omega_k: 0.0, eps_g: 0.0, eps_e: 0.0 }
    }

    /// `N` equivalent electrons with per-electron coupling `g`: one site with
    /// `g~ = sqrt(N) g`.
    pub fn equivalent_electrons(g: C64, n_electrons: u64, tau: f64) -> Result<Self, AbsorptionError> {
        if n_electrons == 0 {
            return Err(AbsorptionError::NoElectrons);
        }
        Ok(Self::single(g * (n_electrons as f64).sqrt(), tau))
    }

    /// `g~_n = scale * A_n`: couplings proportional to the photon amplitude at
    /// each detector, with one global constant.
    pub fn from_amplitudes(amplitudes: &[C64], scale: f64, tau: f64) -> Self {
        Self { g_tilde: amplitudes.iter().map(|a| a * scale).collect(), tau, omega_k: 0.0, eps_g: 0.0, eps_e: 0.0 }
    }

    pub fn with_energies(mut self, omega_k: f64, eps_g: f64, eps_e: f64) -> Self {
        self.omega_k = omega_k;
        self.eps_g = eps_g;
        self.eps_e = eps_e;
        self
    }

    pub fn sites(&self) -> usize {
        self.g_tilde.len()
    }

    /// `sqrt(sum |g~_n|^2)`: the coupling of the single bright mode.
    pub fn effective_coupling(&self) -> f64 {
        self.g_tilde.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Integrate the coupled amplitude equations for any number of sites.
///
/// Negative `t` runs the dynamics backwards, which inverts a forward run.
pub fn evolve_detector_array(state: &AmplitudeState, coupling: &CouplingModel, t: f64) -> Result<AmplitudeState, AbsorptionError> {
    state.check_normalized()?;
    if state.betas.len() != coupling.g_tilde.len() {
        return Err(AbsorptionError::SiteMismatch { state: state.betas.len(), coupling: coupling.g_tilde.len() });
    }
    let g = &coupling.g_tilde;
    let mut y = Vec::with_capacity(g.len() + 1);
    y.push(state.alpha);
    y.extend_from_slice(&state.betas);
    let minus_i = C64::new(0.0, -1.0);
    let (y, _) = integrate_ode(&y, 0.0, t, Tolerance::uniform(ODE_TOL), |_, y: &[C64], dy: &mut [C64]| {
        let alpha = y[0];
        let mut drive = C64::new(0.0, 0.0);
        for (gn, bn) in g.iter().zip(&y[1..]) {
            drive += gn.conj() * bn;
        }
        dy[0] = minus_i * drive;
        for (d, gn) in dy[1..].iter_mut().zip(g) {
            *d = minus_i * gn * alpha;
        }
    })?;
    Ok(AmplitudeState { alpha: y[0], betas: y[1..].to_vec() })
}

/// One electron, one detector.
pub fn evolve_two_level(state: &AmplitudeState, coupling: &CouplingModel, t: f64) -> Result<AmplitudeState, AbsorptionError> {
    if coupling.sites() != 1 {
        return Err(AbsorptionError::NotSingleSite(coupling.sites()));
    }
    evolve_detector_array(state, coupling, t)
}

/// `N` equivalent electrons, each coupled with `g`. The state carries the
/// collective amplitude `beta~`; see [`per_electron_beta`].
pub fn evolve_equivalent_electrons(state: &AmplitudeState, g: C64, n_electrons: u64, t: f64) -> Result<AmplitudeState, AbsorptionError> {
    let coupling = CouplingModel::equivalent_electrons(g, n_electrons, 0.0)?;
    evolve_two_level(state, &coupling, t)
}

/// Per-electron amplitude `beta~ / sqrt(N)` (the common phase factor of the
/// electron positions is absorbed into `beta~`).
pub fn per_electron_beta(beta_tilde: C64, n_electrons: u64) -> Result<C64, AbsorptionError> {
    if n_electrons == 0 {
        return Err(AbsorptionError::NoElectrons);
    }
    Ok(beta_tilde / (n_electrons as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn no_coupling_no_dynamics() {
        let s = evolve_two_level(&AmplitudeState::photon(1), &CouplingModel::single(c(0.0, 0.0), 1.0), 3.7).unwrap();
        assert_eq!(s.alpha, c(1.0, 0.0));
        assert_eq!(s.betas[0], c(0.0, 0.0));
    }

    #[test]
    fn quarter_period_transfers_everything() {
        let g = c(0.3, 0.4); // |g| = 0.5
        let t = FRAC_PI_2 / 0.5;
        let s = evolve_two_level(&AmplitudeState::photon(1), &CouplingModel::single(g, t), t).unwrap();
        assert!(s.alpha.norm() < 1e-6);
        assert!((s.betas[0].norm() - 1.0).abs() < 1e-6);
        // beta = -i e^{i arg g} sin(|g| t)
        let expected = c(0.0, -1.0) * (g / g.norm());
        assert!((s.betas[0] - expected).norm() < 1e-6);
    }

    #[test]
    fn eighth_period_splits_evenly() {
        let g = c(2.0, 0.0);
        let s = evolve_two_level(&AmplitudeState::photon(1), &CouplingModel::single(g, 1.0), FRAC_PI_4 / 2.0).unwrap();
        assert!((s.alpha.norm_sqr() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn unnormalized_input_rejected() {
        let s = AmplitudeState { alpha: c(1.0, 0.0), betas: vec![c(0.1, 0.0)] };
        assert!(matches!(evolve_two_level(&s, &CouplingModel::single(c(1.0, 0.0), 1.0), 1.0), Err(AbsorptionError::NotNormalized(_))));
    }

    #[test]
    fn two_level_requires_one_site() {
        let coupling = CouplingModel::from_amplitudes(&[c(1.0, 0.0), c(1.0, 0.0)], 1.0, 1.0);
        assert!(matches!(evolve_two_level(&AmplitudeState::photon(2), &coupling, 1.0), Err(AbsorptionError::NotSingleSite(2))));
    }

    #[test]
    fn site_count_must_match() {
        let coupling = CouplingModel::from_amplitudes(&[c(1.0, 0.0), c(1.0, 0.0)], 1.0, 1.0);
        assert!(matches!(evolve_detector_array(&AmplitudeState::photon(3), &coupling, 1.0), Err(AbsorptionError::SiteMismatch { .. })));
    }

    #[test]
    fn zero_electrons_rejected() {
        assert!(matches!(evolve_equivalent_electrons(&AmplitudeState::photon(1), c(1.0, 0.0), 0, 1.0), Err(AbsorptionError::NoElectrons)));
        assert!(per_electron_beta(c(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn one_electron_reproduces_two_level() {
        let g = c(0.7, -0.2);
        let a = evolve_equivalent_electrons(&AmplitudeState::photon(1), g, 1, 1.3).unwrap();
        let b = evolve_two_level(&AmplitudeState::photon(1), &CouplingModel::single(g, 1.3), 1.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn four_electrons_double_the_coupling() {
        let g = c(0.25, 0.1);
        for &t in &[0.3, 1.1, 2.9] {
            let a = evolve_equivalent_electrons(&AmplitudeState::photon(1), g, 4, t).unwrap();
            let b = evolve_two_level(&AmplitudeState::photon(1), &CouplingModel::single(g * 2.0, t), t).unwrap();
            assert!((a.alpha - b.alpha).norm() < 1e-12);
            assert!((a.betas[0] - b.betas[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn million_electrons_complete_transfer() {
        let n = 1_000_000u64;
        let g = c(1e-3, 0.0);
        let t = FRAC_PI_2 / (g.norm() * (n as f64).sqrt());
        let s = evolve_equivalent_electrons(&AmplitudeState::photon(1), g, n, t).unwrap();
        assert!((s.betas[0].norm() - 1.0).abs() < 1e-6);
        let per = per_electron_beta(s.betas[0], n).unwrap();
        assert!((per.norm() - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn zero_couplings_leave_array_unchanged() {
        let coupling = CouplingModel::from_amplitudes(&[c(0.0, 0.0); 4], 1.0, 1.0);
        let s = evolve_detector_array(&AmplitudeState::photon(4), &coupling, 2.0).unwrap();
        assert_eq!(s, AmplitudeState::photon(4));
    }

    #[test]
    fn amplitudes_follow_their_couplings() {
        let g = c(0.4, 0.0);
        let coupling = CouplingModel { g_tilde: vec![g, g * 2.0], tau: 1.0, omega_k: 0.0, eps_g: 0.0, eps_e: 0.0 };
        for &t in &[0.1, 0.5, 1.0, 1.7] {
            let s = evolve_detector_array(&AmplitudeState::photon(2), &coupling, t).unwrap();
            assert!((s.betas[1].norm() / s.betas[0].norm() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn three_equal_sites_act_like_sqrt3_coupling() {
        let g = 0.5;
        let coupling = CouplingModel::from_amplitudes(&[c(1.0, 0.0); 3], g, 1.0);
        let big = g * 3f64.sqrt();
        for k in 1..=8 {
            let t = 0.25 * k as f64;
            let s = evolve_detector_array(&AmplitudeState::photon(3), &coupling, t).unwrap();
            assert!((s.alpha.norm() - (big * t).cos().abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_run_inverts_forward_run() {
        let coupling = CouplingModel::from_amplitudes(&[c(0.3, 0.1), c(-0.2, 0.5), c(0.05, 0.0)], 1.0, 1.0);
        let start = AmplitudeState::photon(3);
        let fwd = evolve_detector_array(&start, &coupling, 2.3).unwrap();
        let back = evolve_detector_array(&fwd, &coupling, -2.3).unwrap();
        assert!((back.alpha - start.alpha).norm() < 1e-8);
        for b in back.betas {
            assert!(b.norm() < 1e-8);
        }
    }
}
