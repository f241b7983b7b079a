//! Single photons through a double slit onto a row of photodiodes.
//!
//! Each photon is absorbed coherently by the whole array (amplitudes
//! `beta_n ~ A(x_n)`), then the localization bath collapses the superposition
//! onto one detector block or onto the bound level (no click).

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::absorption::{evolve_detector_array, AbsorptionError, AmplitudeState, CouplingModel};
use crate::bath::LocalizationModel;
use crate::numerics::{rng_split, RngStream, C64};
use crate::unraveling::{run_trajectory, CollapseOutcome, FactorizedCollapse, HybridState, Scheme, TrajectoryOptions, UnravelError};

/// Screen distance over slit separation below which the far-field formula is
/// flagged.
pub const FAR_FIELD_RATIO: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TwoSlitError {
    #[error("geometry parameter `{0}` must be positive")]
    BadGeometry(&'static str),
    #[error("detector array is empty")]
    EmptyArray,
    #[error("all detector amplitudes vanish")]
    ZeroAmplitudes,
    #[error("positions and amplitudes differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least one photon is required")]
    NoPhotons,
    #[error("{0}")]
    Absorption(#[from] AbsorptionError),
    #[error("{0}")]
    Unravel(#[from] UnravelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlitGeometry {
    pub slit_separation: f64,
    pub slit_width: f64,
    pub screen_distance: f64,
    pub wavelength: f64,
}

impl SlitGeometry {
    pub fn validate(&self) -> Result<(), TwoSlitError> {
        for (name, v) in [
            ("slit_separation", self.slit_separation),
            ("slit_width", self.slit_width),
            ("screen_distance", self.screen_distance),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TwoSlitError::BadGeometry(name));
            }
        }
        Ok(())
    }

    pub fn far_field_warning(&self) -> bool {
        self.screen_distance < FAR_FIELD_RATIO * self.slit_separation
    }

    /// Distance between bright fringes, `lambda L / d`.
    pub fn fringe_spacing(&self) -> f64 {
        self.wavelength * self.screen_distance / self.slit_separation
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Unnormalized Fraunhofer amplitude
/// `cos(pi d x / (lambda L)) sinc(pi a x / (lambda L))`.
pub fn slit_amplitude(geom: &SlitGeometry, x: f64) -> C64 {
    let k = PI * x / (geom.wavelength * geom.screen_distance);
    C64::new((k * geom.slit_separation).cos() * sinc(k * geom.slit_width), 0.0)
}

/// One-dimensional pixels on the screen.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorArray {
    pub positions: Vec<f64>,
    pub pixel_width: f64,
    /// Normalized so that `sum |A_n|^2 = 1`.
    pub amplitudes: Vec<C64>,
}

impl DetectorArray {
    pub fn from_amplitudes(positions: Vec<f64>, pixel_width: f64, amplitudes: &[C64]) -> Result<Self, TwoSlitError> {
        if positions.is_empty() {
            return Err(TwoSlitError::EmptyArray);
        }
        if positions.len() != amplitudes.len() {
            return Err(TwoSlitError::LengthMismatch(positions.len(), amplitudes.len()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(TwoSlitError::ZeroAmplitudes);
        }
        Ok(Self { positions, pixel_width, amplitudes: amplitudes.iter().map(|a| a / norm).collect() })
    }

    /// `detectors` equal pixels tiling `[-half_width, half_width]`, sampled
    /// at their centres.
    pub fn tiled(geom: &SlitGeometry, detectors: usize, half_width: f64) -> Result<Self, TwoSlitError> {
        geom.validate()?;
        if detectors == 0 {
            return Err(TwoSlitError::EmptyArray);
        }
        let w = 2.0 * half_width / detectors as f64;
        let positions: Vec<f64> = (0..detectors).map(|n| -half_width + (n as f64 + 0.5) * w).collect();
        let amps: Vec<C64> = positions.iter().map(|&x| slit_amplitude(geom, x) * w.sqrt()).collect();
        Self::from_amplitudes(positions, w, &amps)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `|A_n|^2`.
    pub fn born_weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PhotonOutcome {
    /// Zero-based detector index.
    Click(usize),
    NoClick,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClickHistogram {
    pub counts: Vec<u64>,
    pub total_photons: u64,
    pub no_click_count: u64,
    pub unresolved_count: u64,
    /// Clicks whose ground block crossed the threshold before the jump.
    pub false_alarms: u64,
}

impl ClickHistogram {
    pub fn new(detectors: usize) -> Self {
        Self { counts: alloc::vec![0; detectors], ..Default::default() }
    }

    pub fn record(&mut self, outcome: PhotonOutcome) {
        self.total_photons += 1;
        match outcome {
            PhotonOutcome::Click(n) => self.counts[n] += 1,
            PhotonOutcome::NoClick => self.no_click_count += 1,
            PhotonOutcome::Unresolved => self.unresolved_count += 1,
        }
    }

    /// Order-independent merge.
    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_photons += other.total_photons;
        self.no_click_count += other.no_click_count;
        self.unresolved_count += other.unresolved_count;
        self.false_alarms += other.false_alarms;
    }

    pub fn clicks(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.clicks() + self.no_click_count + self.unresolved_count == self.total_photons
    }

    /// Pearson statistic of the click counts against `weights` (normalized
    /// internally), conditioned on clicking. Bins with zero expectation are
    /// skipped.
    pub fn goodness_of_fit(&self, weights: &[f64]) -> GoodnessOfFit {
        let clicks = self.clicks() as f64;
        let wsum: f64 = weights.iter().sum();
        let mut chi2 = 0.0;
        let mut bins = 0usize;
        let mut max_z = 0.0f64;
        for (&c, &w) in self.counts.iter().zip(weights) {
            let p = w / wsum;
            let e = clicks * p;
            if e <= 0.0 {
                continue;
            }
            bins += 1;
            chi2 += (c as f64 - e).powi(2) / e;
            let sigma = (clicks * p * (1.0 - p)).sqrt();
            if sigma > 0.0 {
                max_z = max_z.max((c as f64 - e).abs() / sigma);
            }
        }
        GoodnessOfFit { chi2, dof: bins.saturating_sub(1), max_z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoodnessOfFit {
    pub chi2: f64,
    pub dof: usize,
    /// Largest `|observed - expected|` in binomial standard deviations.
    pub max_z: f64,
}

/// Everything shared by the photons of one run.
#[derive(Debug, Clone)]
pub struct TwoSlitExperiment {
    pub array: DetectorArray,
    pub coupling: CouplingModel,
    /// Amplitudes after the interaction window.
    pub absorbed: AmplitudeState,
    /// `[|alpha|^2, |beta_1|^2, ..]`
    pub block_weights: Vec<f64>,
    pub model: LocalizationModel,
    pub packet: Vec<C64>,
    pub options: TrajectoryOptions,
    collapse: FactorizedCollapse,
}

impl TwoSlitExperiment {
    /// `g~_n = coupling_scale * A_n`; photons interact for `tau`, then the
    /// excited electron occupies `packet` in the conduction band.
    pub fn new(array: DetectorArray, coupling_scale: f64, tau: f64, model: LocalizationModel, packet: Vec<C64>, options: TrajectoryOptions) -> Result<Self, TwoSlitError> {
        if array.is_empty() {
            return Err(TwoSlitError::EmptyArray);
        }
        let coupling = CouplingModel::from_amplitudes(&array.amplitudes, coupling_scale, tau);
        let absorbed = evolve_detector_array(&AmplitudeState::photon(array.len()), &coupling, tau)?;
        let mut block_weights = Vec::with_capacity(array.len() + 1);
        block_weights.push(absorbed.alpha.norm_sqr());
        block_weights.extend(absorbed.betas.iter().map(|b| b.norm_sqr()));
        let total: f64 = block_weights.iter().sum();
        for w in &mut block_weights {
            *w /= total;
        }
        let collapse = FactorizedCollapse::new(&model, &packet, &options)?;
        Ok(Self { array, coupling, absorbed, block_weights, model, packet, options, collapse })
    }

    pub fn no_click_probability(&self) -> f64 {
        self.block_weights[0]
    }

    /// One photon on stream `rng` (jump unraveling, factorized).
    pub fn simulate_photon(&self, rng: &mut RngStream) -> (PhotonOutcome, bool) {
        let out = self.collapse.collapse(&self.block_weights, rng);
        let outcome = match out.block {
            Some(0) => PhotonOutcome::NoClick,
            Some(n) => PhotonOutcome::Click(n - 1),
            None => PhotonOutcome::Unresolved,
        };
        (outcome, out.false_alarm)
    }

    /// `alpha |g> + sum_n beta_n |packet>_n` after absorption.
    pub fn photon_state(&self) -> Result<HybridState, TwoSlitError> {
        let s = self.absorbed.norm_sqr().sqrt();
        let c: Vec<C64> = self.absorbed.betas.iter().map(|b| b / s).collect();
        Ok(HybridState::detector(self.absorbed.alpha / s, &c, &self.packet, &self.model.grid)?)
    }

    /// Raw factorized outcome for one photon: block 0 is no click, block `n`
    /// detector `n - 1`.
    pub fn collapse_photon(&self, rng: &mut RngStream) -> CollapseOutcome {
        self.collapse.collapse(&self.block_weights, rng)
    }

    /// One photon through a general trajectory of `scheme` over all `M + 1`
    /// blocks (cross-check path; cost grows with `M`).
    pub fn simulate_photon_with(&self, scheme: Scheme, rng: &mut RngStream) -> Result<PhotonOutcome, TwoSlitError> {
        let init = self.photon_state()?;
        let tr = run_trajectory(scheme, &self.model, &init, &self.options, rng)?;
        Ok(match tr.final_block {
            Some(0) => PhotonOutcome::NoClick,
            Some(n) => PhotonOutcome::Click(n - 1),
            None => PhotonOutcome::Unresolved,
        })
    }

    /// Photons `range` on streams `(master_seed, i)`.
    pub fn run_range(&self, master_seed: u64, range: core::ops::Range<u64>) -> ClickHistogram {
        let mut h = ClickHistogram::new(self.array.len());
        for i in range {
            let (o, fa) = self.simulate_photon(&mut rng_split(master_seed, i));
            h.record(o);
            if fa {
                h.false_alarms += 1;
            }
        }
        h
    }

    pub fn run_experiment(&self, n_photons: u64, master_seed: u64) -> Result<ClickHistogram, TwoSlitError> {
        if n_photons == 0 {
            return Err(TwoSlitError::NoPhotons);
        }
        Ok(self.run_range(master_seed, 0..n_photons))
    }

    /// `(x_n, |A_n|^2, expected clicks, observed clicks)` per detector, with
    /// the expectation conditioned on the observed click total.
    pub fn histogram_rows(&self, h: &ClickHistogram) -> Vec<(f64, f64, f64, u64)> {
        let clicks = h.clicks() as f64;
        self.array
            .positions
            .iter()
            .zip(self.array.born_weights())
            .zip(&h.counts)
            .map(|((&x, w), &c)| (x, w, w * clicks, c))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorption::evolve_two_level;
    use crate::bath::{BathSpec, Grid, Stencil};

    fn geom() -> SlitGeometry {
        SlitGeometry { slit_separation: 1e-4, slit_width: 2e-5, screen_distance: 1.0, wavelength: 5e-7 }
    }

    fn model() -> (LocalizationModel, Vec<C64>, TrajectoryOptions) {
        let m = LocalizationModel::new(Grid::centered(96, 24.0), BathSpec::new(1.0, 1.0, 0.25).unwrap(), Stencil::Eighth, true).unwrap();
        let psi = m.grid.coherent_packet(6.0, 0.0, 1.0);
        let opts = TrajectoryOptions::from_decoherence(&m, &psi, 10.0, 0.05);
        (m, psi, opts)
    }

    #[test]
    fn fraunhofer_pattern_shape() {
        let g = geom();
        let a0 = slit_amplitude(&g, 0.0).norm();
        for x in [1e-4, 1e-3, 4e-3, 1e-2] {
            assert!(slit_amplitude(&g, x).norm() <= a0);
            assert_eq!(slit_amplitude(&g, x), slit_amplitude(&g, -x));
        }
        let null = g.wavelength * g.screen_distance / (2.0 * g.slit_separation);
        assert!(slit_amplitude(&g, null).norm_sqr() < 1e-28);
        assert!(!g.far_field_warning());
        assert!(SlitGeometry { screen_distance: 1e-3, ..g }.far_field_warning());
        assert!(SlitGeometry { wavelength: 0.0, ..g }.validate().is_err());
    }

    #[test]
    fn tiled_array_is_normalized() {
        let a = DetectorArray::tiled(&geom(), 16, 0.01).unwrap();
        assert!((a.born_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn full_absorption_always_clicks() {
        let (m, psi, opts) = model();
        let array = DetectorArray::from_amplitudes(alloc::vec![0.0], 1.0, &[C64::new(1.0, 0.0)]).unwrap();
        let tau = PI / 2.0;
        let exp = TwoSlitExperiment::new(array, 1.0, tau, m, psi, opts).unwrap();
        let h = exp.run_experiment(500, 1).unwrap();
        assert_eq!(h.counts[0], 500);
        assert!(h.is_consistent());
    }

    #[test]
    fn equal_detectors_split_evenly() {
        let (m, psi, opts) = model();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let array = DetectorArray::from_amplitudes(alloc::vec![-1.0, 1.0], 1.0, &[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let exp = TwoSlitExperiment::new(array, 1.0, PI / 2.0, m, psi, opts).unwrap();
        let h = exp.run_experiment(10_000, 2).unwrap();
        let n = h.clicks() as f64;
        let z = (h.counts[0] as f64 - 0.5 * n).abs() / (0.25 * n).sqrt();
        assert!(z < 3.0, "z = {z}");
    }

    #[test]
    fn short_window_mostly_misses() {
        let (m, psi, opts) = model();
        let array = DetectorArray::tiled(&geom(), 4, 0.005).unwrap();
        // |alpha|^2 = cos^2(g tau) = 0.9
        let tau = (0.9f64).sqrt().acos();
        let exp = TwoSlitExperiment::new(array, 1.0, tau, m, psi, opts).unwrap();
        assert!((exp.no_click_probability() - 0.9).abs() < 1e-8);
        let two = evolve_two_level(&AmplitudeState::photon(1), &CouplingModel::single(C64::new(exp.coupling.effective_coupling(), 0.0), tau), tau).unwrap();
        assert!((two.alpha.norm_sqr() - exp.no_click_probability()).abs() < 1e-8);
        let n = 10_000u64;
        let h = exp.run_experiment(n, 3).unwrap();
        let f = h.no_click_count as f64 / n as f64;
        assert!((f - 0.9).abs() < 3.0 * (0.09f64 / n as f64).sqrt(), "{f}");
        assert!(h.is_consistent());
    }

    #[test]
    fn rescaled_amplitudes_give_same_weights() {
        let g = geom();
        let a = DetectorArray::tiled(&g, 8, 0.005).unwrap();
        let doubled: Vec<C64> = a.amplitudes.iter().map(|z| z * 2.0).collect();
        let b = DetectorArray::from_amplitudes(a.positions.clone(), a.pixel_width, &doubled).unwrap();
        for (x, y) in a.born_weights().iter().zip(b.born_weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed_and_rejects_zero_photons() {
        let (m, psi, opts) = model();
        let exp = TwoSlitExperiment::new(DetectorArray::tiled(&geom(), 6, 0.005).unwrap(), 1.0, 1.2, m, psi, opts).unwrap();
        assert_eq!(exp.run_experiment(300, 9).unwrap(), exp.run_experiment(300, 9).unwrap());
        assert!(matches!(exp.run_experiment(0, 9), Err(TwoSlitError::NoPhotons)));
        let mut left = exp.run_range(9, 0..100);
        left.merge(&exp.run_range(9, 100..300));
        assert_eq!(left, exp.run_experiment(300, 9).unwrap());
    }

    #[test]
    fn general_trajectories_agree_with_fast_path() {
        let (m, psi, opts) = model();
        let exp = TwoSlitExperiment::new(DetectorArray::tiled(&geom(), 3, 0.004).unwrap(), 1.0, 1.0, m, psi, opts).unwrap();
        for i in 0..30u64 {
            let fast = exp.simulate_photon(&mut rng_split(4, i)).0;
            let slow = exp.simulate_photon_with(Scheme::Jump, &mut rng_split(4, i)).unwrap();
            assert_eq!(fast, slow);
        }
    }
}
