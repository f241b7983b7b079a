//! Stochastic pure-state unravelings of the localization master equation.
//!
//! The state space is a bound level `|g>` plus `K` conduction blocks, each a
//! wavefunction on the same grid with its own localization channel `A_n`
//! (one electron per detector). `K = 1` is the single-electron problem of the
//! master equation.

mod diffusive;
mod ensemble;
mod factorized;
mod jump;
mod state;

pub use diffusive::run_trajectory_diffusive;
pub use ensemble::{ensemble_average, run_ensemble, EnsembleAccumulator, EnsembleStats};
pub use factorized::{CollapseOutcome, FactorizedCollapse};
pub use jump::run_trajectory_jump;
pub use state::{HybridState, Monitor};

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bath::{BathError, LocalizationModel};
use crate::numerics::{RngStream, SparseMatrix, C64};

/// Population a block must exceed to count as the outcome.
pub const RESOLVE_THRESHOLD: f64 = 0.999;
/// Population below which a trapped block counts as having escaped.
pub const ESCAPE_THRESHOLD: f64 = 0.99;
/// Interference norm below which the outcome must not change.
pub const COHERENCE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnravelError {
    #[error("dt * gamma * <A^dagger A> = {0} must stay below 0.1")]
    StepTooLarge(f64),
    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("state has {found} blocks of {points_found} points, model expects {points}")]
    Shape { found: usize, points_found: usize, points: usize },
    #[error("trajectories in one ensemble must share horizon and shape")]
    InhomogeneousEnsemble,
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("{0}")]
    Bath(#[from] BathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scheme {
    #[default]
    Jump,
    Diffusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Record a sample every `record_stride` steps (0 records only the ends).
    pub record_stride: usize,
}

impl TrajectoryOptions {
    /// Horizon of `decoherence_times` decoherence times of `psi` and a step
    /// of `step_fraction` of one decoherence time.
    pub fn from_decoherence(model: &LocalizationModel, psi: &[C64], decoherence_times: f64, step_fraction: f64) -> Self {
        let tau = decoherence_time(model, psi);
        let steps = (decoherence_times / step_fraction).ceil();
        Self { t_final: decoherence_times * tau, dt: decoherence_times * tau / steps, record_stride: 0 }
    }

    pub fn steps(&self) -> usize {
        if self.t_final <= 0.0 {
            0
        } else {
            (self.t_final / self.dt - 1e-9).ceil() as usize
        }
    }

    pub fn step_size(&self) -> f64 {
        let n = self.steps();
        if n == 0 {
            0.0
        } else {
            self.t_final / n as f64
        }
    }
}

/// `1 / (gamma <A^dagger A>)` for a grid wavefunction.
pub fn decoherence_time(model: &LocalizationModel, psi: &[C64]) -> f64 {
    let rate = model.bath.gamma * model.localization_rate_density(psi);
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockSample {
    pub t: f64,
    /// `[ground, block 1, .., block K]`
    pub populations: Vec<f64>,
    /// Centroid and width of the total conduction density.
    pub centroid: f64,
    pub width: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub master_seed: u64,
    pub stream_index: u64,
    pub t_final: f64,
    pub state: HybridState,
    pub samples: Vec<BlockSample>,
    /// `Some(0)` ground, `Some(n)` conduction block `n`; `None` unresolved.
    pub final_block: Option<usize>,
    pub jumps: usize,
    pub monitor: Monitor,
    /// Largest `| ||psi||^2 - 1 |` before renormalization (diffusive only).
    pub max_norm_change: f64,
}

impl Trajectory {
    pub fn resolved(&self) -> bool {
        self.final_block.is_some()
    }
}

pub(crate) fn check_step(model: &LocalizationModel, state: &HybridState, dt: f64) -> Result<(), UnravelError> {
    let worst = state
        .blocks
        .iter()
        .filter(|b| model.grid.norm_sqr(b) > 0.0)
        .map(|b| model.localization_rate_density(b))
        .fold(0.0, f64::max);
    let p = dt * model.bath.gamma * worst;
    if p >= 0.1 {
        return Err(UnravelError::StepTooLarge(p));
    }
    Ok(())
}

pub(crate) struct Recorder {
    stride: usize,
    samples: Vec<BlockSample>,
}

impl Recorder {
    pub(crate) fn new(stride: usize) -> Self {
        Self { stride, samples: Vec::new() }
    }

    pub(crate) fn maybe(&mut self, step: usize, last: usize, t: f64, model: &LocalizationModel, state: &HybridState) {
        let take = step == 0 || step == last || (self.stride > 0 && step % self.stride == 0);
        if take {
            self.samples.push(state.sample(t, &model.grid));
        }
    }
}

/// Build a finished trajectory record.
pub(crate) fn finish(rng: &RngStream, t_final: f64, state: HybridState, recorder: Recorder, jumps: usize, monitor: Monitor) -> Trajectory {
    let final_block = monitor.final_block(&state.populations());
    Trajectory {
        master_seed: rng.master_seed(),
        stream_index: rng.stream_index(),
        t_final,
        state,
        samples: recorder.samples,
        final_block,
        jumps,
        monitor,
        max_norm_change: 0.0,
    }
}

/// One classical RK4 step of `b' = G b`.
pub(crate) struct LinearStepper {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl LinearStepper {
    pub(crate) fn new(n: usize) -> Self {
        let z = alloc::vec![C64::new(0.0, 0.0); n];
        Self { k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z }
    }

    pub(crate) fn step(&mut self, g: &SparseMatrix, b: &mut [C64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        g.mul_vec_into(b, k1);
        for (t, (x, k)) in self.tmp.iter_mut().zip(b.iter().zip(k1.iter())) {
            *t = x + k * (0.5 * h);
        }
        g.mul_vec_into(&self.tmp, k2);
        for (t, (x, k)) in self.tmp.iter_mut().zip(b.iter().zip(k2.iter())) {
            *t = x + k * (0.5 * h);
        }
        g.mul_vec_into(&self.tmp, k3);
        for (t, (x, k)) in self.tmp.iter_mut().zip(b.iter().zip(k3.iter())) {
            *t = x + k * h;
        }
        g.mul_vec_into(&self.tmp, k4);
        for i in 0..b.len() {
            b[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

pub(crate) fn check_shape(model: &LocalizationModel, state: &HybridState) -> Result<(), UnravelError> {
    let points = model.grid.points;
    if let Some(b) = state.blocks.iter().find(|b| b.len() != points) {
        return Err(UnravelError::Shape { found: state.blocks.len(), points_found: b.len(), points });
    }
    if (state.dx - model.grid.dx).abs() > 1e-12 * model.grid.dx {
        return Err(UnravelError::Shape { found: state.blocks.len(), points_found: points, points });
    }
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-8 {
        return Err(UnravelError::NotNormalized(n));
    }
    Ok(())
}

/// Run one trajectory of either scheme.
pub fn run_trajectory(scheme: Scheme, model: &LocalizationModel, initial: &HybridState, opts: &TrajectoryOptions, rng: &mut RngStream) -> Result<Trajectory, UnravelError> {
    match scheme {
        Scheme::Jump => run_trajectory_jump(model, initial, opts, rng),
        Scheme::Diffusive => run_trajectory_diffusive(model, initial, opts, rng),
    }
}
