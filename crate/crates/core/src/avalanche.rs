//! Avalanche multiplication along a one-dimensional drift region:
//!
//! `dn_e/dt = -v dn_e/dz + alpha n_e n_b`, `dn_b/dt = -alpha n_e n_b`.
//!
//! `n_e`, `n_b` are densities (1/length), `v` a speed and `alpha_rate` has
//! units length/time so that `alpha n_e n_b` is a density rate. Charge is
//! counted in units of `e`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AvalancheError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("parameter `{0}` must be finite and non-negative")]
    Negative(&'static str),
    #[error("CFL number v dt / dz = {0} exceeds 1")]
    Cfl(f64),
    #[error("profile has {got} cells, grid has {expected}")]
    Shape { expected: usize, got: usize },
    #[error("run not quiescent: {remaining} of charge still in the domain")]
    NonQuiescent { remaining: f64 },
    #[error("no seed charge was injected")]
    NoSeed,
}

/// Densities on `cells` uniform cells covering `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvalancheState {
    pub length: f64,
    pub n_e: Vec<f64>,
    pub n_b: Vec<f64>,
    pub v: f64,
    pub alpha_rate: f64,
    pub t: f64,
    /// Charge that entered through `z = 0`.
    pub injected: f64,
    /// Charge that left through `z = length`.
    pub exited: f64,
    /// Cells where rounding produced a negative density that was set to 0.
    pub clamp_events: usize,
}

impl AvalancheState {
    /// Empty conduction band over the bound profile `n_b`.
    pub fn new(length: f64, n_b: Vec<f64>, v: f64, alpha_rate: f64) -> Result<Self, AvalancheError> {
        if !(length > 0.0) {
            return Err(AvalancheError::NonPositive("length"));
        }
        if !(v > 0.0) {
            return Err(AvalancheError::NonPositive("v"));
        }
        if !(alpha_rate >= 0.0 && alpha_rate.is_finite()) {
            return Err(AvalancheError::Negative("alpha_rate"));
        }
        if n_b.is_empty() {
            return Err(AvalancheError::Shape { expected: 1, got: 0 });
        }
        if n_b.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(AvalancheError::Negative("n_b"));
        }
        let cells = n_b.len();
        Ok(Self { length, n_e: vec![0.0; cells], n_b, v, alpha_rate, t: 0.0, injected: 0.0, exited: 0.0, clamp_events: 0 })
    }

    pub fn uniform(length: f64, cells: usize, n_b: f64, v: f64, alpha_rate: f64) -> Result<Self, AvalancheError> {
        Self::new(length, vec![n_b; cells], v, alpha_rate)
    }

    pub fn cells(&self) -> usize {
        self.n_e.len()
    }

    pub fn dz(&self) -> f64 {
        self.length / self.cells() as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dz()
    }

    /// Step that moves charge exactly one cell.
    pub fn transit_step(&self) -> f64 {
        self.dz() / self.v
    }

    pub fn excited_charge(&self) -> f64 {
        self.n_e.iter().sum::<f64>() * self.dz()
    }

    pub fn bound_charge(&self) -> f64 {
        self.n_b.iter().sum::<f64>() * self.dz()
    }
}

/// Charges moved by one [`step_avalanche`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFlux {
    pub inflow: f64,
    pub outflow: f64,
}

/// `n_b(t)` for `dn_b/dt = -alpha n_b (S - n_b)` with `S = n_e + n_b` fixed.
fn logistic_bound(n_b: f64, total: f64, alpha: f64, dt: f64) -> f64 {
    if n_b <= 0.0 || total <= 0.0 {
        return n_b.max(0.0);
    }
    let n_e = total - n_b;
    let x = alpha * total * dt;
    if n_e <= 0.0 || x == 0.0 {
        return n_b;
    }
    // S n_b / (n_b + n_e exp(x)), written to stay finite for large x.
    let e = (-x).exp();
    total * n_b * e / (n_b * e + n_e)
}

/// One step: first-order upwind advection with inflow density `inflow` at
/// `z = 0`, then the exact local reaction over `dt`.
pub fn step_avalanche(state: &mut AvalancheState, dt: f64, inflow: f64) -> Result<StepFlux, AvalancheError> {
    if !(dt > 0.0) {
        return Err(AvalancheError::NonPositive("dt"));
    }
    if !(inflow >= 0.0 && inflow.is_finite()) {
        return Err(AvalancheError::Negative("inflow"));
    }
    let dz = state.dz();
    let c = state.v * dt / dz;
    if c > 1.0 + 1e-12 {
        return Err(AvalancheError::Cfl(c));
    }
    let c = c.min(1.0);
    let n = state.cells();
    let outflow = c * state.n_e[n - 1] * dz;
    let influx = c * inflow * dz;
    for i in (1..n).rev() {
        state.n_e[i] += c * (state.n_e[i - 1] - state.n_e[i]);
    }
    state.n_e[0] += c * (inflow - state.n_e[0]);
    if state.alpha_rate > 0.0 {
        for i in 0..n {
            let total = state.n_e[i] + state.n_b[i];
            let nb = logistic_bound(state.n_b[i], total, state.alpha_rate, dt);
            state.n_b[i] = nb.min(state.n_b[i]);
            state.n_e[i] = total - state.n_b[i];
        }
    }
    for i in 0..n {
        for x in [&mut state.n_e[i], &mut state.n_b[i]] {
            if *x < 0.0 {
                *x = 0.0;
                state.clamp_events += 1;
            }
        }
    }
    state.injected += influx;
    state.exited += outflow;
    state.t += dt;
    Ok(StepFlux { inflow: influx, outflow })
}

/// Gaussian seed entering at `z = 0`: a pulse of total charge `charge` and
/// spatial width `width`, centred `4 width` upstream of the entrance at
/// `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedPulse {
    pub charge: f64,
    pub width: f64,
}

impl SeedPulse {
    /// Inflow density at time `t` for drift speed `v`.
    pub fn density(&self, t: f64, v: f64) -> f64 {
        let z = v * t - 4.0 * self.width;
        self.charge / (self.width * (2.0 * core::f64::consts::PI).sqrt()) * (-0.5 * (z / self.width).powi(2)).exp()
    }

    /// Time for the whole pulse to have entered.
    pub fn duration(&self, v: f64) -> f64 {
        8.0 * self.width / v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldSample {
    pub t: f64,
    pub z: f64,
    pub n_e: f64,
    pub n_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvalancheRun {
    pub state: AvalancheState,
    pub dt: f64,
    /// `(t, I)` with `I` the charge leaving per unit time during each step.
    pub output_current: Vec<(f64, f64)>,
    /// `(t, z, n_e, n_b)` every `dump_stride` steps, if requested.
    pub field: Vec<FieldSample>,
    pub initial_bound: f64,
}

impl AvalancheRun {
    /// Exited over injected charge.
    pub fn gain(&self, quiescence_tol: f64) -> Result<f64, AvalancheError> {
        gain(&self.state, quiescence_tol)
    }

    /// `injected + consumed bound - exited - in domain`, relative to the
    /// injected charge.
    pub fn conservation_error(&self) -> f64 {
        let s = &self.state;
        let consumed = self.initial_bound - s.bound_charge();
        (s.injected + consumed - s.exited - s.excited_charge()).abs() / s.injected.max(f64::MIN_POSITIVE)
    }
}

/// Exited over injected charge, once the excited charge left in the domain is
/// below `quiescence_tol` times the exited charge.
pub fn gain(state: &AvalancheState, quiescence_tol: f64) -> Result<f64, AvalancheError> {
    if !(state.injected > 0.0) {
        return Err(AvalancheError::NoSeed);
    }
    let remaining = state.excited_charge();
    if remaining > quiescence_tol * state.exited.max(state.injected) {
        return Err(AvalancheError::NonQuiescent { remaining });
    }
    Ok(state.exited / state.injected)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunOptions {
    /// `v dt / dz`, at most 1.
    pub cfl: f64,
    /// Stop once the excited charge left is below this fraction of the
    /// exited charge.
    pub quiescence_tol: f64,
    /// Give up after this many transit times `length / v` past the seed.
    pub max_transits: f64,
    /// Record the field every this many steps; 0 disables.
    pub dump_stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { cfl: 1.0, quiescence_tol: 1e-12, max_transits: 50.0, dump_stride: 0 }
    }
}

/// Inject `seed` into `state` and step until quiescent.
pub fn run_avalanche(mut state: AvalancheState, seed: &SeedPulse, opts: &RunOptions) -> Result<AvalancheRun, AvalancheError> {
    if !(seed.charge > 0.0) {
        return Err(AvalancheError::NonPositive("seed charge"));
    }
    if !(seed.width > 0.0) {
        return Err(AvalancheError::NonPositive("seed width"));
    }
    if !(opts.cfl > 0.0) {
        return Err(AvalancheError::NonPositive("cfl"));
    }
    if opts.cfl > 1.0 {
        return Err(AvalancheError::Cfl(opts.cfl));
    }
    let dt = opts.cfl * state.transit_step();
    let initial_bound = state.bound_charge();
    let t_seed = seed.duration(state.v);
    let t_max = t_seed + opts.max_transits * state.length / state.v;
    let mut output_current = Vec::new();
    let mut field = Vec::new();
    let mut k = 0usize;
    loop {
        let t = state.t;
        let inflow = if t <= t_seed { seed.density(t + 0.5 * dt, state.v) } else { 0.0 };
        let flux = step_avalanche(&mut state, dt, inflow)?;
        output_current.push((state.t, flux.outflow / dt));
        k += 1;
        if opts.dump_stride > 0 && k % opts.dump_stride == 0 {
            for i in 0..state.cells() {
                field.push(FieldSample { t: state.t, z: state.z(i), n_e: state.n_e[i], n_b: state.n_b[i] });
            }
        }
        if state.t > t_seed {
            let remaining = state.excited_charge();
            if remaining <= opts.quiescence_tol * state.exited.max(state.injected) {
                break;
            }
            if state.t > t_max {
                return Err(AvalancheError::NonQuiescent { remaining });
            }
        }
    }
    Ok(AvalancheRun { state, dt, output_current, field, initial_bound })
}
