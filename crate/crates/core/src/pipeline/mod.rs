//! The full measurement chain: absorption, localization and collapse,
//! conduction, avalanche, pointer and the reset ledger, run in that order.

mod config;

pub use config::{
    AbsorptionSection, AvalancheSection, BathSection, ConfigError, PhononSection, PipelineConfig, PointerSection, ReportingSection, SlitSection,
    TransportSection, UnravelingSection, DEFAULT_TAU_RELAX,
};

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::avalanche::{run_avalanche, AvalancheRun, AvalancheState, RunOptions, SeedPulse};
use crate::bath::{si, BathSpec, Grid, LocalizationModel, Stencil};
use crate::numerics::{rng_split, C64};
use crate::pointer::{integrate_pointer, ring_down_time, settle, settled_angle, Current, PointerState, PointerTrajectory};
use crate::transport::{
    drude_conductivity, momentum_relaxation_time, relax_to_steady_state, DistributionFunction, KGrid, PhononBath, RtaParams,
};
use crate::twoslit::{DetectorArray, SlitGeometry, TwoSlitExperiment};
use crate::unraveling::{decoherence_time, run_trajectory, Scheme, Trajectory, TrajectoryOptions};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Charge handed from the collapse to the avalanche, in units of `e`.
pub const DELIVERED_CHARGE: f64 = 1.0;

/// Wall-clock source for per-stage timing.
pub trait Clock {
    /// Seconds since an arbitrary origin.
    fn now(&self) -> f64;
}

/// Reports zero for every stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Stage {
    Config,
    Absorption,
    Collapse,
    Conduction,
    Avalanche,
    Pointer,
    Reset,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Absorption => "absorption",
            Stage::Collapse => "collapse",
            Stage::Conduction => "conduction",
            Stage::Avalanche => "avalanche",
            Stage::Pointer => "pointer",
            Stage::Reset => "reset",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
    /// Everything computed before the failure.
    pub partial: Box<PipelineReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Outcome {
    NoClick,
    Click { detector: usize },
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbsorptionSummary {
    pub detectors: usize,
    /// `1 - |alpha|^2`
    pub click_probability: f64,
    /// `[|alpha|^2, |beta_1|^2, ..]`
    pub block_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CollapseSummary {
    pub outcome: Outcome,
    pub scheme: Scheme,
    pub decoherence_time: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Jump time, or the first threshold crossing for the diffusive scheme;
    /// the horizon when neither happened.
    pub collapse_time: f64,
    pub false_alarm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransportSummary {
    pub tau_relax: f64,
    pub density: f64,
    pub drift_velocity: f64,
    pub conductivity: f64,
    pub drude_conductivity: f64,
    pub delivered_charge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvalancheSummary {
    pub v: f64,
    pub gain: f64,
    pub exited_charge: f64,
    pub peak_current: f64,
    pub conservation_error: f64,
    pub clamp_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointerSummary {
    /// Root of `c theta = N I A B cos(theta)` at the peak current.
    pub settled_angle: f64,
    /// Largest deflection while driven by the avalanche current.
    pub peak_angle: f64,
    /// Time to settle under a steady peak current.
    pub settling_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResetLedger {
    pub n_bits: f64,
    pub temperature_kelvin: f64,
    /// `n_bits k_B T ln 2`, joules.
    pub landauer_bound: f64,
    /// Reset energy charged to the run, joules.
    pub reset_energy: f64,
}

/// Minimum reset cost, `n_bits k_B T ln 2` in joules.
pub fn landauer_bound(n_bits: f64, temperature_kelvin: f64) -> f64 {
    n_bits * si::BOLTZMANN * temperature_kelvin * core::f64::consts::LN_2
}

/// Bits recorded by one detection with `detectors` sites: click or not, plus
/// which site.
pub fn default_bits(detectors: usize) -> f64 {
    1.0 + (detectors as f64).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub absorption: Option<AbsorptionSummary>,
    pub collapse: Option<CollapseSummary>,
    pub transport: Option<TransportSummary>,
    pub avalanche: Option<AvalancheSummary>,
    pub pointer: Option<PointerSummary>,
    pub ledger: Option<ResetLedger>,
    pub timing: Vec<StageTiming>,
}

/// Report plus the raw data behind the CSV artifacts.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: PipelineReport,
    pub trajectory: Option<Trajectory>,
    pub avalanche: Option<AvalancheRun>,
    pub pointer: Option<PointerTrajectory>,
}

/// Absorption stage, shared with the two-slit command: detector array,
/// localization model and packet.
pub fn build_experiment(config: &PipelineConfig) -> Result<TwoSlitExperiment, String> {
    let b = &config.bath;
    let bath = BathSpec::new(b.temperature, b.gamma, b.mass).map_err(|e| format!("{e}"))?;
    let u = &config.unraveling;
    let model = LocalizationModel::new(Grid::centered(u.grid_points, u.grid_length), bath, Stencil::Eighth, true).map_err(|e| format!("{e}"))?;
    let lambda = bath.lambda();
    let packet = model.grid.coherent_packet(u.packet_center * lambda, u.packet_momentum, lambda);
    let mut options = TrajectoryOptions::from_decoherence(&model, &packet, u.horizon, u.step_fraction);
    if let Some(dt) = u.dt {
        options.dt = dt;
    }
    let a = &config.absorption;
    let (array, scale) = match &a.slits {
        Some(s) => {
            let geom = SlitGeometry { slit_separation: s.slit_separation, slit_width: s.slit_width, screen_distance: s.screen_distance, wavelength: s.wavelength };
            (DetectorArray::tiled(&geom, s.detectors, s.half_width).map_err(|e| format!("{e}"))?, s.coupling_scale)
        }
        None => (DetectorArray::from_amplitudes(vec![0.0], 1.0, &[C64::new(1.0, 0.0)]).map_err(|e| format!("{e}"))?, a.single_coupling()),
    };
    TwoSlitExperiment::new(array, scale, a.tau, model, packet, options).map_err(|e| format!("{e}"))
}

struct Runner<'a> {
    clock: &'a dyn Clock,
    report: PipelineReport,
}

impl Runner<'_> {
    fn stage<T>(&mut self, stage: Stage, f: impl FnOnce(&PipelineReport) -> Result<T, String>) -> Result<T, PipelineError> {
        let t0 = self.clock.now();
        let out = f(&self.report);
        self.report.timing.push(StageTiming { stage, seconds: self.clock.now() - t0 });
        out.map_err(|message| PipelineError { stage, message, partial: Box::new(self.report.clone()) })
    }
}

/// Run the chain. A no-click (or unresolved) outcome skips conduction,
/// avalanche and pointer dynamics; the pointer then reads zero.
pub fn run_pipeline(config: &PipelineConfig, clock: &dyn Clock) -> Result<PipelineRun, PipelineError> {
    let mut r = Runner { clock, report: PipelineReport { schema_version: REPORT_SCHEMA_VERSION, master_seed: config.unraveling.master_seed, ..Default::default() } };
    r.stage(Stage::Config, |_| config.validate().map_err(|e| format!("{e}")))?;

    let exp = r.stage(Stage::Absorption, |_| build_experiment(config))?;
    r.report.absorption = Some(AbsorptionSummary {
        detectors: exp.array.len(),
        click_probability: 1.0 - exp.block_weights[0],
        block_weights: exp.block_weights.clone(),
    });

    let u = config.unraveling;
    let dump = config.reporting.dump_trajectories;
    let (collapse, trajectory) = r.stage(Stage::Collapse, |_| {
        let tau_d = decoherence_time(&exp.model, &exp.packet);
        let mut trajectory = None;
        let (block, t, false_alarm) = match u.scheme {
            Scheme::Jump => {
                let out = exp.collapse_photon(&mut rng_split(u.master_seed, 0));
                if dump {
                    let mut opts = exp.options;
                    opts.record_stride = 1;
                    let init = exp.photon_state().map_err(|e| format!("{e}"))?;
                    trajectory = Some(run_trajectory(Scheme::Jump, &exp.model, &init, &opts, &mut rng_split(u.master_seed, 0)).map_err(|e| format!("{e}"))?);
                }
                (out.block, out.t, out.false_alarm)
            }
            Scheme::Diffusive => {
                let mut opts = exp.options;
                opts.record_stride = if dump { 1 } else { 0 };
                let init = exp.photon_state().map_err(|e| format!("{e}"))?;
                let tr = run_trajectory(Scheme::Diffusive, &exp.model, &init, &opts, &mut rng_split(u.master_seed, 0)).map_err(|e| format!("{e}"))?;
                let out = (tr.final_block, tr.monitor.first_crossing_time.unwrap_or(tr.t_final), tr.final_block.is_some_and(|b| tr.monitor.false_alarm(b)));
                if dump {
                    trajectory = Some(tr);
                }
                out
            }
        };
        let outcome = match block {
            Some(0) => Outcome::NoClick,
            Some(n) => Outcome::Click { detector: n - 1 },
            None => Outcome::Unresolved,
        };
        let summary = CollapseSummary {
            outcome,
            scheme: u.scheme,
            decoherence_time: tau_d,
            horizon: exp.options.t_final,
            dt: exp.options.step_size(),
            collapse_time: t,
            false_alarm,
        };
        Ok((summary, trajectory))
    })?;
    let outcome = collapse.outcome;
    r.report.collapse = Some(collapse);

    let mut run = PipelineRun { report: PipelineReport::default(), trajectory, avalanche: None, pointer: None };
    if let Outcome::Click { .. } = outcome {
        let tr = r.stage(Stage::Conduction, |_| run_conduction(&config.transport))?;
        r.report.transport = Some(tr);

        let av = r.stage(Stage::Avalanche, |_| run_avalanche_stage(&config.avalanche, tr.drift_velocity.abs(), tr.delivered_charge, config.reporting.dump_field))?;
        r.report.avalanche = Some(av.0);

        let p = r.stage(Stage::Pointer, |_| run_pointer_stage(&config.pointer, &av.1))?;
        r.report.pointer = Some(p.0);
        run.avalanche = Some(av.1);
        run.pointer = Some(p.1);
    } else {
        r.report.pointer = Some(PointerSummary::default());
    }

    let ledger = r.stage(Stage::Reset, |_| {
        let bits = match outcome {
            Outcome::Click { .. } => config.reporting.n_bits.unwrap_or_else(|| default_bits(exp.array.len())),
            // Re-arming only: clear the click flag.
            _ => 1.0,
        };
        let bound = landauer_bound(bits, config.reporting.temperature_kelvin);
        Ok(ResetLedger { n_bits: bits, temperature_kelvin: config.reporting.temperature_kelvin, landauer_bound: bound, reset_energy: bound })
    })?;
    r.report.ledger = Some(ledger);
    run.report = r.report;
    Ok(run)
}

/// Steady-state RTA conduction in the configured field.
pub fn run_conduction(t: &TransportSection) -> Result<TransportSummary, String> {
    let grid = KGrid::spanning(t.k_points, t.k_max);
    let f0 = DistributionFunction::fermi_dirac(grid, t.mass, t.mu, t.temperature);
    let tau = match (t.tau_relax, t.phonons) {
        (Some(tau), _) => tau,
        (None, None) => config::DEFAULT_TAU_RELAX,
        (None, Some(p)) => {
            let bath = PhononBath { temperature: t.temperature, sound_speed: p.sound_speed, w0: p.w0 };
            momentum_relaxation_time(t.mu, grid, t.mass, &bath).map_err(|e| format!("{e}"))?
        }
    };
    let dt = (tau / 20.0).min(0.5 * grid.dk / t.field.abs());
    let params = RtaParams { tau, temperature: t.temperature };
    let run = relax_to_steady_state(&f0, t.field, &params, dt, t.relax_times * tau).map_err(|e| format!("{e}"))?;
    let density = run.state.density();
    Ok(TransportSummary {
        tau_relax: tau,
        density,
        drift_velocity: run.drift_velocity,
        conductivity: run.current / t.field,
        drude_conductivity: drude_conductivity(density, tau, t.mass).map_err(|e| format!("{e}"))?,
        delivered_charge: DELIVERED_CHARGE,
    })
}

/// Avalanche seeded with `charge`, drifting at `a.v` or else `drift`.
pub fn run_avalanche_stage(a: &AvalancheSection, drift: f64, charge: f64, dump: bool) -> Result<(AvalancheSummary, AvalancheRun), String> {
    let v = a.v.unwrap_or(drift);
    let state = AvalancheState::new(a.length, a.profile(), v, a.alpha_rate).map_err(|e| format!("{e}"))?;
    let seed = SeedPulse { charge, width: a.seed_width };
    let opts = RunOptions { cfl: a.cfl, dump_stride: if dump { a.dump_stride.max(1) } else { 0 }, ..RunOptions::default() };
    let run = run_avalanche(state, &seed, &opts).map_err(|e| format!("{e}"))?;
    let gain = run.gain(opts.quiescence_tol).map_err(|e| format!("{e}"))?;
    let peak_current = run.output_current.iter().map(|p| p.1).fold(0.0, f64::max);
    let summary = AvalancheSummary {
        v,
        gain,
        exited_charge: run.state.exited,
        peak_current,
        conservation_error: run.conservation_error(),
        clamp_events: run.state.clamp_events,
    };
    Ok((summary, run))
}

/// Pointer driven by the avalanche output current.
pub fn run_pointer_stage(p: &PointerSection, av: &AvalancheRun) -> Result<(PointerSummary, PointerTrajectory), String> {
    let params = p.params();
    let current = Current::samples(av.output_current.clone()).map_err(|e| format!("{e}"))?;
    let peak = current.peak();
    let settled = settled_angle(&params, peak).map_err(|e| format!("{e}"))?;
    let t_end = ring_down_time(&params, &current);
    let traj = integrate_pointer(&params, &current, PointerState::default(), t_end, p.tol, 400).map_err(|e| format!("{e}"))?;
    let s = settle(&params, peak, p.tol, 1e4 * params.damping_time().max(1.0)).map_err(|e| format!("{e}"))?;
    Ok((PointerSummary { settled_angle: settled, peak_angle: traj.peak_angle(), settling_time: s.t_settle }, traj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landauer_at_room_temperature() {
        let e = landauer_bound(1.0, 300.0);
        assert!((e - 1.380649e-23 * 300.0 * core::f64::consts::LN_2).abs() < 1e-36);
        assert!((e / 2.87e-21 - 1.0).abs() < 0.01);
        assert_eq!(default_bits(1), 1.0);
        assert_eq!(default_bits(16), 5.0);
    }

    #[test]
    fn default_config_runs_every_stage_or_short_circuits() {
        let run = run_pipeline(&PipelineConfig::default(), &NullClock).unwrap();
        let r = &run.report;
        assert_eq!(r.schema_version, REPORT_SCHEMA_VERSION);
        let ledger = r.ledger.unwrap();
        assert!(ledger.reset_energy >= landauer_bound(ledger.n_bits, 300.0));
        match r.collapse.as_ref().unwrap().outcome {
            Outcome::Click { detector } => {
                assert_eq!(detector, 0);
                let av = r.avalanche.unwrap();
                assert!(av.gain >= 1.0);
                assert!(av.conservation_error < 1e-8);
                let t = r.transport.unwrap();
                assert!((t.conductivity / t.drude_conductivity - 1.0).abs() < 0.01);
                assert!(r.pointer.unwrap().settled_angle > 0.0);
            }
            _ => assert!(r.avalanche.is_none()),
        }
    }

    #[test]
    fn zero_coupling_never_clicks() {
        let mut c = PipelineConfig::default();
        c.absorption.coupling = Some(0.0);
        for seed in 0..5 {
            c.unraveling.master_seed = seed;
            let r = run_pipeline(&c, &NullClock).unwrap().report;
            assert_eq!(r.collapse.unwrap().outcome, Outcome::NoClick);
            assert!(r.transport.is_none() && r.avalanche.is_none());
            assert_eq!(r.pointer.unwrap().settled_angle, 0.0);
            assert_eq!(r.ledger.unwrap().n_bits, 1.0);
        }
    }

    #[test]
    fn stage_errors_carry_partial_report() {
        let mut c = PipelineConfig::default();
        // Full transfer at g tau = pi/2: always clicks. An overdriven pointer
        // then fails.
        c.absorption.coupling = Some(core::f64::consts::FRAC_PI_2);
        c.pointer.turns = 1e6;
        let e = run_pipeline(&c, &NullClock).unwrap_err();
        assert_eq!(e.stage, Stage::Pointer);
        assert!(e.partial.avalanche.is_some());
        assert!(e.partial.ledger.is_none());
    }

    #[test]
    fn invalid_config_fails_before_running() {
        let mut c = PipelineConfig::default();
        c.pointer.damping = -1.0;
        let e = run_pipeline(&c, &NullClock).unwrap_err();
        assert_eq!(e.stage, Stage::Config);
        assert!(e.partial.absorption.is_none());
    }
}
