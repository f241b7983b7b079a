//! Argument parsing and subcommand dispatch. Every command prints one JSON
//! envelope on stdout and writes its CSV artifacts under `--out-dir`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cwc_core::absorption::{evolve_equivalent_electrons, per_electron_beta, AmplitudeState};
use cwc_core::bath::{si, thermal_scales, Particle};
use cwc_core::numerics::C64;
use cwc_core::pipeline::{build_experiment, run_avalanche_stage, run_conduction, run_pipeline, Clock, PipelineConfig, SlitSection, DELIVERED_CHARGE};
use cwc_core::pointer::{integrate_pointer, ring_down_time, settle, settled_angle, Current, PointerState};
use cwc_core::transport::{collision_integral_phonon, drude_conductivity, DistributionFunction, KGrid, PhononBath};
use cwc_core::unraveling::{decoherence_time, Scheme};

use crate::report::Envelope;
use crate::{artifacts, config, parallel, stats, CliError};

#[derive(Debug, Parser)]
#[command(name = "cwc", version, about = "Photon detection chain simulator: absorption, collapse, conduction, avalanche and pointer")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one setting, e.g. `--set transport.field=0.1`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Directory for CSV artifacts.
    #[arg(long, env = "CWC_OUT_DIR", default_value = "cwc-out", global = true)]
    pub out_dir: PathBuf,
    /// Master seed; overrides `unraveling.master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (all cores by default). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write per-trajectory samples.
    #[arg(long, global = true)]
    pub dump_trajectories: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Jump,
    Diffusive,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Jump => Scheme::Jump,
            SchemeArg::Diffusive => Scheme::Diffusive,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Photon absorption by N equivalent electrons.
    Absorb {
        #[arg(long, default_value_t = 1)]
        electrons: u64,
        /// Interaction time; `absorption.tau` when omitted.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Ensemble of collapse trajectories for one absorbed photon.
    Collapse {
        #[arg(long)]
        n_traj: Option<u64>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
    },
    /// Two-slit click histogram against the Born weights.
    Twoslit {
        #[arg(long, default_value_t = 100_000)]
        photons: u64,
        #[arg(long)]
        detectors: Option<usize>,
    },
    /// Steady-state current against field.
    Transport {
        /// Comma-separated fields; `E/4, E/2, E, 2E` of `transport.field` by default.
        #[arg(long, value_delimiter = ',')]
        fields: Option<Vec<f64>>,
    },
    /// Avalanche gain for a seed charge.
    Avalanche {
        /// Seed charge in units of `e`.
        #[arg(long, default_value_t = DELIVERED_CHARGE)]
        charge: f64,
        #[arg(long)]
        dump_field: bool,
    },
    /// Galvanometer response to a constant current.
    Pointer {
        #[arg(long, default_value_t = 1.0)]
        current: f64,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// The full chain for one photon.
    Pipeline,
    /// Thermal wavelength and time in SI units.
    Scales {
        #[arg(long = "T-kelvin", default_value_t = 300.0)]
        t_kelvin: f64,
        /// `electron` or a mass in kg.
        #[arg(long, default_value = "electron", conflicts_with = "speed")]
        mass: String,
        /// Speed in m/s for a massless carrier.
        #[arg(long)]
        speed: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Absorb { .. } => "absorb",
            Command::Collapse { .. } => "collapse",
            Command::Twoslit { .. } => "twoslit",
            Command::Transport { .. } => "transport",
            Command::Avalanche { .. } => "avalanche",
            Command::Pointer { .. } => "pointer",
            Command::Pipeline => "pipeline",
            Command::Scales { .. } => "scales",
        }
    }
}

/// JSON envelope and process exit code of one command.
#[derive(Debug)]
pub struct Output {
    pub envelope: Envelope,
    pub exit_code: i32,
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn core_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parse `args` (including the program name), run, print, and return the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.envelope).expect("envelope serializes"));
            out.exit_code
        }
        Err(e) => {
            eprintln!("cwc: {e}");
            e.exit_code()
        }
    }
}

/// Load the configuration and run `cli.command`.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let g = &cli.global;
    let mut cfg = config::load(g.config.as_deref(), &g.overrides)?;
    if let Some(s) = g.seed {
        cfg.unraveling.master_seed = s;
    }
    cfg.reporting.dump_trajectories |= g.dump_trajectories;
    let out_dir = cfg.reporting.out_dir.clone().map(PathBuf::from).filter(|_| g.out_dir.as_os_str() == "cwc-out").unwrap_or_else(|| g.out_dir.clone());
    let hash = config::config_hash(&cfg);
    let seed = cfg.unraveling.master_seed;
    let mut exit_code = 0;
    let result = parallel::with_threads(g.threads, || -> Result<Value, CliError> {
        match &cli.command {
            Command::Absorb { electrons, t } => absorb(&cfg, *electrons, *t),
            Command::Collapse { n_traj, scheme } => collapse(&cfg, &out_dir, n_traj.unwrap_or(cfg.unraveling.n_traj), scheme.map(Into::into)),
            Command::Twoslit { photons, detectors } => twoslit(&cfg, &out_dir, *photons, *detectors),
            Command::Transport { fields } => transport(&cfg, &out_dir, fields.as_deref()),
            Command::Avalanche { charge, dump_field } => avalanche(&cfg, &out_dir, *charge, *dump_field),
            Command::Pointer { current, t_end } => pointer(&cfg, &out_dir, *current, *t_end),
            Command::Pipeline => {
                let (v, code) = pipeline(&cfg, &out_dir)?;
                exit_code = code;
                Ok(v)
            }
            Command::Scales { t_kelvin, mass, speed } => scales(*t_kelvin, mass, *speed),
        }
    })??;
    Ok(Output { envelope: Envelope::new(cli.command.name(), hash, seed, g.threads, result), exit_code })
}

fn absorb(cfg: &PipelineConfig, electrons: u64, t: Option<f64>) -> Result<Value, CliError> {
    let a = &cfg.absorption;
    let g = a.single_coupling();
    let t = t.unwrap_or(a.tau);
    let s = evolve_equivalent_electrons(&AmplitudeState::photon(1), C64::new(g, 0.0), electrons, t).map_err(core_err)?;
    let beta = s.betas[0];
    let per = per_electron_beta(beta, electrons).map_err(core_err)?;
    Ok(json!({
        "electrons": electrons,
        "coupling": g,
        "effective_coupling": g * (electrons as f64).sqrt(),
        "t": t,
        "alpha": [s.alpha.re, s.alpha.im],
        "beta_collective": [beta.re, beta.im],
        "beta_per_electron": [per.re, per.im],
        "no_click_probability": s.no_click_weight(),
        "click_probability": beta.norm_sqr(),
    }))
}

#[derive(Serialize)]
struct CollapseReport {
    scheme: Scheme,
    n_traj: usize,
    decoherence_time: f64,
    dt: f64,
    horizon: f64,
    born_weights: Vec<f64>,
    block_counts: Vec<usize>,
    block_frequencies: Vec<f64>,
    unresolved: usize,
    trapping_failures: usize,
    floor_violations: usize,
    false_alarms: usize,
    mean_jumps: f64,
    trajectories_csv: Option<PathBuf>,
}

fn collapse(cfg: &PipelineConfig, out_dir: &Path, n: u64, scheme: Option<Scheme>) -> Result<Value, CliError> {
    if n == 0 {
        return Err(CliError::Config("`--n-traj` must be at least 1".into()));
    }
    let scheme = scheme.unwrap_or(cfg.unraveling.scheme);
    let exp = build_experiment(cfg).map_err(CliError::Runtime)?;
    let init = exp.photon_state().map_err(core_err)?;
    let dump = cfg.reporting.dump_trajectories;
    let mut opts = exp.options;
    if dump {
        opts.record_stride = 1;
    }
    let (st, kept) = parallel::run_trajectories(scheme, &exp.model, &init, &opts, cfg.unraveling.master_seed, n, false, dump)?;
    let trajectories_csv = if dump { Some(artifacts::write_trajectories(out_dir, &kept)?) } else { None };
    Ok(to_value(CollapseReport {
        scheme,
        n_traj: st.n_traj,
        decoherence_time: decoherence_time(&exp.model, &exp.packet),
        dt: opts.step_size(),
        horizon: opts.t_final,
        born_weights: exp.block_weights.clone(),
        block_counts: st.block_counts,
        block_frequencies: st.block_frequencies,
        unresolved: st.unresolved,
        trapping_failures: st.trapping_failures,
        floor_violations: st.floor_violations,
        false_alarms: st.false_alarms,
        mean_jumps: st.mean_jumps,
        trajectories_csv,
    }))
}

fn twoslit(cfg: &PipelineConfig, out_dir: &Path, photons: u64, detectors: Option<usize>) -> Result<Value, CliError> {
    if photons == 0 {
        return Err(CliError::Config("`--photons` must be at least 1".into()));
    }
    let mut cfg = cfg.clone();
    let mut slits = cfg.absorption.slits.unwrap_or_default();
    if let Some(d) = detectors {
        slits.detectors = d;
    }
    cfg.absorption.slits = Some(SlitSection { ..slits });
    cfg.absorption.coupling = None;
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let exp = build_experiment(&cfg).map_err(CliError::Runtime)?;
    let h = parallel::run_photons(&exp, photons, cfg.unraveling.master_seed);
    let fit = h.goodness_of_fit(&exp.array.born_weights());
    let rows = exp.histogram_rows(&h);
    let csv = artifacts::write_histogram(out_dir, &rows)?;
    Ok(json!({
        "photons": photons,
        "detectors": exp.array.len(),
        "no_click_probability": exp.no_click_probability(),
        "histogram": h,
        "chi2": fit.chi2,
        "dof": fit.dof,
        "p_value": stats::chi_square_p_value(fit.chi2, fit.dof),
        "max_z": fit.max_z,
        "histogram_csv": csv,
    }))
}

fn transport(cfg: &PipelineConfig, out_dir: &Path, fields: Option<&[f64]>) -> Result<Value, CliError> {
    let t = &cfg.transport;
    let e = t.field;
    let fields = fields.map(<[f64]>::to_vec).unwrap_or_else(|| vec![e / 4.0, e / 2.0, e, 2.0 * e]);
    if fields.iter().any(|f| *f == 0.0 || !f.is_finite()) {
        return Err(CliError::Config("fields must be finite and non-zero".into()));
    }
    let rows: Vec<(f64, f64, f64, f64, f64)> = {
        use rayon::prelude::*;
        fields
            .par_iter()
            .map(|&f| {
                let mut sec = *t;
                sec.field = f;
                run_conduction(&sec).map(|s| (f, s.conductivity * f, s.drift_velocity, s.conductivity, s.drude_conductivity)).map_err(CliError::Runtime)
            })
            .collect::<Result<_, _>>()?
    };
    let csv = artifacts::write_transport(out_dir, &rows)?;
    let grid = KGrid::spanning(t.k_points, t.k_max);
    let eq = DistributionFunction::fermi_dirac(grid, t.mass, t.mu, t.temperature);
    let detailed_balance = match t.phonons {
        Some(p) => {
            let bath = PhononBath { temperature: t.temperature, sound_speed: p.sound_speed, w0: p.w0 };
            let c = collision_integral_phonon(&eq, &bath).map_err(core_err)?;
            Some(c.iter().fold(0.0f64, |m, x| m.max(x.abs())) / p.w0)
        }
        None => None,
    };
    let tau = run_conduction(t).map_err(CliError::Runtime)?.tau_relax;
    Ok(json!({
        "tau_relax": tau,
        "density": eq.density(),
        "drude_conductivity": drude_conductivity(eq.density(), tau, t.mass).map_err(core_err)?,
        "rows": rows.iter().map(|r| json!({"field": r.0, "current": r.1, "drift_velocity": r.2, "conductivity": r.3})).collect::<Vec<_>>(),
        "detailed_balance_residual": detailed_balance,
        "transport_csv": csv,
    }))
}

fn avalanche(cfg: &PipelineConfig, out_dir: &Path, charge: f64, dump_field: bool) -> Result<Value, CliError> {
    let drift = match cfg.avalanche.v {
        Some(v) => v,
        None => run_conduction(&cfg.transport).map_err(CliError::Runtime)?.drift_velocity.abs(),
    };
    let dump = dump_field || cfg.reporting.dump_field;
    let (summary, run) = run_avalanche_stage(&cfg.avalanche, drift, charge, dump).map_err(CliError::Runtime)?;
    let current_csv = artifacts::write_current(out_dir, &run)?;
    let field_csv = if dump { Some(artifacts::write_field(out_dir, &run.field)?) } else { None };
    Ok(json!({
        "charge": charge,
        "summary": summary,
        "current_csv": current_csv,
        "field_csv": field_csv,
    }))
}

fn pointer(cfg: &PipelineConfig, out_dir: &Path, current: f64, t_end: Option<f64>) -> Result<Value, CliError> {
    let p = &cfg.pointer;
    let params = p.params();
    let theta = settled_angle(&params, current).map_err(core_err)?;
    let drive = Current::Constant(current);
    let t_end = t_end.unwrap_or_else(|| ring_down_time(&params, &drive));
    let traj = integrate_pointer(&params, &drive, PointerState::default(), t_end, p.tol, 400).map_err(core_err)?;
    let s = settle(&params, current, p.tol, 1e4 * params.damping_time().max(1.0)).map_err(core_err)?;
    let csv = artifacts::write_pointer(out_dir, &traj)?;
    Ok(json!({
        "current": current,
        "drive": params.drive(current),
        "settled_angle": theta,
        "peak_angle": traj.peak_angle(),
        "final_angle": traj.state.theta,
        "settling_time": s.t_settle,
        "pointer_csv": csv,
    }))
}

fn pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<(Value, i32), CliError> {
    match run_pipeline(cfg, &WallClock(Instant::now())) {
        Ok(run) => {
            let mut files = serde_json::Map::new();
            if let Some(tr) = &run.trajectory {
                files.insert("trajectories".into(), to_value(artifacts::write_trajectories(out_dir, std::slice::from_ref(tr))?));
            }
            if let Some(av) = &run.avalanche {
                files.insert("avalanche_current".into(), to_value(artifacts::write_current(out_dir, av)?));
                if !av.field.is_empty() {
                    files.insert("avalanche_field".into(), to_value(artifacts::write_field(out_dir, &av.field)?));
                }
            }
            if let Some(p) = &run.pointer {
                files.insert("pointer".into(), to_value(artifacts::write_pointer(out_dir, p)?));
            }
            Ok((json!({"report": run.report, "artifacts": files}), 0))
        }
        Err(e) => {
            eprintln!("cwc: {e}");
            Ok((json!({"report": e.partial, "error": {"stage": e.stage, "message": e.message}}), 2))
        }
    }
}

fn scales(t_kelvin: f64, mass: &str, speed: Option<f64>) -> Result<Value, CliError> {
    let particle = match speed {
        Some(c) => Particle::Massless { speed: c },
        None => {
            let m = if mass.eq_ignore_ascii_case("electron") {
                si::ELECTRON_MASS
            } else {
                mass.parse::<f64>().map_err(|_| CliError::Config(format!("`--mass` must be `electron` or a number in kg, got `{mass}`")))?
            };
            Particle::Massive { mass: m }
        }
    };
    let s = thermal_scales(t_kelvin, particle).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(json!({"temperature_kelvin": t_kelvin, "particle": particle, "lambda_th": s.lambda_th, "t_th": s.t_th}))
}
