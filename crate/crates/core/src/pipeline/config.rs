use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::unraveling::Scheme;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("[{section}] {message}")]
pub struct ConfigError {
    pub section: &'static str,
    pub message: String,
}

fn err(section: &'static str, message: String) -> ConfigError {
    ConfigError { section, message }
}

fn positive(section: &'static str, name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(section, format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn non_negative(section: &'static str, name: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(section, format!("`{name}` must be non-negative and finite, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PipelineConfig {
    pub bath: BathSection,
    pub absorption: AbsorptionSection,
    pub unraveling: UnravelingSection,
    pub transport: TransportSection,
    pub avalanche: AvalancheSection,
    pub pointer: PointerSection,
    pub reporting: ReportingSection,
}

impl PipelineConfig {
    /// Check every section before anything runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.bath.validate()?;
        self.absorption.validate()?;
        self.unraveling.validate()?;
        self.transport.validate()?;
        self.avalanche.validate()?;
        self.pointer.validate()?;
        self.reporting.validate()
    }

    /// Detectors in the array.
    pub fn detectors(&self) -> usize {
        self.absorption.slits.as_ref().map_or(1, |s| s.detectors)
    }
}

/// Localizing heat bath, in thermal units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BathSection {
    pub temperature: f64,
    pub gamma: f64,
    pub mass: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        Self { temperature: 1.0, gamma: 1.0, mass: 0.25 }
    }
}

impl BathSection {
    fn validate(&self) -> Result<(), ConfigError> {
        positive("bath", "temperature", self.temperature)?;
        non_negative("bath", "gamma", self.gamma)?;
        positive("bath", "mass", self.mass)
    }
}

/// Either one detector with coupling `coupling`, or a two-slit array.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AbsorptionSection {
    pub coupling: Option<f64>,
    pub tau: f64,
    pub slits: Option<SlitSection>,
}

impl Default for AbsorptionSection {
    fn default() -> Self {
        Self { coupling: None, tau: 1.0, slits: None }
    }
}

impl AbsorptionSection {
    fn validate(&self) -> Result<(), ConfigError> {
        positive("absorption", "tau", self.tau)?;
        match (&self.coupling, &self.slits) {
            (Some(_), Some(_)) => Err(err("absorption", "set either `coupling` or [absorption.slits], not both".into())),
            (Some(g), None) => non_negative("absorption", "coupling", *g),
            (None, Some(s)) => s.validate(),
            (None, None) => Ok(()),
        }
    }

    /// Single-detector coupling, `pi/4` (half transfer at `tau = 1`) unless
    /// set.
    pub fn single_coupling(&self) -> f64 {
        self.coupling.unwrap_or(core::f64::consts::FRAC_PI_4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SlitSection {
    pub slit_separation: f64,
    pub slit_width: f64,
    pub screen_distance: f64,
    pub wavelength: f64,
    pub detectors: usize,
    pub half_width: f64,
    /// `g~_n = coupling_scale * A_n` with `sum |A_n|^2 = 1`.
    pub coupling_scale: f64,
}

impl Default for SlitSection {
    fn default() -> Self {
        Self { slit_separation: 1e-4, slit_width: 2e-5, screen_distance: 1.0, wavelength: 5e-7, detectors: 16, half_width: 1e-2, coupling_scale: 1.2 }
    }
}

impl SlitSection {
    fn validate(&self) -> Result<(), ConfigError> {
        for (n, v) in [
            ("slit_separation", self.slit_separation),
            ("slit_width", self.slit_width),
            ("screen_distance", self.screen_distance),
            ("wavelength", self.wavelength),
            ("half_width", self.half_width),
        ] {
            positive("absorption.slits", n, v)?;
        }
        non_negative("absorption.slits", "coupling_scale", self.coupling_scale)?;
        if self.detectors == 0 {
            return Err(err("absorption.slits", "`detectors` must be at least 1".into()));
        }
        Ok(())
    }
}

/// Localization and collapse of the excited electron.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct UnravelingSection {
    pub scheme: Scheme,
    pub grid_points: usize,
    pub grid_length: f64,
    /// Packet centre, in thermal wavelengths.
    pub packet_center: f64,
    pub packet_momentum: f64,
    /// Horizon in decoherence times.
    pub horizon: f64,
    /// Step in decoherence times, unless `dt` is set.
    pub step_fraction: f64,
    pub dt: Option<f64>,
    pub n_traj: u64,
    pub master_seed: u64,
}

impl Default for UnravelingSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::Jump,
            grid_points: 96,
            grid_length: 24.0,
            packet_center: 6.0,
            packet_momentum: 0.0,
            horizon: 20.0,
            step_fraction: 0.05,
            dt: None,
            n_traj: 1000,
            master_seed: 42,
        }
    }
}

impl UnravelingSection {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.grid_points < 2 {
            return Err(err("unraveling", "`grid_points` must be at least 2".into()));
        }
        positive("unraveling", "grid_length", self.grid_length)?;
        positive("unraveling", "horizon", self.horizon)?;
        positive("unraveling", "step_fraction", self.step_fraction)?;
        if let Some(dt) = self.dt {
            positive("unraveling", "dt", dt)?;
        }
        if !self.packet_center.is_finite() || !self.packet_momentum.is_finite() {
            return Err(err("unraveling", "packet parameters must be finite".into()));
        }
        if self.n_traj == 0 {
            return Err(err("unraveling", "`n_traj` must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PhononSection {
    pub sound_speed: f64,
    pub w0: f64,
}

impl Default for PhononSection {
    fn default() -> Self {
        Self { sound_speed: 0.5, w0: 1.0 }
    }
}

/// Conduction of the excited electron to the multiplication region.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TransportSection {
    pub field: f64,
    pub temperature: f64,
    pub mass: f64,
    pub mu: f64,
    pub k_points: usize,
    pub k_max: f64,
    /// Relaxation time; derived from `phonons` when set, else 0.5.
    pub tau_relax: Option<f64>,
    pub phonons: Option<PhononSection>,
    /// Run length in relaxation times.
    pub relax_times: f64,
}

impl Default for TransportSection {
    fn default() -> Self {
        Self { field: 0.05, temperature: 1.0, mass: 1.0, mu: -3.0, k_points: 241, k_max: 12.0, tau_relax: None, phonons: None, relax_times: 20.0 }
    }
}

pub const DEFAULT_TAU_RELAX: f64 = 0.5;

impl TransportSection {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.field != 0.0 && self.field.is_finite()) {
            return Err(err("transport", "`field` must be finite and non-zero".into()));
        }
        positive("transport", "temperature", self.temperature)?;
        positive("transport", "mass", self.mass)?;
        positive("transport", "k_max", self.k_max)?;
        positive("transport", "relax_times", self.relax_times)?;
        if !self.mu.is_finite() {
            return Err(err("transport", "`mu` must be finite".into()));
        }
        if self.k_points < 3 {
            return Err(err("transport", "`k_points` must be at least 3".into()));
        }
        match (self.tau_relax, &self.phonons) {
            (Some(_), Some(_)) => Err(err("transport", "set either `tau_relax` or [transport.phonons], not both".into())),
            (Some(t), None) => positive("transport", "tau_relax", t),
            (None, Some(p)) => {
                positive("transport.phonons", "sound_speed", p.sound_speed)?;
                positive("transport.phonons", "w0", p.w0)?;
                if self.k_points > crate::transport::MAX_POINTS {
                    return Err(err("transport", format!("`k_points` must be at most {} with phonons", crate::transport::MAX_POINTS)));
                }
                Ok(())
            }
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AvalancheSection {
    /// Drift speed; the transport drift speed when absent.
    pub v: Option<f64>,
    pub alpha_rate: f64,
    /// Uniform bound density, unless `n_b_profile` is given.
    pub n_b: f64,
    pub n_b_profile: Option<Vec<f64>>,
    pub length: f64,
    pub cells: usize,
    pub seed_width: f64,
    pub cfl: f64,
    /// Field dump stride in steps when dumping is enabled.
    pub dump_stride: usize,
}

impl Default for AvalancheSection {
    fn default() -> Self {
        Self { v: None, alpha_rate: 0.004, n_b: 5.0, n_b_profile: None, length: 1.5, cells: 300, seed_width: 0.05, cfl: 1.0, dump_stride: 10 }
    }
}

impl AvalancheSection {
    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(v) = self.v {
            positive("avalanche", "v", v)?;
        }
        non_negative("avalanche", "alpha_rate", self.alpha_rate)?;
        positive("avalanche", "length", self.length)?;
        positive("avalanche", "seed_width", self.seed_width)?;
        positive("avalanche", "cfl", self.cfl)?;
        if self.cfl > 1.0 {
            return Err(err("avalanche", format!("`cfl` must be at most 1, got {}", self.cfl)));
        }
        match &self.n_b_profile {
            Some(p) => {
                if p.is_empty() {
                    return Err(err("avalanche", "`n_b_profile` is empty".into()));
                }
                if p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return Err(err("avalanche", "`n_b_profile` entries must be non-negative".into()));
                }
            }
            None => {
                non_negative("avalanche", "n_b", self.n_b)?;
                if self.cells == 0 {
                    return Err(err("avalanche", "`cells` must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> Vec<f64> {
        self.n_b_profile.clone().unwrap_or_else(|| alloc::vec![self.n_b; self.cells])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PointerSection {
    pub inertia: f64,
    pub turns: f64,
    pub coil_area: f64,
    pub field: f64,
    pub damping: f64,
    pub spring: f64,
    pub tol: f64,
}

impl Default for PointerSection {
    fn default() -> Self {
        Self { inertia: 1.0, turns: 10.0, coil_area: 0.1, field: 0.2, damping: 1.5, spring: 1.0, tol: 1e-10 }
    }
}

impl PointerSection {
    fn validate(&self) -> Result<(), ConfigError> {
        positive("pointer", "inertia", self.inertia)?;
        positive("pointer", "damping", self.damping)?;
        positive("pointer", "spring", self.spring)?;
        positive("pointer", "tol", self.tol)?;
        for (n, v) in [("turns", self.turns), ("coil_area", self.coil_area), ("field", self.field)] {
            if !v.is_finite() {
                return Err(err("pointer", format!("`{n}` must be finite")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> crate::pointer::PointerParams {
        crate::pointer::PointerParams {
            inertia: self.inertia,
            turns: self.turns,
            coil_area: self.coil_area,
            field: self.field,
            damping: self.damping,
            spring: self.spring,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ReportingSection {
    pub out_dir: Option<String>,
    pub dump_trajectories: bool,
    pub dump_field: bool,
    /// Bits erased on reset after a click; `1 + log2(M)` when absent.
    pub n_bits: Option<f64>,
    /// Apparatus temperature for the SI reset ledger.
    pub temperature_kelvin: f64,
}

impl Default for ReportingSection {
    fn default() -> Self {
        Self { out_dir: None, dump_trajectories: false, dump_field: false, n_bits: None, temperature_kelvin: 300.0 }
    }
}

impl ReportingSection {
    fn validate(&self) -> Result<(), ConfigError> {
        positive("reporting", "temperature_kelvin", self.temperature_kelvin)?;
        if let Some(b) = self.n_bits {
            positive("reporting", "n_bits", b)?;
        }
        Ok(())
    }
}
