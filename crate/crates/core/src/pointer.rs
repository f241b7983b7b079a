//! Moving-coil ammeter: `J theta'' = N I A B cos(theta) - eta theta' - c theta`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::{Dopri5, NumericsError, Tolerance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PointerError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("drive N I A B / c = {0} is outside the single-root regime |drive| < pi/2")]
    DriveOutOfRegime(f64),
    #[error("current waveform needs increasing sample times")]
    BadWaveform,
    #[error("pointer did not settle within {0}")]
    NotSettled(f64),
    #[error(transparent)]
    Ode(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointerParams {
    pub inertia: f64,
    pub turns: f64,
    pub coil_area: f64,
    pub field: f64,
    pub damping: f64,
    pub spring: f64,
}

impl PointerParams {
    pub fn validate(&self) -> Result<(), PointerError> {
        for (name, v) in [("inertia", self.inertia), ("damping", self.damping), ("spring", self.spring)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PointerError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// `N I A B / c`
    pub fn drive(&self, current: f64) -> f64 {
        self.turns * current * self.coil_area * self.field / self.spring
    }

    /// `J / eta`
    pub fn damping_time(&self) -> f64 {
        self.inertia / self.damping
    }

    pub fn energy(&self, s: &PointerState) -> f64 {
        0.5 * self.inertia * s.theta_dot * s.theta_dot + 0.5 * self.spring * s.theta * s.theta
    }

    fn acceleration(&self, current: f64, theta: f64, theta_dot: f64) -> f64 {
        (self.turns * current * self.coil_area * self.field * theta.cos() - self.damping * theta_dot - self.spring * theta) / self.inertia
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointerState {
    pub theta: f64,
    pub theta_dot: f64,
}

/// Coil current as a function of time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Current {
    Constant(f64),
    /// Piecewise-linear through `(t, I)` samples, zero outside them.
    Samples(Vec<(f64, f64)>),
}

impl Current {
    pub fn samples(points: Vec<(f64, f64)>) -> Result<Self, PointerError> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(PointerError::BadWaveform);
        }
        Ok(Self::Samples(points))
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Self::Constant(i) => *i,
            Self::Samples(p) => {
                if p.is_empty() || t < p[0].0 || t > p[p.len() - 1].0 {
                    return 0.0;
                }
                let j = p.partition_point(|s| s.0 <= t);
                if j == 0 {
                    return p[0].1;
                }
                if j == p.len() {
                    return p[j - 1].1;
                }
                let (a, b) = (p[j - 1], p[j]);
                a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match self {
            Self::Constant(i) => *i,
            Self::Samples(p) => p.iter().map(|s| s.1).fold(0.0, |m, x| if x.abs() > m.abs() { x } else { m }),
        }
    }

    fn end(&self) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::Samples(p) => p.last().map_or(0.0, |s| s.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointerTrajectory {
    /// `(t, theta, theta_dot)`
    pub samples: Vec<(f64, f64, f64)>,
    pub state: PointerState,
}

impl PointerTrajectory {
    pub fn peak_angle(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(0.0, |m, x| if x.abs() > m.abs() { x } else { m })
    }
}

/// Integrate from `t = 0` to `t_end` with the adaptive Dormand-Prince pair,
/// recording `samples + 1` equally spaced points.
pub fn integrate_pointer(params: &PointerParams, current: &Current, initial: PointerState, t_end: f64, tol: f64, samples: usize) -> Result<PointerTrajectory, PointerError> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(PointerError::NonPositive("tol"));
    }
    let samples = samples.max(1);
    let mut stepper = Dopri5::new(Tolerance::uniform(tol))?;
    if let Current::Samples(p) = current {
        // Do not step over short pulses.
        if let Some(h) = p.windows(2).map(|w| w[1].0 - w[0].0).reduce(f64::min) {
            stepper = stepper.with_max_step(h.max(t_end * 1e-6));
        }
    }
    let mut y = [initial.theta, initial.theta_dot];
    let mut out = Vec::with_capacity(samples + 1);
    out.push((0.0, y[0], y[1]));
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = params.acceleration(current.at(t), y[0], y[1]);
    };
    for k in 0..samples {
        let t0 = t_end * k as f64 / samples as f64;
        let t1 = t_end * (k + 1) as f64 / samples as f64;
        stepper.advance(&mut y, t0, t1, rhs)?;
        out.push((t1, y[0], y[1]));
    }
    Ok(PointerTrajectory { samples: out, state: PointerState { theta: y[0], theta_dot: y[1] } })
}

/// Root of `c theta = N I A B cos(theta)` by bisection.
pub fn settled_angle(params: &PointerParams, current: f64) -> Result<f64, PointerError> {
    params.validate()?;
    let d = params.drive(current);
    if !(d.abs() < core::f64::consts::FRAC_PI_2) {
        return Err(PointerError::DriveOutOfRegime(d));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    // theta - d cos(theta) is increasing on the bracket.
    let (mut lo, mut hi) = if d > 0.0 { (0.0, core::f64::consts::FRAC_PI_2) } else { (-core::f64::consts::FRAC_PI_2, 0.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - d * mid.cos() < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Settling {
    pub theta: f64,
    pub root: f64,
    pub t_settle: f64,
}

/// Drive from rest with a constant current until `|theta'| < 1e-6` and
/// `|theta - root| < 1e-4` hold for one damping time.
pub fn settle(params: &PointerParams, current: f64, tol: f64, t_max: f64) -> Result<Settling, PointerError> {
    let root = settled_angle(params, current)?;
    let tau = params.damping_time();
    // Samples resolve the slower of the damping time and the oscillation period.
    let period = 2.0 * core::f64::consts::PI * (params.inertia / params.spring).sqrt();
    let h = 0.05 * tau.min(period);
    let mut stepper = Dopri5::new(Tolerance::uniform(tol))?;
    let mut y = [0.0, 0.0];
    let mut t = 0.0;
    let mut calm_since: Option<f64> = None;
    let i = current;
    while t < t_max {
        stepper.advance(&mut y, t, t + h, |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = params.acceleration(i, y[0], y[1]);
        })?;
        t += h;
        if y[1].abs() < 1e-6 && (y[0] - root).abs() < 1e-4 {
            let since = *calm_since.get_or_insert(t);
            if t - since >= tau {
                return Ok(Settling { theta: y[0], root, t_settle: since });
            }
        } else {
            calm_since = None;
        }
    }
    Err(PointerError::NotSettled(t_max))
}

/// Time after the end of a waveform at which the pointer is back at rest.
pub fn ring_down_time(params: &PointerParams, current: &Current) -> f64 {
    current.end() + 20.0 * params.damping_time().max(2.0 * params.inertia.sqrt() / params.spring.sqrt())
}
