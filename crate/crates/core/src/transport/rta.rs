use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{DistributionFunction, TransportError};

/// Relaxation-time collision model. `f_eq` is the Fermi-Dirac distribution
/// at `temperature` whose chemical potential reproduces the current density,
/// so the collision term conserves particle number.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RtaParams {
    pub tau: f64,
    pub temperature: f64,
}

/// Chemical potential with `sum f_FD dk = density`, by bisection.
fn matching_mu(f: &DistributionFunction, temperature: f64, density: f64) -> f64 {
    let e_max = f.energy(0).max(f.energy(f.grid.points - 1));
    let mut lo = -50.0 * temperature.max(1e-12) - e_max;
    let mut hi = e_max + 50.0 * temperature.max(1e-12);
    let dens = |mu: f64| (0..f.grid.points).map(|i| super::fermi_dirac(f.energy(i), mu, temperature)).sum::<f64>() * f.grid.dk;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dens(mid) < density {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equilibrium with the same density as `f`.
pub fn equilibrium_for(f: &DistributionFunction, temperature: f64) -> Vec<f64> {
    let mu = matching_mu(f, temperature, f.density());
    (0..f.grid.points).map(|i| super::fermi_dirac(f.energy(i), mu, temperature)).collect()
}

fn relax(values: &mut [f64], feq: &[f64], factor: f64) {
    for (v, e) in values.iter_mut().zip(feq) {
        *v = e + (*v - e) * factor;
    }
}

/// Conservative first-order upwind shift by `dk/dt = -e E` with zero flux
/// through the grid ends.
fn advect(values: &mut [f64], cfl: f64) {
    let n = values.len();
    // cfl = -e E dt / dk: positive moves weight toward larger k.
    let mut flux = vec![0.0; n + 1];
    if cfl > 0.0 {
        for i in 0..n - 1 {
            flux[i + 1] = cfl * values[i];
        }
    } else if cfl < 0.0 {
        for i in 1..n {
            flux[i] = cfl * values[i];
        }
    }
    for i in 0..n {
        values[i] += flux[i] - flux[i + 1];
    }
}

/// Advance `f` by `dt` in field `E`: half relaxation, upwind drift, half
/// relaxation (Strang). Relaxation is exact, `f -> f_eq + (f - f_eq)
/// exp(-dt / 2 tau)`.
pub fn step_boltzmann_rta(f: &DistributionFunction, field: f64, params: &RtaParams, dt: f64) -> Result<DistributionFunction, TransportError> {
    if !(params.tau > 0.0) {
        return Err(TransportError::NonPositive("tau"));
    }
    if !(dt > 0.0) {
        return Err(TransportError::NonPositive("dt"));
    }
    if dt >= params.tau / 10.0 {
        return Err(TransportError::StepTooLarge { dt, tau: params.tau });
    }
    let cfl = -field * dt / f.grid.dk;
    if cfl.abs() > 1.0 {
        return Err(TransportError::Cfl(cfl.abs()));
    }
    let feq = equilibrium_for(f, params.temperature);
    let half = (-0.5 * dt / params.tau).exp();
    let mut out = f.clone();
    relax(&mut out.values, &feq, half);
    advect(&mut out.values, cfl);
    relax(&mut out.values, &feq, half);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RtaRun {
    pub state: DistributionFunction,
    pub steps: usize,
    pub drift_velocity: f64,
    pub current: f64,
}

/// Step until `t_end`.
pub fn relax_to_steady_state(f0: &DistributionFunction, field: f64, params: &RtaParams, dt: f64, t_end: f64) -> Result<RtaRun, TransportError> {
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps.max(1) as f64;
    let mut f = f0.clone();
    for _ in 0..steps {
        f = step_boltzmann_rta(&f, field, params, h)?;
    }
    let drift_velocity = f.drift_velocity();
    let current = f.current();
    Ok(RtaRun { state: f, steps, drift_velocity, current })
}

/// `(E, j, v_d)` rows of the steady state for each field.
pub fn current_field_table(f0: &DistributionFunction, fields: &[f64], params: &RtaParams, dt: f64, t_end: f64) -> Result<Vec<(f64, f64, f64)>, TransportError> {
    fields
        .iter()
        .map(|&e| relax_to_steady_state(f0, e, params, dt, t_end).map(|r| (e, r.current, r.drift_velocity)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{drude_conductivity, KGrid};
    use super::*;

    fn eq() -> DistributionFunction {
        // Non-degenerate electrons: f << 1 everywhere.
        DistributionFunction::fermi_dirac(KGrid::spanning(241, 12.0), 1.0, -3.0, 1.0)
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let f = eq();
        let p = RtaParams { tau: 1.0, temperature: 1.0 };
        let g = step_boltzmann_rta(&f, 0.0, &p, 0.01).unwrap();
        assert!(f.distance(&g) < 1e-12);
    }

    #[test]
    fn perturbation_relaxes_at_one_over_tau() {
        let f = eq();
        let p = RtaParams { tau: 0.7, temperature: 1.0 };
        // Density-neutral odd bump.
        let mut pert = f.clone();
        for i in 0..f.grid.points {
            let k = f.grid.k(i);
            pert.values[i] += 0.01 * k * (-k * k).exp();
        }
        let d0 = pert.distance(&f);
        let mut g = pert.clone();
        let mut last = d0;
        let dt = 0.01;
        for _ in 0..100 {
            g = step_boltzmann_rta(&g, 0.0, &p, dt).unwrap();
            let d = g.distance(&f);
            assert!(d <= last + 1e-15);
            last = d;
        }
        let rate = -(last / d0).ln() / 1.0;
        assert!((rate - 1.0 / p.tau).abs() < 0.02 / p.tau, "{rate}");
        assert!((g.density() - pert.density()).abs() < 1e-8);
    }

    #[test]
    fn drift_matches_drude() {
        let f = eq();
        let p = RtaParams { tau: 0.5, temperature: 1.0 };
        let field = 0.05;
        let run = relax_to_steady_state(&f, field, &p, 0.01, 10.0).unwrap();
        let v = -field * p.tau / f.mass;
        assert!((run.drift_velocity - v).abs() < 0.02 * v.abs(), "{} vs {v}", run.drift_velocity);
        let sigma = drude_conductivity(f.density(), p.tau, f.mass).unwrap();
        assert!((run.current / field - sigma).abs() < 0.01 * sigma);
        assert!((run.state.density() - f.density()).abs() < 1e-8);
    }

    #[test]
    fn step_limits_enforced() {
        let f = eq();
        let p = RtaParams { tau: 1.0, temperature: 1.0 };
        assert!(matches!(step_boltzmann_rta(&f, 0.0, &p, 0.2), Err(TransportError::StepTooLarge { .. })));
        assert!(matches!(step_boltzmann_rta(&f, 100.0, &p, 0.05), Err(TransportError::Cfl(_))));
    }

    #[test]
    fn relaxation_is_not_time_reversible() {
        let f = eq();
        let p = RtaParams { tau: 1.0, temperature: 1.0 };
        let mut start = f.clone();
        for i in 0..f.grid.points {
            let k = f.grid.k(i);
            start.values[i] += 0.02 * (-(k - 2.0).powi(2)).exp();
        }
        let mut g = start.clone();
        for _ in 0..50 {
            g = step_boltzmann_rta(&g, 0.1, &p, 0.02).unwrap();
        }
        let mut back = g.reversed();
        for _ in 0..50 {
            back = step_boltzmann_rta(&back, 0.1, &p, 0.02).unwrap();
        }
        assert!(back.reversed().distance(&start) > 1e-3);
    }
}
