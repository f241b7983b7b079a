use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{check_shape, check_step, finish, HybridState, LinearStepper, Monitor, Recorder, Trajectory, TrajectoryOptions, UnravelError};
use crate::bath::LocalizationModel;
use crate::numerics::{RngStream, C64};

/// Quantum-state-diffusion trajectory with one channel `sqrt(gamma) A_n` per
/// block: RK4 for the deterministic `G` part, Euler-Maruyama for
/// `gamma <A_n>^* A_n dt - (gamma/2) |<A_n>|^2 dt + sqrt(gamma) (A_n - <A_n>) dxi_n`,
/// then renormalization. `dxi_n` are independent complex Wiener increments
/// with `E|dxi|^2 = dt`.
pub fn run_trajectory_diffusive(model: &LocalizationModel, initial: &HybridState, opts: &TrajectoryOptions, rng: &mut RngStream) -> Result<Trajectory, UnravelError> {
    check_shape(model, initial)?;
    let h = opts.step_size();
    check_step(model, initial, h)?;
    let steps = opts.steps();
    let n = model.grid.points;
    let gamma = model.bath.gamma;
    let sg = gamma.sqrt();
    let dx = model.grid.dx;
    let sqrt_h = h.sqrt();

    let mut state = initial.clone();
    let mut monitor = Monitor::default();
    let mut recorder = Recorder::new(opts.record_stride);
    monitor.update(0.0, &state.populations());
    recorder.maybe(0, steps, 0.0, model, &state);

    let k = state.blocks.len();
    let mut ab: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; k];
    let mut mean = vec![C64::new(0.0, 0.0); k];
    let mut xi = vec![C64::new(0.0, 0.0); k];
    let mut old = state.clone();
    let mut stepper = LinearStepper::new(n);
    let mut max_change = 0.0f64;
    for step in 0..steps {
        old.clone_from(&state);
        for c in 0..k {
            xi[c] = rng.complex_normal() * sqrt_h;
            model.a.matrix.mul_vec_into(&old.blocks[c], &mut ab[c]);
            mean[c] = old.blocks[c].iter().zip(&ab[c]).map(|(b, a)| b.conj() * a).sum::<C64>() * dx;
        }
        for c in 0..k {
            stepper.step(&model.generator, &mut state.blocks[c], h);
        }
        // Scalar part acting on the whole state.
        let mut scalar = C64::new(0.0, 0.0);
        for c in 0..k {
            scalar += -0.5 * gamma * mean[c].norm_sqr() * h - sg * mean[c] * xi[c];
        }
        state.ground += scalar * old.ground;
        for c in 0..k {
            let drift = mean[c].conj() * (gamma * h) + xi[c] * sg;
            let blk = &mut state.blocks[c];
            for j in 0..n {
                blk[j] += scalar * old.blocks[c][j] + drift * ab[c][j];
            }
        }
        max_change = max_change.max((state.norm_sqr() - 1.0).abs());
        state.normalize();
        let t = (step + 1) as f64 * h;
        monitor.update(t, &state.populations());
        recorder.maybe(step + 1, steps, t, model, &state);
    }
    let mut tr = finish(rng, opts.t_final, state, recorder, 0, monitor);
    tr.max_norm_change = max_change;
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Grid, Stencil};
    use crate::numerics::rng_split;

    #[test]
    fn no_bath_is_deterministic_schrodinger() {
        let m = LocalizationModel::new(Grid::centered(64, 16.0), BathSpec::new(1.0, 0.0, 0.25).unwrap(), Stencil::Eighth, true).unwrap();
        let psi = m.grid.gaussian(-1.0, 1.0, 1.0);
        let init = HybridState::superposition(C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions { t_final: 0.5, dt: 0.001, record_stride: 0 };
        let a = run_trajectory_diffusive(&m, &init, &opts, &mut rng_split(9, 0)).unwrap();
        let b = run_trajectory_diffusive(&m, &init, &opts, &mut rng_split(9, 1)).unwrap();
        assert_eq!(a.state, b.state);
        let u = m.hamiltonian.to_dense().scaled(C64::new(0.0, -0.5)).expm().unwrap();
        let exact = u.mul_vec(&init.blocks[0]).unwrap();
        let err = a.state.blocks[0].iter().zip(&exact).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn broad_packet_localizes_to_lambda_scale() {
        let m = LocalizationModel::new(Grid::centered(128, 32.0), BathSpec::new(1.0, 1.0, 0.25).unwrap(), Stencil::Eighth, false).unwrap();
        let psi = m.grid.gaussian(0.0, 0.0, 3.0);
        let init = HybridState::superposition(C64::new(0.0, 0.0), C64::new(1.0, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions { t_final: 3.0, dt: 0.0005, record_stride: 400 };
        for i in 0..4 {
            let tr = run_trajectory_diffusive(&m, &init, &opts, &mut rng_split(10, i)).unwrap();
            let first = tr.samples.first().unwrap().width;
            let late: Vec<f64> = tr.samples.iter().filter(|s| s.t >= 1.5).map(|s| s.width).collect();
            assert!(first > 2.9);
            assert!(late.iter().all(|&w| w < 1.2), "{late:?}");
            assert!(tr.max_norm_change < 0.05);
        }
    }
}
