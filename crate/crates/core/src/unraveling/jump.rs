use alloc::vec;
use alloc::vec::Vec;

use super::{check_shape, check_step, finish, HybridState, LinearStepper, Monitor, Recorder, Trajectory, TrajectoryOptions, UnravelError};
use crate::bath::LocalizationModel;
use crate::numerics::{RngStream, C64};

/// Monte-Carlo wave-function trajectory: per step either one quantum jump
/// `b_n -> A b_n` (confining the state to block `n`) or a renormalized
/// no-jump step under `G = -iH - (gamma/2) A^dagger A`.
///
/// One uniform is drawn per step and compared against the cumulative channel
/// probabilities `dt gamma ||A b_n||^2`, lowest channel first.
pub fn run_trajectory_jump(model: &LocalizationModel, initial: &HybridState, opts: &TrajectoryOptions, rng: &mut RngStream) -> Result<Trajectory, UnravelError> {
    check_shape(model, initial)?;
    let h = opts.step_size();
    check_step(model, initial, h)?;
    let steps = opts.steps();
    let n = model.grid.points;
    let gamma = model.bath.gamma;
    let dx = model.grid.dx;

    let mut state = initial.clone();
    let mut monitor = Monitor::default();
    let mut recorder = Recorder::new(opts.record_stride);
    monitor.update(0.0, &state.populations());
    recorder.maybe(0, steps, 0.0, model, &state);

    let k = state.blocks.len();
    let mut ab: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; k];
    let mut probs = vec![0.0; k];
    let mut live: Vec<bool> = state.blocks.iter().map(|b| b.iter().any(|z| z.norm_sqr() > 0.0)).collect();
    let mut stepper = LinearStepper::new(n);
    let mut jumps = 0;
    for step in 0..steps {
        let mut total = 0.0;
        for c in 0..k {
            probs[c] = 0.0;
            if live[c] && gamma > 0.0 {
                model.a.matrix.mul_vec_into(&state.blocks[c], &mut ab[c]);
                probs[c] = h * gamma * dx * ab[c].iter().map(|z| z.norm_sqr()).sum::<f64>();
                total += probs[c];
            }
        }
        let r = rng.uniform();
        if r < total {
            let mut cum = 0.0;
            let mut chosen = k - 1;
            for (c, &p) in probs.iter().enumerate() {
                cum += p;
                if r < cum {
                    chosen = c;
                    break;
                }
            }
            state.ground = C64::new(0.0, 0.0);
            for c in 0..k {
                if c == chosen {
                    state.blocks[c].copy_from_slice(&ab[c]);
                } else {
                    state.blocks[c].fill(C64::new(0.0, 0.0));
                }
                live[c] = c == chosen;
            }
            jumps += 1;
        } else {
            for (block, _) in state.blocks.iter_mut().zip(&live).filter(|(_, l)| **l) {
                stepper.step(&model.generator, block, h);
            }
        }
        state.normalize();
        let t = (step + 1) as f64 * h;
        monitor.update(t, &state.populations());
        recorder.maybe(step + 1, steps, t, model, &state);
    }
    Ok(finish(rng, opts.t_final, state, recorder, jumps, monitor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Grid, Stencil};
    use crate::numerics::rng_split;

    fn model(gamma: f64) -> LocalizationModel {
        LocalizationModel::new(Grid::centered(64, 16.0), BathSpec::new(1.0, gamma, 0.25).unwrap(), Stencil::Eighth, true).unwrap()
    }

    #[test]
    fn no_bath_means_unitary_evolution() {
        let m = model(0.0);
        let psi = m.grid.gaussian(1.0, 0.5, 1.0);
        let init = HybridState::superposition(C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions { t_final: 0.5, dt: 0.001, record_stride: 0 };
        let tr = run_trajectory_jump(&m, &init, &opts, &mut rng_split(1, 0)).unwrap();
        assert_eq!(tr.jumps, 0);
        let u = m.hamiltonian.to_dense().scaled(C64::new(0.0, -0.5)).expm().unwrap();
        let exact = u.mul_vec(&init.blocks[0]).unwrap();
        let err = tr.state.blocks[0].iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!((tr.state.ground - C64::new(0.6, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ground_state_is_dark() {
        let m = model(1.0);
        let psi = m.grid.gaussian(1.0, 0.5, 1.0);
        let init = HybridState::superposition(C64::new(1.0, 0.0), C64::new(0.0, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions { t_final: 1.0, dt: 0.005, record_stride: 10 };
        let tr = run_trajectory_jump(&m, &init, &opts, &mut rng_split(2, 0)).unwrap();
        assert_eq!(tr.jumps, 0);
        assert_eq!(tr.state, init);
        assert_eq!(tr.final_block, Some(0));
        assert!(tr.samples.iter().all(|s| s.populations[0] == 1.0));
    }

    #[test]
    fn oversized_step_rejected() {
        let m = model(1.0);
        let psi = m.grid.coherent_packet(4.0, 0.0, 1.0);
        let init = HybridState::superposition(C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions { t_final: 1.0, dt: 0.1, record_stride: 0 };
        assert!(matches!(run_trajectory_jump(&m, &init, &opts, &mut rng_split(3, 0)), Err(UnravelError::StepTooLarge(_))));
    }

    #[test]
    fn jump_confines_to_one_block() {
        let m = model(1.0);
        let psi = m.grid.coherent_packet(4.0, 0.0, 1.0);
        let init = HybridState::superposition(C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions::from_decoherence(&m, &psi, 10.0, 0.05);
        let mut seen_jump = false;
        for i in 0..20 {
            let tr = run_trajectory_jump(&m, &init, &opts, &mut rng_split(4, i)).unwrap();
            if tr.jumps > 0 {
                seen_jump = true;
                assert_eq!(tr.state.ground, C64::new(0.0, 0.0));
                assert_eq!(tr.final_block, Some(1));
            }
            assert!((tr.state.norm_sqr() - 1.0).abs() < 1e-8);
        }
        assert!(seen_jump);
    }
}
