use alloc::vec::Vec;

use super::{check_step, HybridState, LinearStepper, TrajectoryOptions, UnravelError, RESOLVE_THRESHOLD};
use crate::bath::LocalizationModel;
use crate::numerics::{RngStream, C64};

/// Jump unraveling specialised to `alpha |g> + sum_n c_n |u>_n` with the same
/// packet in every block.
///
/// Before the first jump every block holds `c_n u(t)` with the shared no-jump
/// shape `u(t) = exp(G t) u(0)`, so `||u||^2` and `||A u||^2` are tabulated
/// once and each run costs one uniform and `O(1)` work per step. After a jump
/// into block `n` the state stays in block `n`, so the run ends there.
#[derive(Debug, Clone)]
pub struct FactorizedCollapse {
    pub t_final: f64,
    pub dt: f64,
    /// `dx ||u_k||^2`, `k = 0..=steps`.
    norms: Vec<f64>,
    /// `dt gamma dx ||A u_k||^2`, `k = 0..steps`.
    jumps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CollapseOutcome {
    /// `Some(0)` ground (no click), `Some(n)` block `n`, `None` unresolved.
    pub block: Option<usize>,
    /// Jump time, or the horizon.
    pub t: f64,
    pub jumped: bool,
    /// The ground block crossed the threshold before a later jump.
    pub false_alarm: bool,
}

impl FactorizedCollapse {
    pub fn new(model: &LocalizationModel, psi: &[C64], opts: &TrajectoryOptions) -> Result<Self, UnravelError> {
        let probe = HybridState::superposition(C64::new(0.0, 0.0), C64::new(1.0, 0.0), psi, &model.grid)?;
        super::check_shape(model, &probe)?;
        let h = opts.step_size();
        check_step(model, &probe, h)?;
        let steps = opts.steps();
        let n = model.grid.points;
        let dx = model.grid.dx;
        let gamma = model.bath.gamma;
        let mut u = psi.to_vec();
        let mut au = alloc::vec![C64::new(0.0, 0.0); n];
        let mut stepper = LinearStepper::new(n);
        let mut norms = Vec::with_capacity(steps + 1);
        let mut jumps = Vec::with_capacity(steps);
        for _ in 0..steps {
            norms.push(model.grid.norm_sqr(&u));
            model.a.matrix.mul_vec_into(&u, &mut au);
            jumps.push(h * gamma * dx * au.iter().map(|z| z.norm_sqr()).sum::<f64>());
            stepper.step(&model.generator, &mut u, h);
        }
        norms.push(model.grid.norm_sqr(&u));
        Ok(Self { t_final: opts.t_final, dt: h, norms, jumps })
    }

    pub fn steps(&self) -> usize {
        self.jumps.len()
    }

    /// Population left in the conduction blocks along the no-jump branch,
    /// relative to its initial value.
    pub fn survival(&self) -> &[f64] {
        &self.norms
    }

    /// One run for block weights `p = [|alpha|^2, |c_1|^2, .., |c_K|^2]`
    /// (summing to 1).
    pub fn collapse(&self, p: &[f64], rng: &mut RngStream) -> CollapseOutcome {
        let ground = p[0];
        let excited: f64 = p[1..].iter().sum();
        let mut ground_crossed = false;
        for k in 0..self.jumps.len() {
            let norm = ground + excited * self.norms[k];
            if ground / norm > RESOLVE_THRESHOLD {
                ground_crossed = true;
            }
            let scale = self.jumps[k] / norm;
            let r = rng.uniform();
            if r < excited * scale {
                let mut cum = 0.0;
                let mut chosen = p.len() - 1;
                for (n, &w) in p.iter().enumerate().skip(1) {
                    cum += w * scale;
                    if r < cum {
                        chosen = n;
                        break;
                    }
                }
                return CollapseOutcome { block: Some(chosen), t: k as f64 * self.dt, jumped: true, false_alarm: ground_crossed };
            }
        }
        let w = self.norms[self.norms.len() - 1];
        let norm = ground + excited * w;
        let mut best = 0;
        let mut best_p = ground / norm;
        for (n, &c) in p.iter().enumerate().skip(1) {
            let q = c * w / norm;
            if q > best_p {
                best = n;
                best_p = q;
            }
        }
        let block = (best_p > RESOLVE_THRESHOLD).then_some(best);
        CollapseOutcome { block, t: self.t_final, jumped: false, false_alarm: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Grid, Stencil};
    use crate::numerics::rng_split;
    use crate::unraveling::run_trajectory_jump;

    #[test]
    fn agrees_with_general_jump_trajectories() {
        let m = LocalizationModel::new(Grid::centered(96, 24.0), BathSpec::new(1.0, 1.0, 0.25).unwrap(), Stencil::Eighth, true).unwrap();
        let psi = m.grid.coherent_packet(6.0, 0.0, 1.0);
        let c = [C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(-0.5, 0.0)];
        let alpha = C64::new(0.5, 0.0);
        let init = HybridState::detector(alpha, &c, &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions::from_decoherence(&m, &psi, 10.0, 0.05);
        let fast = FactorizedCollapse::new(&m, &psi, &opts).unwrap();
        let p = [0.25, 0.25, 0.25, 0.25];
        for i in 0..60u64 {
            let slow = run_trajectory_jump(&m, &init, &opts, &mut rng_split(21, i)).unwrap();
            let quick = fast.collapse(&p, &mut rng_split(21, i));
            assert_eq!(slow.final_block, quick.block, "trajectory {i}");
            assert_eq!(slow.jumps > 0, quick.jumped);
        }
    }

    #[test]
    fn certain_single_block_resolves_at_once() {
        let m = LocalizationModel::new(Grid::centered(96, 24.0), BathSpec::new(1.0, 1.0, 0.25).unwrap(), Stencil::Eighth, true).unwrap();
        let psi = m.grid.coherent_packet(6.0, 0.0, 1.0);
        let opts = TrajectoryOptions::from_decoherence(&m, &psi, 10.0, 0.05);
        let fast = FactorizedCollapse::new(&m, &psi, &opts).unwrap();
        for i in 0..20 {
            assert_eq!(fast.collapse(&[0.0, 1.0], &mut rng_split(3, i)).block, Some(1));
            assert_eq!(fast.collapse(&[1.0, 0.0], &mut rng_split(3, i)).block, Some(0));
        }
    }
}
