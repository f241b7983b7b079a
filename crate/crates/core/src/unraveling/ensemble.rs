use alloc::vec;
use alloc::vec::Vec;

use super::{run_trajectory, HybridState, Scheme, Trajectory, TrajectoryOptions, UnravelError};
use crate::bath::{Grid, HybridDensityMatrix, LocalizationModel};
use crate::numerics::{rng_split, ComplexMatrix, C64};

/// Order-independent running sums over trajectories.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    blocks: usize,
    points: usize,
    t_final: f64,
    n_traj: usize,
    counts: Vec<usize>,
    unresolved: usize,
    trapping_failures: usize,
    floor_violations: usize,
    false_alarms: usize,
    jumps: usize,
    rho_sum: Option<ComplexMatrix>,
}

impl EnsembleAccumulator {
    pub fn new(blocks: usize, points: usize, t_final: f64, track_density: bool) -> Self {
        let dim = 1 + blocks * points;
        Self {
            blocks,
            points,
            t_final,
            n_traj: 0,
            counts: vec![0; blocks + 1],
            unresolved: 0,
            trapping_failures: 0,
            floor_violations: 0,
            false_alarms: 0,
            jumps: 0,
            rho_sum: track_density.then(|| ComplexMatrix::zeros(dim, dim)),
        }
    }

    pub fn add(&mut self, tr: &Trajectory) -> Result<(), UnravelError> {
        if tr.state.blocks.len() != self.blocks || tr.state.blocks.iter().any(|b| b.len() != self.points) || tr.t_final != self.t_final {
            return Err(UnravelError::InhomogeneousEnsemble);
        }
        self.n_traj += 1;
        self.jumps += tr.jumps;
        self.floor_violations += tr.monitor.floor_violations;
        match tr.final_block {
            Some(b) => {
                self.counts[b] += 1;
                if !tr.monitor.trapped_in(b) {
                    self.trapping_failures += 1;
                }
                if tr.monitor.false_alarm(b) {
                    self.false_alarms += 1;
                }
            }
            None => self.unresolved += 1,
        }
        if let Some(sum) = &mut self.rho_sum {
            let v = tr.state.orthonormal();
            let dim = v.len();
            let data = sum.as_mut_slice();
            for i in 0..dim {
                if v[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dim {
                    data[i * dim + j] += v[i] * v[j].conj();
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<(), UnravelError> {
        if other.blocks != self.blocks || other.points != self.points || other.t_final != self.t_final || other.rho_sum.is_some() != self.rho_sum.is_some() {
            return Err(UnravelError::InhomogeneousEnsemble);
        }
        self.n_traj += other.n_traj;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.unresolved += other.unresolved;
        self.trapping_failures += other.trapping_failures;
        self.floor_violations += other.floor_violations;
        self.false_alarms += other.false_alarms;
        self.jumps += other.jumps;
        if let (Some(a), Some(b)) = (&mut self.rho_sum, &other.rho_sum) {
            a.add_scaled(C64::new(1.0, 0.0), b).expect("same dimension");
        }
        Ok(())
    }

    pub fn finish(self) -> Result<EnsembleStats, UnravelError> {
        if self.n_traj == 0 {
            return Err(UnravelError::EmptyEnsemble);
        }
        let resolved = self.n_traj - self.unresolved;
        let block_frequencies = self.counts.iter().map(|&c| if resolved > 0 { c as f64 / resolved as f64 } else { 0.0 }).collect();
        let n = self.n_traj as f64;
        Ok(EnsembleStats {
            n_traj: self.n_traj,
            block_counts: self.counts,
            block_frequencies,
            unresolved: self.unresolved,
            trapping_failures: self.trapping_failures,
            floor_violations: self.floor_violations,
            false_alarms: self.false_alarms,
            mean_jumps: self.jumps as f64 / n,
            mean_density_matrix: self.rho_sum.map(|m| m.scaled(C64::new(1.0 / n, 0.0))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub n_traj: usize,
    /// Trajectories ending in each block, `[ground, 1, .., K]`.
    pub block_counts: Vec<usize>,
    /// `block_counts` over resolved trajectories.
    pub block_frequencies: Vec<f64>,
    pub unresolved: usize,
    /// Resolved trajectories whose final block escaped after crossing.
    pub trapping_failures: usize,
    /// Outcome changes after the coherence fell below the floor.
    pub floor_violations: usize,
    /// Resolved trajectories whose first threshold crossing was another block.
    pub false_alarms: usize,
    pub mean_jumps: f64,
    /// Mean `|psi><psi|` in the orthonormal basis `{|g>, sqrt(dx)|x_i>_n}`.
    pub mean_density_matrix: Option<ComplexMatrix>,
}

impl EnsembleStats {
    pub fn unresolved_fraction(&self) -> f64 {
        self.unresolved as f64 / self.n_traj as f64
    }

    /// Mean density matrix as a hybrid state (single conduction block).
    pub fn mean_hybrid(&self, grid: &Grid) -> Option<HybridDensityMatrix> {
        let m = self.mean_density_matrix.as_ref()?;
        HybridDensityMatrix::from_orthonormal(*grid, m).ok()
    }
}

/// Aggregate finished trajectories.
pub fn ensemble_average(trajectories: &[Trajectory], track_density: bool) -> Result<EnsembleStats, UnravelError> {
    let first = trajectories.first().ok_or(UnravelError::EmptyEnsemble)?;
    let points = first.state.blocks.first().map_or(0, |b| b.len());
    let mut acc = EnsembleAccumulator::new(first.state.blocks.len(), points, first.t_final, track_density);
    for tr in trajectories {
        acc.add(tr)?;
    }
    acc.finish()
}

/// Trajectories `0..n_traj` on streams `(master_seed, i)`, reduced in order.
pub fn run_ensemble(
    scheme: Scheme,
    model: &LocalizationModel,
    initial: &HybridState,
    opts: &TrajectoryOptions,
    master_seed: u64,
    n_traj: usize,
    track_density: bool,
) -> Result<EnsembleStats, UnravelError> {
    let mut acc = EnsembleAccumulator::new(initial.blocks.len(), model.grid.points, opts.t_final, track_density);
    for i in 0..n_traj {
        let tr = run_trajectory(scheme, model, initial, opts, &mut rng_split(master_seed, i as u64))?;
        acc.add(&tr)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Stencil};

    fn setup() -> (LocalizationModel, HybridState, TrajectoryOptions) {
        let m = LocalizationModel::new(Grid::centered(96, 24.0), BathSpec::new(1.0, 1.0, 0.25).unwrap(), Stencil::Eighth, true).unwrap();
        let psi = m.grid.coherent_packet(6.0, 0.0, 1.0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let init = HybridState::superposition(C64::new(s, 0.0), C64::new(s, 0.0), &psi, &m.grid).unwrap();
        let opts = TrajectoryOptions::from_decoherence(&m, &psi, 10.0, 0.05);
        (m, init, opts)
    }

    #[test]
    fn single_trajectory_mean_is_its_projector() {
        let (m, init, opts) = setup();
        let tr = run_trajectory(Scheme::Jump, &m, &init, &opts, &mut rng_split(5, 0)).unwrap();
        let stats = ensemble_average(core::slice::from_ref(&tr), true).unwrap();
        let mean = stats.mean_density_matrix.unwrap();
        assert!(mean.sub(&tr.state.projector()).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn equal_weights_give_even_split() {
        let (m, init, opts) = setup();
        let stats = run_ensemble(Scheme::Jump, &m, &init, &opts, 11, 2000, false).unwrap();
        let f = stats.block_frequencies[1];
        // 3 sigma of a fair coin at n = 2000.
        assert!((f - 0.5).abs() < 3.0 * (0.25f64 / 2000.0).sqrt(), "{f}");
        assert!((stats.block_frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(stats.trapping_failures, 0);
    }

    #[test]
    fn split_reduction_matches_sequential() {
        let (m, init, opts) = setup();
        let whole = run_ensemble(Scheme::Jump, &m, &init, &opts, 12, 40, true).unwrap();
        let mut a = EnsembleAccumulator::new(1, m.grid.points, opts.t_final, true);
        let mut b = a.clone();
        for i in 0..40u64 {
            let tr = run_trajectory(Scheme::Jump, &m, &init, &opts, &mut rng_split(12, i)).unwrap();
            if i % 3 == 0 { a.add(&tr).unwrap() } else { b.add(&tr).unwrap() }
        }
        a.merge(&b).unwrap();
        let merged = a.finish().unwrap();
        assert_eq!(merged.block_counts, whole.block_counts);
        let d = merged.mean_density_matrix.unwrap().sub(&whole.mean_density_matrix.unwrap()).unwrap().frobenius_norm();
        assert!(d < 1e-12);
    }

    #[test]
    fn mixed_horizons_rejected() {
        let (m, init, opts) = setup();
        let a = run_trajectory(Scheme::Jump, &m, &init, &opts, &mut rng_split(1, 0)).unwrap();
        let mut o2 = opts;
        o2.t_final *= 0.5;
        let b = run_trajectory(Scheme::Jump, &m, &init, &o2, &mut rng_split(1, 1)).unwrap();
        assert!(matches!(ensemble_average(&[a, b], false), Err(UnravelError::InhomogeneousEnsemble)));
        assert!(matches!(ensemble_average(&[], false), Err(UnravelError::EmptyEnsemble)));
    }
}
