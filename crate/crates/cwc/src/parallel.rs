//! Rayon fan-out over photons and trajectories.
//!
//! Work is cut into fixed chunks of stream indices and the chunk results are
//! merged in index order, so results do not depend on the thread count.

use cwc_core::bath::LocalizationModel;
use cwc_core::numerics::rng_split;
use cwc_core::twoslit::{ClickHistogram, TwoSlitExperiment};
use cwc_core::unraveling::{run_trajectory, EnsembleAccumulator, EnsembleStats, HybridState, Scheme, Trajectory, TrajectoryOptions};
use rayon::prelude::*;

use crate::CliError;

/// Stream indices per work item.
pub const CHUNK: u64 = 512;

fn chunks(n: u64) -> Vec<std::ops::Range<u64>> {
    (0..n.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(n)).collect()
}

/// Run `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("`--threads` must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(CliError::runtime)?;
            Ok(pool.install(f))
        }
    }
}

/// Photons `0..n` on streams `(seed, i)`.
pub fn run_photons(exp: &TwoSlitExperiment, n: u64, seed: u64) -> ClickHistogram {
    let parts: Vec<ClickHistogram> = chunks(n).into_par_iter().map(|r| exp.run_range(seed, r)).collect();
    let mut h = ClickHistogram::new(exp.array.len());
    for p in &parts {
        h.merge(p);
    }
    h
}

/// Trajectories `0..n` on streams `(seed, i)`; the trajectories themselves
/// are returned only when `keep` is set.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectories(
    scheme: Scheme,
    model: &LocalizationModel,
    initial: &HybridState,
    opts: &TrajectoryOptions,
    seed: u64,
    n: u64,
    track_density: bool,
    keep: bool,
) -> Result<(EnsembleStats, Vec<Trajectory>), CliError> {
    let blocks = initial.block_count();
    let points = model.grid.points;
    let parts: Vec<Result<(EnsembleAccumulator, Vec<Trajectory>), CliError>> = chunks(n)
        .into_par_iter()
        .map(|r| {
            let mut acc = EnsembleAccumulator::new(blocks, points, opts.t_final, track_density);
            let mut kept = Vec::new();
            for i in r {
                let tr = run_trajectory(scheme, model, initial, opts, &mut rng_split(seed, i)).map_err(CliError::runtime)?;
                acc.add(&tr).map_err(CliError::runtime)?;
                if keep {
                    kept.push(tr);
                }
            }
            Ok((acc, kept))
        })
        .collect();
    let mut total = EnsembleAccumulator::new(blocks, points, opts.t_final, track_density);
    let mut all = Vec::new();
    for p in parts {
        let (acc, kept) = p?;
        total.merge(&acc).map_err(CliError::runtime)?;
        all.extend(kept);
    }
    Ok((total.finish().map_err(CliError::runtime)?, all))
}
