use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{UnravelError, COHERENCE_FLOOR, ESCAPE_THRESHOLD, RESOLVE_THRESHOLD};
use crate::bath::{Grid, HybridDensityMatrix};
use crate::numerics::{ComplexMatrix, C64};

/// Pure state `ground |g> + sum_n |b_n>` with each `b_n` a grid wavefunction
/// in block `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub ground: C64,
    pub blocks: Vec<Vec<C64>>,
    pub dx: f64,
}

impl HybridState {
    pub fn new(ground: C64, blocks: Vec<Vec<C64>>, dx: f64) -> Result<Self, UnravelError> {
        let s = Self { ground, blocks, dx };
        let n = s.norm_sqr();
        if (n - 1.0).abs() > 1e-8 {
            return Err(UnravelError::NotNormalized(n));
        }
        Ok(s)
    }

    /// `alpha |g> + beta |psi>` with one conduction block.
    pub fn superposition(alpha: C64, beta: C64, psi: &[C64], grid: &Grid) -> Result<Self, UnravelError> {
        Self::detector(alpha, &[beta], psi, grid)
    }

    /// `alpha |g> + sum_n c_n |psi>_n`: identical packets in `K = c.len()`
    /// blocks.
    pub fn detector(alpha: C64, c: &[C64], psi: &[C64], grid: &Grid) -> Result<Self, UnravelError> {
        let pn = grid.norm_sqr(psi);
        if (pn - 1.0).abs() > 1e-8 {
            return Err(UnravelError::NotNormalized(pn));
        }
        let blocks = c.iter().map(|&cn| psi.iter().map(|p| cn * p).collect()).collect();
        Self::new(alpha, blocks, grid.dx)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ground.norm_sqr() + self.blocks.iter().map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx).sum::<f64>()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let s = 1.0 / n;
            self.ground *= s;
            for b in &mut self.blocks {
                for z in b.iter_mut() {
                    *z *= s;
                }
            }
        }
    }

    /// `[ground, block 1, .., block K]`, assuming unit norm.
    pub fn populations(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(1 + self.blocks.len());
        p.push(self.ground.norm_sqr());
        p.extend(self.blocks.iter().map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx));
        p
    }

    /// Frobenius norm of all off-diagonal blocks of `|psi><psi|`.
    pub fn coherence(&self) -> f64 {
        coherence_of(&self.populations())
    }

    pub fn sample(&self, t: f64, grid: &Grid) -> super::BlockSample {
        let total: Vec<C64> = (0..grid.points)
            .map(|j| C64::new(self.blocks.iter().map(|b| b[j].norm_sqr()).sum::<f64>().sqrt(), 0.0))
            .collect();
        let (centroid, width) = grid.centroid_and_width(&total);
        super::BlockSample { t, populations: self.populations(), centroid, width }
    }

    /// Coefficients in the orthonormal basis `{|g>, sqrt(dx)|x_i>_1, ..}`.
    pub fn orthonormal(&self) -> Vec<C64> {
        let s = self.dx.sqrt();
        let mut v = Vec::with_capacity(1 + self.blocks.iter().map(|b| b.len()).sum::<usize>());
        v.push(self.ground);
        for b in &self.blocks {
            v.extend(b.iter().map(|z| z * s));
        }
        v
    }

    pub fn projector(&self) -> ComplexMatrix {
        let v = self.orthonormal();
        ComplexMatrix::outer(&v, &v)
    }

    /// `|psi><psi|` as a hybrid density matrix (single conduction block only).
    pub fn to_density(&self, grid: &Grid) -> Option<HybridDensityMatrix> {
        if self.blocks.len() != 1 {
            return None;
        }
        let b = &self.blocks[0];
        Some(HybridDensityMatrix {
            grid: *grid,
            rho_gg: self.ground.norm_sqr(),
            rho_ge: b.iter().map(|z| z * self.ground.conj()).collect(),
            rho_ee: ComplexMatrix::outer(b, b),
        })
    }
}

/// `sqrt(1 - sum p_n^2)`: off-diagonal Frobenius norm of a pure state with
/// block populations `p`.
pub fn coherence_of(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    let sq: f64 = p.iter().map(|x| x * x).sum();
    (total * total - sq).max(0.0).sqrt()
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Threshold bookkeeping along one trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Monitor {
    /// Number of times a block newly exceeded the resolve threshold.
    pub crossings: usize,
    /// Block of the most recent crossing.
    pub leader: Option<usize>,
    /// First block to cross, and when.
    pub first_block: Option<usize>,
    pub first_crossing_time: Option<f64>,
    /// Whether the leader has fallen below the escape threshold since it
    /// crossed.
    pub escaped: bool,
    pub escapes: usize,
    /// Dominant block the last time the coherence was below the floor.
    pub floor_block: Option<usize>,
    /// Times the dominant block changed between two sub-floor samples.
    pub floor_violations: usize,
}

impl Monitor {
    pub fn update(&mut self, t: f64, p: &[f64]) {
        let top = argmax(p);
        if p[top] > RESOLVE_THRESHOLD && (self.leader != Some(top) || self.escaped) {
            self.crossings += 1;
            self.leader = Some(top);
            self.escaped = false;
            if self.first_block.is_none() {
                self.first_block = Some(top);
                self.first_crossing_time = Some(t);
            }
        } else if let Some(l) = self.leader {
            if !self.escaped && p[l] < ESCAPE_THRESHOLD {
                self.escaped = true;
                self.escapes += 1;
            }
        }
        if coherence_of(p) < COHERENCE_FLOOR {
            if let Some(b) = self.floor_block {
                if b != top {
                    self.floor_violations += 1;
                }
            }
            self.floor_block = Some(top);
        }
    }

    pub fn final_block(&self, p: &[f64]) -> Option<usize> {
        let top = argmax(p);
        (p[top] > RESOLVE_THRESHOLD).then_some(top)
    }

    /// The final block crossed the threshold and never escaped afterwards.
    pub fn trapped_in(&self, block: usize) -> bool {
        self.leader == Some(block) && !self.escaped
    }

    /// The first block to cross the threshold was not the final one.
    pub fn false_alarm(&self, block: usize) -> bool {
        self.first_block.is_some_and(|b| b != block)
    }
}
