use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{DistributionFunction, TransportError};

/// Largest grid accepted by [`collision_integral_phonon`].
pub const MAX_POINTS: usize = 256;

/// Acoustic phonons `omega = c_s |q|` in equilibrium at `temperature`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhononBath {
    pub temperature: f64,
    pub sound_speed: f64,
    /// Scattering strength per resonant pair.
    pub w0: f64,
}

impl PhononBath {
    /// Bose occupation `1 / (exp(c_s |q| / T) - 1)`.
    pub fn occupation(&self, q: f64) -> f64 {
        self.bose(self.sound_speed * q.abs())
    }

    pub fn bose(&self, omega: f64) -> f64 {
        if self.temperature <= 0.0 {
            return 0.0;
        }
        1.0 / (omega / self.temperature).exp_m1()
    }
}

/// Resonant pairs `(hi, lo, omega)` with `eps_hi - eps_lo = omega > 0`.
///
/// Momentum and energy conservation for `k -> k'` with `k - k' = q` and
/// `eps_k - eps_k' = +-c_s |q|` force `k + k' = +-2 m c_s`; on the symmetric
/// grid this is `i + j = (N - 1) +- round(2 m c_s / dk)`. The phonon energy
/// is taken from the grid energies so detailed balance holds exactly.
fn resonant_pairs(f: &DistributionFunction, bath: &PhononBath) -> Vec<(usize, usize, f64)> {
    let n = f.grid.points as i64;
    let shift = (2.0 * f.mass * bath.sound_speed / f.grid.dk).round() as i64;
    let mut pairs = Vec::new();
    if shift == 0 {
        return pairs;
    }
    for sum in [n - 1 + shift, n - 1 - shift] {
        for i in 0..n {
            let j = sum - i;
            if j <= i || j >= n || j < 0 {
                continue;
            }
            let (ei, ej) = (f.energy(i as usize), f.energy(j as usize));
            let omega = (ei - ej).abs();
            if omega == 0.0 {
                continue;
            }
            let (hi, lo) = if ei > ej { (i as usize, j as usize) } else { (j as usize, i as usize) };
            pairs.push((hi, lo, omega));
        }
    }
    pairs
}

/// `df/dt` from one-phonon emission and absorption with Pauli blocking:
///
/// `hi -> lo` (emission) at rate `W0 (1 + g) f_hi (1 - f_lo)`,
/// `lo -> hi` (absorption) at rate `W0 g f_lo (1 - f_hi)`.
pub fn collision_integral_phonon(f: &DistributionFunction, bath: &PhononBath) -> Result<Vec<f64>, TransportError> {
    if f.grid.points > MAX_POINTS {
        return Err(TransportError::GridTooLarge(f.grid.points));
    }
    if !(bath.w0 >= 0.0) {
        return Err(TransportError::NonPositive("w0"));
    }
    let mut out = vec![0.0; f.grid.points];
    for (hi, lo, omega) in resonant_pairs(f, bath) {
        let g = bath.bose(omega);
        let (fh, fl) = (f.values[hi], f.values[lo]);
        let down = bath.w0 * (1.0 + g) * fh * (1.0 - fl);
        let up = bath.w0 * g * fl * (1.0 - fh);
        let net = down - up;
        out[hi] -= net;
        out[lo] += net;
    }
    Ok(out)
}

/// Momentum relaxation time `-P / (dP/dt)` of the equilibrium shifted by a
/// small `dk`, with `dP/dt` from the phonon collisions.
pub fn momentum_relaxation_time(mu: f64, grid: super::KGrid, mass: f64, bath: &PhononBath) -> Result<f64, TransportError> {
    let shift = 1e-3 * grid.dk;
    let values = (0..grid.points)
        .map(|i| super::fermi_dirac(super::dispersion(grid.k(i) - shift, mass), mu, bath.temperature))
        .collect();
    let f = DistributionFunction { grid, mass, values };
    let c = collision_integral_phonon(&f, bath)?;
    let p: f64 = f.values.iter().enumerate().map(|(i, v)| grid.k(i) * v).sum();
    let dp: f64 = c.iter().enumerate().map(|(i, v)| grid.k(i) * v).sum();
    let tau = -p / dp;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(TransportError::NonPositive("momentum relaxation time"));
    }
    Ok(tau)
}

/// `sum [f ln f + (1 - f) ln(1 - f)] dk - sum eps f dk / T`: non-increasing
/// under the phonon collisions.
pub fn free_entropy(f: &DistributionFunction, temperature: f64) -> f64 {
    let mut s = 0.0;
    for (i, &v) in f.values.iter().enumerate() {
        let a = if v > 0.0 { v * v.ln() } else { 0.0 };
        let b = if v < 1.0 { (1.0 - v) * (1.0 - v).ln() } else { 0.0 };
        s += a + b + f.energy(i) * v / temperature;
    }
    s * f.grid.dk
}
