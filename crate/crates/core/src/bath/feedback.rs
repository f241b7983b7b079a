//! Nonlinear Schrodinger evolution with a bath-induced feedback potential
//! `V` that relaxes toward `-g_f |psi|^2`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{BathError, Grid};
use crate::numerics::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeedbackKernel {
    /// `g_f` in `V_target = -g_f |psi|^2`.
    pub strength: f64,
    /// `tau_V`; zero means `V` follows `V_target` instantly.
    pub relaxation_time: f64,
}

impl FeedbackKernel {
    pub fn none() -> Self {
        Self { strength: 0.0, relaxation_time: 0.0 }
    }

    fn target(&self, psi: &[C64], out: &mut [f64]) {
        for (v, z) in out.iter_mut().zip(psi) {
            *v = -self.strength * z.norm_sqr();
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackRun {
    pub psi: Vec<C64>,
    pub potential: Vec<f64>,
    /// `(t, width)` after every step.
    pub widths: Vec<(f64, f64)>,
    /// `| ||psi(t)|| - 1 |` at the end.
    pub norm_drift: f64,
}

/// Solve the cyclic tridiagonal system with constant diagonal `d` and
/// off-diagonals `e` (including the corners).
fn solve_cyclic(d: C64, e: C64, rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    // Sherman-Morrison: A = B + u v^T with u = (gamma, 0.., e), v = (1, 0.., e / gamma).
    let gamma = -d;
    let mut diag = vec![d; n];
    diag[0] = d - gamma;
    diag[n - 1] = d - e * e / gamma;
    let thomas = |r: &[C64]| -> Vec<C64> {
        let mut c = vec![C64::new(0.0, 0.0); n];
        let mut x = vec![C64::new(0.0, 0.0); n];
        let mut denom = diag[0];
        x[0] = r[0] / denom;
        for i in 1..n {
            c[i - 1] = e / denom;
            denom = diag[i] - e * c[i - 1];
            x[i] = (r[i] - e * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - c[i] * x[i + 1];
        }
        x
    };
    let x = thomas(rhs);
    let mut u = vec![C64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = e;
    let z = thomas(&u);
    let fact = (x[0] + e * x[n - 1] / gamma) / (C64::new(1.0, 0.0) + z[0] + e * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(a, b)| a - fact * b).collect()
}

/// Strang-split evolution: half potential kick, Crank-Nicolson kinetic step,
/// exact relaxation of `V`, half kick.
pub fn evolve_feedback_nlse(psi: &[C64], grid: &Grid, mass: f64, kernel: &FeedbackKernel, t: f64, dt: f64) -> Result<FeedbackRun, BathError> {
    if psi.len() != grid.points {
        return Err(BathError::GridMismatch(psi.len()));
    }
    let norm = grid.norm_sqr(psi);
    if !((norm - 1.0).abs() <= 1e-8) {
        return Err(BathError::NotNormalized(norm));
    }
    if !(t >= 0.0) {
        return Err(BathError::NegativeTime(t));
    }
    if !(mass > 0.0) {
        return Err(BathError::BadMass(mass));
    }
    let n = grid.points;
    let steps = if t == 0.0 { 0 } else { (t / dt).ceil().max(1.0) as usize };
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let c = 1.0 / (2.0 * mass * grid.dx * grid.dx);
    // (1 + i h H / 2) psi' = (1 - i h H / 2) psi, H tridiagonal (2c, -c).
    let d = C64::new(1.0, h * c);
    let e = C64::new(0.0, -0.5 * h * c);
    let decay = if kernel.relaxation_time > 0.0 { (-h / kernel.relaxation_time).exp() } else { 0.0 };

    let mut psi = psi.to_vec();
    let mut v = vec![0.0; n];
    kernel.target(&psi, &mut v);
    let mut target = vec![0.0; n];
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    let mut widths = Vec::with_capacity(steps);
    for s in 0..steps {
        for (z, &vv) in psi.iter_mut().zip(&v) {
            *z *= C64::from_polar(1.0, -0.5 * h * vv);
        }
        for j in 0..n {
            let l = psi[(j + n - 1) % n];
            let r = psi[(j + 1) % n];
            rhs[j] = psi[j] * C64::new(1.0, -h * c) + (l + r) * C64::new(0.0, 0.5 * h * c);
        }
        psi = solve_cyclic(d, e, &rhs);
        kernel.target(&psi, &mut target);
        for (vv, &tg) in v.iter_mut().zip(&target) {
            *vv = tg + (*vv - tg) * decay;
        }
        for (z, &vv) in psi.iter_mut().zip(&v) {
            *z *= C64::from_polar(1.0, -0.5 * h * vv);
        }
        widths.push(((s + 1) as f64 * h, grid.centroid_and_width(&psi).1));
    }
    let norm_drift = (grid.norm_sqr(&psi).sqrt() - 1.0).abs();
    Ok(FeedbackRun { psi, potential: v, widths, norm_drift })
}
