use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{BathError, HybridDensityMatrix, LocalizationModel};
use crate::numerics::ode::Dopri5;
use crate::numerics::{OdeReport, SparseMatrix, Tolerance, C64};

/// Time-derivative workspace for one grid size.
struct Rhs<'a> {
    model: &'a LocalizationModel,
    n: usize,
    m1: Vec<C64>,
    m2: Vec<C64>,
}

impl<'a> Rhs<'a> {
    fn new(model: &'a LocalizationModel) -> Self {
        let n = model.grid.points;
        Self { model, n, m1: vec![C64::new(0.0, 0.0); n * n], m2: vec![C64::new(0.0, 0.0); n * n] }
    }

    /// `y = [rho_gg, rho_ge, rho_ee]`:
    /// `d rho_ee = G rho + rho G^dagger + gamma A rho A^dagger`,
    /// `d rho_ge = G rho_ge`, `d rho_gg = 0`.
    fn eval(&mut self, y: &[C64], dy: &mut [C64]) {
        let n = self.n;
        let gamma = self.model.bath.gamma;
        let g = &self.model.generator;
        let a = &self.model.a.matrix;
        dy[0] = C64::new(0.0, 0.0);
        g.mul_vec_into(&y[1..1 + n], &mut dy[1..1 + n]);

        let rho = &y[1 + n..];
        let out = &mut dy[1 + n..];
        g.mul_dense_slice(rho, n, out);
        g.mul_adjoint_right_slice(rho, n, &mut self.m1);
        for (o, v) in out.iter_mut().zip(&self.m1) {
            *o += v;
        }
        if gamma != 0.0 {
            a.mul_dense_slice(rho, n, &mut self.m1);
            a.mul_adjoint_right_slice(&self.m1, n, &mut self.m2);
            for (o, v) in out.iter_mut().zip(&self.m2) {
                *o += v * gamma;
            }
        }
    }
}

fn check_grid(rho: &HybridDensityMatrix, model: &LocalizationModel) -> Result<(), BathError> {
    if rho.grid != model.grid {
        return Err(BathError::GridMismatch(rho.grid.points));
    }
    Ok(())
}

/// `d rho / dt` under the localization master equation.
pub fn dissipator(rho: &HybridDensityMatrix, model: &LocalizationModel) -> Result<HybridDensityMatrix, BathError> {
    check_grid(rho, model)?;
    rho.validate()?;
    let y = rho.to_flat();
    let mut dy = vec![C64::new(0.0, 0.0); y.len()];
    Rhs::new(model).eval(&y, &mut dy);
    Ok(HybridDensityMatrix::from_flat(rho.grid, &dy))
}

/// Norm of the interference block, `sqrt(sum |rho_ge|^2 dx)`.
pub fn blockdiag_distance(rho: &HybridDensityMatrix) -> f64 {
    (rho.rho_ge.iter().map(|z| z.norm_sqr()).sum::<f64>() * rho.grid.dx).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snapshot {
    pub t: f64,
    pub rho_gg: f64,
    pub trace: f64,
    pub coherence: f64,
    pub populations: Vec<f64>,
}

impl Snapshot {
    fn of(t: f64, rho: &HybridDensityMatrix) -> Self {
        Self { t, rho_gg: rho.rho_gg, trace: rho.trace(), coherence: blockdiag_distance(rho), populations: rho.populations() }
    }
}

#[derive(Debug, Clone)]
pub struct MasterRun {
    pub state: HybridDensityMatrix,
    pub snapshots: Vec<Snapshot>,
    /// `1 / (gamma <A^dagger A>)` of the initial conduction-band state.
    pub decoherence_time: f64,
    /// Set when the conduction population came within `2 lambda` of the
    /// grid ends at any sample.
    pub touched_boundary: bool,
    pub report: OdeReport,
}

/// `tr(A^dagger A rho_ee) / tr(rho_ee)`
pub fn mean_localization(rho: &HybridDensityMatrix, k: &SparseMatrix) -> f64 {
    let n = rho.grid.points;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for (j, v) in k.row(i) {
            acc += v * rho.rho_ee[(j, i)];
        }
    }
    let ct = rho.rho_ee.trace().re;
    if ct.abs() < f64::MIN_POSITIVE {
        return 0.0;
    }
    acc.re / ct
}

fn decoherence_time(rho: &HybridDensityMatrix, model: &LocalizationModel) -> f64 {
    let rate = model.bath.gamma * mean_localization(rho, &model.a_dag_a);
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// Evolve to each of the (non-decreasing, non-negative) `times`, recording a
/// snapshot at every one.
pub fn evolve_master_sampled(rho: &HybridDensityMatrix, model: &LocalizationModel, times: &[f64], tol: f64) -> Result<MasterRun, BathError> {
    check_grid(rho, model)?;
    rho.validate()?;
    let mut stepper = Dopri5::new(Tolerance::uniform(tol))?;
    let mut y = rho.to_flat();
    let mut rhs = Rhs::new(model);
    let margin = 2.0 * model.bath.lambda();
    let mut t = 0.0;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut touched = rho.edge_weight(margin) > 1e-6;
    for &target in times {
        if !(target >= t) {
            return Err(BathError::NegativeTime(target - t));
        }
        if target > t {
            stepper.advance(&mut y, t, target, |_, y, dy| rhs.eval(y, dy))?;
            t = target;
        }
        let state = HybridDensityMatrix::from_flat(model.grid, &y);
        touched |= state.edge_weight(margin) > 1e-6;
        snapshots.push(Snapshot::of(t, &state));
    }
    let state = HybridDensityMatrix::from_flat(model.grid, &y);
    Ok(MasterRun { state, snapshots, decoherence_time: decoherence_time(rho, model), touched_boundary: touched, report: stepper.report })
}

/// Evolve `rho` for time `t` with per-component tolerance `tol`.
pub fn evolve_master(rho: &HybridDensityMatrix, model: &LocalizationModel, t: f64, tol: f64) -> Result<HybridDensityMatrix, BathError> {
    if !(t >= 0.0) {
        return Err(BathError::NegativeTime(t));
    }
    Ok(evolve_master_sampled(rho, model, &[t], tol)?.state)
}

#[cfg(test)]
mod tests {
    use super::super::{BathSpec, Grid, Stencil};
    use super::*;
    use crate::numerics::{hermitian_eigenvalues, ComplexMatrix};

    fn model(points: usize, length: f64, gamma: f64, kinetic: bool) -> LocalizationModel {
        let bath = BathSpec::new(1.0, gamma, 0.25).unwrap();
        LocalizationModel::new(Grid::centered(points, length), bath, Stencil::Eighth, kinetic).unwrap()
    }

    fn hs_norm(rho: &HybridDensityMatrix) -> f64 {
        rho.to_orthonormal().frobenius_norm()
    }

    #[test]
    fn no_bath_no_hamiltonian_is_static() {
        let m = model(64, 16.0, 0.0, false);
        let psi = m.grid.gaussian(1.0, 0.5, 1.0);
        let rho = HybridDensityMatrix::from_pure(m.grid, C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi).unwrap();
        assert!(hs_norm(&dissipator(&rho, &m).unwrap()) == 0.0);
    }

    #[test]
    fn kernel_gaussian_is_stationary() {
        let m = model(128, 16.0, 1.0, false);
        let psi = m.grid.coherent_packet(0.0, 0.0, 1.0);
        let rho = HybridDensityMatrix::mixture(m.grid, 0.0, &psi).unwrap();
        let d = dissipator(&rho, &m).unwrap();
        assert!(hs_norm(&d) < 1e-6, "{}", hs_norm(&d));
    }

    #[test]
    fn derivative_is_traceless() {
        let m = model(64, 16.0, 1.3, true);
        let psi = m.grid.gaussian(1.5, -0.8, 0.9);
        let rho = HybridDensityMatrix::from_pure(m.grid, C64::new(0.6, 0.0), C64::new(0.0, 0.8), &psi).unwrap();
        let d = dissipator(&rho, &m).unwrap();
        assert!(d.trace().abs() < 1e-10);
    }

    #[test]
    fn off_diagonal_decay_grows_quadratically() {
        // Uniform conduction state: rate(x, x') - rate(0) = gamma (x - x')^2 / (2 lambda^2).
        let gamma = 0.7;
        let m = model(128, 32.0, gamma, false);
        let n = m.grid.points;
        let mut rho = HybridDensityMatrix::mixture(m.grid, 0.0, &vec![C64::new((1.0 / m.grid.length()).sqrt(), 0.0); n]).unwrap();
        rho.rho_ee.hermitize();
        let d = dissipator(&rho, &m).unwrap();
        let rate = |i: usize, j: usize| -(d.rho_ee[(i, j)] / rho.rho_ee[(i, j)]).re;
        let mid = n / 2;
        let base = rate(mid, mid);
        for s in 1..=8 {
            let (i, j) = (mid - s, mid + s);
            let delta = m.grid.x(j) - m.grid.x(i);
            let expected = gamma * delta * delta / 2.0;
            let got = rate(i, j) - base;
            assert!((got - expected).abs() < 0.05 * expected, "delta {delta}: {got} vs {expected}");
        }
    }

    #[test]
    fn interference_free_state_stays_block_diagonal() {
        let m = model(64, 16.0, 1.0, true);
        let psi = m.grid.gaussian(2.0, 0.5, 0.8);
        let rho = HybridDensityMatrix::mixture(m.grid, 0.4, &psi).unwrap();
        let run = evolve_master_sampled(&rho, &m, &[0.2, 0.5, 1.0], 1e-9).unwrap();
        assert!(run.snapshots.iter().all(|s| s.coherence == 0.0));
    }

    #[test]
    fn block_populations_are_conserved() {
        let m = model(64, 16.0, 1.0, true);
        let psi = m.grid.gaussian(1.0, 1.0, 0.8);
        let rho = HybridDensityMatrix::from_pure(m.grid, C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi).unwrap();
        let run = evolve_master_sampled(&rho, &m, &[0.25, 0.5, 1.0, 2.0], 1e-10).unwrap();
        for s in &run.snapshots {
            assert!((s.rho_gg - 0.36).abs() < 1e-12);
            assert!((s.trace - 1.0).abs() < 1e-7);
        }
        let ct = run.state.conduction_trace();
        assert!((ct - 0.64).abs() < 1e-7);
        assert!(run.state.min_conduction_eigenvalue() > -1e-6);
        assert!(run.decoherence_time.is_finite());
    }

    /// Smallest eigenvalue of `A^dagger A` restricted to odd functions about
    /// the grid centre.
    fn odd_sector_min_eigenvalue(m: &LocalizationModel) -> f64 {
        let n = m.grid.points;
        let k = m.a_dag_a.to_dense();
        let half = n / 2;
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let basis: Vec<(usize, usize)> = (1..half).map(|j| (half + j, half - j)).collect();
        let r = ComplexMatrix::from_fn(basis.len(), basis.len(), |p, q| {
            let (a, b) = basis[p];
            let (c, d) = basis[q];
            (k[(a, c)] - k[(a, d)] - k[(b, c)] + k[(b, d)]) * s * s
        });
        hermitian_eigenvalues(&r).unwrap()[0]
    }

    #[test]
    fn coherence_decay_rate_matches_spectrum() {
        let gamma = 1.0;
        let m = model(64, 16.0, gamma, false);
        let mu = odd_sector_min_eigenvalue(&m);
        // Odd packet with a displaced second component.
        let mut psi: Vec<C64> = m.grid.positions().iter().map(|&x| C64::new(x * (-x * x / 2.0).exp() + 0.3 * x.powi(3) * (-x * x / 1.5).exp(), 0.0)).collect();
        let nrm = m.grid.norm_sqr(&psi).sqrt();
        psi.iter_mut().for_each(|z| *z /= nrm);
        let rho = HybridDensityMatrix::from_pure(m.grid, C64::new(0.6, 0.0), C64::new(0.8, 0.0), &psi).unwrap();
        let times: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64).collect();
        let run = evolve_master_sampled(&rho, &m, &times, 1e-11).unwrap();
        let c: Vec<f64> = run.snapshots.iter().map(|s| s.coherence).collect();
        let rate = -(c[15].ln() - c[11].ln()) / (times[15] - times[11]);
        let expected = 0.5 * gamma * mu;
        assert!((rate - expected).abs() < 0.1 * expected, "rate {rate}, expected {expected}");
        assert!(rate >= 0.9 * expected);
    }

    #[test]
    fn blockdiag_distance_examples() {
        let g = Grid::centered(32, 8.0);
        let psi = g.gaussian(0.0, 0.0, 1.0);
        assert_eq!(blockdiag_distance(&HybridDensityMatrix::mixture(g, 0.5, &psi).unwrap()), 0.0);
        let mut spike = vec![C64::new(0.0, 0.0); 32];
        spike[10] = C64::new(1.0 / g.dx.sqrt(), 0.0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let rho = HybridDensityMatrix::from_pure(g, C64::new(s, 0.0), C64::new(s, 0.0), &spike).unwrap();
        assert!((blockdiag_distance(&rho) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn far_packet_decoheres_within_ten_inverse_gamma() {
        let gamma = 1.0;
        let m = model(96, 24.0, gamma, true);
        let psi = m.grid.coherent_packet(6.0, 0.0, 1.0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let rho = HybridDensityMatrix::from_pure(m.grid, C64::new(s, 0.0), C64::new(s, 0.0), &psi).unwrap();
        let run = evolve_master_sampled(&rho, &m, &[2.0, 5.0, 10.0 / gamma], 1e-9).unwrap();
        assert!(blockdiag_distance(&run.state) < 1e-3);
        assert!((run.state.trace() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn negative_time_rejected() {
        let m = model(64, 16.0, 1.0, false);
        let rho = HybridDensityMatrix::mixture(m.grid, 0.5, &m.grid.gaussian(0.0, 0.0, 1.0)).unwrap();
        assert!(matches!(evolve_master(&rho, &m, -1.0, 1e-8), Err(BathError::NegativeTime(_))));
    }
}
