mod common;

use common::liouvillian::{evolve, to_nalgebra, trace_distance};
use cwc_core::bath::{evolve_master, BathSpec, Grid, HybridDensityMatrix, LocalizationModel, Stencil};
use cwc_core::numerics::C64;
use cwc_core::unraveling::{run_ensemble, HybridState, Scheme, TrajectoryOptions};

fn small_model() -> LocalizationModel {
    LocalizationModel::new(Grid::centered(2, 5.0), BathSpec::new(0.01, 10.0, 0.25).unwrap(), Stencil::Eighth, true).unwrap()
}

fn small_state(m: &LocalizationModel) -> (C64, C64, Vec<C64>) {
    let mut psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.6)];
    let s = m.grid.norm_sqr(&psi).sqrt();
    psi.iter_mut().for_each(|z| *z /= s);
    (C64::new(0.6f64.sqrt(), 0.0), C64::new(0.0, 0.4f64.sqrt()), psi)
}

#[test]
fn master_integrator_matches_dense_exponential() {
    let m = LocalizationModel::new(Grid::centered(24, 6.0), BathSpec::default(), Stencil::Eighth, true).unwrap();
    let psi = m.grid.coherent_packet(1.0, -0.5, 1.0);
    let rho0 = HybridDensityMatrix::from_pure(m.grid, C64::new(0.8, 0.0), C64::new(0.0, 0.6), &psi).unwrap();
    for t in [0.05, 0.3] {
        let rho = evolve_master(&rho0, &m, t, 1e-11).unwrap();
        let d = trace_distance(&to_nalgebra(&rho.to_orthonormal()), &evolve(&m, &rho0, t));
        assert!(d < 1e-7, "t = {t}: {d}");
    }
}

#[test]
fn small_system_master_matches_dense_exponential() {
    let m = small_model();
    let (a, b, psi) = small_state(&m);
    let rho0 = HybridDensityMatrix::from_pure(m.grid, a, b, &psi).unwrap();
    let rho = evolve_master(&rho0, &m, 1.0, 1e-12).unwrap();
    assert!(trace_distance(&to_nalgebra(&rho.to_orthonormal()), &evolve(&m, &rho0, 1.0)) < 1e-9);
}

/// Ensemble error stays within a fixed multiple of `1 / sqrt(n)`: no bias
/// shows up as the sample grows.
fn check_unbiased(scheme: Scheme, dt: f64) {
    let m = small_model();
    let (a, b, psi) = small_state(&m);
    let init = HybridState::superposition(a, b, &psi, &m.grid).unwrap();
    let opts = TrajectoryOptions { t_final: 1.0, dt, record_stride: 0 };
    let exact = evolve(&m, &HybridDensityMatrix::from_pure(m.grid, a, b, &psi).unwrap(), 1.0);
    for n in [250usize, 1000, 4000] {
        let st = run_ensemble(scheme, &m, &init, &opts, 77, n, true).unwrap();
        let d = trace_distance(&to_nalgebra(st.mean_density_matrix.as_ref().unwrap()), &exact);
        assert!(d * (n as f64).sqrt() < 2.0, "{scheme:?}, n = {n}: distance {d}");
    }
}

#[test]
fn jump_ensemble_is_unbiased() {
    check_unbiased(Scheme::Jump, 0.005);
}

#[test]
fn diffusive_ensemble_is_unbiased() {
    check_unbiased(Scheme::Diffusive, 0.001);
}
