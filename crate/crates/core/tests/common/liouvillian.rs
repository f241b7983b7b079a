//! Dense Liouvillian of the hybrid bound/conduction system, exponentiated
//! with nalgebra. Independent of the crate's master-equation integrator.

use cwc_core::bath::{HybridDensityMatrix, LocalizationModel};
use cwc_core::numerics::{ComplexMatrix, SparseMatrix, C64};
use nalgebra::DMatrix;

/// `diag(0, M)` on `{|g>, |x_0>, ..}`.
fn embed(m: &SparseMatrix) -> DMatrix<C64> {
    let n = m.rows();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    for (i, j, v) in m.triplets() {
        out[(i + 1, j + 1)] += v;
    }
    out
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Column-major `vec(rho) -> vec(L rho)` with
/// `L rho = -i [H, rho] + gamma (A rho A^+ - {A^+ A, rho} / 2)`.
pub fn liouvillian(model: &LocalizationModel) -> DMatrix<C64> {
    let h = embed(&model.hamiltonian);
    let a = embed(&model.a.matrix);
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let ada = a.adjoint() * &a;
    let gamma = C64::new(model.bath.gamma, 0.0);
    let mi = C64::new(0.0, -1.0);
    let half = C64::new(0.5, 0.0);
    (kron(&id, &h) - kron(&h.transpose(), &id)) * mi
        + (kron(&a.conjugate(), &a) - (kron(&id, &ada) + kron(&ada.transpose(), &id)) * half) * gamma
}

pub fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// `exp(L t) rho0` in the orthonormal basis.
pub fn evolve(model: &LocalizationModel, rho0: &HybridDensityMatrix, t: f64) -> DMatrix<C64> {
    let r0 = to_nalgebra(&rho0.to_orthonormal());
    let d = r0.nrows();
    let l = liouvillian(model) * C64::new(t, 0.0);
    let v = l.exp() * DMatrix::from_column_slice(d * d, 1, r0.as_slice());
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// `sum |eigenvalues of (a - b)| / 2` for Hermitian `a`, `b`.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>() / 2.0
}

pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}
