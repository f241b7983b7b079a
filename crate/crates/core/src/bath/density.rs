use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{BathError, Grid};
use crate::numerics::{hermitian_eigenvalues, ComplexMatrix, C64};

/// Density matrix of one electron that is either in a bound level `|g>` or in
/// the conduction band, represented on a position grid.
///
/// Grid blocks use continuum normalization: `rho_ee[(i, j)]` approximates
/// `rho(x_i, x_j)`, so the conduction-band population is
/// `dx * sum_i rho_ee[(i, i)]`. `rho_ge[i]` is `<x_i|rho|g>`; the opposite
/// block is its conjugate and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDensityMatrix {
    pub grid: Grid,
    pub rho_gg: f64,
    pub rho_ge: Vec<C64>,
    pub rho_ee: ComplexMatrix,
}

impl HybridDensityMatrix {
    /// `(alpha |g> + beta |psi>)(...)^dagger` with `sum |psi|^2 dx = 1`.
    pub fn from_pure(grid: Grid, alpha: C64, beta: C64, psi: &[C64]) -> Result<Self, BathError> {
        if psi.len() != grid.points {
            return Err(BathError::GridMismatch(psi.len()));
        }
        let n = grid.norm_sqr(psi);
        if (n - 1.0).abs() > 1e-8 {
            return Err(BathError::NotNormalized(n));
        }
        let total = alpha.norm_sqr() + beta.norm_sqr();
        if (total - 1.0).abs() > 1e-8 {
            return Err(BathError::BadTrace(total));
        }
        let b: Vec<C64> = psi.iter().map(|p| beta * p).collect();
        Ok(Self {
            grid,
            rho_gg: alpha.norm_sqr(),
            rho_ge: b.iter().map(|z| z * alpha.conj()).collect(),
            rho_ee: ComplexMatrix::outer(&b, &b),
        })
    }

    /// Classical mixture `p_g |g><g| + (1 - p_g) |psi><psi|`.
    pub fn mixture(grid: Grid, p_g: f64, psi: &[C64]) -> Result<Self, BathError> {
        if psi.len() != grid.points {
            return Err(BathError::GridMismatch(psi.len()));
        }
        let n = grid.norm_sqr(psi);
        if (n - 1.0).abs() > 1e-8 {
            return Err(BathError::NotNormalized(n));
        }
        Ok(Self {
            grid,
            rho_gg: p_g,
            rho_ge: alloc::vec![C64::new(0.0, 0.0); grid.points],
            rho_ee: ComplexMatrix::outer(psi, psi).scaled(C64::new(1.0 - p_g, 0.0)),
        })
    }

    pub fn points(&self) -> usize {
        self.grid.points
    }

    pub fn conduction_trace(&self) -> f64 {
        self.rho_ee.trace().re * self.grid.dx
    }

    pub fn trace(&self) -> f64 {
        self.rho_gg + self.conduction_trace()
    }

    /// Conduction-band populations `rho(x_i, x_i)`.
    pub fn populations(&self) -> Vec<f64> {
        self.rho_ee.diagonal().iter().map(|z| z.re).collect()
    }

    /// Check the trace, Hermiticity and diagonal-sign invariants.
    pub fn validate(&self) -> Result<(), BathError> {
        let n = self.grid.points;
        if self.rho_ge.len() != n || self.rho_ee.rows() != n || self.rho_ee.cols() != n {
            return Err(BathError::GridMismatch(self.rho_ge.len()));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(BathError::BadTrace(tr));
        }
        let defect = self.rho_ee.hermiticity_defect();
        if defect > 1e-10 {
            return Err(BathError::NotHermitian(defect));
        }
        let worst = self.rho_ee.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min).min(self.rho_gg);
        if worst < -1e-10 {
            return Err(BathError::NegativePopulation(worst));
        }
        Ok(())
    }

    /// Full matrix in the orthonormal basis `{|g>, sqrt(dx) |x_i>}`;
    /// index 0 is the bound level.
    pub fn to_orthonormal(&self) -> ComplexMatrix {
        let n = self.grid.points;
        let dx = self.grid.dx;
        let s = dx.sqrt();
        ComplexMatrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => C64::new(self.rho_gg, 0.0),
            (i, 0) => self.rho_ge[i - 1] * s,
            (0, j) => self.rho_ge[j - 1].conj() * s,
            (i, j) => self.rho_ee[(i - 1, j - 1)] * dx,
        })
    }

    pub fn from_orthonormal(grid: Grid, m: &ComplexMatrix) -> Result<Self, BathError> {
        let n = grid.points;
        if m.rows() != n + 1 || m.cols() != n + 1 {
            return Err(BathError::GridMismatch(m.rows()));
        }
        let dx = grid.dx;
        let s = dx.sqrt();
        Ok(Self {
            grid,
            rho_gg: m[(0, 0)].re,
            rho_ge: (0..n).map(|i| m[(i + 1, 0)] / s).collect(),
            rho_ee: ComplexMatrix::from_fn(n, n, |i, j| m[(i + 1, j + 1)] / dx),
        })
    }

    /// Smallest eigenvalue of the conduction block as an operator.
    pub fn min_conduction_eigenvalue(&self) -> f64 {
        let m = self.rho_ee.scaled(C64::new(self.grid.dx, 0.0));
        hermitian_eigenvalues(&m).ok().and_then(|e| e.first().copied()).unwrap_or(0.0)
    }

    /// Hilbert-Schmidt norm of the conduction block as an operator.
    pub fn conduction_hs_norm(&self) -> f64 {
        self.rho_ee.frobenius_norm() * self.grid.dx
    }

    /// Weight of the conduction population within `margin` of the grid ends.
    pub fn edge_weight(&self, margin: f64) -> f64 {
        let ct = self.conduction_trace();
        if ct <= 0.0 {
            return 0.0;
        }
        let amp: Vec<C64> = self.populations().iter().map(|&p| C64::new(p.max(0.0).sqrt(), 0.0)).collect();
        self.grid.edge_weight(&amp, margin)
    }

    pub(crate) fn flat_len(points: usize) -> usize {
        1 + points + points * points
    }

    /// `[rho_gg, rho_ge.., rho_ee (row-major)..]`
    pub(crate) fn to_flat(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(Self::flat_len(self.grid.points));
        v.push(C64::new(self.rho_gg, 0.0));
        v.extend_from_slice(&self.rho_ge);
        v.extend_from_slice(self.rho_ee.as_slice());
        v
    }

    pub(crate) fn from_flat(grid: Grid, v: &[C64]) -> Self {
        let n = grid.points;
        let mut rho_ee = ComplexMatrix::from_row_major(n, n, v[1 + n..].to_vec()).expect("flat layout");
        rho_ee.hermitize();
        Self { grid, rho_gg: v[0].re, rho_ge: v[1..1 + n].to_vec(), rho_ee }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::centered(32, 8.0)
    }

    #[test]
    fn pure_state_satisfies_invariants() {
        let g = grid();
        let psi = g.gaussian(0.5, 0.3, 1.0);
        let rho = HybridDensityMatrix::from_pure(g, C64::new(0.6, 0.0), C64::new(0.0, 0.8), &psi).unwrap();
        rho.validate().unwrap();
        assert!((rho.rho_gg - 0.36).abs() < 1e-14);
        assert!((rho.conduction_trace() - 0.64).abs() < 1e-12);
        // Pure: the full matrix is a rank-one projector.
        let full = rho.to_orthonormal();
        let sq = full.matmul(&full).unwrap();
        assert!(sq.sub(&full).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn orthonormal_round_trip() {
        let g = grid();
        let psi = g.gaussian(-0.5, 1.0, 0.7);
        let rho = HybridDensityMatrix::from_pure(g, C64::new(0.8, 0.0), C64::new(0.6, 0.0), &psi).unwrap();
        let back = HybridDensityMatrix::from_orthonormal(g, &rho.to_orthonormal()).unwrap();
        assert!(back.rho_ee.sub(&rho.rho_ee).unwrap().frobenius_norm() < 1e-12);
        assert!((back.rho_gg - rho.rho_gg).abs() < 1e-15);
        let flat = HybridDensityMatrix::from_flat(g, &rho.to_flat());
        assert_eq!(flat.rho_ge, rho.rho_ge);
    }

    #[test]
    fn unnormalized_inputs_rejected() {
        let g = grid();
        let psi = g.gaussian(0.0, 0.0, 1.0);
        let half: Vec<C64> = psi.iter().map(|z| z * 0.5).collect();
        assert!(matches!(HybridDensityMatrix::from_pure(g, C64::new(0.6, 0.0), C64::new(0.8, 0.0), &half), Err(BathError::NotNormalized(_))));
        assert!(matches!(HybridDensityMatrix::from_pure(g, C64::new(1.0, 0.0), C64::new(0.8, 0.0), &psi), Err(BathError::BadTrace(_))));
    }

    #[test]
    fn mixture_has_no_coherence_and_is_positive() {
        let g = grid();
        let psi = g.gaussian(0.0, 0.0, 1.0);
        let rho = HybridDensityMatrix::mixture(g, 0.25, &psi).unwrap();
        rho.validate().unwrap();
        assert!(rho.rho_ge.iter().all(|z| z.norm() == 0.0));
        assert!(rho.min_conduction_eigenvalue() > -1e-12);
    }
}
