//! Periodic 1D position grid and the operators that live on it.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{BathError, BathSpec};
use crate::numerics::{SparseMatrix, C64};

/// Uniform periodic lattice `x_j = x_min + j dx`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    pub points: usize,
    pub dx: f64,
    pub x_min: f64,
}

impl Grid {
    /// `points` cells covering `[-length/2, length/2)`.
    pub fn centered(points: usize, length: f64) -> Self {
        let dx = length / points as f64;
        Self { points, dx, x_min: -0.5 * length }
    }

    pub fn length(&self) -> f64 {
        self.points as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// `sum |psi|^2 dx`.
    pub fn norm_sqr(&self, psi: &[C64]) -> f64 {
        psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    /// `sum conj(a) b dx`.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.dx
    }

    /// Mean position and standard deviation of `|psi|^2` (no periodic
    /// unwrapping; intended for packets away from the boundary).
    pub fn centroid_and_width(&self, psi: &[C64]) -> (f64, f64) {
        let w = self.norm_sqr(psi);
        if w <= 0.0 {
            return (0.0, 0.0);
        }
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (j, z) in psi.iter().enumerate() {
            let p = z.norm_sqr() * self.dx / w;
            let x = self.x(j);
            m1 += p * x;
            m2 += p * x * x;
        }
        (m1, (m2 - m1 * m1).max(0.0).sqrt())
    }

    /// Fraction of `|psi|^2` within `margin` of either end of the grid.
    pub fn edge_weight(&self, psi: &[C64], margin: f64) -> f64 {
        let w = self.norm_sqr(psi);
        if w <= 0.0 {
            return 0.0;
        }
        let lo = self.x_min + margin;
        let hi = self.x_min + self.length() - margin;
        let edge: f64 = psi
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let x = self.x(*j);
                x < lo || x >= hi
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        edge * self.dx / w
    }

    /// Normalized packet `exp(-(x-x0)^2 / (4 sigma^2) + i k x)`, i.e.
    /// `|psi|^2` has standard deviation `sigma`.
    pub fn gaussian(&self, x0: f64, k: f64, sigma: f64) -> Vec<C64> {
        let mut psi: Vec<C64> = (0..self.points)
            .map(|j| {
                let x = self.x(j);
                C64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), k * x)
            })
            .collect();
        let n = self.norm_sqr(&psi).sqrt();
        for z in &mut psi {
            *z /= n;
        }
        psi
    }

    /// The localization eigen-packet `exp(-(x-x0)^2 / (2 lambda^2) + i k x)`,
    /// normalized.
    pub fn coherent_packet(&self, x0: f64, k: f64, lambda: f64) -> Vec<C64> {
        self.gaussian(x0, k, lambda / core::f64::consts::SQRT_2)
    }
}

/// Order of the central first-derivative stencil used inside the
/// localization operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Stencil {
    Second,
    Fourth,
    Sixth,
    #[default]
    Eighth,
}

impl Stencil {
    /// Coefficients `c_m` of `f'(x_j) ~ sum_m c_m (f_{j+m} - f_{j-m}) / dx`.
    pub fn coefficients(self) -> &'static [f64] {
        match self {
            Stencil::Second => &[0.5],
            Stencil::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            Stencil::Sixth => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            Stencil::Eighth => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        }
    }
}

/// `d/dx` on the periodic grid.
pub fn derivative(grid: &Grid, stencil: Stencil) -> SparseMatrix {
    let n = grid.points;
    let mut t = Vec::new();
    for j in 0..n {
        for (m, &c) in stencil.coefficients().iter().enumerate() {
            let m = m + 1;
            let v = c / grid.dx;
            t.push((j, (j + m) % n, C64::new(v, 0.0)));
            t.push((j, (j + n - m % n) % n, C64::new(-v, 0.0)));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

/// Free-particle kinetic energy `-(1/2m) d^2/dx^2`, three-point stencil,
/// periodic.
pub fn kinetic(grid: &Grid, mass: f64) -> SparseMatrix {
    let n = grid.points;
    let c = 1.0 / (2.0 * mass * grid.dx * grid.dx);
    let mut t = Vec::new();
    for j in 0..n {
        t.push((j, j, C64::new(2.0 * c, 0.0)));
        t.push((j, (j + 1) % n, C64::new(-c, 0.0)));
        t.push((j, (j + n - 1) % n, C64::new(-c, 0.0)));
    }
    SparseMatrix::from_triplets(n, n, &t)
}

pub fn position(grid: &Grid) -> SparseMatrix {
    let d: Vec<C64> = grid.positions().into_iter().map(|x| C64::new(x, 0.0)).collect();
    SparseMatrix::diagonal(&d)
}

/// Discretized `A = x / lambda + lambda d/dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationOperator {
    pub lambda: f64,
    pub matrix: SparseMatrix,
}

impl LocalizationOperator {
    pub fn new(grid: &Grid, lambda: f64, stencil: Stencil) -> Self {
        let x = position(grid).scaled(C64::new(1.0 / lambda, 0.0));
        let d = derivative(grid, stencil).scaled(C64::new(lambda, 0.0));
        let matrix = x.add(&d).expect("same grid");
        Self { lambda, matrix }
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(psi).expect("grid-sized vector")
    }

    /// `A^dagger A`, formed as an exact sparse product so that
    /// `tr(A rho A^dagger) = tr(A^dagger A rho)` holds to rounding.
    pub fn number_like(&self) -> SparseMatrix {
        self.matrix.adjoint().matmul(&self.matrix).expect("square")
    }

    /// Eigenvalue of the continuum operator on the packet centred at `x0`
    /// with wave number `k`.
    pub fn packet_eigenvalue(&self, x0: f64, k: f64) -> C64 {
        C64::new(x0 / self.lambda, k * self.lambda)
    }
}

/// Everything the master equation and the unravelings need on one grid.
#[derive(Debug, Clone)]
pub struct LocalizationModel {
    pub grid: Grid,
    pub bath: BathSpec,
    pub stencil: Stencil,
    pub include_kinetic: bool,
    pub a: LocalizationOperator,
    /// `A^dagger A`
    pub a_dag_a: SparseMatrix,
    /// Conduction-band Hamiltonian (zero when `include_kinetic` is off).
    pub hamiltonian: SparseMatrix,
    /// `G = -i H - (gamma/2) A^dagger A`, the no-jump generator.
    pub generator: SparseMatrix,
}

impl LocalizationModel {
    pub fn new(grid: Grid, bath: BathSpec, stencil: Stencil, include_kinetic: bool) -> Result<Self, BathError> {
        bath.validate()?;
        let lambda = bath.lambda();
        if grid.points < 2 {
            return Err(BathError::GridTooSmall(grid.points));
        }
        if grid.dx > 0.25 * lambda * (1.0 + 1e-12) {
            return Err(BathError::GridTooCoarse { dx: grid.dx, lambda });
        }
        let a = LocalizationOperator::new(&grid, lambda, stencil);
        let a_dag_a = a.number_like();
        let hamiltonian = if include_kinetic { kinetic(&grid, bath.mass) } else { SparseMatrix::zeros(grid.points, grid.points) };
        let generator = hamiltonian
            .scaled(C64::new(0.0, -1.0))
            .add(&a_dag_a.scaled(C64::new(-0.5 * bath.gamma, 0.0)))
            .expect("same grid");
        Ok(Self { grid, bath, stencil, include_kinetic, a, a_dag_a, hamiltonian, generator })
    }

    /// Unit-normalized grid state, `sum |psi|^2 dx = 1`, expectation of
    /// `A^dagger A`.
    pub fn localization_rate_density(&self, psi: &[C64]) -> f64 {
        let w = self.grid.norm_sqr(psi);
        if w <= 0.0 {
            return 0.0;
        }
        self.a_dag_a.expectation(psi).re * self.grid.dx / w
    }

    /// Smallest wavelength the stencil resolves, `2 dx`, in units of `lambda`.
    pub fn resolution(&self) -> f64 {
        2.0 * self.grid.dx / self.bath.lambda()
    }
}

/// `2 pi / length`: wave-number spacing compatible with the periodic grid.
pub fn wavenumber_quantum(grid: &Grid) -> f64 {
    2.0 * PI / grid.length()
}
