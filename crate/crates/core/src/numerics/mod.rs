//! Numerical building blocks shared by every stage of the measurement chain.
//!
//! * [`ComplexMatrix`]: dense row-major complex matrices with dimension-checked
//!   binary operations.
//! * [`SparseMatrix`]: compressed-row complex matrices used for grid operators
//!   (positions, finite-difference stencils, Hamiltonians).
//! * [`ode`]: embedded Dormand–Prince 5(4) with PI step control, plus fixed
//!   step RK4.
//! * [`RngStream`]: counter-based random streams addressed by
//!   `(master_seed, stream_index)`.
//! * [`eigen`]: Jacobi eigenvalues for Hermitian matrices and the trace
//!   distance built on top of them.

mod dense;
pub mod eigen;
pub mod ode;
mod rng;
pub use rng::rng_split;
mod sparse;
pub mod vector;

pub use dense::ComplexMatrix;
pub use eigen::{hermitian_eigenvalues, trace_distance};
pub use ode::{integrate_ode, rk4_fixed, Dopri5, OdeReport, Tolerance};
pub use rng::RngStream;
pub use sparse::SparseMatrix;

use num_complex::Complex;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;

/// Dense complex vector.
pub type ComplexVector = alloc::vec::Vec<C64>;

/// `i`.
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step size underflow at t = {t} (h = {h:e}); derivative is stiff or singular")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}
