//! Eigenvalues of Hermitian matrices.
//!
//! A Hermitian `H = S + iK` is embedded in the real symmetric matrix
//! `[[S, -K], [K, S]]`, whose spectrum is that of `H` with every eigenvalue
//! doubled, and diagonalized with cyclic Jacobi rotations.

use alloc::vec;
use alloc::vec::Vec;


#[allow(unused_imports)]
use num_traits::Float;

use super::{ComplexMatrix, NumericsError};

fn jacobi_symmetric(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off <= 1e-30 * diag.max(1e-300) || off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Ascending eigenvalues of a Hermitian matrix. Only the Hermitian part
/// `(M + M^†)/2` is used.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let big = 2 * n;
    let mut a = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            a[i * big + j] = h.re;
            a[(i + n) * big + (j + n)] = h.re;
            a[i * big + (j + n)] = -h.im;
            a[(i + n) * big + j] = h.im;
        }
    }
    let mut ev = jacobi_symmetric(a, big);
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    Ok(ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Trace distance `||a - b||_1 / 2` between two density matrices given in an
/// orthonormal basis.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, NumericsError> {
    let d = a.sub(b)?;
    Ok(0.5 * hermitian_eigenvalues(&d)?.iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::C64;

    #[test]
    fn pauli_y_spectrum() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]).unwrap();
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_and_determinant_preserved() {
        let n = 6;
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            let re = 1.0 / (1.0 + (i + j) as f64);
            let im = if i == j { 0.0 } else { 0.1 * (i as f64 - j as f64) };
            C64::new(re, im)
        });
        let ev = hermitian_eigenvalues(&m).unwrap();
        let tr: f64 = ev.iter().sum();
        assert!((tr - m.trace().re).abs() < 1e-12);
        let sq: f64 = ev.iter().map(|x| x * x).sum();
        assert!((sq - m.frobenius_norm().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = ComplexMatrix::outer(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let b = ComplexMatrix::outer(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }
}
