//! Explicit Runge–Kutta integrators over flat state slices.
//!
//! [`Dopri5`] is the Dormand–Prince 5(4) pair with first-same-as-last reuse and
//! a PI step-size controller (Hairer, Nørsett & Wanner, *Solving ODEs I*,
//! II.4). [`rk4_fixed`] is the classical fixed-step scheme used where a fixed
//! time base matters more than adaptivity.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};


#[allow(unused_imports)]
use num_traits::Float;

use super::{NumericsError, C64};

/// Scalars the integrators can carry.
pub trait OdeScalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl OdeScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl OdeScalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Mixed absolute/relative local error tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    /// Same value for the absolute and relative parts.
    pub fn uniform(tol: f64) -> Self {
        Self { abs: tol, rel: tol }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs > 0.0) || !self.abs.is_finite() {
            return Err(NumericsError::BadTolerance(self.abs));
        }
        if !(self.rel >= 0.0) || !self.rel.is_finite() {
            return Err(NumericsError::BadTolerance(self.rel));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeReport {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Step size the controller would try next.
    pub next_h: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Adaptive Dormand–Prince 5(4) stepper.
///
/// The stepper keeps its step size and controller memory between calls to
/// [`Dopri5::advance`], so integrating `[t0, t1]` and then `[t1, t2]` costs
/// about the same as one call over `[t0, t2]`.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerance,
    h: Option<f64>,
    h_max: f64,
    err_prev: f64,
    pub report: OdeReport,
}

impl Dopri5 {
    pub fn new(tol: Tolerance) -> Result<Self, NumericsError> {
        tol.validate()?;
        Ok(Self { tol, h: None, h_max: f64::INFINITY, err_prev: 1e-4, report: OdeReport::default() })
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    fn error_norm<T: OdeScalar>(&self, err: &[T], y0: &[T], y1: &[T]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..err.len() {
            let sc = self.tol.abs + self.tol.rel * y0[i].magnitude().max(y1[i].magnitude());
            worst = worst.max(err[i].magnitude() / sc);
        }
        worst
    }

    fn initial_step<T: OdeScalar, F>(&mut self, t: f64, y: &[T], f0: &[T], span: f64, f: &mut F) -> f64
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        // Hairer's starting-step heuristic.
        let sc = |v: T, y: T| v.magnitude() / (self.tol.abs + self.tol.rel * y.magnitude());
        let d0 = y.iter().map(|&v| sc(v, v).powi(2)).fold(0.0, f64::max).sqrt();
        let d1 = f0.iter().zip(y).map(|(&v, &yy)| sc(v, yy).powi(2)).fold(0.0, f64::max).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span.abs()).min(self.h_max);
        let y1: Vec<T> = y.iter().zip(f0).map(|(&yy, &ff)| yy + ff * h0).collect();
        let mut f1 = vec![T::zero(); y.len()];
        f(t + h0, &y1, &mut f1);
        self.report.rhs_evals += 1;
        let d2 = f1.iter().zip(f0).zip(y).map(|((&a, &b), &yy)| sc(a - b, yy).powi(2)).fold(0.0, f64::max).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(span.abs()).min(self.h_max)
    }

    /// Advance `y` from `t0` to `t1` in place.
    pub fn advance<T: OdeScalar, F>(&mut self, y: &mut [T], t0: f64, t1: f64, mut f: F) -> Result<(), NumericsError>
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        let n = y.len();
        if t1 == t0 {
            return Ok(());
        }
        let dir = if t1 > t0 { 1.0 } else { -1.0 };
        let mut k1 = vec![T::zero(); n];
        let mut k2 = vec![T::zero(); n];
        let mut k3 = vec![T::zero(); n];
        let mut k4 = vec![T::zero(); n];
        let mut k5 = vec![T::zero(); n];
        let mut k6 = vec![T::zero(); n];
        let mut k7 = vec![T::zero(); n];
        let mut tmp = vec![T::zero(); n];
        let mut y_new = vec![T::zero(); n];
        let mut err = vec![T::zero(); n];

        let mut t = t0;
        f(t, y, &mut k1);
        self.report.rhs_evals += 1;
        check_finite(&k1, t)?;
        let mut h = match self.h {
            Some(h) => h.abs().min(self.h_max),
            None => self.initial_step(t, y, &k1, t1 - t0, &mut f),
        };

        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining;
            let h_step = if last { remaining } else { h };
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(NumericsError::StepSizeUnderflow { t, h });
            }
            let hs = h_step * dir;

            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (hs * A21);
            }
            f(t + C2 * hs, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * hs;
            }
            f(t + C3 * hs, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * hs;
            }
            f(t + C4 * hs, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * hs;
            }
            f(t + C5 * hs, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * hs;
            }
            f(t + hs, &tmp, &mut k6);
            for i in 0..n {
                y_new[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * hs;
            }
            f(t + hs, &y_new, &mut k7);
            self.report.rhs_evals += 6;
            for i in 0..n {
                err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            }
            let en = self.error_norm(&err, y, &y_new);
            if !en.is_finite() {
                h *= MIN_FACTOR;
                self.report.rejected += 1;
                continue;
            }

            if en <= 1.0 {
                y.copy_from_slice(&y_new);
                core::mem::swap(&mut k1, &mut k7);
                t = if last { t1 } else { t + hs };
                self.report.accepted += 1;
                let factor = if en == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * en.powf(-PI_ALPHA) * self.err_prev.powf(PI_BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.err_prev = en.max(1e-4);
                // A step truncated to hit t1 keeps the untruncated proposal.
                if !(last && h_step < h) {
                    h = (h * factor).min(self.h_max);
                }
                check_finite(&k1, t)?;
                if last {
                    break;
                }
            } else {
                self.report.rejected += 1;
                let factor = (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                h = h_step * factor;
            }
        }
        self.h = Some(h);
        self.report.next_h = h;
        Ok(())
    }
}

fn check_finite<T: OdeScalar>(v: &[T], t: f64) -> Result<(), NumericsError> {
    if v.iter().all(|x| x.is_finite_value()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite { t })
    }
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1` with the adaptive pair.
pub fn integrate_ode<T: OdeScalar, F>(y0: &[T], t0: f64, t1: f64, tol: Tolerance, f: F) -> Result<(Vec<T>, OdeReport), NumericsError>
where
    F: FnMut(f64, &[T], &mut [T]),
{
    let mut stepper = Dopri5::new(tol)?;
    let mut y = y0.to_vec();
    stepper.advance(&mut y, t0, t1, f)?;
    Ok((y, stepper.report))
}

/// Classical RK4 with `steps` equal steps.
pub fn rk4_fixed<T: OdeScalar, F>(y0: &[T], t0: f64, t1: f64, steps: usize, mut f: F) -> Vec<T>
where
    F: FnMut(f64, &[T], &mut [T]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    let h = (t1 - t0) / steps.max(1) as f64;
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (0.5 * h);
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * (0.5 * h);
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h;
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] = y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    y
}
