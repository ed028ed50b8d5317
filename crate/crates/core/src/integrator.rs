//! Adaptive Dormand–Prince 5(4) integrator for complex-valued ODE systems.
//!
//! States are flat `Complex64` slices: the single-excitation amplitudes of the
//! closed model and the row-major density matrix of the open model both use it.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Tolerance { rtol, atol }
    }

    pub fn halved(self) -> Self {
        Tolerance::new(self.rtol * 0.5, self.atol * 0.5)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: Tolerance,
    pub max_steps: usize,
}

// Butcher tableau
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (difference between 5th- and 4th-order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    pub fn new(tol: Tolerance) -> Self {
        Dopri5 {
            tol,
            max_steps: 5_000_000,
        }
    }

    fn error_norm(&self, y: &[Complex64], y_new: &[Complex64], err: &[Complex64]) -> f64 {
        let sum: f64 = y
            .iter()
            .zip(y_new)
            .zip(err)
            .map(|((a, b), e)| {
                let scale = self.tol.atol + self.tol.rtol * a.norm().max(b.norm());
                (e.norm() / scale).powi(2)
            })
            .sum();
        (sum / y.len().max(1) as f64).sqrt()
    }

    fn initial_step<F>(&self, t0: f64, span: f64, y: &[Complex64], f0: &[Complex64], rhs: &mut F) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let scale = |y: &Complex64| self.tol.atol + self.tol.rtol * y.norm();
        let rms = |v: &[Complex64]| -> f64 {
            let s: f64 = v.iter().zip(y).map(|(v, y)| (v.norm() / scale(y)).powi(2)).sum();
            (s / v.len().max(1) as f64).sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: Vec<Complex64> = y.iter().zip(f0).map(|(y, f)| y + f * h0).collect();
        let mut f1 = vec![Complex64::default(); y.len()];
        rhs(t0 + h0, &y1, &mut f1);
        let diff: Vec<Complex64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances `y` from `t0` to `t1` in place.
    pub fn integrate<F>(&self, t0: f64, t1: f64, y: &mut [Complex64], mut rhs: F) -> Result<StepStats>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let mut stats = StepStats::default();
        let span = t1 - t0;
        if span < 0.0 {
            return Err(Error::ContractViolation(format!(
                "cannot integrate backwards from {t0} to {t1}"
            )));
        }
        if span == 0.0 {
            return Ok(stats);
        }
        let n = y.len();
        let zero = Complex64::default();
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut k5 = vec![zero; n];
        let mut k6 = vec![zero; n];
        let mut k7 = vec![zero; n];
        let mut tmp = vec![zero; n];
        let mut y_new = vec![zero; n];
        let mut err = vec![zero; n];

        rhs(t0, y, &mut k1);
        stats.rhs_evals += 1;
        let mut h = self.initial_step(t0, span, y, &k1, &mut rhs);
        stats.rhs_evals += 1;
        let mut t = t0;
        let mut last_err = 0.0;

        while t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::NumericalFailure {
                    message: format!("step budget of {} exhausted at t={t}", self.max_steps),
                    achieved: last_err * self.tol.rtol,
                    requested: self.tol.rtol,
                });
            }
            let remaining = t1 - t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }

            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (h * A21);
            }
            rhs(t + C2 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
            }
            rhs(t + C3 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            rhs(t + C4 * h, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            rhs(t + C5 * h, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            let t_next = if last { t1 } else { t + h };
            rhs(t_next, &tmp, &mut k6);
            for i in 0..n {
                y_new[i] = y[i]
                    + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * h;
            }
            rhs(t_next, &y_new, &mut k7);
            stats.rhs_evals += 6;
            for i in 0..n {
                err[i] = (k1[i] * E1
                    + k3[i] * E3
                    + k4[i] * E4
                    + k5[i] * E5
                    + k6[i] * E6
                    + k7[i] * E7)
                    * h;
            }
            let err_norm = self.error_norm(y, &y_new, &err);
            if !err_norm.is_finite() {
                return Err(Error::NumericalFailure {
                    message: format!("non-finite error estimate at t={t}"),
                    achieved: f64::INFINITY,
                    requested: self.tol.rtol,
                });
            }

            if err_norm <= 1.0 {
                t = t_next;
                y.copy_from_slice(&y_new);
                std::mem::swap(&mut k1, &mut k7);
                stats.accepted += 1;
                last_err = err_norm;
                let factor = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= factor;
            } else {
                stats.rejected += 1;
                h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NumericalFailure {
                        message: format!("step size underflow at t={t}"),
                        achieved: err_norm * self.tol.rtol,
                        requested: self.tol.rtol,
                    });
                }
            }
        }
        Ok(stats)
    }
}
