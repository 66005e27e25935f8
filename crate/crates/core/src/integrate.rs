//! Adaptive Dormand–Prince 5(4) integration for matrix-valued ODEs.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::hilbert::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t:.6e}: h = {h:.3e} below minimum {h_min:.3e} (error estimate {error:.3e}); system is likely stiff")]
    StepSizeUnderflow { t: f64, h: f64, h_min: f64, error: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t:.6e}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t:.6e}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

// Dormand–Prince tableau
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
// difference between 5th- and embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(base: &DMatrix<C64>, h: f64, terms: &[(f64, &DMatrix<C64>)]) -> DMatrix<C64> {
    let mut out = base.clone();
    for (w, k) in terms {
        let f = C64::new(h * w, 0.0);
        out.iter_mut().zip(k.iter()).for_each(|(o, x)| *o += f * x);
    }
    out
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1`.
///
/// `on_step(t, y)` runs after every accepted step and may modify the state
/// (used to re-symmetrize density matrices). `stats` carries the step size
/// across calls so chunked integration does not restart from `initial_step`.
pub fn integrate(
    y: &mut DMatrix<C64>,
    t0: f64,
    t1: f64,
    control: &StepControl,
    stats: &mut StepStats,
    mut rhs: impl FnMut(f64, &DMatrix<C64>) -> DMatrix<C64>,
    mut on_step: impl FnMut(f64, &mut DMatrix<C64>),
) -> Result<(), IntegrationError> {
    let mut t = t0;
    let mut h = if stats.last_step > 0.0 { stats.last_step } else { control.initial_step };
    h = h.min(control.max_step);
    let mut k1 = rhs(t, y);
    let mut steps = 0usize;
    while t < t1 {
        if steps >= control.max_steps {
            return Err(IntegrationError::MaxSteps { t, max_steps: control.max_steps });
        }
        let remaining = t1 - t;
        let h_try = h.min(remaining);
        let k2 = rhs(t + C2 * h_try, &lin(y, h_try, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h_try, &lin(y, h_try, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h_try, &lin(y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(t + C5 * h_try, &lin(y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(t + h_try, &lin(y, h_try, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = lin(y, h_try, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(t + h_try, &y_new);
        let err_mat = lin(
            &DMatrix::zeros(y.nrows(), y.ncols()),
            h_try,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let mut err: f64 = 0.0;
        for ((e, a), b) in err_mat.iter().zip(y.iter()).zip(y_new.iter()) {
            let scale = control.atol + control.rtol * a.norm().max(b.norm());
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() {
            return Err(IntegrationError::NonFinite { t });
        }
        steps += 1;
        if err <= 1.0 {
            t += h_try;
            *y = y_new;
            on_step(t, y);
            k1 = rhs(t, y);
            stats.accepted += 1;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a step truncated to hit t1 says nothing about the natural step size
            if h_try == h {
                h = (h * factor).min(control.max_step);
            }
            stats.last_step = h;
        } else {
            stats.rejected += 1;
            h = h_try * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
            if h < control.min_step {
                return Err(IntegrationError::StepSizeUnderflow { t, h, h_min: control.min_step, error: err });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_and_rotation() {
        let mut y = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let rate = C64::new(-0.3, 2.0);
        let mut stats = StepStats::default();
        integrate(&mut y, 0.0, 5.0, &StepControl::default(), &mut stats, |_, y| y * rate, |_, _| {}).unwrap();
        let exact = (rate * 5.0).exp();
        assert_relative_eq!(y[(0, 0)].re, exact.re, epsilon = 1e-8);
        assert_relative_eq!(y[(0, 0)].im, exact.im, epsilon = 1e-8);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn underflow_is_reported() {
        let mut y = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let control = StepControl { min_step: 1e-2, initial_step: 1.0, ..StepControl::default() };
        let err = integrate(&mut y, 0.0, 1.0, &control, &mut StepStats::default(), |_, y| y * C64::new(-1e6, 0.0), |_, _| {});
        assert!(matches!(err, Err(IntegrationError::StepSizeUnderflow { .. })));
    }
}
