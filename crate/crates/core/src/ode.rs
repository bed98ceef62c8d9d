//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Last accepted step size, reusable as the first guess of the next segment.
    pub last_h: f64,
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Dopri5 {
    /// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
    /// `h0` is the initial step magnitude guess.
    pub fn integrate<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        h0: f64,
    ) -> Result<([f64; N], StepStats), OdeError>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let mut stats = StepStats::default();
        if t1 == t0 {
            stats.last_h = h0;
            return Ok((y0, stats));
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut h = h0.abs().min(span).max(span * 1e-12) * dir;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let h_floor = 1e-15 * span.max(t0.abs()).max(1.0);

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(OdeError::TooManySteps { t });
            }
            let remaining = t1 - t;
            let last = (h.abs() >= remaining.abs()) || (remaining - h).abs() < h_floor;
            if last {
                h = remaining;
            }
            let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
            let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(
                t + C4 * h,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
            );
            let k5 = f(
                t + C5 * h,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
            );
            let k6 = f(
                t + h,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    h,
                ),
            );
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                h,
            );
            let k7 = f(t + h, &y_new);

            let mut err = 0.0_f64;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if h.abs() <= h_floor {
                    return Err(OdeError::NonFinite { t });
                }
                h *= 0.1;
                stats.rejected += 1;
                continue;
            }

            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y = y_new;
                k1 = k7;
                stats.accepted += 1;
                stats.last_h = h.abs();
                if last {
                    return Ok((y, stats));
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= factor;
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h.abs() < h_floor {
                    return Err(OdeError::StepSizeUnderflow { t });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let solver = Dopri5::default();
        let tau = 2.0 * std::f64::consts::PI;
        let (y, stats) = solver
            .integrate(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                10.0 * tau,
                0.1,
            )
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8, "{y:?}");
        assert!(y[1].abs() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn backward_integration_of_exponential() {
        let solver = Dopri5::default();
        let (y, _) = solver
            .integrate(|_, y: &[f64; 1]| [y[0]], 2.0, [2f64.exp()], 0.0, 0.1)
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic() {
        let solver = Dopri5::default();
        let run = || {
            solver
                .integrate(
                    |t, y: &[f64; 2]| [y[1], -t * y[0]],
                    0.0,
                    [0.3, 1.0],
                    7.0,
                    0.01,
                )
                .unwrap()
                .0
        };
        assert_eq!(run(), run());
    }
}
