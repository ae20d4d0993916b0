//! Adaptive Dormand–Prince 5(4) integrator with local error control.
//!
//! The driver exposes every accepted step to a callback so callers can do
//! their own event detection; events are refined by re-stepping from the
//! start of the bracketing step with [`Dopri5::step_once`], which is as
//! accurate as a regular step of that size.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// First-order system `dy/dt = f(t, y)`.
///
/// `rhs` returns `None` when `y` is outside the region where the system is
/// defined; the integrator then rejects the step and retries with a smaller
/// one.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]>;

    /// A level `(i, c)` with `y[i] = c` crossed between `y0` and `y1` where
    /// the right-hand side loses smoothness. Steps are split there, since
    /// the embedded error estimate is blind to such kinks.
    fn switching(&self, _y0: &[f64; N], _y1: &[f64; N]) -> Option<(usize, f64)> {
        None
    }
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]> {
        self(t, y)
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self::with_tolerance(1e-10)
    }
}

/// One accepted step, handed to the driver callback.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a, const N: usize> {
    pub t0: f64,
    pub y0: &'a [f64; N],
    pub t1: f64,
    pub y1: &'a [f64; N],
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl Dopri5 {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    /// Single step from `(t, y)` with slope `k1 = f(t, y)`.
    ///
    /// Returns the 5th-order solution, its slope, and the scaled error norm,
    /// or `None` if any stage left the domain.
    fn step_fsal<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> Option<([f64; N], [f64; N], f64)> {
        let k2 = sys.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
        let k3 = sys.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = sys.rhs(
            t + C4 * h,
            &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = sys.rhs(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = sys.rhs(
            t + h,
            &axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y1 = axpy(
            y,
            h,
            &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = sys.rhs(t + h, &y1)?;
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return None;
        }
        Some((y1, k7, err))
    }

    /// Smallest step from `(t, y)` within `(0, h]` that puts `y[i]` just past
    /// `level`, found by regula falsi on single steps.
    fn cross<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        h: f64,
        i: usize,
        level: f64,
    ) -> Option<(f64, [f64; N])> {
        let g0 = y[i] - level;
        let (mut lo, mut hi) = (0.0, h);
        let mut y_hi = self.step_once(sys, t, y, h)?;
        let (mut glo, mut ghi) = (g0, y_hi[i] - level);
        if glo * ghi > 0.0 {
            return None;
        }
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 4.0 * f64::EPSILON * (t.abs() + hi) || ghi == 0.0 {
                break;
            }
            let mut c = lo - glo * (hi - lo) / (ghi - glo);
            if !(c > lo && c < hi) {
                c = 0.5 * (lo + hi);
            }
            let yc = self.step_once(sys, t, y, c)?;
            let gc = yc[i] - level;
            if gc * g0 > 0.0 {
                lo = c;
                glo = gc;
                if side == -1 {
                    ghi *= 0.5;
                }
                side = -1;
            } else {
                hi = c;
                ghi = gc;
                y_hi = yc;
                if side == 1 {
                    glo *= 0.5;
                }
                side = 1;
            }
        }
        Some((hi, y_hi))
    }

    /// Take exactly one step of size `h` from `(t, y)` without error control.
    pub fn step_once<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        h: f64,
    ) -> Option<[f64; N]> {
        if h == 0.0 {
            return Some(*y);
        }
        let k1 = sys.rhs(t, y)?;
        self.step_fsal(sys, t, y, &k1, h).map(|(y1, _, _)| y1)
    }

    /// Integrate from `t0` to `t_end` (which must exceed `t0`), invoking
    /// `on_step` after every accepted step. The callback can stop the
    /// integration early with `ControlFlow::Break`.
    ///
    /// Returns the final time and state.
    pub fn integrate<S, F, const N: usize>(
        &self,
        sys: &S,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut on_step: F,
    ) -> Result<(f64, [f64; N])>
    where
        S: OdeSystem<N>,
        F: FnMut(Step<'_, N>) -> ControlFlow<()>,
    {
        let mut t = t0;
        let mut y = y0;
        if t_end <= t0 {
            return Ok((t, y));
        }
        let mut k1 = sys.rhs(t, &y).ok_or_else(|| Error::Integration {
            reached: t,
            reason: "initial state outside the domain".into(),
        })?;
        let span = t_end - t0;
        let mut h = (0.01 * span).min(self.h_max).min(1e-2f64.max(self.rtol.powf(0.2)));
        let mut steps = 0usize;
        while t < t_end {
            if steps >= self.max_steps {
                return Err(Error::Integration {
                    reached: t,
                    reason: format!("step budget of {} exhausted", self.max_steps),
                });
            }
            steps += 1;
            let last = t + h >= t_end - 1e-15 * span.max(1.0);
            let h_try = if last { t_end - t } else { h };
            match self.step_fsal(sys, t, &y, &k1, h_try) {
                Some((y1, _, err)) if err <= 1.0 && sys.switching(&y, &y1).is_some() => {
                    let (i, level) = sys.switching(&y, &y1).unwrap();
                    let Some((h_cross, y_cross)) = self.cross(sys, t, &y, h_try, i, level) else {
                        h = h_try * 0.5;
                        continue;
                    };
                    let t1 = t + h_cross;
                    let flow = on_step(Step {
                        t0: t,
                        y0: &y,
                        t1,
                        y1: &y_cross,
                    });
                    t = t1;
                    y = y_cross;
                    k1 = sys.rhs(t, &y).ok_or_else(|| Error::Integration {
                        reached: t,
                        reason: "state left the domain at a switching level".into(),
                    })?;
                    if flow.is_break() {
                        return Ok((t, y));
                    }
                    if t >= t_end {
                        break;
                    }
                }
                Some((y1, k7, err)) if err <= 1.0 => {
                    let t1 = if last { t_end } else { t + h_try };
                    let flow = on_step(Step {
                        t0: t,
                        y0: &y,
                        t1,
                        y1: &y1,
                    });
                    t = t1;
                    y = y1;
                    k1 = k7;
                    if flow.is_break() {
                        return Ok((t, y));
                    }
                    let fac = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    h = (h_try * fac).min(self.h_max);
                    if last {
                        break;
                    }
                }
                Some((_, _, err)) => {
                    h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                None => {
                    h = h_try * 0.25;
                }
            }
            if h < self.h_min {
                return Err(Error::Integration {
                    reached: t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
        }
        Ok((t, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let sys = |_t: f64, y: &[f64; 2]| Some([y[1], -y[0]]);
        let ode = Dopri5::with_tolerance(1e-12);
        let (t, y) = ode
            .integrate(&sys, 0.0, [0.0, 1.0], 2.0 * std::f64::consts::PI, |_| {
                ControlFlow::Continue(())
            })
            .unwrap();
        assert!((t - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!(y[0].abs() < 1e-9, "{y:?}");
        assert!((y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        let sys = |_t: f64, y: &[f64; 1]| Some([y[0]]);
        let ode = Dopri5::with_tolerance(1e-11);
        let (_, y) = ode
            .integrate(&sys, 0.0, [1.0], 3.0, |_| ControlFlow::Continue(()))
            .unwrap();
        assert!((y[0] - 3.0f64.exp()).abs() / 3.0f64.exp() < 1e-9);
    }

    #[test]
    fn rejects_steps_outside_domain() {
        // y' = -1 from y = 1 is defined only for y > 0; integrating past t = 1
        // must fail with the reached time close to 1.
        let sys = |_t: f64, y: &[f64; 1]| if y[0] > 0.0 { Some([-1.0]) } else { None };
        let ode = Dopri5::with_tolerance(1e-10);
        let err = ode
            .integrate(&sys, 0.0, [1.0], 2.0, |_| ControlFlow::Continue(()))
            .unwrap_err();
        match err {
            Error::Integration { reached, .. } => assert!((reached - 1.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn early_stop_via_callback() {
        let sys = |_t: f64, _y: &[f64; 1]| Some([1.0]);
        let ode = Dopri5::default();
        let (t, _) = ode
            .integrate(&sys, 0.0, [0.0], 10.0, |s| {
                if s.t1 > 1.0 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })
            .unwrap();
        assert!(t > 1.0 && t < 10.0);
    }

    struct Kinked;

    // y'' = -y for y < 0.5 and y'' = 0 above: the acceleration jumps.
    impl OdeSystem<2> for Kinked {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
            Some([y[1], if y[0] < 0.5 { -y[0] } else { 0.0 }])
        }

        fn switching(&self, y0: &[f64; 2], y1: &[f64; 2]) -> Option<(usize, f64)> {
            let (a, b) = (y0[0].min(y1[0]), y0[0].max(y1[0]));
            (a < 0.5 && b > 0.5).then_some((0, 0.5))
        }
    }

    #[test]
    fn steps_split_at_switching_levels() {
        let ode = Dopri5::with_tolerance(1e-12);
        let mut hit = false;
        let (_, y) = ode
            .integrate(&Kinked, 0.0, [0.0, 1.0], 2.0, |s| {
                hit |= (s.y1[0] - 0.5).abs() < 1e-14;
                ControlFlow::Continue(())
            })
            .unwrap();
        assert!(hit);
        // sin t reaches 0.5 at t = pi/6 with speed cos(pi/6), then moves linearly.
        let t0 = std::f64::consts::PI / 6.0;
        let v = t0.cos();
        assert!((y[0] - (0.5 + v * (2.0 - t0))).abs() < 1e-10, "{y:?}");
        assert!((y[1] - v).abs() < 1e-10);
    }
}
