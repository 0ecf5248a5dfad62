//! Dormand–Prince 5(4) with FSAL and PI step size control.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome requested by the step observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Step size control settings.
#[derive(Debug, Clone, Copy)]
pub struct StepControl<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub h_init: T,
    pub h_max: T,
    pub h_min: T,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Why the driver returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    Stopped,
    StepLimit,
}

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    b: [T; 7],
    e: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let l = T::lit;
        let z = T::zero();
        Self {
            c: [z, l(0.2), l(0.3), l(0.8), l(8.0 / 9.0), T::one(), T::one()],
            a: [
                [z; 6],
                [l(0.2), z, z, z, z, z],
                [l(3.0 / 40.0), l(9.0 / 40.0), z, z, z, z],
                [l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0), z, z, z],
                [
                    l(19372.0 / 6561.0),
                    l(-25360.0 / 2187.0),
                    l(64448.0 / 6561.0),
                    l(-212.0 / 729.0),
                    z,
                    z,
                ],
                [
                    l(9017.0 / 3168.0),
                    l(-355.0 / 33.0),
                    l(46732.0 / 5247.0),
                    l(49.0 / 176.0),
                    l(-5103.0 / 18656.0),
                    z,
                ],
                [
                    l(35.0 / 384.0),
                    z,
                    l(500.0 / 1113.0),
                    l(125.0 / 192.0),
                    l(-2187.0 / 6784.0),
                    l(11.0 / 84.0),
                ],
            ],
            b: [
                l(35.0 / 384.0),
                z,
                l(500.0 / 1113.0),
                l(125.0 / 192.0),
                l(-2187.0 / 6784.0),
                l(11.0 / 84.0),
                z,
            ],
            e: [
                l(71.0 / 57600.0),
                z,
                l(-71.0 / 16695.0),
                l(71.0 / 1920.0),
                l(-17253.0 / 339200.0),
                l(22.0 / 525.0),
                l(-1.0 / 40.0),
            ],
        }
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` toward `t_end`.
///
/// `rhs` returns `None` when the right-hand side cannot be evaluated (an
/// exponential overflow, say); the step is then rejected and retried with a
/// fifth of the step size. `observe` sees every accepted step and may stop
/// the integration.
pub fn integrate<T, const D: usize, F, O>(
    mut rhs: F,
    t0: T,
    y0: [T; D],
    t_end: T,
    ctl: &StepControl<T>,
    mut observe: O,
) -> Result<(T, [T; D], StepStats, Termination)>
where
    T: Real,
    F: FnMut(T, &[T; D]) -> Option<[T; D]>,
    O: FnMut(T, &[T; D]) -> Flow,
{
    let tab = Tableau::<T>::new();
    let mut stats = StepStats::default();
    let (mut t, mut y) = (t0, y0);
    let mut k1 = rhs(t, &y).ok_or(Error::Overflow { t: t.as_f64() })?;
    stats.evaluations += 1;

    let beta = T::lit(0.04);
    let expo = T::lit(0.2) - beta * T::lit(0.75);
    let safety = T::lit(0.9);
    let fac_min = T::lit(0.2);
    let fac_max = T::lit(10.0);
    let mut err_old = T::lit(1e-4);
    let mut h = ctl.h_init.min(ctl.h_max);
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Ok((t, y, stats, Termination::StepLimit));
        }
        if h < ctl.h_min {
            return Err(Error::StepSize {
                t: t.as_f64(),
                h: h.as_f64(),
            });
        }
        let h_step = h.min(t_end - t);

        let mut k = [[T::zero(); D]; 7];
        k[0] = k1;
        let mut failed = false;
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                let mut acc = T::zero();
                for j in 0..s {
                    acc = acc + tab.a[s][j] * k[j][i];
                }
                *v = *v + h_step * acc;
            }
            stats.evaluations += 1;
            match rhs(t + tab.c[s] * h_step, &ys) {
                Some(ks) if ks.iter().all(|x| x.is_finite()) => k[s] = ks,
                _ => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            stats.rejected += 1;
            h = h_step * fac_min;
            last_rejected = true;
            continue;
        }

        let mut y_new = y;
        let mut sum = T::zero();
        for i in 0..D {
            let mut incr = T::zero();
            let mut err = T::zero();
            for s in 0..7 {
                incr = incr + tab.b[s] * k[s][i];
                err = err + tab.e[s] * k[s][i];
            }
            y_new[i] = y[i] + h_step * incr;
            let sc = ctl.abs_tol + ctl.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = h_step * err / sc;
            sum = sum + r * r;
        }
        let err = (sum / T::of_usize(D)).sqrt();

        if err <= T::one() && err.is_finite() {
            let grow = if err == T::zero() {
                fac_max
            } else {
                (safety * err.powf(-expo) * err_old.powf(beta)).max(fac_min).min(fac_max)
            };
            err_old = err.max(T::lit(1e-4));
            t = if h_step == t_end - t { t_end } else { t + h_step };
            y = y_new;
            k1 = k[6];
            stats.accepted += 1;
            let mut h_next = (h_step * grow).min(ctl.h_max);
            if last_rejected {
                h_next = h_next.min(h_step);
            }
            h = h_next;
            last_rejected = false;
            if observe(t, &y) == Flow::Stop {
                return Ok((t, y, stats, Termination::Stopped));
            }
        } else {
            stats.rejected += 1;
            let shrink = if err.is_finite() {
                (safety * err.powf(-expo)).max(fac_min)
            } else {
                fac_min
            };
            h = h_step * shrink.min(T::one());
            last_rejected = true;
        }
    }
    Ok((t, y, stats, Termination::ReachedEnd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(rel: f64) -> StepControl<f64> {
        StepControl {
            rel_tol: rel,
            abs_tol: rel * 1e-2,
            h_init: 1e-3,
            h_max: 1.0,
            h_min: 1e-14,
            max_steps: 100_000,
        }
    }

    #[test]
    fn exponential_decay() {
        let (t, y, stats, term) = integrate(
            |_, y: &[f64; 1]| Some([-y[0]]),
            0.0,
            [1.0],
            5.0,
            &ctl(1e-10),
            |_, _| Flow::Continue,
        )
        .unwrap();
        assert_eq!(term, Termination::ReachedEnd);
        assert!((t - 5.0).abs() < 1e-14);
        assert!((y[0] - (-5f64).exp()).abs() < 1e-10);
        assert!(stats.accepted > 5);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let (_, y, _, _) = integrate(
            |_, y: &[f64; 2]| Some([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            20.0 * std::f64::consts::PI,
            &ctl(1e-11),
            |_, _| Flow::Continue,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8, "{y:?}");
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn fifth_order_convergence() {
        // global error of a fixed-step run should drop by ~2^5 when h halves
        let run = |h: f64| {
            let c = StepControl {
                rel_tol: 1e6,
                abs_tol: 1e6,
                h_init: h,
                h_max: h,
                h_min: 0.0,
                max_steps: 1_000_000,
            };
            let (_, y, _, _) = integrate(
                |t, y: &[f64; 1]| Some([y[0] * t.cos()]),
                0.0,
                [1.0],
                2.0,
                &c,
                |_, _| Flow::Continue,
            )
            .unwrap();
            (y[0] - 2f64.sin().exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 24.0 && ratio < 48.0, "{ratio}");
    }

    #[test]
    fn observer_stops_early() {
        let (t, _, _, term) = integrate(
            |_, _y: &[f64; 1]| Some([1.0]),
            0.0,
            [0.0],
            100.0,
            &ctl(1e-8),
            |t, _| if t > 3.0 { Flow::Stop } else { Flow::Continue },
        )
        .unwrap();
        assert_eq!(term, Termination::Stopped);
        assert!(t > 3.0 && t < 100.0);
    }

    #[test]
    fn failed_evaluation_shrinks_step() {
        let mut calls = 0;
        let (_, y, stats, _) = integrate(
            |_, _y: &[f64; 1]| {
                calls += 1;
                // refuse the first trial step entirely
                if (2..=3).contains(&calls) {
                    None
                } else {
                    Some([1.0])
                }
            },
            0.0,
            [0.0],
            1.4,
            &StepControl {
                h_init: 1.0,
                ..ctl(1e-8)
            },
            |_, _| Flow::Continue,
        )
        .unwrap();
        assert!((y[0] - 1.4).abs() < 1e-12);
        assert!(stats.rejected >= 2);
    }

    #[test]
    fn single_precision_decay() {
        let c = StepControl {
            rel_tol: 1e-5f32,
            abs_tol: 1e-7,
            h_init: 1e-2,
            h_max: 1.0,
            h_min: 1e-7,
            max_steps: 10_000,
        };
        let (_, y, _, _) = integrate(
            |_, y: &[f32; 1]| Some([-y[0]]),
            0.0,
            [1.0],
            3.0,
            &c,
            |_, _| Flow::Continue,
        )
        .unwrap();
        assert!((y[0] - (-3f32).exp()).abs() < 1e-4);
    }
}
