//! Radial Cauchy problem in the log variable `t = log r`.
//!
//! With `z(t) = v1(e^t)`, `u(t) = v2(e^t)` and `p = 2(N+1)` the radial system
//! becomes
//!
//! ```text
//! z'' = -e^{pt+z} + tau e^{2t+u}      f' = e^{pt+z}
//! u'' = -e^{2t+u} + tau e^{pt+z}      g' = e^{2t+u}
//! ```
//!
//! and `f(+inf)`, `g(+inf)` are the fluxes `beta1`, `beta2`. The state is
//! launched from a local series at a small radius and integrated with an
//! embedded 5(4) pair until the remaining flux mass is below tolerance.

pub mod dopri;

use std::io::{self, Write};

use serde::Serialize;

use crate::algebra::{FluxPair, SystemParams};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::verify::{psi_values, r_values, Psi};

pub use dopri::{Flow, StepControl, StepStats, Termination};

/// Shooting values above this are integrated in a rescaled frame.
pub const RESCALE_THRESHOLD: f64 = 40.0;

/// Integrator state at one log-radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialState<T> {
    pub t: T,
    /// `v1(e^t)`
    pub z: T,
    /// `v2(e^t)`
    pub u: T,
    /// `dz/dt = r v1'(r)`
    pub dz: T,
    /// `du/dt = r v2'(r)`
    pub du: T,
    /// Flux of the first component accumulated up to `t`.
    pub f: T,
    /// Flux of the second component accumulated up to `t`.
    pub g: T,
}

impl<T: Real> RadialState<T> {
    fn from_vec(t: T, y: &[T; 6]) -> Self {
        Self {
            t,
            z: y[0],
            u: y[1],
            dz: y[2],
            du: y[3],
            f: y[4],
            g: y[5],
        }
    }

    fn to_vec(self) -> [T; 6] {
        [self.z, self.u, self.dz, self.du, self.f, self.g]
    }

    pub fn r(&self) -> T {
        self.t.exp()
    }

    /// `e^{2(N+1)t + z}`, the weighted density `r^{2N+2} e^{v1}`.
    pub fn density1(&self, params: &SystemParams<T>) -> T {
        (params.weight_exponent() * self.t + self.z).exp()
    }

    /// `e^{2t + u}`, i.e. `r^2 e^{v2}`.
    pub fn density2(&self) -> T {
        (T::lit(2.0) * self.t + self.u).exp()
    }

    /// Defects of the first integrals `dz + f - tau g` and `du + g - tau f`.
    pub fn first_integral_defects(&self, params: &SystemParams<T>) -> (T, T) {
        let tau = params.tau();
        (
            self.dz + self.f - tau * self.g,
            self.du + self.g - tau * self.f,
        )
    }

    /// The same solution seen through the scaling `v(r) -> v(lambda r) + 2(N_i+1) log lambda`.
    fn rescaled(&self, log_lambda: T, params: &SystemParams<T>) -> Self {
        Self {
            t: self.t + log_lambda,
            z: self.z - params.weight_exponent() * log_lambda,
            u: self.u - T::lit(2.0) * log_lambda,
            ..*self
        }
    }
}

fn eval_rhs<T: Real>(t: T, y: &[T; 6], p: T, tau: T, ln_max: T) -> Option<[T; 6]> {
    let x1 = p * t + y[0];
    let x2 = T::lit(2.0) * t + y[1];
    if !(x1 <= ln_max && x2 <= ln_max) {
        return None;
    }
    let e1 = x1.exp();
    let e2 = x2.exp();
    Some([y[2], y[3], -e1 + tau * e2, -e2 + tau * e1, e1, e2])
}

/// Time derivative of `(z, u, dz, du, f, g)`.
pub fn rhs<T: Real>(state: &RadialState<T>, params: &SystemParams<T>) -> Result<[T; 6]> {
    eval_rhs(
        state.t,
        &state.to_vec(),
        params.weight_exponent(),
        params.tau(),
        T::max_value().ln(),
    )
    .ok_or(Error::Overflow {
        t: state.t.as_f64(),
    })
}

/// Largest launch radius whose series remainder `(e^{a1} r^p + e^{a2} r^2)^2`
/// stays below `tol`.
pub fn suggested_launch_radius<T: Real>(params: &SystemParams<T>, a1: T, a2: T, tol: T) -> T {
    let half_root = tol.sqrt() / T::lit(2.0);
    let p = params.weight_exponent();
    let r1 = (half_root * (-a1).exp()).powf(T::one() / p);
    let r2 = (half_root * (-a2).exp()).sqrt();
    r1.min(r2)
}

/// Series launch with `v1(0) = alpha`, `v2(0) = 0`.
pub fn series_launch<T: Real>(
    params: &SystemParams<T>,
    alpha: T,
    r0: T,
    launch_tol: T,
) -> Result<RadialState<T>> {
    launch(params, alpha, T::zero(), r0, launch_tol)
}

/// Series launch for general initial values `v1(0) = a1`, `v2(0) = a2`.
///
/// Integrating the right-hand side once with `v_i` frozen at their initial
/// values gives
///
/// ```text
/// v1 = a1 - e^{a1} r^p / p^2 + tau e^{a2} r^2 / 4     f = e^{a1} r^p / p
/// v2 = a2 - e^{a2} r^2 / 4 + tau e^{a1} r^p / p^2     g = e^{a2} r^2 / 2
/// ```
///
/// with `r v_i'` taken from the first integrals, so the launch state
/// satisfies them exactly. The neglected terms are bounded by
/// `(e^{a1} r^p + e^{a2} r^2)^2`, which must not exceed `launch_tol`.
pub fn launch<T: Real>(
    params: &SystemParams<T>,
    a1: T,
    a2: T,
    r0: T,
    launch_tol: T,
) -> Result<RadialState<T>> {
    if !(r0 > T::zero()) || !r0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r0",
            value: r0.as_f64(),
            requirement: "launch radius > 0",
        });
    }
    if !(a1.is_finite() && a2.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: a1.as_f64(),
            requirement: "finite initial values",
        });
    }
    let p = params.weight_exponent();
    let tau = params.tau();
    let m1 = a1.exp() * r0.powf(p);
    let m2 = a2.exp() * r0 * r0;
    let remainder = (m1 + m2) * (m1 + m2);
    if !(remainder <= launch_tol) {
        return Err(Error::LaunchRadius {
            r0: r0.as_f64(),
            tolerance: launch_tol.as_f64(),
            suggested: suggested_launch_radius(params, a1, a2, launch_tol).as_f64(),
        });
    }
    let four = T::lit(4.0);
    let f = m1 / p;
    let g = m2 / T::lit(2.0);
    Ok(RadialState {
        t: r0.ln(),
        z: a1 - m1 / (p * p) + tau * m2 / four,
        u: a2 - m2 / four + tau * m1 / (p * p),
        dz: -(f - tau * g),
        du: -(g - tau * f),
        f,
        g,
    })
}

/// Integration settings. `Default` gives double-precision targets floored
/// at a small multiple of the scalar epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrateConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Largest log-radius reached before giving up on tail convergence.
    pub t_max: T,
    /// Target for the tail error estimate of each flux.
    pub tail_tol: T,
    /// Bound on the neglected series terms at launch.
    pub launch_tol: T,
    /// Launch radius; chosen automatically when `None`.
    pub r0: Option<T>,
    pub h_max: T,
    pub max_steps: usize,
    /// Minimal decay margins `sigma1 - 2(N+1)`, `sigma2 - 2` for a tail estimate.
    pub decay_margin: T,
}

impl<T: Real> Default for IntegrateConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::tol_floor(1e-10, 16.0),
            abs_tol: T::tol_floor(1e-12, 0.01),
            t_max: T::lit(60.0),
            tail_tol: T::tol_floor(1e-8, 64.0),
            launch_tol: T::tol_floor(1e-16, 1.0),
            r0: None,
            h_max: T::one(),
            max_steps: 1_000_000,
            decay_margin: T::lit(1e-3),
        }
    }
}

impl<T: Real> IntegrateConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, T); 6] = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("tail_tol", self.tail_tol),
            ("launch_tol", self.launch_tol),
            ("h_max", self.h_max),
            ("decay_margin", self.decay_margin),
        ];
        for (name, v) in checks {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v.as_f64(),
                    requirement: "positive and finite",
                });
            }
        }
        if !self.t_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_max",
                value: self.t_max.as_f64(),
                requirement: "finite",
            });
        }
        Ok(())
    }
}

/// Remaining flux beyond the current log-radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate<T> {
    /// Current slopes `f - tau g` and `g - tau f`.
    pub sigma1: T,
    pub sigma2: T,
    /// Frozen-slope values `e^{pt+z} / (sigma1 - p)`, `e^{2t+u} / (sigma2 - 2)`.
    pub bound1: T,
    pub bound2: T,
    /// Second-order estimates of the remaining mass.
    pub tail1: T,
    pub tail2: T,
    /// Size of the second-order terms, used as error estimate.
    pub err1: T,
    pub err2: T,
    /// Tail small enough that its estimate is self-consistent.
    pub consistent: bool,
}

impl<T: Real> TailEstimate<T> {
    /// Both frozen-slope tails are below `tail_tol`: the stopping rule.
    pub fn converged(&self, tail_tol: T) -> bool {
        self.consistent && self.bound1 <= tail_tol && self.bound2 <= tail_tol
    }

    /// Weaker acceptance used when the log-radius runs out: the refined
    /// estimate itself is accurate to `tail_tol`.
    pub fn accurate(&self, tail_tol: T) -> bool {
        self.consistent && self.err1 <= tail_tol && self.err2 <= tail_tol
    }
}

/// Estimates the flux mass beyond `state`.
///
/// Freezing the slopes gives `T1 ~ e^{pt+z} / (sigma1 - p)`. The slopes keep
/// growing by the mass still to come, so the estimate is refined by the
/// fixed point
///
/// ```text
/// T1 = e^{pt+z}/k1 (1 + T1/(2 k1) - tau T2/(k1 + k2)),  k1 = sigma1 - p + T1 - tau T2
/// ```
///
/// and its index-2 analogue. Returns `None` while either decay margin is
/// below `margin`.
pub fn tail_correction<T: Real>(
    state: &RadialState<T>,
    params: &SystemParams<T>,
    margin: T,
) -> Option<TailEstimate<T>> {
    let tau = params.tau();
    let sigma1 = state.f - tau * state.g;
    let sigma2 = state.g - tau * state.f;
    let a1 = sigma1 - params.weight_exponent();
    let a2 = sigma2 - T::lit(2.0);
    if !(a1 > margin && a2 > margin) {
        return None;
    }
    let e1 = state.density1(params);
    let e2 = state.density2();
    let bound1 = e1 / a1;
    let bound2 = e2 / a2;
    let two = T::lit(2.0);
    let half = T::lit(0.5);

    let (mut t1, mut t2) = (bound1, bound2);
    let mut consistent = false;
    let mut corr = (T::zero(), T::zero());
    for _ in 0..100 {
        let k1 = a1 + t1 - tau * t2;
        let k2 = a2 + t2 - tau * t1;
        if !(k1 > T::zero() && k2 > T::zero()) {
            consistent = false;
            break;
        }
        let c1 = t1 / (two * k1) - tau * t2 / (k1 + k2);
        let c2 = t2 / (two * k2) - tau * t1 / (k1 + k2);
        let n1 = e1 / k1 * (T::one() + c1);
        let n2 = e2 / k2 * (T::one() + c2);
        corr = (e1 / k1 * c1, e2 / k2 * c2);
        let done = (n1 - t1).abs() <= T::epsilon() * (T::one() + n1)
            && (n2 - t2).abs() <= T::epsilon() * (T::one() + n2);
        t1 = n1;
        t2 = n2;
        consistent = t1.abs() + tau * t2.abs() <= half * a1
            && t2.abs() + tau * t1.abs() <= half * a2
            && t1.is_finite()
            && t2.is_finite();
        if done {
            break;
        }
    }
    Some(TailEstimate {
        sigma1,
        sigma2,
        bound1,
        bound2,
        tail1: t1,
        tail2: t2,
        err1: corr.0.abs(),
        err2: corr.1.abs(),
        consistent,
    })
}

/// State plus conserved-quantity diagnostics at one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample<T> {
    pub state: RadialState<T>,
    pub psi: Psi<T>,
}

/// One integrated shooting solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub params: SystemParams<T>,
    /// `v1(0)`
    pub alpha: T,
    /// `v2(0)`; zero for the standard shooting problem.
    pub alpha2: T,
    /// Launch state followed by every accepted step, in the original frame.
    pub samples: Vec<Sample<T>>,
    /// Tail-corrected fluxes.
    pub flux: FluxPair<T>,
    pub t_end: T,
    /// Tail model at `t_end`, when the decay margins allowed one.
    pub tail: Option<TailEstimate<T>>,
    pub converged: bool,
    /// `log lambda` of the working frame; zero when no rescaling was needed.
    pub frame_shift: T,
    pub stats: StepStats,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &RadialState<T> {
        &self.samples.last().expect("trajectory has a launch sample").state
    }

    /// Decay slopes `(sigma1, sigma2)` at `t_end`.
    pub fn slopes(&self) -> (T, T) {
        let s = self.last();
        (-s.dz, -s.du)
    }

    /// Largest first-integral defect over the samples.
    pub fn max_first_integral_defect(&self) -> T {
        self.samples
            .iter()
            .map(|s| {
                let (a, b) = s.state.first_integral_defects(&self.params);
                a.abs().max(b.abs())
            })
            .fold(T::zero(), T::max)
    }

    /// Writes the sampled trajectory as CSV with header
    /// `t,r,v1,v2,rv1p,rv2p,f1,f2,psi0,psi1,psi2,r0q,r1q,hq`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,r,v1,v2,rv1p,rv2p,f1,f2,psi0,psi1,psi2,r0q,r1q,hq")?;
        for s in &self.samples {
            let st = &s.state;
            let r = r_values(st, &self.params);
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                st.t,
                st.r(),
                st.z,
                st.u,
                st.dz,
                st.du,
                st.f,
                st.g,
                s.psi.psi0,
                s.psi.psi1,
                s.psi.psi2,
                r.r0,
                r.r1,
                r.h
            )?;
        }
        Ok(())
    }
}

/// Automatic launch radius: `min(0.3, series bound, 0.3 e^{-a1/p}, 0.3 e^{-a2/2})`.
pub fn auto_launch_radius<T: Real>(params: &SystemParams<T>, a1: T, a2: T, tol: T) -> T {
    let c = T::lit(0.3);
    let p = params.weight_exponent();
    c.min(suggested_launch_radius(params, a1, a2, tol))
        .min(c * (-a1 / p).exp())
        .min(c * (-a2 / T::lit(2.0)).exp())
}

/// Integrates the shooting problem `v1(0) = alpha`, `v2(0) = 0`.
pub fn integrate<T: Real>(
    params: &SystemParams<T>,
    alpha: T,
    config: &IntegrateConfig<T>,
) -> Result<Trajectory<T>> {
    integrate_from(params, alpha, T::zero(), config)
}

/// Integrates the radial problem with `v1(0) = a1`, `v2(0) = a2`.
///
/// Large initial values are handled in the rescaled frame where both are
/// nonpositive; samples are mapped back, fluxes are scale invariant.
/// Running out of log-radius before the tail converges is not an error: the
/// trajectory comes back with `converged = false`.
pub fn integrate_from<T: Real>(
    params: &SystemParams<T>,
    a1: T,
    a2: T,
    config: &IntegrateConfig<T>,
) -> Result<Trajectory<T>> {
    config.validate()?;
    let tau = params.tau();
    if !(tau >= T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau.as_f64(),
            requirement: "0 <= tau < 1",
        });
    }
    let p = params.weight_exponent();
    let two = T::lit(2.0);
    let threshold = T::lit(RESCALE_THRESHOLD);

    // v(r) = w(r / lambda) - 2(N_i+1) log lambda
    let shift = if a1 >= threshold || a2 >= threshold {
        -(a1 / p).max(a2 / two)
    } else {
        T::zero()
    };
    let w1 = a1 + p * shift;
    let w2 = a2 + two * shift;

    let r0 = match config.r0 {
        Some(r) => r,
        None => auto_launch_radius(params, w1, w2, config.launch_tol),
    };
    let start = launch(params, w1, w2, r0, config.launch_tol)?;
    let t_end = config.t_max - shift;
    if !(t_end > start.t) {
        return Err(Error::InvalidParameter {
            name: "t_max",
            value: config.t_max.as_f64(),
            requirement: "beyond the launch log-radius",
        });
    }

    let to_sample = |st: RadialState<T>| {
        let st = st.rescaled(shift, params);
        Sample {
            psi: psi_values(&st, params),
            state: st,
        }
    };
    let mut samples = vec![to_sample(start)];
    let mut tail = None;
    let mut converged = false;
    let ctl = StepControl {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        h_init: T::lit(1e-2).min(config.h_max),
        h_max: config.h_max,
        h_min: T::epsilon() * T::lit(1e3),
        max_steps: config.max_steps,
    };
    let ln_max = T::max_value().ln();
    let (_, _, stats, _) = dopri::integrate(
        |t, y| eval_rhs(t, y, p, tau, ln_max),
        start.t,
        start.to_vec(),
        t_end,
        &ctl,
        |t, y| {
            let st = RadialState::from_vec(t, y);
            samples.push(to_sample(st));
            tail = tail_correction(&st, params, config.decay_margin);
            match tail {
                Some(est) if est.converged(config.tail_tol) => {
                    converged = true;
                    Flow::Stop
                }
                _ => Flow::Continue,
            }
        },
    )?;

    let last = samples.last().expect("launch sample").state;
    if !converged {
        converged = tail.is_some_and(|est| est.accurate(config.tail_tol));
    }
    let flux = match tail {
        Some(est) if est.consistent => FluxPair {
            beta1: last.f + est.tail1,
            beta2: last.g + est.tail2,
            err1: est.err1,
            err2: est.err2,
        },
        Some(est) => FluxPair {
            beta1: last.f + est.bound1,
            beta2: last.g + est.bound2,
            err1: est.bound1,
            err2: est.bound2,
        },
        None => FluxPair {
            beta1: last.f,
            beta2: last.g,
            err1: T::infinity(),
            err2: T::infinity(),
        },
    };
    Ok(Trajectory {
        params: *params,
        alpha: a1,
        alpha2: a2,
        flux,
        t_end: last.t,
        tail,
        converged,
        frame_shift: shift,
        stats,
        samples,
    })
}
