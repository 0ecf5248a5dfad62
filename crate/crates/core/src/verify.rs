//! Conserved and monotone quantities along trajectories, and the general
//! coupling-matrix layer (Pohozaev identity, symmetrization, normalization).
//!
//! Along a radial solution, with `A = 2(N+1)t + z` and `B = 2t + u`,
//!
//! ```text
//! Psi0 = e^A + e^B - 2(N+1) f - 2 g + f^2/2 + g^2/2 - tau f g   (identically 0)
//! Psi1 = e^A - 2(N+1) f + f^2/2                                 (increasing)
//! Psi2 = e^B - 2 g + g^2/2
//! ```
//!
//! As `t -> +inf`, `Psi0` tends to half the ellipse residual of the fluxes.

use serde::Serialize;

use crate::algebra::{beta_star, ConditionCheck, SystemParams};
use crate::error::{Error, Result};
use crate::ode::{RadialState, Trajectory};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Psi<T> {
    pub psi0: T,
    pub psi1: T,
    pub psi2: T,
}

pub fn psi_values<T: Real>(state: &RadialState<T>, params: &SystemParams<T>) -> Psi<T> {
    let ea = state.density1(params);
    let eb = state.density2();
    let (f, g) = (state.f, state.g);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let psi1 = ea - params.weight_exponent() * f + half * f * f;
    let psi2 = eb - two * g + half * g * g;
    Psi {
        psi0: psi1 + psi2 - params.tau() * f * g,
        psi1,
        psi2,
    }
}

/// The auxiliary quantities `R0`, `R1`, `H` of the flux bounds argument.
///
/// ```text
/// R0 = 2 tau e^A (g - 4) + (f - 4(N+1)) (e^A + f (f - b1*) / 2)
/// R1 = 2 tau e^B (f - b1*) + g (e^B + (g - 4)(g - 2 tau b1*) / 2)
/// H  = e^A + f (f - b1*) / 2
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RValues<T> {
    pub r0: T,
    pub r1: T,
    pub h: T,
}

pub fn r_values<T: Real>(state: &RadialState<T>, params: &SystemParams<T>) -> RValues<T> {
    let tau = params.tau();
    let ea = state.density1(params);
    let eb = state.density2();
    let (f, g) = (state.f, state.g);
    let (s1, _) = beta_star(params);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let h = ea + half * f * (f - s1);
    RValues {
        r0: two * tau * ea * (g - four) + (f - four * params.n1()) * h,
        r1: two * tau * eb * (f - s1) + g * (eb + half * (g - four) * (g - two * tau * s1)),
        h,
    }
}

/// Closed-form `t`-derivatives of `(R0, R1, H)`, valid where `Psi0 = 0`:
///
/// ```text
/// R0' = -(1 - 2 tau) e^A ((2 tau + 1) g (g - 4) / 2 + e^B)
/// R1' = -(1 - 2 tau) e^B (e^A + (2 tau + 1) f (f - b1*) / 2)
/// H'  = tau e^A (g - 4)
/// ```
pub fn r_derivatives<T: Real>(state: &RadialState<T>, params: &SystemParams<T>) -> RValues<T> {
    let tau = params.tau();
    let ea = state.density1(params);
    let eb = state.density2();
    let (f, g) = (state.f, state.g);
    let (s1, _) = beta_star(params);
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let damp = one - two * tau;
    RValues {
        r0: -damp * ea * (half * (two * tau + one) * g * (g - four) + eb),
        r1: -damp * eb * (ea + half * (two * tau + one) * f * (f - s1)),
        h: tau * ea * (g - four),
    }
}

/// `R1 - R0` at `t = +inf` for fluxes `(beta1, beta2)`.
pub fn r_gap_at_infinity<T: Real>(beta1: T, beta2: T, params: &SystemParams<T>) -> T {
    let (s1, _) = beta_star(params);
    let ss2 = T::lit(2.0) * params.tau() * s1;
    let half = T::lit(0.5);
    let four = T::lit(4.0);
    half * beta2 * (beta2 - four) * (beta2 - ss2)
        - half * beta1 * (beta1 - four * params.n1()) * (beta1 - s1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiProfile<T> {
    pub t: Vec<T>,
    pub values: Vec<Psi<T>>,
    pub max_abs_psi0: T,
    pub min_psi1: T,
    pub min_psi2: T,
    pub final_psi0: T,
    /// `1 + f^2 + g^2` at the last sample.
    pub scale: T,
}

pub fn psi_profile<T: Real>(traj: &Trajectory<T>) -> PsiProfile<T> {
    let t: Vec<T> = traj.samples.iter().map(|s| s.state.t).collect();
    let values: Vec<Psi<T>> = traj.samples.iter().map(|s| s.psi).collect();
    let max_abs_psi0 = values.iter().map(|p| p.psi0.abs()).fold(T::zero(), T::max);
    let min_psi1 = values.iter().map(|p| p.psi1).fold(T::infinity(), T::min);
    let min_psi2 = values.iter().map(|p| p.psi2).fold(T::infinity(), T::min);
    let last = traj.last();
    PsiProfile {
        final_psi0: values.last().map_or(T::zero(), |p| p.psi0),
        scale: T::one() + last.f * last.f + last.g * last.g,
        t,
        values,
        max_abs_psi0,
        min_psi1,
        min_psi2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RProfile<T> {
    pub t: Vec<T>,
    pub values: Vec<RValues<T>>,
    /// Closed-form derivatives at every sample.
    pub analytic: Vec<RValues<T>>,
    /// Three-point finite differences at interior samples (`None` at the ends).
    pub finite_difference: Vec<Option<RValues<T>>>,
    /// Largest `|fd - analytic| / (1 + |analytic|)` over `R0'`, `R1'`.
    pub max_derivative_mismatch: T,
    /// Number of sign changes of `H`.
    pub h_sign_changes: usize,
    /// First sample with `g >= 4`.
    pub g_crosses_four: Option<T>,
    /// Largest increase of `R0` between consecutive samples after `g >= 4`.
    pub r0_max_increase_after_g4: T,
    /// `R1 - R0` at the last sample and its predicted value at infinity.
    pub final_gap: T,
    pub predicted_gap: T,
}

fn three_point<T: Real>(t: [T; 3], y: [T; 3]) -> T {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    -h1 / (h0 * (h0 + h1)) * y[0] + (h1 - h0) / (h0 * h1) * y[1] + h0 / (h1 * (h0 + h1)) * y[2]
}

pub fn r_quantities<T: Real>(traj: &Trajectory<T>) -> RProfile<T> {
    let params = &traj.params;
    let states: Vec<&RadialState<T>> = traj.samples.iter().map(|s| &s.state).collect();
    let t: Vec<T> = states.iter().map(|s| s.t).collect();
    let values: Vec<RValues<T>> = states.iter().map(|s| r_values(s, params)).collect();
    let analytic: Vec<RValues<T>> = states.iter().map(|s| r_derivatives(s, params)).collect();
    let n = values.len();

    let mut finite_difference = vec![None; n];
    let mut mismatch = T::zero();
    for i in 1..n.saturating_sub(1) {
        let tt = [t[i - 1], t[i], t[i + 1]];
        let d = RValues {
            r0: three_point(tt, [values[i - 1].r0, values[i].r0, values[i + 1].r0]),
            r1: three_point(tt, [values[i - 1].r1, values[i].r1, values[i + 1].r1]),
            h: three_point(tt, [values[i - 1].h, values[i].h, values[i + 1].h]),
        };
        let a = analytic[i];
        mismatch = mismatch
            .max((d.r0 - a.r0).abs() / (T::one() + a.r0.abs()))
            .max((d.r1 - a.r1).abs() / (T::one() + a.r1.abs()));
        finite_difference[i] = Some(d);
    }

    let h_sign_changes = values
        .windows(2)
        .filter(|w| (w[0].h < T::zero()) != (w[1].h < T::zero()))
        .count();
    let four = T::lit(4.0);
    let g4 = states.iter().position(|s| s.g >= four);
    let mut r0_increase = T::zero();
    if let Some(k) = g4 {
        for w in values[k..].windows(2) {
            r0_increase = r0_increase.max(w[1].r0 - w[0].r0);
        }
    }
    let last = values.last().copied().unwrap_or(RValues {
        r0: T::zero(),
        r1: T::zero(),
        h: T::zero(),
    });
    RProfile {
        g_crosses_four: g4.map(|k| t[k]),
        r0_max_increase_after_g4: r0_increase,
        final_gap: last.r1 - last.r0,
        predicted_gap: r_gap_at_infinity(traj.flux.beta1, traj.flux.beta2, params),
        t,
        values,
        analytic,
        finite_difference,
        max_derivative_mismatch: mismatch,
        h_sign_changes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsProfile<T> {
    pub psi: PsiProfile<T>,
    pub r: RProfile<T>,
}

pub fn diagnostics<T: Real>(traj: &Trajectory<T>) -> DiagnosticsProfile<T> {
    DiagnosticsProfile {
        psi: psi_profile(traj),
        r: r_quantities(traj),
    }
}

/// Decay rates at infinity compared with the fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCheck<T> {
    /// `-r v_i'` at the last sample.
    pub sigma1_final: T,
    pub sigma2_final: T,
    /// Last-sample slopes plus the slope change still carried by the tail.
    pub sigma1: T,
    pub sigma2: T,
    /// `max(|sigma1 - (beta1 - tau beta2)|, |sigma2 - (beta2 - tau beta1)|)`
    pub deviation: T,
    pub decay1: ConditionCheck<T>,
    pub decay2: ConditionCheck<T>,
}

pub fn decay_check<T: Real>(traj: &Trajectory<T>) -> Result<DecayCheck<T>> {
    if !traj.converged {
        return Err(Error::NotConverged {
            t_end: traj.t_end.as_f64(),
        });
    }
    let params = &traj.params;
    let tau = params.tau();
    let (s1, s2) = traj.slopes();
    let (d1, d2) = traj.tail.map_or((T::zero(), T::zero()), |e| {
        (e.tail1 - tau * e.tail2, e.tail2 - tau * e.tail1)
    });
    let sigma1 = s1 + d1;
    let sigma2 = s2 + d2;
    let b = traj.flux;
    let deviation = (sigma1 - (b.beta1 - tau * b.beta2))
        .abs()
        .max((sigma2 - (b.beta2 - tau * b.beta1)).abs());
    let two = T::lit(2.0);
    let margin1 = sigma1 - two * params.n1();
    let margin2 = sigma2 - two;
    Ok(DecayCheck {
        sigma1_final: s1,
        sigma2_final: s2,
        sigma1,
        sigma2,
        deviation,
        decay1: ConditionCheck {
            name: "sigma1 > 2(N+1)",
            passed: margin1 > T::zero(),
            margin: margin1,
        },
        decay2: ConditionCheck {
            name: "sigma2 > 2",
            passed: margin2 > T::zero(),
            margin: margin2,
        },
    })
}

/// General 2x2 Liouville system `-Δv_i = sum_j k_ij |x|^{2 N_j} e^{v_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralSystem<T> {
    pub k11: T,
    pub k12: T,
    pub k21: T,
    pub k22: T,
    pub n1: T,
    pub n2: T,
}

impl<T: Real> GeneralSystem<T> {
    /// Requires finite entries and `N_i > -1`.
    pub fn new(k11: T, k12: T, k21: T, k22: T, n1: T, n2: T) -> Result<Self> {
        for (name, v) in [("k11", k11), ("k12", k12), ("k21", k21), ("k22", k22)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v.as_f64(),
                    requirement: "finite",
                });
            }
        }
        for (name, v) in [("N1", n1), ("N2", n2)] {
            if !(v > -T::one()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v.as_f64(),
                    requirement: "N_i > -1",
                });
            }
        }
        Ok(Self {
            k11,
            k12,
            k21,
            k22,
            n1,
            n2,
        })
    }

    /// SU(3) Toda matrix `[[2, -1], [-1, 2]]`.
    pub fn toda(n1: T, n2: T) -> Result<Self> {
        let two = T::lit(2.0);
        Self::new(two, -T::one(), -T::one(), two, n1, n2)
    }

    /// `(1/2) [[1+k, 1-k], [1-k, 1+k]]`.
    pub fn gudnason(k: T, n1: T, n2: T) -> Result<Self> {
        let half = T::lit(0.5);
        let d = half * (T::one() + k);
        let o = half * (T::one() - k);
        Self::new(d, o, o, d, n1, n2)
    }

    /// The matrix `[[1, -tau], [-tau, 1]]` with `N1 = N`, `N2 = 0`.
    pub fn from_params(params: &SystemParams<T>) -> Self {
        let tau = params.tau();
        Self {
            k11: T::one(),
            k12: -tau,
            k21: -tau,
            k22: T::one(),
            n1: params.big_n(),
            n2: T::zero(),
        }
    }

    pub fn det(&self) -> T {
        self.k11 * self.k22 - self.k12 * self.k21
    }

    /// `k11 > 0`, `k22 > 0`, `k12 < 0`, `k21 < 0`.
    pub fn is_competitive(&self) -> bool {
        self.k11 > T::zero() && self.k22 > T::zero() && self.k12 < T::zero() && self.k21 < T::zero()
    }
}

/// Left side of the general Pohozaev identity
///
/// ```text
/// k11 |k21| b1^2 + k22 |k12| b2^2 + 2 k12 |k21| b1 b2 - 4(N1+1)|k21| b1 - 4(N2+1)|k12| b2
/// ```
///
/// which vanishes for the fluxes of every solution. Refused when
/// `k12 k21 < 0`, where no such identity holds.
pub fn general_pohozaev_residual<T: Real>(sys: &GeneralSystem<T>, beta1: T, beta2: T) -> Result<T> {
    if sys.k12 * sys.k21 < T::zero() {
        return Err(Error::Refused(format!(
            "off-diagonal entries of opposite sign (k12 = {}, k21 = {}): no Pohozaev identity",
            sys.k12, sys.k21
        )));
    }
    let a12 = sys.k12.abs();
    let a21 = sys.k21.abs();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    Ok(sys.k11 * a21 * beta1 * beta1 + sys.k22 * a12 * beta2 * beta2
        + two * sys.k12 * a21 * beta1 * beta2
        - four * (sys.n1 + T::one()) * a21 * beta1
        - four * (sys.n2 + T::one()) * a12 * beta2)
}

/// Rescales to a symmetric matrix with unit off-diagonal magnitude:
/// `K^ = [[k11/|k21|, s], [s, k22/|k12|]]` with `s = sign(k12)`, and fluxes
/// `(|k21| b1, |k12| b2)`. The Pohozaev residual is unchanged.
pub fn symmetrize<T: Real>(
    sys: &GeneralSystem<T>,
    beta1: T,
    beta2: T,
) -> Result<(GeneralSystem<T>, T, T)> {
    if sys.k12 == T::zero() || sys.k21 == T::zero() || sys.k12 * sys.k21 < T::zero() {
        return Err(Error::Refused(
            "symmetrization needs nonzero off-diagonal entries of equal sign".into(),
        ));
    }
    let a12 = sys.k12.abs();
    let a21 = sys.k21.abs();
    let s = sys.k12.signum();
    Ok((
        GeneralSystem {
            k11: sys.k11 / a21,
            k12: s,
            k21: s,
            k22: sys.k22 / a12,
            n1: sys.n1,
            n2: sys.n2,
        },
        a21 * beta1,
        a12 * beta2,
    ))
}

/// Coupling constants of the normalized system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalized<T> {
    /// `-k12 / k22`
    pub tau1: T,
    /// `-k21 / k11`
    pub tau2: T,
    /// Fluxes of the normalized system are `k_ii beta_i`.
    pub beta_scale1: T,
    pub beta_scale2: T,
    /// Present when `tau1 = tau2` and `N2 = 0`, so the system is of the
    /// symmetric one-parameter form.
    pub symmetric: Option<SystemParams<T>>,
}

/// Normalizes `v_i -> v_i + 2 N_i log|x| - log k_ii`-style so the diagonal
/// becomes one.
pub fn normalize_general<T: Real>(sys: &GeneralSystem<T>) -> Result<Normalized<T>> {
    if !(sys.k11 > T::zero() && sys.k22 > T::zero()) {
        return Err(Error::Refused(format!(
            "diagonal entries must be positive (k11 = {}, k22 = {})",
            sys.k11, sys.k22
        )));
    }
    let tau1 = -sys.k12 / sys.k22;
    let tau2 = -sys.k21 / sys.k11;
    let symmetric = if (tau1 - tau2).abs() <= T::tol_floor(1e-12, 4.0) && sys.n2 == T::zero() {
        SystemParams::new(tau1, sys.n1).ok()
    } else {
        None
    };
    Ok(Normalized {
        tau1,
        tau2,
        beta_scale1: sys.k11,
        beta_scale2: sys.k22,
        symmetric,
    })
}

/// Fluxes at infinity `beta_i^inf = k_ii beta_i + k_ij beta_j` and the
/// necessary conditions `beta_i^inf > 2(N_i + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaInfinity<T> {
    pub beta1_infty: T,
    pub beta2_infty: T,
    pub condition1: ConditionCheck<T>,
    pub condition2: ConditionCheck<T>,
}

pub fn beta_infty<T: Real>(sys: &GeneralSystem<T>, beta1: T, beta2: T) -> BetaInfinity<T> {
    let b1 = sys.k11 * beta1 + sys.k12 * beta2;
    let b2 = sys.k22 * beta2 + sys.k21 * beta1;
    let two = T::lit(2.0);
    let m1 = b1 - two * (sys.n1 + T::one());
    let m2 = b2 - two * (sys.n2 + T::one());
    BetaInfinity {
        beta1_infty: b1,
        beta2_infty: b2,
        condition1: ConditionCheck {
            name: "beta1_inf > 2(N1+1)",
            passed: m1 > T::zero(),
            margin: m1,
        },
        condition2: ConditionCheck {
            name: "beta2_inf > 2(N2+1)",
            passed: m2 > T::zero(),
            margin: m2,
        },
    }
}
