//! Closed-form solvability algebra for the symmetric competitive system.
//!
//! A flux pair `(beta1, beta2)` of a solution must lie on the ellipse
//!
//! ```text
//! beta1^2 + beta2^2 - 2 tau beta1 beta2 - 4 (N + 1) beta1 - 4 beta2 = 0
//! ```
//!
//! This module evaluates every named point and threshold on that ellipse, the
//! piecewise radial solvability bounds `beta_i^-(tau) < beta_i < beta_i^+(tau)`
//! and the limits of the shooting curve as `alpha -> +/- infinity`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::bisect;
use crate::scalar::Real;

/// Default relative tolerance for the `beta2 = phi1_plus(beta1)` membership test.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

/// Default tolerance for ellipse residual checks, relative to [`residual_scale`].
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

/// The pair `(tau, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams<T> {
    tau: T,
    #[serde(rename = "N")]
    big_n: T,
}

impl<T: Real> SystemParams<T> {
    /// Validated constructor: `0 <= tau < 1`, `N > 0`.
    ///
    /// `tau = 0` is the decoupled oracle configuration; the solvability
    /// theory itself needs `tau` in `(0, 1)`.
    pub fn new(tau: T, big_n: T) -> Result<Self> {
        if !tau.is_finite() || tau < T::zero() || tau >= T::one() {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau.as_f64(),
                requirement: "0 <= tau < 1 (solvability needs tau in (0,1))",
            });
        }
        if !big_n.is_finite() || big_n <= T::zero() {
            return Err(Error::InvalidParameter {
                name: "N",
                value: big_n.as_f64(),
                requirement: "N > 0",
            });
        }
        Ok(Self { tau, big_n })
    }

    /// Unvalidated pair, used by diagnostics that must report on out-of-range
    /// couplings instead of rejecting them.
    pub fn unchecked(tau: T, big_n: T) -> Self {
        Self { tau, big_n }
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn big_n(&self) -> T {
        self.big_n
    }

    /// `N + 1`
    pub fn n1(&self) -> T {
        self.big_n + T::one()
    }

    /// Exponent `2 (N + 1)` of the weighted component.
    pub fn weight_exponent(&self) -> T {
        T::lit(2.0) * self.n1()
    }

    fn require_tau_below_one(&self) -> Result<()> {
        if self.tau < T::one() && self.tau > -T::one() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "tau",
                value: self.tau.as_f64(),
                requirement: "tau < 1 (formulas divide by 1 - tau^2)",
            })
        }
    }

    fn is_toda(&self) -> bool {
        (self.tau - T::lit(0.5)).abs() <= T::epsilon() * T::lit(4.0)
    }
}

/// Flux pair with absolute error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxPair<T> {
    pub beta1: T,
    pub beta2: T,
    pub err1: T,
    pub err2: T,
}

impl<T: Real> FluxPair<T> {
    pub fn exact(beta1: T, beta2: T) -> Self {
        Self {
            beta1,
            beta2,
            err1: T::zero(),
            err2: T::zero(),
        }
    }
}

/// Branch selector for [`phi1`] and [`phi2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

/// `D(tau, N) = (N + 1)^2 + 2 tau (N + 1) + 1`.
pub fn discriminant<T: Real>(params: &SystemParams<T>) -> T {
    let a = params.n1();
    a * a + T::lit(2.0) * params.tau * a + T::one()
}

/// Left side of the ellipse equation; zero exactly on the ellipse.
pub fn ellipse_residual<T: Real>(beta1: T, beta2: T, params: &SystemParams<T>) -> T {
    let four = T::lit(4.0);
    beta1 * beta1 + beta2 * beta2
        - T::lit(2.0) * params.tau * beta1 * beta2
        - four * params.n1() * beta1
        - four * beta2
}

/// Normalization used for residual comparisons: `1 + beta1^2 + beta2^2`.
pub fn residual_scale<T: Real>(beta1: T, beta2: T) -> T {
    T::one() + beta1 * beta1 + beta2 * beta2
}

/// Extreme fluxes on the ellipse.
///
/// `under1`/`over2` sit where `beta1 - tau beta2 = 2(N+1)`, `over1`/`under2`
/// where `beta2 - tau beta1 = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseExtremes<T> {
    pub under1: T,
    pub over1: T,
    pub under2: T,
    pub over2: T,
}

pub fn beta_extremes<T: Real>(params: &SystemParams<T>) -> Result<EllipseExtremes<T>> {
    params.require_tau_below_one()?;
    let tau = params.tau;
    let a = params.n1();
    let s = discriminant(params).sqrt();
    let c = T::lit(2.0) / (T::one() - tau * tau);
    Ok(EllipseExtremes {
        under1: c * (a + tau + tau * s),
        over1: c * (a + tau + s),
        under2: c * (T::one() + tau * a + tau * s),
        over2: c * (T::one() + tau * a + s),
    })
}

fn branch_value<T: Real>(
    name: &'static str,
    x: T,
    center: T,
    linear_shift: T,
    sign: Sign,
    lower_root: T,
    upper_root: T,
) -> Result<T> {
    // radicand = center^2 - x (x - linear_shift)
    let radicand = center * center - x * (x - linear_shift);
    let magnitude = center * center + x * x + (x * linear_shift).abs();
    let slack = T::epsilon() * T::lit(64.0) * magnitude;
    let root = if radicand >= T::zero() {
        radicand.sqrt()
    } else if radicand >= -slack {
        T::zero()
    } else {
        return Err(Error::Domain {
            function: name,
            argument: x.as_f64(),
            lower: lower_root.as_f64(),
            upper: upper_root.as_f64(),
        });
    };
    Ok(match sign {
        Sign::Plus => center + root,
        Sign::Minus => center - root,
    })
}

/// `phi1_{+/-}(beta1) = 2 + tau beta1 +/- sqrt((2 + tau beta1)^2 - beta1 (beta1 - 4(N+1)))`,
/// the two solutions `beta2` of the ellipse equation for given `beta1`.
pub fn phi1<T: Real>(beta1: T, sign: Sign, params: &SystemParams<T>) -> Result<T> {
    params.require_tau_below_one()?;
    let tau = params.tau;
    let a = params.n1();
    let c = T::lit(2.0) / (T::one() - tau * tau);
    let s = discriminant(params).sqrt();
    branch_value(
        "phi1",
        beta1,
        T::lit(2.0) + tau * beta1,
        T::lit(4.0) * a,
        sign,
        c * (a + tau - s),
        c * (a + tau + s),
    )
}

/// `phi2_{+/-}(beta2) = 2(N+1) + tau beta2 +/- sqrt((2(N+1) + tau beta2)^2 - beta2 (beta2 - 4))`.
pub fn phi2<T: Real>(beta2: T, sign: Sign, params: &SystemParams<T>) -> Result<T> {
    params.require_tau_below_one()?;
    let tau = params.tau;
    let a = params.n1();
    let c = T::lit(2.0) / (T::one() - tau * tau);
    let s = discriminant(params).sqrt();
    branch_value(
        "phi2",
        beta2,
        T::lit(2.0) * a + tau * beta2,
        T::lit(4.0),
        sign,
        c * (T::one() + tau * a - s),
        c * (T::one() + tau * a + s),
    )
}

/// Intersections with the lines `beta2 = 4` and `beta1 = 4(N+1)`:
/// `(beta1*, beta2*) = (4(N+1) + 8 tau, 4 + 8 tau (N+1))`.
pub fn beta_star<T: Real>(params: &SystemParams<T>) -> (T, T) {
    let four = T::lit(4.0);
    let eight = T::lit(8.0);
    let a = params.n1();
    (four * a + eight * params.tau, four + eight * params.tau * a)
}

/// Companion fluxes `beta1** = 2 tau beta2*`, `beta2** = 2 tau beta1*`.
pub fn beta_starstar<T: Real>(params: &SystemParams<T>) -> (T, T) {
    let (s1, s2) = beta_star(params);
    let two_tau = T::lit(2.0) * params.tau;
    (two_tau * s2, two_tau * s1)
}

/// Lower critical couplings `(tau0^(1), tau0^(2))`.
pub fn tau0<T: Real>(big_n: T) -> (T, T) {
    let a = big_n + T::one();
    let one = T::one();
    let four = T::lit(4.0);
    let t1 = a / (one + (one + four * a * a).sqrt());
    let t2 = one / (a + (a * a + four).sqrt());
    (t1, t2)
}

/// `psi1(tau) = 2 (1 - 2 tau^2)(1 + 2 tau (N+1)) - 1`; its root in
/// `(1/2, 1/sqrt 2)` is `tau1^(1)`.
pub fn psi1<T: Real>(tau: T, big_n: T) -> T {
    let two = T::lit(2.0);
    two * (T::one() - two * tau * tau) * (T::one() + two * tau * (big_n + T::one())) - T::one()
}

/// `psi2(tau) = 2 (1 - 2 tau^2)(N + 1 + 2 tau) - (N + 1)`; its root in
/// `(1/2, 1/sqrt 2)` is `tau1^(2)`.
pub fn psi2<T: Real>(tau: T, big_n: T) -> T {
    let two = T::lit(2.0);
    let a = big_n + T::one();
    two * (T::one() - two * tau * tau) * (a + two * tau) - a
}

/// Upper critical couplings `(tau1^(1), tau1^(2))` by bisection on
/// `(1/2, 1/sqrt 2)`.
pub fn tau1<T: Real>(big_n: T) -> Result<(T, T)> {
    let lo = T::lit(0.5);
    let hi = T::FRAC_1_SQRT_2();
    let tol = T::tol_floor(1e-12, 4.0);
    let t11 = bisect(|t| psi1(t, big_n), lo, hi, tol, 200)?;
    let t12 = bisect(|t| psi2(t, big_n), lo, hi, tol, 200)?;
    Ok((t11, t12))
}

/// All critical couplings for one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalCouplings<T> {
    #[serde(rename = "tau0_1")]
    pub tau01: T,
    #[serde(rename = "tau0_2")]
    pub tau02: T,
    #[serde(rename = "tau1_1")]
    pub tau11: T,
    #[serde(rename = "tau1_2")]
    pub tau12: T,
}

pub fn critical_couplings<T: Real>(big_n: T) -> Result<CriticalCouplings<T>> {
    let (tau01, tau02) = tau0(big_n);
    let (tau11, tau12) = tau1(big_n)?;
    Ok(CriticalCouplings {
        tau01,
        tau02,
        tau11,
        tau12,
    })
}

/// Piecewise radial solvability bounds `beta_i^-(tau)`, `beta_i^+(tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolvabilityBounds<T> {
    pub minus1: T,
    pub plus1: T,
    pub minus2: T,
    pub plus2: T,
}

pub fn beta_pm<T: Real>(params: &SystemParams<T>) -> Result<SolvabilityBounds<T>> {
    let crit = critical_couplings(params.big_n)?;
    beta_pm_with(params, &crit)
}

fn beta_pm_with<T: Real>(
    params: &SystemParams<T>,
    crit: &CriticalCouplings<T>,
) -> Result<SolvabilityBounds<T>> {
    let tau = params.tau;
    let half = T::lit(0.5);
    let four = T::lit(4.0);
    let ext = beta_extremes(params)?;
    let (s1, s2) = beta_star(params);
    let (ss1, ss2) = beta_starstar(params);

    let minus1 = if tau <= crit.tau01 {
        four * params.n1()
    } else if tau <= half {
        ss1
    } else if tau < crit.tau12 {
        s1
    } else {
        ext.under1
    };
    let plus1 = if tau <= half {
        s1
    } else if tau < crit.tau11 {
        ss1
    } else {
        ext.over1
    };
    let minus2 = if tau <= crit.tau02 {
        four
    } else if tau <= half {
        ss2
    } else if tau < crit.tau11 {
        s2
    } else {
        ext.under2
    };
    let plus2 = if tau <= half {
        s2
    } else if tau < crit.tau12 {
        ss2
    } else {
        ext.over2
    };
    Ok(SolvabilityBounds {
        minus1,
        plus1,
        minus2,
        plus2,
    })
}

/// Closed-form limits of the shooting curve as `alpha -> +/- infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingLimits<T> {
    #[serde(rename = "beta_lim_1_plus")]
    pub lim1_plus: T,
    #[serde(rename = "beta_lim_2_plus")]
    pub lim2_plus: T,
    #[serde(rename = "beta_lim_1_minus")]
    pub lim1_minus: T,
    #[serde(rename = "beta_lim_2_minus")]
    pub lim2_minus: T,
}

pub fn beta_limits<T: Real>(params: &SystemParams<T>) -> Result<ShootingLimits<T>> {
    let crit = critical_couplings(params.big_n)?;
    beta_limits_with(params, &crit)
}

fn beta_limits_with<T: Real>(
    params: &SystemParams<T>,
    crit: &CriticalCouplings<T>,
) -> Result<ShootingLimits<T>> {
    let tau = params.tau;
    let four = T::lit(4.0);
    let ext = beta_extremes(params)?;
    let (s1, s2) = beta_star(params);
    let (ss1, ss2) = beta_starstar(params);

    let lim1_minus = if tau < crit.tau12 { s1 } else { ext.under1 };
    let lim2_minus = if tau <= crit.tau02 {
        four
    } else if tau < crit.tau12 {
        ss2
    } else {
        ext.over2
    };
    let lim2_plus = if tau < crit.tau11 { s2 } else { ext.under2 };
    let lim1_plus = if tau <= crit.tau01 {
        four * params.n1()
    } else if tau < crit.tau11 {
        ss1
    } else {
        ext.over1
    };
    Ok(ShootingLimits {
        lim1_plus,
        lim2_plus,
        lim1_minus,
        lim2_minus,
    })
}

/// Every closed-form threshold for one `(tau, N)`, keyed by symbol name when
/// serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet<T> {
    pub tau: T,
    #[serde(rename = "N")]
    pub big_n: T,
    #[serde(rename = "D")]
    pub discriminant: T,
    #[serde(rename = "beta_under_1")]
    pub beta_under1: T,
    #[serde(rename = "beta_over_1")]
    pub beta_over1: T,
    #[serde(rename = "beta_under_2")]
    pub beta_under2: T,
    #[serde(rename = "beta_over_2")]
    pub beta_over2: T,
    #[serde(rename = "beta_star_1")]
    pub beta_star1: T,
    #[serde(rename = "beta_star_2")]
    pub beta_star2: T,
    #[serde(rename = "beta_starstar_1")]
    pub beta_starstar1: T,
    #[serde(rename = "beta_starstar_2")]
    pub beta_starstar2: T,
    #[serde(flatten)]
    pub couplings: CriticalCouplings<T>,
    #[serde(rename = "beta_minus_1")]
    pub beta_minus1: T,
    #[serde(rename = "beta_plus_1")]
    pub beta_plus1: T,
    #[serde(rename = "beta_minus_2")]
    pub beta_minus2: T,
    #[serde(rename = "beta_plus_2")]
    pub beta_plus2: T,
    #[serde(flatten)]
    pub limits: ShootingLimits<T>,
}

pub fn thresholds<T: Real>(params: &SystemParams<T>) -> Result<ThresholdSet<T>> {
    let couplings = critical_couplings(params.big_n)?;
    let ext = beta_extremes(params)?;
    let (s1, s2) = beta_star(params);
    let (ss1, ss2) = beta_starstar(params);
    let pm = beta_pm_with(params, &couplings)?;
    let limits = beta_limits_with(params, &couplings)?;
    Ok(ThresholdSet {
        tau: params.tau,
        big_n: params.big_n,
        discriminant: discriminant(params),
        beta_under1: ext.under1,
        beta_over1: ext.over1,
        beta_under2: ext.under2,
        beta_over2: ext.over2,
        beta_star1: s1,
        beta_star2: s2,
        beta_starstar1: ss1,
        beta_starstar2: ss2,
        couplings,
        beta_minus1: pm.minus1,
        beta_plus1: pm.plus1,
        beta_minus2: pm.minus2,
        beta_plus2: pm.plus2,
        limits,
    })
}

/// Which description of the ellipse a pair satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllipseBranch {
    /// `beta1 - tau beta2 > 2(N+1)` and `beta2 - tau beta1 > 2`: `beta2 = phi1_plus(beta1)`.
    Interior,
    /// `beta1 - tau beta2 <= 2(N+1)`: `beta1 = phi2_minus(beta2)`.
    LowerLeft,
    /// `beta2 - tau beta1 <= 2`: `beta2 = phi1_minus(beta1)`.
    LowerRight,
    OffEllipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification<T> {
    pub branch: EllipseBranch,
    pub residual: T,
    /// `beta1 - tau beta2 - 2(N+1)`
    pub margin1: T,
    /// `beta2 - tau beta1 - 2`
    pub margin2: T,
}

/// Classifies a pair against the three branches of the ellipse.
///
/// Margins within `tol * (1 + |beta1| + |beta2|)` of zero count as zero, so
/// branch boundaries computed in floating point land on the closed side.
pub fn classify_point<T: Real>(
    beta1: T,
    beta2: T,
    params: &SystemParams<T>,
    tol: T,
) -> Classification<T> {
    let tau = params.tau;
    let residual = ellipse_residual(beta1, beta2, params);
    let margin1 = beta1 - tau * beta2 - T::lit(2.0) * params.n1();
    let margin2 = beta2 - tau * beta1 - T::lit(2.0);
    let band = tol * (T::one() + beta1.abs() + beta2.abs());
    let positive = |m: T| m > band;
    let branch = if residual.abs() > tol * residual_scale(beta1, beta2) {
        EllipseBranch::OffEllipse
    } else {
        match (positive(margin1), positive(margin2)) {
            (true, true) => EllipseBranch::Interior,
            (false, true) => EllipseBranch::LowerLeft,
            (true, false) => EllipseBranch::LowerRight,
            (false, false) => EllipseBranch::OffEllipse,
        }
    };
    Classification {
        branch,
        residual,
        margin1,
        margin2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolvabilityFailure {
    TauOutOfRange,
    BelowInterval,
    AboveInterval,
    PhiUndefined,
    OffBranch,
    NotTodaPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolvabilityReport<T> {
    pub solvable: bool,
    pub failure: Option<SolvabilityFailure>,
    /// The `tau = 1/2` point test was used.
    pub toda_point: bool,
    pub beta_minus1: T,
    pub beta_plus1: T,
    pub phi1_plus: Option<T>,
    pub mismatch: Option<T>,
    /// `beta1` lies within the tolerance band of an (excluded) endpoint.
    pub near_endpoint: bool,
}

/// Radial solvability of `(beta1, beta2)`.
///
/// For `tau != 1/2`: `beta1` strictly inside `(beta1^-, beta1^+)` and
/// `|beta2 - phi1_plus(beta1)| <= tol * max(1, |beta2|)`. At `tau = 1/2`
/// the interval collapses and the pair must equal `(4(N+2), 4(N+2))` within
/// the same relative tolerance.
pub fn solvable_radial<T: Real>(
    beta1: T,
    beta2: T,
    params: &SystemParams<T>,
    tol: T,
) -> SolvabilityReport<T> {
    let tau = params.tau;
    let rel = |x: T| tol * T::one().max(x.abs());
    let mut report = SolvabilityReport {
        solvable: false,
        failure: None,
        toda_point: false,
        beta_minus1: T::nan(),
        beta_plus1: T::nan(),
        phi1_plus: None,
        mismatch: None,
        near_endpoint: false,
    };
    if !(tau > T::zero() && tau < T::one()) {
        report.failure = Some(SolvabilityFailure::TauOutOfRange);
        return report;
    }
    let bounds = match beta_pm(params) {
        Ok(b) => b,
        Err(_) => {
            report.failure = Some(SolvabilityFailure::TauOutOfRange);
            return report;
        }
    };
    report.beta_minus1 = bounds.minus1;
    report.beta_plus1 = bounds.plus1;
    report.phi1_plus = phi1(beta1, Sign::Plus, params).ok();
    report.mismatch = report.phi1_plus.map(|p| (beta2 - p).abs());

    if params.is_toda() {
        report.toda_point = true;
        let toda = T::lit(4.0) * (params.big_n + T::lit(2.0));
        let ok = (beta1 - toda).abs() <= rel(toda) && (beta2 - toda).abs() <= rel(toda);
        report.solvable = ok;
        if !ok {
            report.failure = Some(SolvabilityFailure::NotTodaPoint);
        }
        return report;
    }

    report.near_endpoint = (beta1 - bounds.minus1).abs() <= rel(bounds.minus1)
        || (beta1 - bounds.plus1).abs() <= rel(bounds.plus1);

    report.failure = if !(beta1 > bounds.minus1) {
        Some(SolvabilityFailure::BelowInterval)
    } else if !(beta1 < bounds.plus1) {
        Some(SolvabilityFailure::AboveInterval)
    } else {
        match report.mismatch {
            None => Some(SolvabilityFailure::PhiUndefined),
            Some(m) if m > rel(beta2) => Some(SolvabilityFailure::OffBranch),
            Some(_) => None,
        }
    };
    report.solvable = report.failure.is_none();
    report
}

/// One named necessary condition with its signed margin (positive = holds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck<T> {
    pub name: &'static str,
    pub passed: bool,
    pub margin: T,
}

impl<T: Real> ConditionCheck<T> {
    fn strict(name: &'static str, margin: T) -> Self {
        Self {
            name,
            passed: margin > T::zero(),
            margin,
        }
    }
}

/// Report for the necessary conditions on a flux pair: the coupling range,
/// the ellipse identity, the strict decay inequalities and the radial
/// inequalities `beta1 > 4(N+1)`, `beta2 > 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NecessaryConditions<T> {
    pub tau_range: ConditionCheck<T>,
    /// Margin is the raw residual; passes when `|residual| <= tol * scale`.
    pub ellipse: ConditionCheck<T>,
    pub decay1: ConditionCheck<T>,
    pub decay2: ConditionCheck<T>,
    pub radial1: ConditionCheck<T>,
    pub radial2: ConditionCheck<T>,
    pub all_passed: bool,
}

pub fn necessary_conditions<T: Real>(
    beta1: T,
    beta2: T,
    params: &SystemParams<T>,
) -> NecessaryConditions<T> {
    necessary_conditions_tol(beta1, beta2, params, T::tol_floor(DEFAULT_RESIDUAL_TOL, 64.0))
}

pub fn necessary_conditions_tol<T: Real>(
    beta1: T,
    beta2: T,
    params: &SystemParams<T>,
    residual_tol: T,
) -> NecessaryConditions<T> {
    let tau = params.tau;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let residual = ellipse_residual(beta1, beta2, params);
    let tau_range = ConditionCheck::strict("tau in (0,1)", tau.min(T::one() - tau));
    let ellipse = ConditionCheck {
        name: "ellipse identity",
        passed: residual.abs() <= residual_tol * residual_scale(beta1, beta2),
        margin: residual,
    };
    let decay1 = ConditionCheck::strict(
        "beta1 - tau beta2 > 2(N+1)",
        beta1 - tau * beta2 - two * params.n1(),
    );
    let decay2 = ConditionCheck::strict("beta2 - tau beta1 > 2", beta2 - tau * beta1 - two);
    let radial1 = ConditionCheck::strict("beta1 > 4(N+1)", beta1 - four * params.n1());
    let radial2 = ConditionCheck::strict("beta2 > 4", beta2 - four);
    let all_passed = [tau_range, ellipse, decay1, decay2, radial1, radial2]
        .iter()
        .all(|c| c.passed);
    NecessaryConditions {
        tau_range,
        ellipse,
        decay1,
        decay2,
        radial1,
        radial2,
        all_passed,
    }
}

/// A-priori ceiling on `r^{2(N+1)} e^{v1} + r^2 e^{v2}`:
/// `2 D / (1 - tau^2)`.
pub fn apriori_bound<T: Real>(params: &SystemParams<T>) -> T {
    T::lit(2.0) * discriminant(params) / (T::one() - params.tau * params.tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(tau: f64, n: f64) -> SystemParams<f64> {
        SystemParams::new(tau, n).unwrap()
    }

    #[test]
    fn discriminant_values() {
        assert_eq!(discriminant(&p(0.5, 1.0)), 7.0);
        assert_eq!(discriminant(&p(0.0, 1.0)), 5.0);
        let q = p(1e-9, 3.0);
        assert!(discriminant(&q) > 16.0);
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1.0, 1.0).is_err());
        assert!(SystemParams::new(-0.1, 1.0).is_err());
        assert!(SystemParams::new(0.5, 0.0).is_err());
        assert!(SystemParams::new(f64::NAN, 1.0).is_err());
        assert!(SystemParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn ellipse_named_points() {
        let q = p(0.5, 1.0);
        assert_eq!(ellipse_residual(12.0, 12.0, &q), 0.0);
        assert_eq!(ellipse_residual(0.0, 0.0, &q), 0.0);
        assert_eq!(ellipse_residual(1.0, 1.0, &q), -11.0);
        for &(tau, n) in &[(0.1, 0.5), (0.3, 1.0), (0.7, 2.5), (0.95, 4.0)] {
            let q = p(tau, n);
            let r = ellipse_residual(4.0 * (n + 1.0), 4.0 + 8.0 * tau * (n + 1.0), &q);
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn extremes_at_toda_coupling() {
        let e = beta_extremes(&p(0.5, 1.0)).unwrap();
        let s7 = 7f64.sqrt();
        assert!((e.over1 - 8.0 / 3.0 * (2.5 + s7)).abs() < 1e-12);
        assert!((e.under1 - 8.0 / 3.0 * (2.5 + 0.5 * s7)).abs() < 1e-12);
        assert!((e.over1 - 13.722003496172242).abs() < 1e-12);
        assert!((e.under1 - 10.194335081419453).abs() < 1e-12);
        assert!(e.under1 < 12.0 && 12.0 < e.over1);
        assert!(e.under2 < e.over2);
        assert!(e.over1 > 8.0 && e.over2 > 4.0);
    }

    #[test]
    fn extremes_reject_tau_at_least_one() {
        let q = SystemParams::unchecked(1.0, 1.0);
        assert!(beta_extremes(&q).is_err());
        assert!(phi1(1.0, Sign::Plus, &q).is_err());
    }

    #[test]
    fn branch_functions_at_named_points() {
        let q = p(0.5, 1.0);
        assert!((phi1(12.0, Sign::Plus, &q).unwrap() - 12.0).abs() < 1e-12);
        // phi1_pm(over1) = under2 and phi2_pm(over2) = under1
        for &(tau, n) in &[(0.2, 1.0), (0.5, 2.0), (0.8, 0.5)] {
            let q = p(tau, n);
            let e = beta_extremes(&q).unwrap();
            for s in [Sign::Plus, Sign::Minus] {
                assert!((phi1(e.over1, s, &q).unwrap() - e.under2).abs() < 1e-6);
                assert!((phi2(e.over2, s, &q).unwrap() - e.under1).abs() < 1e-6);
            }
        }
        // beta2*(tau) = phi1_plus(4(N+1)) below tau0^(1)
        let q = p(0.15, 1.0);
        assert!((phi1(8.0, Sign::Plus, &q).unwrap() - 6.4).abs() < 1e-12);
        let phi = phi1(8.6, Sign::Plus, &q).unwrap();
        assert!((phi - 5.669_936_973_955_403).abs() < 1e-12);
    }

    #[test]
    fn branch_function_domain_error() {
        let q = p(0.5, 1.0);
        let e = phi1(20.0, Sign::Plus, &q).unwrap_err();
        match e {
            Error::Domain { upper, .. } => assert!((upper - 13.722003496172242).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(phi2(-5.0, Sign::Minus, &q).is_err());
    }

    #[test]
    fn star_values() {
        let (s1, s2) = beta_star(&p(0.5, 1.0));
        let (ss1, ss2) = beta_starstar(&p(0.5, 1.0));
        for v in [s1, s2, ss1, ss2] {
            assert!((v - 12.0).abs() < 1e-12);
        }
        let (s1, s2) = beta_star(&p(0.15, 1.0));
        assert!((s1 - 9.2).abs() < 1e-12 && (s2 - 6.4).abs() < 1e-12);
        for &tau in &[0.1, 0.3, 0.49, 0.51, 0.7, 0.9] {
            let q = p(tau, 1.5);
            let (s1, s2) = beta_star(&q);
            let (ss1, ss2) = beta_starstar(&q);
            assert_eq!(ss1 < s1, tau < 0.5);
            assert_eq!(ss2 < s2, tau < 0.5);
            for (b1, b2) in [(4.0 * 2.5, s2), (s1, 4.0), (ss1, s2), (s1, ss2)] {
                assert!(ellipse_residual(b1, b2, &q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tau0_values_and_characterization() {
        let (t1, t2) = tau0(1.0_f64);
        assert!((t1 - 0.390_388_203_202_207_6).abs() < 1e-15);
        assert!((t2 - 0.207_106_781_186_547_52).abs() < 1e-15);
        assert!((t1 - 2.0 / (1.0 + 17f64.sqrt())).abs() < 1e-15);
        let (ss1, _) = beta_starstar(&p(t1, 1.0));
        let (_, ss2) = beta_starstar(&p(t2, 1.0));
        assert!((ss1 - 8.0).abs() < 1e-10);
        assert!((ss2 - 4.0).abs() < 1e-10);
        // under1(tau0^(1)) = 4(N+1)
        let e = beta_extremes(&p(t1, 1.0)).unwrap();
        assert!((e.under1 - 8.0).abs() < 1e-10);
    }

    #[test]
    fn psi_cubics_at_bracket_ends() {
        for &n in &[0.3f64, 1.0, 4.0] {
            assert!((psi1(0.5, n) - (n + 1.0)).abs() < 1e-12);
            assert!((psi1(std::f64::consts::FRAC_1_SQRT_2, n) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tau1_matches_polynomial_root_oracle() {
        // roots of -8a t^3 - 4 t^2 + 4a t + 1 and -8 t^3 - 4a t^2 + 4 t + a, a = N + 1,
        // from a companion-matrix solver refined in extended precision
        let cases = [
            (0.5f64, 0.643_998_309_385_090_8, 0.601_011_749_116_107),
            (1.0, 0.656_549_517_131_823_4, 0.585_043_243_313_016_9),
            (2.0, 0.671_013_764_640_041_7, 0.564_209_531_922_288_7),
            (2.5, 0.675_544_931_185_585_8, 0.557_107_349_185_055_4),
        ];
        for (n, t11, t12) in cases {
            let (a, b) = tau1(n).unwrap();
            assert!((a - t11).abs() < 1e-11, "{n}: {a} vs {t11}");
            assert!((b - t12).abs() < 1e-11, "{n}: {b} vs {t12}");
        }
    }

    #[test]
    fn solvability_bounds_examples() {
        let b = beta_pm(&p(0.15, 1.0)).unwrap();
        assert!((b.minus1 - 8.0).abs() < 1e-12);
        assert!((b.plus1 - 9.2).abs() < 1e-12);
        assert!((b.minus2 - 4.0).abs() < 1e-12);
        assert!((b.plus2 - 6.4).abs() < 1e-12);
        for &n in &[0.5, 1.0, 3.0] {
            let b = beta_pm(&p(0.5, n)).unwrap();
            let t = 4.0 * (n + 2.0);
            for v in [b.minus1, b.plus1, b.minus2, b.plus2] {
                assert!((v - t).abs() < 1e-12);
            }
        }
        let (t11, _) = tau1(1.0).unwrap();
        for tau in [t11, 0.8, 0.95] {
            let q = p(tau, 1.0);
            let b = beta_pm(&q).unwrap();
            let e = beta_extremes(&q).unwrap();
            assert_eq!((b.minus1, b.plus1), (e.under1, e.over1));
        }
    }

    #[test]
    fn limits_examples() {
        let l = beta_limits(&p(0.15, 1.0)).unwrap();
        assert!((l.lim1_plus - 8.0).abs() < 1e-12);
        assert!((l.lim2_plus - 6.4).abs() < 1e-12);
        assert!((l.lim1_minus - 9.2).abs() < 1e-12);
        assert!((l.lim2_minus - 4.0).abs() < 1e-12);
        let l = beta_limits(&p(0.5, 1.0)).unwrap();
        for v in [l.lim1_plus, l.lim2_plus, l.lim1_minus, l.lim2_minus] {
            assert!((v - 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn limits_lie_on_plus_branch() {
        for &tau in &[0.1, 0.25, 0.45, 0.55, 0.6, 0.7, 0.9] {
            let q = p(tau, 1.0);
            let l = beta_limits(&q).unwrap();
            let a = phi1(l.lim1_minus, Sign::Plus, &q).unwrap();
            assert!((a - l.lim2_minus).abs() < 1e-6, "tau {tau}: {a} vs {}", l.lim2_minus);
            let b = phi2(l.lim2_plus, Sign::Plus, &q).unwrap();
            assert!((b - l.lim1_plus).abs() < 1e-6, "tau {tau}: {b} vs {}", l.lim1_plus);
        }
    }

    #[test]
    fn classification_examples() {
        let q = p(0.5, 1.0);
        let c = classify_point(12.0, 12.0, &q, 1e-9);
        assert_eq!(c.branch, EllipseBranch::Interior);
        assert!((c.margin1 - 2.0).abs() < 1e-12 && (c.margin2 - 4.0).abs() < 1e-12);
        assert_eq!(classify_point(1.0, 1.0, &q, 1e-9).branch, EllipseBranch::OffEllipse);
        let e = beta_extremes(&q).unwrap();
        let c = classify_point(e.over1, e.under2, &q, 1e-9);
        assert_eq!(c.branch, EllipseBranch::LowerRight);
        assert!(c.margin2.abs() < 1e-10);
        let c = classify_point(e.under1, e.over2, &q, 1e-9);
        assert_eq!(c.branch, EllipseBranch::LowerLeft);
        // lower-left branch point: (phi2_minus(b2), b2)
        let b2 = 5.0;
        let b1 = phi2(b2, Sign::Minus, &q).unwrap();
        assert_eq!(classify_point(b1, b2, &q, 1e-9).branch, EllipseBranch::LowerLeft);
    }

    #[test]
    fn solvability_examples() {
        let q = p(0.15, 1.0);
        let r = solvable_radial(8.6, 5.6699, &q, 1e-5);
        assert!(r.solvable, "{r:?}");
        let r = solvable_radial(8.6, 5.6699, &q, DEFAULT_MEMBERSHIP_TOL);
        assert_eq!(r.failure, Some(SolvabilityFailure::OffBranch));
        let r = solvable_radial(8.6, 5.669_936_973_955_403, &q, DEFAULT_MEMBERSHIP_TOL);
        assert!(r.solvable);
        let r = solvable_radial(8.0, 6.4, &q, 1e-5);
        assert!(!r.solvable);
        assert_eq!(r.failure, Some(SolvabilityFailure::BelowInterval));
        assert!(r.near_endpoint);
        let r = solvable_radial(9.5, 1.0, &q, 1e-5);
        assert_eq!(r.failure, Some(SolvabilityFailure::AboveInterval));

        let t = p(0.5, 1.0);
        let r = solvable_radial(12.0, 12.0, &t, 1e-8);
        assert!(r.solvable && r.toda_point);
        let r = solvable_radial(12.1, 11.9, &t, 1e-8);
        assert_eq!(r.failure, Some(SolvabilityFailure::NotTodaPoint));

        let r = solvable_radial(8.6, 5.67, &SystemParams::unchecked(1.2, 1.0), 1e-5);
        assert_eq!(r.failure, Some(SolvabilityFailure::TauOutOfRange));
    }

    #[test]
    fn necessary_condition_examples() {
        let q = p(0.5, 1.0);
        let r = necessary_conditions(12.0, 12.0, &q);
        assert!(r.all_passed);
        assert!((r.decay1.margin - 2.0).abs() < 1e-12);
        assert!((r.decay2.margin - 4.0).abs() < 1e-12);
        assert!((r.radial1.margin - 4.0).abs() < 1e-12);
        assert!((r.radial2.margin - 8.0).abs() < 1e-12);

        let q = p(0.2, 1.0);
        let (_, s2) = beta_star(&q);
        let r = necessary_conditions(8.0, s2, &q);
        assert!(r.ellipse.passed);
        assert!(!r.radial1.passed);
        assert_eq!(r.radial1.margin, 0.0);
        assert!(!r.all_passed);

        let r = necessary_conditions(12.0, 12.0, &SystemParams::unchecked(1.0, 1.0));
        assert!(!r.tau_range.passed);
        let r = necessary_conditions(12.0, 12.0, &SystemParams::unchecked(1.5, 1.0));
        assert!(!r.tau_range.passed);
    }

    #[test]
    fn threshold_set_ordering() {
        let t = thresholds(&p(0.3, 1.0)).unwrap();
        let c = t.couplings;
        assert!(0.0 < c.tau02 && c.tau02 < c.tau01 && c.tau01 < 0.5);
        assert!(0.5 < c.tau12 && c.tau12 < c.tau11 && c.tau11 < std::f64::consts::FRAC_1_SQRT_2);
        assert!(t.beta_under1 < t.beta_over1 && t.beta_under2 < t.beta_over2);
    }

    #[test]
    fn single_precision_thresholds() {
        let q = SystemParams::<f32>::new(0.5, 1.0).unwrap();
        let t = thresholds(&q).unwrap();
        assert!((t.beta_minus1 - 12.0).abs() < 1e-4);
        assert!((t.beta_plus2 - 12.0).abs() < 1e-4);
        let (a, b) = tau1(1.0f32).unwrap();
        assert!((a - 0.656_549_5).abs() < 1e-5 && (b - 0.585_043_2).abs() < 1e-5);
    }
}
