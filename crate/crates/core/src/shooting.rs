//! The shooting curve `alpha -> (beta1(alpha), beta2(alpha))`: sweeps, limit
//! estimates as `alpha -> +/- infinity` and inversion for a target flux.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{
    beta_limits, beta_pm, ellipse_residual, necessary_conditions, FluxPair, NecessaryConditions,
    SystemParams,
};
use crate::error::{Error, Result};
use crate::ode::{integrate, IntegrateConfig};
use crate::scalar::Real;

/// Default tolerance on `|beta1(alpha) - target|` for [`solve_for_target`].
pub const DEFAULT_TARGET_TOL: f64 = 1e-6;

/// Tail-corrected fluxes for `v1(0) = alpha`; fails if the tail did not
/// converge.
pub fn flux_of_alpha<T: Real>(
    params: &SystemParams<T>,
    alpha: T,
    config: &IntegrateConfig<T>,
) -> Result<FluxPair<T>> {
    let tr = integrate(params, alpha, config)?;
    if tr.converged {
        Ok(tr.flux)
    } else {
        Err(Error::NotConverged {
            t_end: tr.t_end.as_f64(),
        })
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint<T> {
    pub alpha: T,
    /// Absent only when integration failed outright.
    pub flux: Option<FluxPair<T>>,
    pub converged: bool,
    /// Ellipse residual of the fluxes.
    pub residual: T,
    pub conditions: Option<NecessaryConditions<T>>,
    pub error: Option<String>,
}

/// Extrapolated limit of the curve at one end of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitFit<T> {
    /// Intercept of a least-squares line in `1/alpha`; `err` fields hold the
    /// distance from the outermost converged point.
    pub flux: FluxPair<T>,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult<T> {
    pub params: SystemParams<T>,
    pub points: Vec<SweepPoint<T>>,
    /// Extrapolation toward `alpha -> +inf` from the upper third of the grid.
    pub limit_estimate_plus: Option<LimitFit<T>>,
    /// Extrapolation toward `alpha -> -inf` from the lower third of the grid.
    pub limit_estimate_minus: Option<LimitFit<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn converged_points(&self) -> impl Iterator<Item = (&SweepPoint<T>, &FluxPair<T>)> {
        self.points
            .iter()
            .filter(|p| p.converged)
            .filter_map(|p| p.flux.as_ref().map(|f| (p, f)))
    }

    /// CSV with header `alpha,beta1,beta2,err1,err2,residual,converged`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "alpha,beta1,beta2,err1,err2,residual,converged")?;
        for p in &self.points {
            let f = p.flux.unwrap_or(FluxPair {
                beta1: T::nan(),
                beta2: T::nan(),
                err1: T::nan(),
                err2: T::nan(),
            });
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                p.alpha, f.beta1, f.beta2, f.err1, f.err2, p.residual, p.converged
            )?;
        }
        Ok(())
    }
}

fn sweep_point<T: Real>(
    params: &SystemParams<T>,
    alpha: T,
    config: &IntegrateConfig<T>,
) -> SweepPoint<T> {
    match integrate(params, alpha, config) {
        Ok(tr) => {
            let f = tr.flux;
            SweepPoint {
                alpha,
                flux: Some(f),
                converged: tr.converged,
                residual: ellipse_residual(f.beta1, f.beta2, params),
                conditions: Some(necessary_conditions(f.beta1, f.beta2, params)),
                error: None,
            }
        }
        Err(e) => SweepPoint {
            alpha,
            flux: None,
            converged: false,
            residual: T::nan(),
            conditions: None,
            error: Some(e.to_string()),
        },
    }
}

/// Least-squares fit `beta = L + c / alpha` over `(alpha, beta)` pairs.
fn fit_inverse<T: Real>(pts: &[(T, FluxPair<T>)]) -> Option<LimitFit<T>> {
    if pts.len() < 2 {
        return None;
    }
    let n = T::of_usize(pts.len());
    let xs: Vec<T> = pts.iter().map(|(a, _)| T::one() / *a).collect();
    let mx = xs.iter().fold(T::zero(), |s, &x| s + x) / n;
    let sxx = xs.iter().fold(T::zero(), |s, &x| s + (x - mx) * (x - mx));
    if !(sxx > T::zero()) {
        return None;
    }
    let fit = |ys: Vec<T>| {
        let my = ys.iter().fold(T::zero(), |s, &y| s + y) / n;
        let sxy = xs
            .iter()
            .zip(&ys)
            .fold(T::zero(), |s, (&x, &y)| s + (x - mx) * (y - my));
        my - sxy / sxx * mx
    };
    let l1 = fit(pts.iter().map(|(_, f)| f.beta1).collect());
    let l2 = fit(pts.iter().map(|(_, f)| f.beta2).collect());
    // outermost point: smallest |1/alpha|
    let outer = pts
        .iter()
        .min_by(|a, b| {
            (T::one() / a.0)
                .abs()
                .partial_cmp(&(T::one() / b.0).abs())
                .expect("finite alpha")
        })
        .expect("nonempty")
        .1;
    Some(LimitFit {
        flux: FluxPair {
            beta1: l1,
            beta2: l2,
            err1: (l1 - outer.beta1).abs(),
            err2: (l2 - outer.beta2).abs(),
        },
        points_used: pts.len(),
    })
}

/// Integrates every `alpha` of a strictly increasing grid in parallel.
///
/// Per-point failures are recorded, never fatal. The result is independent
/// of thread count: points are pure functions of `alpha` and are assembled
/// in grid order.
pub fn sweep<T: Real>(
    params: &SystemParams<T>,
    grid: &[T],
    config: &IntegrateConfig<T>,
) -> Result<SweepResult<T>> {
    if grid.is_empty()
        || grid.iter().any(|a| !a.is_finite())
        || grid.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::BadGrid);
    }
    config.validate()?;
    let points: Vec<SweepPoint<T>> = grid
        .par_iter()
        .map(|&a| sweep_point(params, a, config))
        .collect();

    let third = (grid.len() / 3).max(2);
    let ends = |pts: &[SweepPoint<T>], positive: bool| {
        let sel: Vec<(T, FluxPair<T>)> = pts
            .iter()
            .filter(|p| p.converged && (p.alpha > T::zero()) == positive && p.alpha != T::zero())
            .filter_map(|p| p.flux.map(|f| (p.alpha, f)))
            .collect();
        sel
    };
    let upper = if points.len() >= third {
        ends(&points[points.len() - third..], true)
    } else {
        Vec::new()
    };
    let lower = ends(&points[..third.min(points.len())], false);
    Ok(SweepResult {
        params: *params,
        limit_estimate_plus: fit_inverse(&upper),
        limit_estimate_minus: fit_inverse(&lower),
        points,
    })
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linear_grid<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if n == 0 || !(hi >= lo) || (n == 1 && hi != lo) || (n > 1 && hi == lo) {
        return Err(Error::BadGrid);
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / T::of_usize(n - 1);
    Ok((0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * T::of_usize(i) })
        .collect())
}

/// Ladder toward one end of the curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSide<T> {
    /// `alpha_max/4`, `alpha_max/2`, `alpha_max` with the sign of the side.
    pub alphas: [T; 3],
    pub fluxes: [Option<FluxPair<T>>; 3],
    pub converged: bool,
    /// Richardson extrapolation in `1/alpha`: `2 beta(alpha_max) - beta(alpha_max/2)`.
    pub extrapolated: Option<FluxPair<T>>,
    /// Closed-form limit `(beta_{1,+/-inf}, beta_{2,+/-inf})`.
    pub closed_form: (T, T),
    /// Largest componentwise relative distance of the extrapolation from the closed form.
    pub rel_distance: Option<T>,
    /// Both components move monotonically along the ladder.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport<T> {
    pub params: SystemParams<T>,
    pub alpha_max: T,
    pub plus: LimitSide<T>,
    pub minus: LimitSide<T>,
    /// Every ladder point converged.
    pub reliable: bool,
}

fn monotone3<T: Real>(v: [T; 3]) -> bool {
    let up = v[0] <= v[1] && v[1] <= v[2];
    let down = v[0] >= v[1] && v[1] >= v[2];
    up || down
}

fn ladder_side<T: Real>(
    params: &SystemParams<T>,
    alphas: [T; 3],
    closed_form: (T, T),
    config: &IntegrateConfig<T>,
) -> LimitSide<T> {
    let shots: Vec<Option<FluxPair<T>>> = alphas
        .par_iter()
        .map(|&a| flux_of_alpha(params, a, config).ok())
        .collect();
    let fluxes = [shots[0], shots[1], shots[2]];
    let converged = fluxes.iter().all(Option::is_some);
    let (extrapolated, rel_distance, monotone) = match fluxes {
        [Some(a), Some(b), Some(c)] => {
            let two = T::lit(2.0);
            let l1 = two * c.beta1 - b.beta1;
            let l2 = two * c.beta2 - b.beta2;
            let ex = FluxPair {
                beta1: l1,
                beta2: l2,
                err1: (l1 - c.beta1).abs(),
                err2: (l2 - c.beta2).abs(),
            };
            let d = ((l1 - closed_form.0) / closed_form.0)
                .abs()
                .max(((l2 - closed_form.1) / closed_form.1).abs());
            let mono = monotone3([a.beta1, b.beta1, c.beta1]) && monotone3([a.beta2, b.beta2, c.beta2]);
            (Some(ex), Some(d), mono)
        }
        _ => (None, None, false),
    };
    LimitSide {
        alphas,
        fluxes,
        converged,
        extrapolated,
        closed_form,
        rel_distance,
        monotone,
    }
}

/// Runs the ladders `+/-(alpha_max/4, alpha_max/2, alpha_max)` and compares
/// the extrapolated ends of the curve with the closed-form limits.
pub fn estimate_limits<T: Real>(
    params: &SystemParams<T>,
    alpha_max: T,
    config: &IntegrateConfig<T>,
) -> Result<LimitReport<T>> {
    if !(alpha_max >= T::lit(10.0)) || !alpha_max.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha_max",
            value: alpha_max.as_f64(),
            requirement: "alpha_max >= 10",
        });
    }
    config.validate()?;
    let lim = beta_limits(params)?;
    let quarter = alpha_max / T::lit(4.0);
    let half = alpha_max / T::lit(2.0);
    let (plus, minus) = rayon::join(
        || {
            ladder_side(
                params,
                [quarter, half, alpha_max],
                (lim.lim1_plus, lim.lim2_plus),
                config,
            )
        },
        || {
            ladder_side(
                params,
                [-quarter, -half, -alpha_max],
                (lim.lim1_minus, lim.lim2_minus),
                config,
            )
        },
    );
    Ok(LimitReport {
        params: *params,
        alpha_max,
        reliable: plus.converged && minus.converged,
        plus,
        minus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetSolution<T> {
    pub alpha: T,
    pub flux: FluxPair<T>,
    pub iterations: usize,
}

/// Finds `alpha` in `bracket` with `|beta1(alpha) - target| <= tol` by
/// bisection.
///
/// The target must lie in the open interval `(beta1^-, beta1^+)` and the
/// bracket ends must straddle it; monotonicity of the curve is not assumed.
/// At `tau = 1/2` the curve is constant, so any `alpha` solves the target
/// `4(N+2)` and nothing else is reachable.
pub fn solve_for_target<T: Real>(
    params: &SystemParams<T>,
    target: T,
    bracket: (T, T),
    tol: T,
    config: &IntegrateConfig<T>,
) -> Result<TargetSolution<T>> {
    let (lo, hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::BadGrid);
    }
    let bounds = beta_pm(params)?;
    let tau = params.tau();
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau.as_f64(),
            requirement: "tau in (0,1) for the solvability interval",
        });
    }
    let toda = (tau - T::lit(0.5)).abs() <= T::epsilon() * T::lit(4.0);
    if toda {
        let b = T::lit(4.0) * (params.big_n() + T::lit(2.0));
        if (target - b).abs() <= tol.max(T::tol_floor(1e-9, 64.0) * b) {
            let flux = flux_of_alpha(params, lo, config)?;
            return Ok(TargetSolution {
                alpha: lo,
                flux,
                iterations: 0,
            });
        }
        return Err(Error::TargetOutOfRange {
            target: target.as_f64(),
            lower: b.as_f64(),
            upper: b.as_f64(),
        });
    }
    if !(target > bounds.minus1 && target < bounds.plus1) {
        return Err(Error::TargetOutOfRange {
            target: target.as_f64(),
            lower: bounds.minus1.as_f64(),
            upper: bounds.plus1.as_f64(),
        });
    }
    let f_lo = flux_of_alpha(params, lo, config)?;
    let f_hi = flux_of_alpha(params, hi, config)?;
    let d_lo = f_lo.beta1 - target;
    let d_hi = f_hi.beta1 - target;
    for (a, f, d) in [(lo, f_lo, d_lo), (hi, f_hi, d_hi)] {
        if d.abs() <= tol {
            return Ok(TargetSolution {
                alpha: a,
                flux: f,
                iterations: 0,
            });
        }
    }
    if d_lo * d_hi > T::zero() {
        return Err(Error::NoStraddle {
            target: target.as_f64(),
            alpha_lo: lo.as_f64(),
            alpha_hi: hi.as_f64(),
            observed_lo: f_lo.beta1.min(f_hi.beta1).as_f64(),
            observed_hi: f_lo.beta1.max(f_hi.beta1).as_f64(),
        });
    }
    let (mut a, mut b, mut da) = (lo, hi, d_lo);
    let mut best = if d_lo.abs() < d_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    let half = T::lit(0.5);
    for it in 1..=200 {
        let m = half * (a + b);
        let fm = flux_of_alpha(params, m, config)?;
        let dm = fm.beta1 - target;
        if dm.abs() < (best.1.beta1 - target).abs() {
            best = (m, fm);
        }
        if dm.abs() <= tol || !(m > a && m < b) {
            return Ok(TargetSolution {
                alpha: best.0,
                flux: best.1,
                iterations: it,
            });
        }
        if da * dm < T::zero() {
            b = m;
        } else {
            a = m;
            da = dm;
        }
    }
    Ok(TargetSolution {
        alpha: best.0,
        flux: best.1,
        iterations: 200,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{phi1, Sign};

    fn p(tau: f64, n: f64) -> SystemParams<f64> {
        SystemParams::new(tau, n).unwrap()
    }

    fn cfg() -> IntegrateConfig<f64> {
        IntegrateConfig::default()
    }

    #[test]
    fn flux_examples() {
        let f = flux_of_alpha(&p(0.5, 1.0), 3.0, &cfg()).unwrap();
        assert!((f.beta1 - 12.0).abs() < 1e-4 && (f.beta2 - 12.0).abs() < 1e-4);
        let f = flux_of_alpha(&p(0.0, 2.0), -1.0, &cfg()).unwrap();
        assert!((f.beta1 - 12.0).abs() < 1e-6 && (f.beta2 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn grid_validation() {
        let q = p(0.3, 1.0);
        assert_eq!(sweep(&q, &[], &cfg()).unwrap_err(), Error::BadGrid);
        assert_eq!(sweep(&q, &[1.0, 0.0], &cfg()).unwrap_err(), Error::BadGrid);
        assert_eq!(sweep(&q, &[1.0, 1.0], &cfg()).unwrap_err(), Error::BadGrid);
        assert!(linear_grid(0.0, 1.0, 0).is_err());
        let g: Vec<f64> = linear_grid(-20.0, 20.0, 41).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[40], 20.0);
        assert!((g[21] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toda_sweep_is_constant() {
        let q = p(0.5, 1.0);
        let grid = linear_grid(-10.0, 10.0, 11).unwrap();
        let s = sweep(&q, &grid, &cfg()).unwrap();
        for (_, f) in s.converged_points() {
            assert!((f.beta1 - 12.0).abs() < 1e-4 && (f.beta2 - 12.0).abs() < 1e-4);
        }
        assert_eq!(s.converged_points().count(), 11);
        let lp = s.limit_estimate_plus.unwrap();
        assert!((lp.flux.beta1 - 12.0).abs() < 1e-4);
    }

    #[test]
    fn sweep_points_lie_on_plus_branch() {
        let q = p(0.15, 1.0);
        let grid = linear_grid(-20.0, 20.0, 9).unwrap();
        let s = sweep(&q, &grid, &cfg()).unwrap();
        for (pt, f) in s.converged_points() {
            assert!(f.beta1 > 8.0 && f.beta1 < 9.2, "{f:?}");
            let phi = phi1(f.beta1, Sign::Plus, &q).unwrap();
            assert!((f.beta2 - phi).abs() <= 1e-5 * f.beta2);
            assert!(pt.conditions.unwrap().all_passed);
        }
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("alpha,beta1,beta2,err1,err2,residual,converged\n"));
    }

    #[test]
    fn sweep_is_deterministic_across_pools() {
        let q = p(0.3, 1.0);
        let grid = linear_grid(-5.0, 5.0, 7).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| sweep(&q, &grid, &cfg()).unwrap());
        let b = sweep(&q, &grid, &cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn toda_limits() {
        let r = estimate_limits(&p(0.5, 1.0), 10.0, &cfg()).unwrap();
        assert!(r.reliable);
        assert!(r.plus.rel_distance.unwrap() < 1e-3 / 12.0);
        assert!(r.minus.rel_distance.unwrap() < 1e-3 / 12.0);
        assert!(estimate_limits(&p(0.5, 1.0), 5.0, &cfg()).is_err());
    }

    #[test]
    fn solve_target_examples() {
        let q = p(0.15, 1.0);
        let s = solve_for_target(&q, 8.6, (-20.0, 20.0), 1e-6, &cfg()).unwrap();
        assert!((s.flux.beta1 - 8.6).abs() <= 1e-6);
        assert!((s.flux.beta2 - 5.6699).abs() <= 1e-4, "{:?}", s.flux);

        let t = solve_for_target(&p(0.5, 1.0), 12.0, (-3.0, 3.0), 1e-6, &cfg()).unwrap();
        assert!((t.flux.beta1 - 12.0).abs() < 1e-4);

        assert!(matches!(
            solve_for_target(&q, 9.5, (-20.0, 20.0), 1e-6, &cfg()),
            Err(Error::TargetOutOfRange { .. })
        ));
        // both ends of a narrow bracket sit on the same side of the target
        assert!(matches!(
            solve_for_target(&q, 8.6, (10.0, 12.0), 1e-6, &cfg()),
            Err(Error::NoStraddle { .. })
        ));
    }
}
