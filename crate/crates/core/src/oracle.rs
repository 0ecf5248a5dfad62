//! Closed-form reference solutions.
//!
//! The radial solutions of the singular Liouville equation
//! `-Δu = |x|^{2N} e^u` form the one-parameter family
//!
//! ```text
//! u(r) = log( 8 (N+1)^2 mu r^{2N} / (1 + mu r^{2N+2})^2 ),   mu > 0
//! ```
//!
//! each with flux `(1/2π) ∫ e^u = 4(N+1)`. They validate the integrator in
//! the decoupled case; the Toda point supplies a coupled reference.

use crate::algebra::FluxPair;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `xi(r) = -2 log(1 + r^{2N+2} / (8 (N+1)^2))`, the member with `xi(0) = 0`
/// of the weighted family `-xi'' - xi'/r = r^{2N} e^xi`.
pub fn xi_profile<T: Real>(big_n: T, r: T) -> T {
    let a = big_n + T::one();
    let q = r.powf(T::lit(2.0) * a) / (T::lit(8.0) * a * a);
    T::lit(-2.0) * q.ln_1p()
}

/// Family member `log(8 (N+1)^2 mu r^{2N} / (1 + mu r^{2N+2})^2)`.
pub fn radial_family<T: Real>(big_n: T, mu: T, r: T) -> T {
    let a = big_n + T::one();
    let two = T::lit(2.0);
    (T::lit(8.0) * a * a * mu).ln() + two * big_n * r.ln() - two * (mu * r.powf(two * a)).ln_1p()
}

/// Flux pair of the Toda point, `(4(N+2), 4(N+2))`.
pub fn toda_reference<T: Real>(big_n: T) -> FluxPair<T> {
    let b = T::lit(4.0) * (big_n + T::lit(2.0));
    FluxPair::exact(b, b)
}

/// Result of a numerical quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let x = h * T::lit(XGK[j]);
        let s = f(c - x) + f(c + x);
        k = k + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            g = g + T::lit(WG[j / 2]) * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]`.
///
/// Repeatedly bisects the interval with the largest error estimate until the
/// summed estimate is below `tol * max(1, |value|)`.
pub fn gauss_kronrod<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Result<Quadrature<T>> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidParameter {
            name: "interval",
            value: (b - a).as_f64(),
            requirement: "finite with a <= b",
        });
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = kronrod15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value = parts.iter().fold(T::zero(), |s, p| s + p.2);
        let error = parts.iter().fold(T::zero(), |s, p| s + p.3);
        if error <= tol * T::one().max(value.abs()) || parts.len() >= MAX_INTERVALS {
            return Ok(Quadrature {
                value,
                error,
                intervals: parts.len(),
            });
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = T::lit(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at machine resolution
            return Ok(Quadrature {
                value,
                error,
                intervals: parts.len() + 1,
            });
        }
        let (v1, e1) = kronrod15(&mut f, lo, mid);
        let (v2, e2) = kronrod15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// `∫_0^R r^{2N+1} e^{xi(r)} dr` by quadrature.
pub fn xi_flux<T: Real>(big_n: T, radius: T, tol: T) -> Result<Quadrature<T>> {
    let w = T::lit(2.0) * big_n + T::one();
    gauss_kronrod(
        |r: T| if r > T::zero() { r.powf(w) * xi_profile(big_n, r).exp() } else { T::zero() },
        T::zero(),
        radius,
        tol,
    )
}

/// Total flux `∫_0^∞ r e^{u(r)} dr` of a family member: quadrature up to the
/// radius where `mu r^{2N+2} = 1e3`, plus the asymptotic tail
/// `4(N+1) (1/Q - 1/Q^2 + 1/Q^3 - 1/Q^4)`, `Q = mu R^{2N+2}`.
pub fn family_flux<T: Real>(big_n: T, mu: T, tol: T) -> Result<Quadrature<T>> {
    if !(mu > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu.as_f64(),
            requirement: "mu > 0",
        });
    }
    let a = big_n + T::one();
    let p = T::lit(2.0) * a;
    let q_cut = T::lit(1e3);
    let radius = (q_cut / mu).powf(T::one() / p);
    // split at the bulk scale so the peak is resolved from the start
    let knee = mu.powf(-T::one() / p).min(radius);
    let integrand = |r: T| {
        if r > T::zero() {
            r * radial_family(big_n, mu, r).exp()
        } else {
            T::zero()
        }
    };
    let head = gauss_kronrod(integrand, T::zero(), knee, tol)?;
    let body = gauss_kronrod(integrand, knee, radius, tol)?;
    let inv = T::one() / q_cut;
    let tail = T::lit(4.0) * a * inv * (T::one() - inv + inv * inv - inv * inv * inv);
    Ok(Quadrature {
        value: head.value + body.value + tail,
        error: head.error + body.error + T::lit(4.0) * a * inv.powi(5),
        intervals: head.intervals + body.intervals,
    })
}
