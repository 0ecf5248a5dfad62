use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection on `[lo, hi]` until the bracket is narrower than `tol`.
///
/// Requires a sign change between the endpoints; an exact zero at either end
/// is returned immediately.
pub fn bisect<T, F>(mut f: F, lo: T, hi: T, tol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if !(fa * fb < T::zero()) {
        return Err(Error::Bracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        let m = half * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == T::zero() {
            return Ok(m);
        }
        if fa * fm < T::zero() {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(half * (a + b))
}
