//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], so the same code runs in `f32`
//! and `f64`. Tolerance defaults are derived from the type's epsilon where a
//! fixed double-precision constant would be meaningless for `f32`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(value, k * epsilon)`: a double-precision default that degrades
    /// gracefully for lower precision types.
    fn tol_floor(value: f64, eps_multiple: f64) -> Self {
        let v = Self::lit(value);
        let floor = Self::epsilon() * Self::lit(eps_multiple);
        if v > floor {
            v
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative closeness `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close<T: Real>(a: T, b: T, tol: T) -> bool {
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale
}
