use thiserror::Error;

/// Errors raised by the solver library.
///
/// Values are carried as `f64` so the error type does not depend on the
/// scalar type of the computation that produced it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: requires {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("{function}({argument}) is undefined: admissible interval is [{lower}, {upper}]")]
    Domain {
        function: &'static str,
        argument: f64,
        lower: f64,
        upper: f64,
    },

    #[error("bisection bracket [{lo}, {hi}] does not enclose a sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("launch radius {r0} too large for tolerance {tolerance}; use r0 <= {suggested}")]
    LaunchRadius {
        r0: f64,
        tolerance: f64,
        suggested: f64,
    },

    #[error("exponential overflow in right-hand side at t = {t}")]
    Overflow { t: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSize { t: f64, h: f64 },

    #[error("target beta1 = {target} outside the open solvability interval ({lower}, {upper})")]
    TargetOutOfRange { target: f64, lower: f64, upper: f64 },

    #[error(
        "no straddle of target {target} in alpha bracket [{alpha_lo}, {alpha_hi}]: observed beta1 in [{observed_lo}, {observed_hi}]"
    )]
    NoStraddle {
        target: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        observed_lo: f64,
        observed_hi: f64,
    },

    #[error("{0}")]
    Refused(String),

    #[error("trajectory not converged at t = {t_end}")]
    NotConverged { t_end: f64 },

    #[error("empty or unordered alpha grid")]
    BadGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
