//! Radial shooting solver for the competitive singular Liouville system
//!
//! ```text
//! -Δv1 = |x|^{2N} e^{v1} - τ e^{v2}
//! -Δv2 = e^{v2} - τ |x|^{2N} e^{v1}      in R^2
//! ```
//!
//! with closed-form solvability algebra, conserved-quantity diagnostics and
//! reference solutions. Every numeric routine is generic over [`Real`]
//! (`f32` or `f64`); the `*64` aliases below are the types most callers want.

pub mod algebra;
pub mod error;
pub mod ode;
pub mod oracle;
pub mod roots;
pub mod scalar;
pub mod shooting;
pub mod verify;

pub use algebra::{FluxPair, Sign, SolvabilityReport, SystemParams, ThresholdSet};
pub use error::{Error, Result};
pub use ode::{IntegrateConfig, RadialState, Trajectory};
pub use scalar::Real;
pub use shooting::{LimitReport, SweepResult, TargetSolution};
pub use verify::{DiagnosticsProfile, GeneralSystem};

pub type SystemParams64 = SystemParams<f64>;
pub type SystemParams32 = SystemParams<f32>;
pub type FluxPair64 = FluxPair<f64>;
pub type ThresholdSet64 = ThresholdSet<f64>;
pub type RadialState64 = RadialState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type IntegrateConfig64 = IntegrateConfig<f64>;
pub type GeneralSystem64 = GeneralSystem<f64>;
pub type SweepResult64 = SweepResult<f64>;
pub type LimitReport64 = LimitReport<f64>;
