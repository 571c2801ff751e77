//! Simulation of strict, relaxed and singular controlled SDEs, their adjoint
//! processes, and mechanical checks of first-order optimality conditions.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod controls;
pub mod error;
pub mod linalg;
pub mod model;
pub mod pmp;
pub mod scalar;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ProblemF64 = model::ProblemSpec<f64>;
pub type ProblemF32 = model::ProblemSpec<f32>;
pub type MeasureF64 = controls::Measure<f64>;
pub type StrictControlF64 = controls::StrictControl<f64>;
pub type RelaxedControlF64 = controls::RelaxedControl<f64>;
pub type SingularControlF64 = controls::SingularControl<f64>;
pub type TrajectoryF64 = sde::TrajectoryEnsemble<f64>;
pub type AdjointF64 = adjoint::AdjointPair<f64>;
pub type EstimateF64 = stats::Estimate<f64>;
