//! Simulation and analysis of damping-induced self-recovery in the
//! stool–wheel system and its fluid-bearing variant.

// `!(x > 0.0)` is how parameter checks reject NaN; index loops mirror the
// banded-matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod detect;
pub mod energy;
pub mod error;
pub mod fluid;
pub mod integrate;
pub mod model;
pub mod rigid;
pub mod trace;

pub use error::{Error, Result};
pub use model::*;
pub use trace::{FluidSample, ModelKind, SimulationTrace, TraceMeta, TraceRecord};
