//! Time integrators: an explicit Runge–Kutta pair for the rigid model and a
//! linearly-implicit one-step method for the stiff semi-discrete fluid model.

pub mod banded;
mod dopri;
mod trbdf2;

pub use banded::{BandLu, BandMatrix};
pub use dopri::dopri5;
pub use trbdf2::{trbdf2, LinearSystem, StiffTolerances};

/// Error control for the explicit integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

/// Work counters and the accumulated local-error estimate of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub factorizations: usize,
    /// Sum of the absolute local-error estimates of accepted steps, per component.
    pub error_estimate: Vec<f64>,
    /// Size of the last accepted step.
    pub last_step: f64,
}

impl IntegrationStats {
    /// Largest accumulated error estimate over the selected components.
    pub fn max_error(&self, components: impl IntoIterator<Item = usize>) -> f64 {
        components
            .into_iter()
            .filter_map(|i| self.error_estimate.get(i).copied())
            .fold(0.0, f64::max)
    }
}
