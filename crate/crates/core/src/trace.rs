//! Time-ordered simulation output shared by detectors, auditors and writers.

use crate::model::{AnnulusFluid, DampingLaw, InertiaParams, RampProfile, RigidState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rigid,
    Fluid,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Rigid => "rigid",
            ModelKind::Fluid => "fluid",
        }
    }
}

/// Fluid quantities attached to a record of a fluid run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FluidSample {
    /// Kinetic energy of the fluid per unit depth (J).
    pub kinetic: f64,
    /// Viscous dissipation rate per unit depth (W).
    pub dissipation_rate: f64,
    /// Torque of the fluid on the inner wall (N·m per unit depth).
    pub inner_torque: f64,
    /// Velocity samples on the radial grid, when field output is enabled.
    pub velocity: Option<Vec<f64>>,
}

/// One output sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub state: RigidState,
    /// Motor torque `u`.
    pub torque: f64,
    /// Commanded wheel acceleration `τ`.
    pub tau: f64,
    pub desired_angle: f64,
    /// Kinetic energy of wheel and stool.
    pub kinetic_energy: f64,
    /// Cumulative input energy `∫ u θ̇_w dt`.
    pub input_energy: f64,
    /// Cumulative energy lost to the damping law `∫ k φ̇_s² dt`.
    pub lost_energy: f64,
    pub fluid: Option<FluidSample>,
}

/// Run parameters and integrator diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub model: ModelKind,
    pub inertias: InertiaParams,
    pub profile: RampProfile,
    pub law: Option<DampingLaw>,
    pub fluid: Option<AnnulusFluid>,
    pub radii: Option<Vec<f64>>,
    pub end_time: f64,
    pub integrator: String,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Accumulated local-error estimate of the stool angle.
    pub stool_angle_error: f64,
    /// Worst `|θ̈_w − τ|` seen by the feedback-linearization self-check.
    pub wheel_check_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

impl SimulationTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.state.time).collect()
    }

    pub fn stool_angles(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.state.stool_angle).collect()
    }

    pub fn stool_rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.state.stool_rate).collect()
    }

    pub fn wheel_rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.state.wheel_rate).collect()
    }

    /// Tracking error `θ^d − θ_w` at each sample.
    pub fn wheel_errors(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.desired_angle - r.state.wheel_angle)
            .collect()
    }
}
