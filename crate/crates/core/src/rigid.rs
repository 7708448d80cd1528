//! The stool–wheel system with a damped stool bearing, driven by a
//! feedback-linearized PD tracking law.

use crate::energy::kinetic_energy_rigid;
use crate::error::{config, Result};
use crate::integrate::{dopri5, IntegrationStats, Tolerances};
use crate::model::{
    damping_coefficient, DampingLaw, InertiaParams, PDGains, RampPhase, RampProfile, RigidState,
};
use crate::trace::{ModelKind, SimulationTrace, TraceMeta, TraceRecord};

pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_ABSOLUTE_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_SAMPLE_RATE: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RigidRunConfig {
    pub inertias: InertiaParams,
    pub law: DampingLaw,
    pub gains: PDGains,
    pub profile: RampProfile,
    pub end_time: f64,
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_step: f64,
    /// Output samples per second of simulated time.
    pub sample_rate: f64,
}

impl RigidRunConfig {
    pub fn new(
        inertias: InertiaParams,
        law: DampingLaw,
        gains: PDGains,
        profile: RampProfile,
        end_time: f64,
    ) -> Result<Self> {
        let cfg = Self {
            inertias,
            law,
            gains,
            profile,
            end_time,
            relative_tolerance: DEFAULT_RELATIVE_TOLERANCE,
            absolute_tolerance: DEFAULT_ABSOLUTE_TOLERANCE,
            max_step: 0.05,
            sample_rate: DEFAULT_SAMPLE_RATE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tolerance(mut self, relative: f64) -> Result<Self> {
        self.relative_tolerance = relative;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if !(self.end_time > self.profile.stop_time()) || !self.end_time.is_finite() {
            return config(format!(
                "end_time ({}) must exceed stop_time ({})",
                self.end_time,
                self.profile.stop_time()
            ));
        }
        if !(self.relative_tolerance > 0.0 && self.relative_tolerance <= 1e-2) {
            return config(format!(
                "tolerance {} must lie in (0, 1e-2]",
                self.relative_tolerance
            ));
        }
        if !(self.absolute_tolerance > 0.0) {
            return config("absolute tolerance must be positive");
        }
        if !(self.max_step > 0.0) {
            return config("max_step must be positive");
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return config("sample_rate must be positive");
        }
        Ok(())
    }
}

/// Commanded wheel acceleration `τ` of the PD law with zero feedforward.
fn commanded_acceleration(
    state: &RigidState,
    gains: &PDGains,
    profile: &RampProfile,
    phase: RampPhase,
) -> (f64, f64) {
    let (angle, rate) = profile.desired(phase, state.time);
    let tau = gains.derivative() * (rate - state.wheel_rate)
        + gains.proportional() * (angle - state.wheel_angle);
    (tau, angle)
}

fn torque_for(inertias: &InertiaParams, tau: f64, coupling: f64) -> f64 {
    inertias.wheel() / inertias.total() * (inertias.stool() * tau + coupling)
}

/// Motor torque that makes the wheel's relative acceleration equal `τ`.
pub fn control_torque_rigid(
    state: &RigidState,
    gains: &PDGains,
    profile: &RampProfile,
    inertias: &InertiaParams,
    law: &DampingLaw,
) -> f64 {
    let phase = profile.phase(state.time);
    let (tau, _) = commanded_acceleration(state, gains, profile, phase);
    let damping = damping_coefficient(law, state.stool_angle) * state.stool_rate;
    torque_for(inertias, tau, -damping)
}

/// `(θ̈_w, φ̈_s)` from the equations of motion for a given motor torque.
pub fn rigid_derivatives(
    state: &RigidState,
    torque: f64,
    inertias: &InertiaParams,
    law: &DampingLaw,
) -> (f64, f64) {
    let damping = damping_coefficient(law, state.stool_angle) * state.stool_rate;
    let stool_acc = (-damping - torque) / inertias.stool();
    let wheel_acc = torque / inertias.wheel() - stool_acc;
    (wheel_acc, stool_acc)
}

// Layout of the integrated state.
const WHEEL_ANGLE: usize = 0;
const WHEEL_RATE: usize = 1;
const STOOL_ANGLE: usize = 2;
const STOOL_RATE: usize = 3;
const INPUT_ENERGY: usize = 4;
const LOST_ENERGY: usize = 5;

fn unpack(time: f64, y: &[f64]) -> RigidState {
    RigidState {
        time,
        wheel_angle: y[WHEEL_ANGLE],
        wheel_rate: y[WHEEL_RATE],
        stool_angle: y[STOOL_ANGLE],
        stool_rate: y[STOOL_RATE],
    }
}

/// Output times: a uniform grid plus the ramp stop and the end time.
pub(crate) fn sample_times(rate: f64, end: f64, extra: &[f64]) -> Vec<f64> {
    let count = (end * rate).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|i| i as f64 / rate).collect();
    times.extend(extra.iter().copied().filter(|t| *t <= end));
    times.push(end);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    times
}

/// Integrates the closed loop from rest. The ramp stop is an integration
/// breakpoint and appears twice in the output: once as the left limit
/// (spin branch) and once as the right limit (hold branch).
pub fn simulate_rigid(cfg: &RigidRunConfig) -> Result<SimulationTrace> {
    cfg.validate()?;
    let inertias = cfg.inertias;
    let law = &cfg.law;
    let gains = cfg.gains;
    let profile = cfg.profile;
    let stop = profile.stop_time();
    let times = sample_times(cfg.sample_rate, cfg.end_time, &[stop]);
    let split = times.partition_point(|t| *t <= stop);
    let tol = Tolerances {
        rel: cfg.relative_tolerance,
        abs: cfg.absolute_tolerance,
        max_step: cfg.max_step,
        max_steps: 50_000_000,
    };

    let mut records = Vec::with_capacity(times.len() + 1);
    let mut stats = IntegrationStats::default();
    let mut y = vec![0.0; 6];
    let mut t0 = 0.0;

    for (phase, t1, samples) in [
        (RampPhase::Spin, stop, &times[..split]),
        (RampPhase::Hold, cfg.end_time, &times[split - 1..]),
    ] {
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let state = unpack(t, y);
            let (tau, _) = commanded_acceleration(&state, &gains, &profile, phase);
            let damping = damping_coefficient(law, state.stool_angle);
            let torque = torque_for(&inertias, tau, -damping * state.stool_rate);
            let (wheel_acc, stool_acc) = rigid_derivatives(&state, torque, &inertias, law);
            dy[WHEEL_ANGLE] = state.wheel_rate;
            dy[WHEEL_RATE] = wheel_acc;
            dy[STOOL_ANGLE] = state.stool_rate;
            dy[STOOL_RATE] = stool_acc;
            dy[INPUT_ENERGY] = torque * state.wheel_rate;
            dy[LOST_ENERGY] = damping * state.stool_rate * state.stool_rate;
        };
        let observe = |t: f64, y: &[f64]| {
            let state = unpack(t, y);
            let (tau, desired_angle) = commanded_acceleration(&state, &gains, &profile, phase);
            let damping = damping_coefficient(law, state.stool_angle);
            records.push(TraceRecord {
                state,
                torque: torque_for(&inertias, tau, -damping * state.stool_rate),
                tau,
                desired_angle,
                kinetic_energy: kinetic_energy_rigid(&state, &inertias),
                input_energy: y[INPUT_ENERGY],
                lost_energy: y[LOST_ENERGY],
                fluid: None,
            });
        };
        y = dopri5(rhs, t0, &y, t1, &tol, samples, observe, &mut stats)?;
        t0 = t1;
    }

    Ok(SimulationTrace {
        meta: TraceMeta {
            model: ModelKind::Rigid,
            inertias,
            profile,
            law: Some(law.clone()),
            fluid: None,
            radii: None,
            end_time: cfg.end_time,
            integrator: format!(
                "dopri5 rtol={:e} atol={:e} max_step={}",
                cfg.relative_tolerance, cfg.absolute_tolerance, cfg.max_step
            ),
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            stool_angle_error: stats.max_error([STOOL_ANGLE]),
            wheel_check_residual: None,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inertias() -> InertiaParams {
        InertiaParams::new(0.0625, 0.625).unwrap()
    }

    #[test]
    fn torque_examples() {
        let profile = RampProfile::new(2.0, 5.0).unwrap();
        let gains = PDGains::new(1.0, 3.0).unwrap();
        let u = control_torque_rigid(
            &RigidState::rest(),
            &gains,
            &profile,
            &inertias(),
            &DampingLaw::none(),
        );
        assert_relative_eq!(u, 0.0625 / 0.6875 * 0.625 * 6.0, max_relative = 1e-14);
        assert_relative_eq!(u, 0.340909090909, max_relative = 1e-10);

        let on_track = RigidState {
            time: 3.0,
            wheel_angle: 6.0,
            wheel_rate: 2.0,
            stool_angle: -0.4,
            stool_rate: 0.0,
        };
        let law = DampingLaw::raw_constant(1.0).unwrap();
        assert_eq!(
            control_torque_rigid(&on_track, &gains, &profile, &inertias(), &law),
            0.0
        );
        let moving = RigidState {
            wheel_rate: 0.3,
            stool_rate: -0.2,
            ..on_track
        };
        assert_eq!(
            control_torque_rigid(&moving, &PDGains::disabled(), &profile, &inertias(), &DampingLaw::none()),
            0.0
        );
    }

    #[test]
    fn derivative_examples() {
        let (w, s) = rigid_derivatives(&RigidState::rest(), 0.0, &inertias(), &DampingLaw::none());
        assert_eq!((w, s), (0.0, 0.0));
        let (w, s) = rigid_derivatives(&RigidState::rest(), 1.0, &inertias(), &DampingLaw::none());
        assert_relative_eq!(s, -1.6, max_relative = 1e-14);
        assert_relative_eq!(w, 17.6, max_relative = 1e-14);
        let moving = RigidState {
            stool_rate: 1.0,
            ..RigidState::rest()
        };
        let law = DampingLaw::raw_constant(1.0).unwrap();
        let (w, s) = rigid_derivatives(&moving, 0.0, &inertias(), &law);
        assert_relative_eq!(s, -1.6, max_relative = 1e-14);
        assert_relative_eq!(w, 1.6, max_relative = 1e-14);
    }

    #[test]
    fn feedback_linearization_gives_commanded_acceleration() {
        let profile = RampProfile::new(2.0, 5.0).unwrap();
        let gains = PDGains::new(4.0, 7.0).unwrap();
        let law = DampingLaw::RaisedCosine { scale: 3.0 };
        let state = RigidState {
            time: 1.3,
            wheel_angle: 1.1,
            wheel_rate: 2.5,
            stool_angle: -0.3,
            stool_rate: -0.7,
        };
        let u = control_torque_rigid(&state, &gains, &profile, &inertias(), &law);
        let (w, _) = rigid_derivatives(&state, u, &inertias(), &law);
        let tau = 7.0 * (2.0 - 2.5) + 4.0 * (2.6 - 1.1);
        assert_relative_eq!(w, tau, max_relative = 1e-13);
    }

    #[test]
    fn undamped_run_keeps_angular_momentum() {
        let cfg = RigidRunConfig::new(
            inertias(),
            DampingLaw::none(),
            PDGains::new(100.0, 100.0).unwrap(),
            RampProfile::new(2.0, 5.0).unwrap(),
            8.0,
        )
        .unwrap();
        let trace = simulate_rigid(&cfg).unwrap();
        for r in &trace.records {
            let p = 0.6875 * r.state.stool_rate + 0.0625 * r.state.wheel_rate;
            assert!(p.abs() < 1e-9, "momentum {p} at {}", r.state.time);
        }
        let expected = -0.0625 / 0.6875 * 2.0 * 5.0;
        assert_relative_eq!(trace.last().unwrap().state.stool_angle, expected, max_relative = 1e-4);
    }

    #[test]
    fn stop_time_is_recorded_from_both_sides() {
        let cfg = RigidRunConfig::new(
            inertias(),
            DampingLaw::raw_constant(1.0).unwrap(),
            PDGains::new(1.0, 3.0).unwrap(),
            RampProfile::new(2.0, 2.0).unwrap(),
            3.0,
        )
        .unwrap();
        let trace = simulate_rigid(&cfg).unwrap();
        let at_stop: Vec<_> = trace.records.iter().filter(|r| r.state.time == 2.0).collect();
        assert_eq!(at_stop.len(), 2);
        assert_eq!(at_stop[0].state, at_stop[1].state);
        assert!(at_stop[0].tau != at_stop[1].tau);
        assert_eq!(trace.records.first().unwrap().state, RigidState::rest());
        assert_eq!(trace.last().unwrap().state.time, 3.0);
        let times = trace.times();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = RigidRunConfig::new(
            inertias(),
            DampingLaw::none(),
            PDGains::new(1.0, 1.0).unwrap(),
            RampProfile::new(2.0, 5.0).unwrap(),
            6.0,
        )
        .unwrap();
        assert!(base.clone().with_tolerance(0.0).is_err());
        assert!(base.clone().with_tolerance(0.1).is_err());
        let mut short = base;
        short.end_time = 5.0;
        assert!(simulate_rigid(&short).is_err());
    }
}
