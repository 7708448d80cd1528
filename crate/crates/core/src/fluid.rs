//! The stool–wheel system with a fluid-filled annular bearing, discretized
//! in radius by the method of lines.

use std::f64::consts::PI;

use crate::energy::{fluid_dissipation_rate, fluid_kinetic_energy, kinetic_energy_rigid};
use crate::error::{config, Error, Result};
use crate::integrate::{trbdf2, BandMatrix, IntegrationStats, LinearSystem, StiffTolerances};
use crate::model::{AnnulusFluid, InertiaParams, PDGains, RampPhase, RampProfile, RigidState};
use crate::rigid::sample_times;
use crate::trace::{FluidSample, ModelKind, SimulationTrace, TraceMeta, TraceRecord};

/// Smallest grid accepted by [`build_grid`] and the fluid simulator.
pub const MIN_GRID_POINTS: usize = 16;

/// Uniform radial grid from the inner to the outer wall, both included.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radii: Vec<f64>,
    spacing: f64,
}

impl RadialGrid {
    /// Any uniform grid with at least three points.
    pub fn uniform(inner: f64, outer: f64, points: usize) -> Result<Self> {
        if points < 3 {
            return config(format!("a radial grid needs at least 3 points, got {points}"));
        }
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return config(format!("grid needs 0 < R_i < R_o, got {inner} and {outer}"));
        }
        let spacing = (outer - inner) / (points - 1) as f64;
        let mut radii: Vec<f64> = (0..points).map(|i| inner + i as f64 * spacing).collect();
        radii[points - 1] = outer;
        Ok(Self { radii, spacing })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn inner(&self) -> f64 {
        self.radii[0]
    }

    pub fn outer(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }
}

/// Simulation grid for an annulus; at least [`MIN_GRID_POINTS`] points.
pub fn build_grid(fluid: &AnnulusFluid, points: usize) -> Result<RadialGrid> {
    if points < MIN_GRID_POINTS {
        return config(format!(
            "grid_points = {points} violates N >= {MIN_GRID_POINTS}"
        ));
    }
    RadialGrid::uniform(fluid.inner_radius(), fluid.outer_radius(), points)
}

/// Rigid state plus the fluid velocity on every grid point, walls included.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rigid: RigidState,
    pub velocity: Vec<f64>,
}

impl FluidState {
    /// Builds a state from interior velocities, imposing the no-slip values
    /// at both walls.
    pub fn with_interior(rigid: RigidState, grid: &RadialGrid, interior: &[f64]) -> Result<Self> {
        if interior.len() + 2 != grid.len() {
            return config(format!(
                "{} interior values for a grid of {} points",
                interior.len(),
                grid.len()
            ));
        }
        let mut velocity = Vec::with_capacity(grid.len());
        velocity.push(grid.inner() * rigid.stool_rate);
        velocity.extend_from_slice(interior);
        velocity.push(0.0);
        Ok(Self { rigid, velocity })
    }

    /// Fluid and stool at rest.
    pub fn rest(grid: &RadialGrid) -> Self {
        Self {
            rigid: RigidState::rest(),
            velocity: vec![0.0; grid.len()],
        }
    }
}

/// One-sided second-order `∂v/∂r` at the inner wall.
fn inner_gradient(v0: f64, v1: f64, v2: f64, spacing: f64) -> f64 {
    (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * spacing)
}

/// Torque of the fluid on the inner wall, `2πρν R_i (R_i ∂_r v − v)` at `R_i`.
pub fn fluid_torque(state: &FluidState, fluid: &AnnulusFluid, grid: &RadialGrid) -> f64 {
    let v = &state.velocity;
    let r = grid.inner();
    let slope = inner_gradient(v[0], v[1], v[2], grid.spacing());
    fluid.torque_prefactor() * r * (r * slope - v[0])
}

/// Torque the outer wall exerts on the fluid, `2πρν R_o² ∂_r v` at `R_o`.
pub fn outer_wall_torque(state: &FluidState, fluid: &AnnulusFluid, grid: &RadialGrid) -> f64 {
    let v = &state.velocity;
    let n = v.len();
    let slope = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * grid.spacing());
    let r = grid.outer();
    fluid.torque_prefactor() * r * (r * slope - v[n - 1])
}

/// Angular momentum of the fluid per unit depth, `2πρ ∫ v r² dr`.
pub fn fluid_angular_momentum(state: &FluidState, fluid: &AnnulusFluid, grid: &RadialGrid) -> f64 {
    let r = grid.radii();
    let integrand: Vec<f64> = state
        .velocity
        .iter()
        .zip(r)
        .map(|(v, r)| v * r * r)
        .collect();
    2.0 * PI * fluid.density() * trapezoid(&integrand, grid.spacing())
}

pub(crate) fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => spacing * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Central-difference coefficients of `ν(v_rr + v_r/r − v/r²)` at interior
/// point `i`, acting on `(v_{i−1}, v_i, v_{i+1})`.
fn stencil(fluid: &AnnulusFluid, grid: &RadialGrid, i: usize) -> [f64; 3] {
    let nu = fluid.kinematic_viscosity();
    let h = grid.spacing();
    let r = grid.radii()[i];
    let second = 1.0 / (h * h);
    let first = 1.0 / (2.0 * h * r);
    [
        nu * (second - first),
        nu * (-2.0 * second - 1.0 / (r * r)),
        nu * (second + first),
    ]
}

/// Time derivative of the interior velocity samples.
pub fn pde_rhs(state: &FluidState, fluid: &AnnulusFluid, grid: &RadialGrid) -> Vec<f64> {
    let v = &state.velocity;
    (1..grid.len() - 1)
        .map(|i| {
            let [a, b, c] = stencil(fluid, grid, i);
            a * v[i - 1] + b * v[i] + c * v[i + 1]
        })
        .collect()
}

/// Exact steady annular Couette flow `A r + B/r` with the inner wall
/// turning at `inner_rate` and the outer wall fixed.
pub fn steady_couette_profile(fluid: &AnnulusFluid, inner_rate: f64, grid: &RadialGrid) -> Vec<f64> {
    let (a, b) = couette_coefficients(fluid, inner_rate);
    grid.radii().iter().map(|r| a * r + b / r).collect()
}

/// `(A, B)` of the steady Couette profile.
pub fn couette_coefficients(fluid: &AnnulusFluid, inner_rate: f64) -> (f64, f64) {
    let ri2 = fluid.inner_radius().powi(2);
    let ro2 = fluid.outer_radius().powi(2);
    let b = inner_rate * ri2 * ro2 / (ro2 - ri2);
    (-b / ro2, b)
}

/// Steady state of the discretized operator with the same wall values.
pub fn discrete_steady_field(
    fluid: &AnnulusFluid,
    inner_rate: f64,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    let n = grid.len() - 2;
    let mut m = BandMatrix::zeros(n, 1, 1);
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        let [a, b, c] = stencil(fluid, grid, k + 1);
        if k > 0 {
            m.set(k, k - 1, a);
        } else {
            rhs[0] = -a * grid.inner() * inner_rate;
        }
        m.set(k, k, b);
        if k + 1 < n {
            m.set(k, k + 1, c);
        }
    }
    let lu = m
        .factor()
        .ok_or_else(|| Error::Domain("singular steady-state operator".into()))?;
    lu.solve(&mut rhs);
    let mut field = Vec::with_capacity(n + 2);
    field.push(grid.inner() * inner_rate);
    field.extend(rhs);
    field.push(0.0);
    Ok(field)
}

/// From `from` on, the stool turns at the constant `rate` regardless of the
/// torques acting on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoolHold {
    pub from: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidRunConfig {
    pub inertias: InertiaParams,
    pub fluid: AnnulusFluid,
    pub gains: PDGains,
    pub profile: RampProfile,
    pub grid_points: usize,
    pub end_time: f64,
    pub relative_tolerance: f64,
    /// Absolute tolerance on rates (rad/s); angles and velocities use
    /// scaled versions of it.
    pub absolute_tolerance: f64,
    pub output_interval: f64,
    /// Store the velocity field in every record.
    pub record_field: bool,
    /// Prescribe the stool motion from some time on.
    pub stool_hold: Option<StoolHold>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl FluidRunConfig {
    pub fn new(
        inertias: InertiaParams,
        fluid: AnnulusFluid,
        gains: PDGains,
        profile: RampProfile,
        grid_points: usize,
        end_time: f64,
    ) -> Result<Self> {
        let cfg = Self {
            inertias,
            fluid,
            gains,
            profile,
            grid_points,
            end_time,
            relative_tolerance: 1e-8,
            absolute_tolerance: 1e-10,
            output_interval: 0.01,
            record_field: false,
            stool_hold: None,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < MIN_GRID_POINTS {
            return config(format!(
                "grid_points = {} violates N >= {MIN_GRID_POINTS}",
                self.grid_points
            ));
        }
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
        if !(self.output_interval > 0.0) || !self.output_interval.is_finite() {
            return config("output_interval must be positive");
        }
        if let Some(hold) = self.stool_hold {
            if !(hold.from >= 0.0) || !hold.from.is_finite() {
                return config("hold_stool_at must be non-negative");
            }
            if !hold.rate.is_finite() {
                return config("hold_stool_rate must be finite");
            }
        }
        if !(self.max_step > 0.0) {
            return config("max_step must be positive");
        }
        Ok(())
    }
}

// Layout of the integrated state; interior velocities follow.
const WHEEL_ANGLE: usize = 0;
const WHEEL_RATE: usize = 1;
const STOOL_ANGLE: usize = 2;
const STOOL_RATE: usize = 3;
const FIRST_VELOCITY: usize = 4;

/// The semi-discrete closed loop over one segment of constant ramp branch.
struct ClosedLoop<'a> {
    cfg: &'a FluidRunConfig,
    grid: &'a RadialGrid,
    stencils: Vec<[f64; 3]>,
    phase: RampPhase,
    stool_held: bool,
}

impl ClosedLoop<'_> {
    fn interior(&self) -> usize {
        self.grid.len() - 2
    }

    /// Fluid torque on the inner wall from the packed state.
    fn torque(&self, x: &[f64]) -> f64 {
        let r = self.grid.inner();
        let v0 = r * x[STOOL_RATE];
        let v1 = x[FIRST_VELOCITY];
        let v2 = if self.interior() > 1 { x[FIRST_VELOCITY + 1] } else { 0.0 };
        let slope = inner_gradient(v0, v1, v2, self.grid.spacing());
        self.cfg.fluid.torque_prefactor() * r * (r * slope - v0)
    }

    /// Motor torque and the resulting accelerations for a given `τ` and fluid
    /// torque, from the full coupled equations.
    fn accelerations(&self, tau: f64, fluid_torque: f64) -> (f64, f64, f64) {
        let i = &self.cfg.inertias;
        let u = i.wheel() / i.total() * (i.stool() * tau + fluid_torque);
        let stool_acc = (fluid_torque - u) / i.stool();
        let wheel_acc = u / i.wheel() - stool_acc;
        (u, wheel_acc, stool_acc)
    }

    fn desired(&self, time: f64) -> (f64, f64) {
        self.cfg.profile.desired(self.phase, time)
    }

    fn tau(&self, time: f64, x: &[f64]) -> f64 {
        let (angle, rate) = self.desired(time);
        let g = &self.cfg.gains;
        g.derivative() * (rate - x[WHEEL_RATE]) + g.proportional() * (angle - x[WHEEL_ANGLE])
    }
}

impl LinearSystem for ClosedLoop<'_> {
    fn dim(&self) -> usize {
        FIRST_VELOCITY + self.interior()
    }

    fn lower(&self) -> usize {
        3
    }

    fn upper(&self) -> usize {
        2
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.cfg.gains;
        let tau = -g.derivative() * x[WHEEL_RATE] - g.proportional() * x[WHEEL_ANGLE];
        out[WHEEL_ANGLE] = x[WHEEL_RATE];
        if self.stool_held {
            out[WHEEL_RATE] = tau;
            out[STOOL_ANGLE] = x[STOOL_RATE];
            out[STOOL_RATE] = 0.0;
        } else {
            let (_, wheel_acc, stool_acc) = self.accelerations(tau, self.torque(x));
            out[WHEEL_RATE] = wheel_acc;
            out[STOOL_ANGLE] = x[STOOL_RATE];
            out[STOOL_RATE] = stool_acc;
        }
        let n = self.interior();
        let v0 = self.grid.inner() * x[STOOL_RATE];
        let v = &x[FIRST_VELOCITY..];
        for k in 0..n {
            let [a, b, c] = self.stencils[k];
            let left = if k == 0 { v0 } else { v[k - 1] };
            let right = if k + 1 < n { v[k + 1] } else { 0.0 };
            out[FIRST_VELOCITY + k] = a * left + b * v[k] + c * right;
        }
    }

    fn forcing(&self, time: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let (angle, rate) = self.desired(time);
        let g = &self.cfg.gains;
        let tau = g.derivative() * rate + g.proportional() * angle;
        if self.stool_held {
            out[WHEEL_RATE] = tau;
        } else {
            let (_, wheel_acc, stool_acc) = self.accelerations(tau, 0.0);
            out[WHEEL_RATE] = wheel_acc;
            out[STOOL_RATE] = stool_acc;
        }
    }
}

/// Integrates the closed loop from rest with a linearly-implicit TR-BDF2
/// scheme. Breakpoints (ramp stop, stool clamp) are recorded from both sides.
pub fn simulate_fluid(cfg: &FluidRunConfig) -> Result<SimulationTrace> {
    cfg.validate()?;
    let grid = build_grid(&cfg.fluid, cfg.grid_points)?;
    let stencils: Vec<[f64; 3]> = (1..grid.len() - 1)
        .map(|i| stencil(&cfg.fluid, &grid, i))
        .collect();
    let stop = cfg.profile.stop_time();
    let mut breaks = vec![stop];
    if let Some(hold) = cfg.stool_hold.filter(|h| h.from > 0.0 && h.from < cfg.end_time) {
        breaks.push(hold.from);
    }
    breaks.push(cfg.end_time);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let times = sample_times(1.0 / cfg.output_interval, cfg.end_time, &breaks);

    let n = FIRST_VELOCITY + grid.len() - 2;
    let rate_tol = cfg.absolute_tolerance;
    let mut abs = vec![rate_tol; n];
    abs[WHEEL_ANGLE] = rate_tol;
    abs[STOOL_ANGLE] = rate_tol;
    for a in &mut abs[FIRST_VELOCITY..] {
        *a = rate_tol * grid.inner();
    }
    let mut tol = StiffTolerances {
        rel: cfg.relative_tolerance,
        abs,
        initial_step: 1e-6,
        max_step: cfg.max_step,
        max_steps: cfg.max_steps,
    };

    let mut stats = IntegrationStats::default();
    let mut records: Vec<TraceRecord> = Vec::with_capacity(times.len() + breaks.len());
    let mut y = vec![0.0; n];
    let mut t0 = 0.0;
    let mut worst_check: f64 = 0.0;
    let mut input_energy = 0.0;
    let mut last_power: Option<(f64, f64)> = None;
    let mut first_sample = 0;

    for &t1 in &breaks {
        let phase = if t1 <= stop { RampPhase::Spin } else { RampPhase::Hold };
        let hold = cfg.stool_hold.filter(|h| t0 >= h.from);
        let stool_held = hold.is_some();
        if let Some(hold) = hold {
            y[STOOL_RATE] = hold.rate;
        }
        let system = ClosedLoop {
            cfg,
            grid: &grid,
            stencils: stencils.clone(),
            phase,
            stool_held,
        };
        let last_sample = times.partition_point(|t| *t <= t1);
        let samples = &times[first_sample..last_sample];
        let mut failure: Option<f64> = None;
        let observe = |t: f64, x: &[f64]| {
            if x.iter().any(|v| !v.is_finite()) {
                failure.get_or_insert(t);
                return;
            }
            let rigid = RigidState {
                time: t,
                wheel_angle: x[WHEEL_ANGLE],
                wheel_rate: x[WHEEL_RATE],
                stool_angle: x[STOOL_ANGLE],
                stool_rate: x[STOOL_RATE],
            };
            let state = FluidState::with_interior(rigid, &grid, &x[FIRST_VELOCITY..])
                .expect("interior length matches the grid");
            let torque = fluid_torque(&state, &cfg.fluid, &grid);
            let tau = system.tau(t, x);
            let (u, wheel_acc, _) = if stool_held {
                (cfg.inertias.wheel() * tau, tau, 0.0)
            } else {
                system.accelerations(tau, torque)
            };
            worst_check = worst_check.max((wheel_acc - tau).abs());
            let power = u * rigid.wheel_rate;
            if let Some((tp, pp)) = last_power {
                input_energy += 0.5 * (t - tp) * (power + pp);
            }
            last_power = Some((t, power));
            records.push(TraceRecord {
                state: rigid,
                torque: u,
                tau,
                desired_angle: system.desired(t).0,
                kinetic_energy: kinetic_energy_rigid(&rigid, &cfg.inertias),
                input_energy,
                lost_energy: 0.0,
                fluid: Some(FluidSample {
                    kinetic: fluid_kinetic_energy(&state, &cfg.fluid, &grid),
                    dissipation_rate: fluid_dissipation_rate(&state, &cfg.fluid, &grid),
                    inner_torque: torque,
                    velocity: cfg.record_field.then(|| state.velocity.clone()),
                }),
            });
        };
        y = trbdf2(&system, t0, &y, t1, &tol, samples, observe, &mut stats)?;
        if let Some(time) = failure {
            return Err(Error::Integration {
                time,
                reason: "non-finite fluid field".into(),
            });
        }
        if stats.last_step > 0.0 {
            tol.initial_step = stats.last_step.min(1e-3);
        }
        // The breakpoint itself is sampled again from the right.
        first_sample = last_sample.saturating_sub(1);
        t0 = t1;
    }

    Ok(SimulationTrace {
        meta: TraceMeta {
            model: ModelKind::Fluid,
            inertias: cfg.inertias,
            profile: cfg.profile,
            law: None,
            fluid: Some(cfg.fluid),
            radii: Some(grid.radii().to_vec()),
            end_time: cfg.end_time,
            integrator: format!(
                "trbdf2 (linearly implicit, step doubling) rtol={:e} atol={:e} N={}",
                cfg.relative_tolerance, cfg.absolute_tolerance, cfg.grid_points
            ),
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            stool_angle_error: stats.max_error([STOOL_ANGLE]),
            wheel_check_residual: Some(worst_check),
        },
        records,
    })
}
