//! Energy bookkeeping for both models: input, kinetic and dissipated energy,
//! and the fluid speed needed to store the stool's kinetic energy.

use std::f64::consts::PI;

use crate::fluid::{trapezoid, FluidState, RadialGrid};
use crate::model::{damping_coefficient, AnnulusFluid, BearingGeometry, DampingLaw, InertiaParams, RigidState};
use crate::trace::{ModelKind, SimulationTrace};

/// `½ I_w (θ̇_w + φ̇_s)² + ½ I_s φ̇_s²`.
pub fn kinetic_energy_rigid(state: &RigidState, inertias: &InertiaParams) -> f64 {
    let wheel = state.wheel_rate + state.stool_rate;
    0.5 * inertias.wheel() * wheel * wheel
        + 0.5 * inertias.stool() * state.stool_rate * state.stool_rate
}

/// Cumulative trapezoid integral of `values` over `times`.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for k in 0..values.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Cumulative `∫ u θ̇_w dt` over the trace samples.
pub fn input_energy(trace: &SimulationTrace) -> Vec<f64> {
    let power: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.torque * r.state.wheel_rate)
        .collect();
    cumulative_trapezoid(&trace.times(), &power)
}

/// Cumulative `∫ k(φ_s) φ̇_s² dt` over the trace samples.
pub fn lost_energy(trace: &SimulationTrace, law: &DampingLaw) -> Vec<f64> {
    let power: Vec<f64> = trace
        .records
        .iter()
        .map(|r| damping_coefficient(law, r.state.stool_angle) * r.state.stool_rate.powi(2))
        .collect();
    cumulative_trapezoid(&trace.times(), &power)
}

/// `πρ ∫ v² r dr` per unit depth.
pub fn fluid_kinetic_energy(state: &FluidState, fluid: &AnnulusFluid, grid: &RadialGrid) -> f64 {
    let integrand: Vec<f64> = state
        .velocity
        .iter()
        .zip(grid.radii())
        .map(|(v, r)| v * v * r)
        .collect();
    PI * fluid.density() * trapezoid(&integrand, grid.spacing())
}

/// `2πρν ∫ (r ∂_r(v/r))² r dr` per unit depth, the viscous dissipation of an
/// azimuthal flow.
pub fn fluid_dissipation_rate(state: &FluidState, fluid: &AnnulusFluid, grid: &RadialGrid) -> f64 {
    let r = grid.radii();
    let h = grid.spacing();
    let omega: Vec<f64> = state.velocity.iter().zip(r).map(|(v, r)| v / r).collect();
    let n = omega.len();
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let slope = if i == 0 {
                (-3.0 * omega[0] + 4.0 * omega[1] - omega[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * omega[n - 1] - 4.0 * omega[n - 2] + omega[n - 3]) / (2.0 * h)
            } else {
                (omega[i + 1] - omega[i - 1]) / (2.0 * h)
            };
            let strain = r[i] * slope;
            strain * strain * r[i]
        })
        .collect();
    2.0 * PI * fluid.density() * fluid.kinematic_viscosity() * trapezoid(&integrand, h)
}

/// Speed a fluid ring of the bearing's volume must have, on average, to hold
/// the kinetic energy of the whole system turning at `stool_rate`.
pub fn min_average_fluid_speed(
    geometry: &BearingGeometry,
    inertias: &InertiaParams,
    stool_rate: f64,
    density: f64,
) -> f64 {
    stool_rate.abs() * (inertias.total() / (density * geometry.fluid_volume())).sqrt()
}

/// Per-sample energy ledger recomputed from a trace by trapezoid quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub kinetic_rigid: Vec<f64>,
    pub input_energy_cum: Vec<f64>,
    pub lost_energy_cum: Vec<f64>,
    /// Fluid runs only; zero otherwise.
    pub fluid_kinetic: Vec<f64>,
    /// Fluid runs only; zero otherwise.
    pub fluid_dissipation_cum: Vec<f64>,
    /// `I.E. − K.E. − L.E.` with the fluid terms included.
    pub balance_residual: Vec<f64>,
}

impl EnergyLedger {
    pub fn from_trace(trace: &SimulationTrace) -> Self {
        let times = trace.times();
        let n = times.len();
        let kinetic_rigid: Vec<f64> = trace.records.iter().map(|r| r.kinetic_energy).collect();
        let input_energy_cum = input_energy(trace);
        let lost_energy_cum = match (&trace.meta.model, &trace.meta.law) {
            (ModelKind::Rigid, Some(law)) => lost_energy(trace, law),
            _ => vec![0.0; n],
        };
        let fluid_kinetic: Vec<f64> = trace
            .records
            .iter()
            .map(|r| r.fluid.as_ref().map_or(0.0, |f| f.kinetic))
            .collect();
        let dissipation: Vec<f64> = trace
            .records
            .iter()
            .map(|r| r.fluid.as_ref().map_or(0.0, |f| f.dissipation_rate))
            .collect();
        let fluid_dissipation_cum = cumulative_trapezoid(&times, &dissipation);
        let balance_residual = (0..n)
            .map(|k| {
                input_energy_cum[k]
                    - kinetic_rigid[k]
                    - lost_energy_cum[k]
                    - fluid_kinetic[k]
                    - fluid_dissipation_cum[k]
            })
            .collect();
        Self {
            times,
            kinetic_rigid,
            input_energy_cum,
            lost_energy_cum,
            fluid_kinetic,
            fluid_dissipation_cum,
            balance_residual,
        }
    }

    /// Largest `|residual|` and the time it occurs.
    pub fn worst_residual(&self) -> (f64, f64) {
        self.balance_residual
            .iter()
            .zip(&self.times)
            .fold((0.0, 0.0), |(m, tm), (r, t)| {
                if r.abs() > m {
                    (r.abs(), *t)
                } else {
                    (m, tm)
                }
            })
    }

    pub fn peak_input(&self) -> f64 {
        self.input_energy_cum.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Worst-case violation of the energy balance over the trace, with its time.
pub fn energy_balance_residual(trace: &SimulationTrace) -> (f64, f64) {
    EnergyLedger::from_trace(trace).worst_residual()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{couette_coefficients, steady_couette_profile, build_grid};
    use approx::assert_relative_eq;

    #[test]
    fn rigid_kinetic_energy_examples() {
        let i = InertiaParams::new(0.0625, 0.625).unwrap();
        assert_eq!(kinetic_energy_rigid(&RigidState::rest(), &i), 0.0);
        let spin = RigidState {
            wheel_rate: 2.0,
            ..RigidState::rest()
        };
        assert_relative_eq!(kinetic_energy_rigid(&spin, &i), 0.125, max_relative = 1e-15);
        let counter = RigidState {
            wheel_rate: 0.4,
            stool_rate: -0.4,
            ..RigidState::rest()
        };
        assert_relative_eq!(kinetic_energy_rigid(&counter, &i), 0.5 * 0.625 * 0.16, max_relative = 1e-15);
    }

    #[test]
    fn fluid_energy_of_rigid_rotation() {
        let fluid = AnnulusFluid::new(1000.0, 1e-6, 1.0, 2.0).unwrap();
        let omega = 0.5;
        let exact = PI / 4.0 * 1000.0 * omega * omega * (16.0 - 1.0);
        let mut errors = Vec::new();
        for n in [17, 33, 65] {
            let grid = build_grid(&fluid, n).unwrap();
            let state = FluidState {
                rigid: RigidState::rest(),
                velocity: grid.radii().iter().map(|r| omega * r).collect(),
            };
            errors.push((fluid_kinetic_energy(&state, &fluid, &grid) - exact).abs() / exact);
            assert!(fluid_dissipation_rate(&state, &fluid, &grid).abs() < 1e-12);
        }
        assert!(errors[2] < 1e-3);
        for w in errors.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{errors:?}");
        }
        let grid = build_grid(&fluid, 17).unwrap();
        let rest = FluidState::rest(&grid);
        assert_eq!(fluid_kinetic_energy(&rest, &fluid, &grid), 0.0);
        assert_eq!(fluid_dissipation_rate(&rest, &fluid, &grid), 0.0);
    }

    #[test]
    fn couette_dissipation_matches_closed_form() {
        let fluid = AnnulusFluid::new(1014.7, 1.17e-6, 0.135, 0.2).unwrap();
        let omega = 1.3;
        let (_, b) = couette_coefficients(&fluid, omega);
        let exact = 4.0 * PI * 1014.7 * 1.17e-6 * b * b * (0.135f64.powi(-2) - 0.2f64.powi(-2));
        let grid = build_grid(&fluid, 401).unwrap();
        let state = FluidState {
            rigid: RigidState {
                stool_rate: omega,
                ..RigidState::rest()
            },
            velocity: steady_couette_profile(&fluid, omega, &grid),
        };
        assert_relative_eq!(fluid_dissipation_rate(&state, &fluid, &grid), exact, max_relative = 1e-4);
    }

    #[test]
    fn bearing_speed_examples() {
        let g = BearingGeometry::new(0.05, 0.01, 0.01).unwrap();
        let i = InertiaParams::new(6e-3, 0.994).unwrap();
        let rpm = 2.0 * PI / 60.0;
        let v = min_average_fluid_speed(&g, &i, rpm, 1000.0);
        let volume = PI * (0.06f64.powi(2) - 0.05f64.powi(2)) * 0.01;
        assert_relative_eq!(v, rpm * (1.0 / (1000.0 * volume)).sqrt(), max_relative = 1e-12);
        assert!((v - 0.563).abs() < 5e-4, "{v}");
        assert_eq!(min_average_fluid_speed(&g, &i, 0.0, 1000.0), 0.0);
        let heavy = InertiaParams::new(0.024, 3.976).unwrap();
        assert_relative_eq!(min_average_fluid_speed(&g, &heavy, rpm, 1000.0), 2.0 * v, max_relative = 1e-12);
    }

    #[test]
    fn cumulative_trapezoid_is_exact_for_lines() {
        let t = [0.0, 0.5, 2.0];
        let c = cumulative_trapezoid(&t, &[1.0, 2.0, 5.0]);
        assert_eq!(c, vec![0.0, 0.75, 6.0]);
    }
}
