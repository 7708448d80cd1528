//! Shared domain types for the stool–wheel system: inertias, the annular
//! fluid, the damping-law family, the ramp reference trajectory and the
//! damping-induced momentum.

use std::f64::consts::{PI, TAU};

use crate::error::{config, domain, Result};

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        config(format!("{name} must be finite and strictly positive, got {value}"))
    }
}

fn non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        config(format!("{name} must be finite and non-negative, got {value}"))
    }
}

/// Moments of inertia of the wheel and of the stool (kg·m², per unit depth
/// in the fluid model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaParams {
    wheel: f64,
    stool: f64,
}

impl InertiaParams {
    pub fn new(wheel_inertia: f64, stool_inertia: f64) -> Result<Self> {
        positive("wheel_inertia", wheel_inertia)?;
        positive("stool_inertia", stool_inertia)?;
        Ok(Self {
            wheel: wheel_inertia,
            stool: stool_inertia,
        })
    }

    pub fn wheel(&self) -> f64 {
        self.wheel
    }

    pub fn stool(&self) -> f64 {
        self.stool
    }

    /// `I_w + I_s`.
    pub fn total(&self) -> f64 {
        self.wheel + self.stool
    }

    /// Inertia matrix in the coordinates (θ_w, φ_s).
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.wheel, self.wheel], [self.wheel, self.total()]]
    }
}

/// Incompressible fluid filling the annulus `inner_radius ≤ r ≤ outer_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusFluid {
    density: f64,
    kinematic_viscosity: f64,
    inner_radius: f64,
    outer_radius: f64,
}

impl AnnulusFluid {
    pub fn new(
        density: f64,
        kinematic_viscosity: f64,
        inner_radius: f64,
        outer_radius: f64,
    ) -> Result<Self> {
        positive("density", density)?;
        positive("kinematic_viscosity", kinematic_viscosity)?;
        positive("inner_radius", inner_radius)?;
        positive("outer_radius", outer_radius)?;
        if inner_radius >= outer_radius {
            return config(format!(
                "inner_radius must be < outer_radius (R_i < R_o), got R_i = {inner_radius}, R_o = {outer_radius}"
            ));
        }
        Ok(Self {
            density,
            kinematic_viscosity,
            inner_radius,
            outer_radius,
        })
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn kinematic_viscosity(&self) -> f64 {
        self.kinematic_viscosity
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn gap(&self) -> f64 {
        self.outer_radius - self.inner_radius
    }

    /// `2πρν`, the prefactor shared by every wall-torque expression.
    pub fn torque_prefactor(&self) -> f64 {
        TAU * self.density * self.kinematic_viscosity
    }

    pub fn with_radii(&self, inner_radius: f64, outer_radius: f64) -> Result<Self> {
        Self::new(
            self.density,
            self.kinematic_viscosity,
            inner_radius,
            outer_radius,
        )
    }

    pub fn with_viscosity(&self, kinematic_viscosity: f64) -> Result<Self> {
        Self::new(
            self.density,
            kinematic_viscosity,
            self.inner_radius,
            self.outer_radius,
        )
    }
}

/// Piecewise-linear damping table over the stool angle.
///
/// Outside the sampled range the end values are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingTable {
    angles: Vec<f64>,
    values: Vec<f64>,
}

impl DampingTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return config("tabulated damping law needs at least one (angle, coefficient) point");
        }
        let (angles, values): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        for pair in angles.windows(2) {
            if !(pair[1] > pair[0]) {
                return config("tabulated damping angles must be strictly increasing");
            }
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return config("tabulated damping angles must be finite");
        }
        for &v in &values {
            non_negative("tabulated damping coefficient", v)?;
        }
        Ok(Self { angles, values })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.angles.iter().copied().zip(self.values.iter().copied())
    }

    fn value(&self, phi: f64) -> f64 {
        let n = self.angles.len();
        if phi <= self.angles[0] {
            return self.values[0];
        }
        if phi >= self.angles[n - 1] {
            return self.values[n - 1];
        }
        let i = self.angles.partition_point(|&a| a <= phi) - 1;
        let (a0, a1) = (self.angles[i], self.angles[i + 1]);
        let w = (phi - a0) / (a1 - a0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Integral of the clamped interpolant over `[lo, hi]`. The trapezoid
    /// rule on each linear piece is exact.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let mut knots = vec![lo];
        knots.extend(self.angles.iter().copied().filter(|&a| a > lo && a < hi));
        knots.push(hi);
        knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1])))
            .sum()
    }
}

/// Damping coefficient `k(φ_s)` acting on the stool rate.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingLaw {
    /// `k / 2π`.
    Constant { scale: f64 },
    /// `k (1 + cos φ) / 2π`.
    RaisedCosine { scale: f64 },
    /// `2k cos²φ / π`.
    CosineSquared { scale: f64 },
    /// Linear interpolation of a sampled table, clamped at both ends.
    Tabulated(DampingTable),
}

impl DampingLaw {
    /// No damping at all.
    pub fn none() -> Self {
        DampingLaw::Constant { scale: 0.0 }
    }

    /// A constant coefficient of exactly `coefficient` (scale `2π·c`).
    pub fn raw_constant(coefficient: f64) -> Result<Self> {
        non_negative("damping coefficient", coefficient)?;
        Ok(DampingLaw::Constant {
            scale: TAU * coefficient,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DampingLaw::Constant { scale }
            | DampingLaw::RaisedCosine { scale }
            | DampingLaw::CosineSquared { scale } => non_negative("damping_scale", *scale),
            DampingLaw::Tabulated(_) => Ok(()),
        }
    }

    /// Short identifier used in configuration files.
    pub fn name(&self) -> &'static str {
        match self {
            DampingLaw::Constant { .. } => "constant",
            DampingLaw::RaisedCosine { .. } => "raised_cosine",
            DampingLaw::CosineSquared { .. } => "cosine_squared",
            DampingLaw::Tabulated(_) => "tabulated",
        }
    }

    /// `Some(c)` when the coefficient does not depend on the angle.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            DampingLaw::Constant { scale } => Some(scale / TAU),
            DampingLaw::Tabulated(t) if t.values.iter().all(|&v| v == t.values[0]) => {
                Some(t.values[0])
            }
            _ => None,
        }
    }
}

/// `k(φ)` for the given law.
pub fn damping_coefficient(law: &DampingLaw, angle: f64) -> f64 {
    match law {
        DampingLaw::Constant { scale } => scale / TAU,
        DampingLaw::RaisedCosine { scale } => scale * (1.0 + angle.cos()) / TAU,
        DampingLaw::CosineSquared { scale } => {
            let c = angle.cos();
            2.0 * scale * c * c / PI
        }
        DampingLaw::Tabulated(table) => table.value(angle),
    }
}

/// `∫₀^φ k(s) ds`.
pub fn damping_potential(law: &DampingLaw, angle: f64) -> f64 {
    match law {
        DampingLaw::Constant { scale } => scale * angle / TAU,
        DampingLaw::RaisedCosine { scale } => scale * (angle + angle.sin()) / TAU,
        DampingLaw::CosineSquared { scale } => scale * (angle + 0.5 * (2.0 * angle).sin()) / PI,
        DampingLaw::Tabulated(table) => {
            if angle >= 0.0 {
                table.integral(0.0, angle)
            } else {
                -table.integral(angle, 0.0)
            }
        }
    }
}

/// Which branch of the ramp reference is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampPhase {
    Spin,
    Hold,
}

/// Desired wheel trajectory: constant rate until `stop_time`, then held.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProfile {
    steady_rate: f64,
    stop_time: f64,
}

impl RampProfile {
    pub fn new(steady_rate: f64, stop_time: f64) -> Result<Self> {
        if !steady_rate.is_finite() {
            return config("steady_rate must be finite");
        }
        positive("stop_time", stop_time)?;
        Ok(Self {
            steady_rate,
            stop_time,
        })
    }

    pub fn steady_rate(&self) -> f64 {
        self.steady_rate
    }

    pub fn stop_time(&self) -> f64 {
        self.stop_time
    }

    pub fn phase(&self, time: f64) -> RampPhase {
        if time < self.stop_time {
            RampPhase::Spin
        } else {
            RampPhase::Hold
        }
    }

    /// `(θ^d, θ̇^d)` on a given branch; lets integrators evaluate one-sided
    /// limits exactly at `stop_time`.
    pub fn desired(&self, phase: RampPhase, time: f64) -> (f64, f64) {
        match phase {
            RampPhase::Spin => (self.steady_rate * time, self.steady_rate),
            RampPhase::Hold => (self.steady_rate * self.stop_time, 0.0),
        }
    }
}

/// `θ̇_steady · min(t, t_stop)`.
pub fn ramp_position(profile: &RampProfile, time: f64) -> Result<f64> {
    if !(time >= 0.0) {
        return domain(format!("ramp evaluated at negative time {time}"));
    }
    Ok(profile.desired(profile.phase(time), time).0)
}

/// `θ̇_steady` before `t_stop`, zero from `t_stop` on.
pub fn ramp_rate(profile: &RampProfile, time: f64) -> Result<f64> {
    if !(time >= 0.0) {
        return domain(format!("ramp evaluated at negative time {time}"));
    }
    Ok(profile.desired(profile.phase(time), time).1)
}

/// Proportional (`c₀`) and derivative (`c₁`) gains of the tracking law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PDGains {
    proportional: f64,
    derivative: f64,
}

impl PDGains {
    pub fn new(proportional: f64, derivative: f64) -> Result<Self> {
        non_negative("proportional gain", proportional)?;
        non_negative("derivative gain", derivative)?;
        if proportional == 0.0 && derivative == 0.0 {
            return config("PD gains must not both be zero (use PDGains::disabled to switch control off)");
        }
        Ok(Self {
            proportional,
            derivative,
        })
    }

    /// Zero gains: the motor only cancels the coupling torque.
    pub fn disabled() -> Self {
        Self {
            proportional: 0.0,
            derivative: 0.0,
        }
    }

    pub fn proportional(&self) -> f64 {
        self.proportional
    }

    pub fn derivative(&self) -> f64 {
        self.derivative
    }

    pub fn is_disabled(&self) -> bool {
        self.proportional == 0.0 && self.derivative == 0.0
    }
}

/// Angles and rates of the rigid bodies at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidState {
    pub time: f64,
    /// Wheel angle relative to the stool.
    pub wheel_angle: f64,
    pub wheel_rate: f64,
    /// Stool angle in the ground frame.
    pub stool_angle: f64,
    pub stool_rate: f64,
}

impl RigidState {
    pub fn rest() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.wheel_angle,
            self.wheel_rate,
            self.stool_angle,
            self.stool_rate,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Geometry of the lubricated bearing used in the oscillation-energy bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingGeometry {
    inner_radius: f64,
    thickness: f64,
    height: f64,
}

impl BearingGeometry {
    pub fn new(inner_radius: f64, thickness: f64, height: f64) -> Result<Self> {
        positive("bearing inner_radius", inner_radius)?;
        positive("bearing thickness", thickness)?;
        positive("bearing height", height)?;
        Ok(Self {
            inner_radius,
            thickness,
            height,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Fluid volume of the bearing annulus.
    pub fn fluid_volume(&self) -> f64 {
        let outer = self.inner_radius + self.thickness;
        PI * (outer * outer - self.inner_radius * self.inner_radius) * self.height
    }
}

/// `(I_w+I_s)φ̇_s + I_w θ̇_w + ∫₀^{φ_s} k`, conserved along trajectories
/// of the rigid model started from rest.
pub fn damping_induced_momentum(
    state: &RigidState,
    inertias: &InertiaParams,
    law: &DampingLaw,
) -> f64 {
    inertias.total() * state.stool_rate
        + inertias.wheel() * state.wheel_rate
        + damping_potential(law, state.stool_angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn builtin(scale: f64) -> [DampingLaw; 3] {
        [
            DampingLaw::Constant { scale },
            DampingLaw::RaisedCosine { scale },
            DampingLaw::CosineSquared { scale },
        ]
    }

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
        h * (0.5 * f(a) + inner + 0.5 * f(b))
    }

    #[test]
    fn coefficient_examples() {
        let one = DampingLaw::Constant { scale: 1.0 };
        assert_relative_eq!(damping_coefficient(&one, 7.3), 0.159_154_943_091_895_34);
        let rc = DampingLaw::RaisedCosine { scale: 1.0 };
        assert!(damping_coefficient(&rc, PI).abs() < 1e-16);
        let cs = DampingLaw::CosineSquared { scale: 1.0 };
        assert!(damping_coefficient(&cs, PI / 2.0).abs() < 1e-16);
    }

    #[test]
    fn raw_constant_is_the_coefficient() {
        let law = DampingLaw::raw_constant(1.0).unwrap();
        assert_relative_eq!(damping_coefficient(&law, 0.3), 1.0, epsilon = 1e-15);
        assert_eq!(law.constant_value(), Some(1.0));
        assert!(DampingLaw::raw_constant(-1.0).is_err());
    }

    #[test]
    fn potential_examples_match_quadrature() {
        for law in builtin(1.0) {
            assert_eq!(damping_potential(&law, 0.0), 0.0);
        }
        let c = DampingLaw::Constant { scale: 1.0 };
        let rc = DampingLaw::RaisedCosine { scale: 1.0 };
        assert_relative_eq!(damping_potential(&c, TAU), 1.0, epsilon = 1e-15);
        assert_relative_eq!(damping_potential(&rc, TAU), 1.0, epsilon = 1e-15);
        for law in builtin(1.3) {
            let q = trapezoid(|s| damping_coefficient(&law, s), 0.0, 2.1, 20_000);
            assert_relative_eq!(damping_potential(&law, 2.1), q, max_relative = 1e-8);
            let q = trapezoid(|s| damping_coefficient(&law, s), 0.0, -4.0, 20_000);
            assert_relative_eq!(damping_potential(&law, -4.0), q, max_relative = 1e-8);
        }
    }

    #[test]
    fn empty_table_is_a_configuration_error() {
        assert!(matches!(
            DampingTable::new(vec![]),
            Err(crate::Error::Config(_))
        ));
        assert!(DampingTable::new(vec![(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(DampingTable::new(vec![(0.0, -0.5)]).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let t = DampingTable::new(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 3.0)]).unwrap();
        let law = DampingLaw::Tabulated(t);
        assert_relative_eq!(damping_coefficient(&law, 0.5), 2.0);
        assert_relative_eq!(damping_coefficient(&law, -5.0), 1.0);
        assert_relative_eq!(damping_coefficient(&law, 9.0), 3.0);
        // 0..1 gives 2, 1..2 gives 3, 2..3 clamped gives 3.
        assert_relative_eq!(damping_potential(&law, 3.0), 8.0, epsilon = 1e-14);
        assert_relative_eq!(damping_potential(&law, -1.0), -1.0, epsilon = 1e-14);
        assert_relative_eq!(damping_potential(&law, 0.5), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn ramp_examples() {
        let p = RampProfile::new(2.0, 5.0).unwrap();
        assert_eq!(ramp_position(&p, 0.0).unwrap(), 0.0);
        assert_eq!(ramp_rate(&p, 0.0).unwrap(), 2.0);
        assert_eq!(ramp_position(&p, 3.0).unwrap(), 6.0);
        assert_eq!(ramp_rate(&p, 3.0).unwrap(), 2.0);
        assert_eq!(ramp_position(&p, 9.0).unwrap(), 10.0);
        assert_eq!(ramp_rate(&p, 9.0).unwrap(), 0.0);
        assert!(matches!(
            ramp_position(&p, -1.0),
            Err(crate::Error::Domain(_))
        ));
        assert!(ramp_rate(&p, -1e-9).is_err());
        assert!(RampProfile::new(2.0, 0.0).is_err());
    }

    #[test]
    fn ramp_rate_integrates_to_position() {
        let p = RampProfile::new(-1.5, 2.25).unwrap();
        for &t in &[0.5, 2.25, 4.0] {
            let q = trapezoid(|s| ramp_rate(&p, s).unwrap(), 0.0, t, 40_000);
            assert!((q - ramp_position(&p, t).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn momentum_examples() {
        let inertias = InertiaParams::new(0.0625, 0.625).unwrap();
        let law = DampingLaw::Constant { scale: 1.0 };
        assert_eq!(
            damping_induced_momentum(&RigidState::rest(), &inertias, &law),
            0.0
        );
        let state = RigidState {
            wheel_rate: 2.0,
            stool_rate: -2.0 * inertias.wheel() / inertias.total(),
            stool_angle: 3.7,
            ..RigidState::rest()
        };
        let j = damping_induced_momentum(&state, &inertias, &DampingLaw::none());
        assert!(j.abs() < 1e-16);
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(InertiaParams::new(0.0, 1.0).is_err());
        assert!(InertiaParams::new(1.0, f64::NAN).is_err());
        let err = AnnulusFluid::new(1000.0, 1e-6, 0.2, 0.1).unwrap_err();
        assert!(err.to_string().contains("R_i < R_o"));
        assert!(AnnulusFluid::new(-1.0, 1e-6, 0.1, 0.2).is_err());
        assert!(PDGains::new(0.0, 0.0).is_err());
        assert!(PDGains::new(-1.0, 1.0).is_err());
        assert!(PDGains::disabled().is_disabled());
        assert!(BearingGeometry::new(0.05, 0.0, 0.01).is_err());
        assert_eq!(
            InertiaParams::new(1.0, 2.0).unwrap().matrix(),
            [[1.0, 1.0], [1.0, 3.0]]
        );
    }

    proptest! {
        #[test]
        fn builtin_coefficients_are_non_negative(phi in -100.0f64..100.0, k in 0.0f64..10.0) {
            for law in builtin(k) {
                prop_assert!(damping_coefficient(&law, phi) >= 0.0);
            }
        }

        #[test]
        fn potential_is_non_decreasing(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for law in builtin(1.0) {
                prop_assert!(damping_potential(&law, hi) >= damping_potential(&law, lo) - 1e-12);
            }
        }

        #[test]
        fn potential_derivative_is_the_coefficient(phi in -20.0f64..20.0) {
            let h = 1e-4;
            for law in builtin(2.0) {
                let fd = (damping_potential(&law, phi + h) - damping_potential(&law, phi - h)) / (2.0 * h);
                let k = damping_coefficient(&law, phi);
                prop_assert!((fd - k).abs() <= 1e-6 * k.abs().max(1.0), "{} {} {}", law.name(), fd, k);
            }
        }
    }
}
