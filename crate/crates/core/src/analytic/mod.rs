//! Closed-form and spectral results for the annular bearing: the decay
//! spectrum of the fluid between two fixed walls, modal transients, and the
//! damping constants that reduce the fluid to a single viscous coefficient.

mod bessel;
mod quadrature;

use std::f64::consts::PI;

pub use bessel::{bessel_j0, bessel_j1, bessel_y0, bessel_y1, wronskian_self_test};

use crate::error::{domain, Error, Result};
use crate::model::{AnnulusFluid, InertiaParams};
use bessel::order_one;
use quadrature::integrate;

/// One decaying mode of the annular diffusion operator with both walls fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    /// 1-based mode number.
    pub index: usize,
    /// `κ_n`, with `λ_n = ν κ_n²` (1/m).
    pub wavenumber: f64,
    /// `λ_n` (1/s).
    pub decay_rate: f64,
    /// Weight of `Y1` relative to `J1` in the mode shape.
    pub mixing_ratio: f64,
    /// Projection of the stool-acceleration forcing onto the mode.
    pub acceleration_coefficient: f64,
    /// Projection of the stool-rate forcing onto the mode.
    pub rate_coefficient: f64,
}

impl EigenMode {
    /// Mode shape `J1(κr) + ratio · Y1(κr)`.
    pub fn shape(&self, r: f64) -> f64 {
        let (j, y) = order_one(self.wavenumber * r);
        j + self.mixing_ratio * y
    }
}

/// `J1(κR_i)Y1(κR_o) − J1(κR_o)Y1(κR_i)`.
fn cross_product(kappa: f64, inner: f64, outer: f64) -> f64 {
    let (ji, yi) = order_one(kappa * inner);
    let (jo, yo) = order_one(kappa * outer);
    ji * yo - jo * yi
}

/// Bisects a bracketed sign change to 1e-13 relative width.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo * fhi > 0.0 {
        return Err(Error::RootFinding {
            lo,
            hi,
            reason: "no sign change".into(),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * mid {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The first `count` modes, ordered by decay rate.
pub fn eigenvalues(fluid: &AnnulusFluid, count: usize) -> Result<Vec<EigenMode>> {
    if count == 0 {
        return domain("eigenvalue count must be at least 1");
    }
    wronskian_self_test()?;
    let inner = fluid.inner_radius();
    let outer = fluid.outer_radius();
    let gap = fluid.gap();
    let f = |k: f64| cross_product(k, inner, outer);
    let step = 0.45 * PI / gap;
    let mut lo = 0.5 * PI / gap;
    let mut f_lo = f(lo);
    let mut roots = Vec::with_capacity(count);
    // Roots are asymptotically π/gap apart; this bound is generous.
    let scan_limit = (count as f64 + 2.0) * PI / gap * 1.5 + lo;
    while roots.len() < count {
        let hi = lo + step;
        if hi > scan_limit {
            return Err(Error::RootFinding {
                lo: 0.5 * PI / gap,
                hi,
                reason: format!("found only {} of {count} roots", roots.len()),
            });
        }
        let f_hi = f(hi);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo * f_hi < 0.0 {
            roots.push(bisect(f, lo, hi)?);
        }
        lo = hi;
        f_lo = f_hi;
    }

    let nu = fluid.kinematic_viscosity();
    roots
        .into_iter()
        .enumerate()
        .map(|(k, kappa)| {
            let (ji, yi) = order_one(kappa * inner);
            let mut mode = EigenMode {
                index: k + 1,
                wavenumber: kappa,
                decay_rate: nu * kappa * kappa,
                mixing_ratio: -ji / yi,
                acceleration_coefficient: 0.0,
                rate_coefficient: 0.0,
            };
            let panels = 4 * (k + 2);
            let norm = integrate(|r| mode.shape(r).powi(2) * r, inner, outer, panels);
            let accel = integrate(|r| (outer - r) * mode.shape(r) * r, inner, outer, panels);
            let rate = integrate(|r| mode.shape(r) / r, inner, outer, panels);
            mode.acceleration_coefficient = -inner / gap * accel / norm;
            mode.rate_coefficient = -nu * inner * outer / gap * rate / norm;
            Ok(mode)
        })
        .collect()
}

/// Modal amplitude `T_n(t) = ∫₀ᵗ e^{−λ(t−s)} (m φ̈_s + l φ̇_s) ds` for a sampled
/// stool-rate history `(time, rate)` starting at time 0.
///
/// The acceleration term is integrated by parts so the history never has to
/// be differentiated; the remaining convolution is exact for the piecewise
/// linear interpolant of the samples. Beyond the last sample the rate is held.
pub fn transient_mode_amplitude(mode: &EigenMode, history: &[(f64, f64)], time: f64) -> Result<f64> {
    if history.is_empty() {
        return domain("empty stool-rate history");
    }
    if !(time >= history[0].0) {
        return domain(format!("time {time} precedes the history start {}", history[0].0));
    }
    let lambda = mode.decay_rate;
    let m = mode.acceleration_coefficient;
    let l = mode.rate_coefficient;
    let rate_at = |t: f64| -> f64 {
        let k = history.partition_point(|(s, _)| *s <= t);
        if k == 0 {
            history[0].1
        } else if k == history.len() {
            history[k - 1].1
        } else {
            let (t0, a) = history[k - 1];
            let (t1, b) = history[k];
            a + (b - a) * (t - t0) / (t1 - t0)
        }
    };

    let mut conv = 0.0;
    let mut prev = history[0];
    let push = |conv: f64, (t0, a): (f64, f64), (t1, b): (f64, f64)| -> f64 {
        let h = t1 - t0;
        if h <= 0.0 {
            return conv;
        }
        let x = lambda * h;
        let decay = (-x).exp();
        let e1 = if x > 0.0 { -(-x).exp_m1() / lambda } else { h };
        let e2 = if x < 1e-3 {
            h * h * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0)
        } else {
            (x + (-x).exp_m1()) / (lambda * lambda)
        };
        decay * conv + a * e1 + (b - a) / h * e2
    };
    for &sample in &history[1..] {
        if sample.0 > time {
            break;
        }
        conv = push(conv, prev, sample);
        prev = sample;
    }
    if time > prev.0 {
        conv = push(conv, prev, (time, rate_at(time)));
    }
    let start = history[0];
    let elapsed = time - start.0;
    Ok(m * (rate_at(time) - (-lambda * elapsed).exp() * start.1) + (l - m * lambda) * conv)
}

/// Linear velocity profile between the moving inner wall and the fixed
/// outer wall.
pub fn linear_limit_profile(fluid: &AnnulusFluid, stool_rate: f64, r: f64) -> Result<f64> {
    let (inner, outer) = (fluid.inner_radius(), fluid.outer_radius());
    if !(r >= inner && r <= outer) {
        return domain(format!("radius {r} lies outside [{inner}, {outer}]"));
    }
    Ok(inner * stool_rate * (outer - r) / fluid.gap())
}

/// `k_eff = 2πρν R_o R_i² / (R_o − R_i)`.
pub fn effective_damping(fluid: &AnnulusFluid) -> f64 {
    let ri = fluid.inner_radius();
    fluid.torque_prefactor() * fluid.outer_radius() * ri * ri / fluid.gap()
}

/// `k_exact = 4πρν R_i² R_o² / (R_o² − R_i²)`, the damping of steady Couette flow.
pub fn exact_annular_damping(fluid: &AnnulusFluid) -> f64 {
    let ri2 = fluid.inner_radius().powi(2);
    let ro2 = fluid.outer_radius().powi(2);
    2.0 * fluid.torque_prefactor() * ri2 * ro2 / (ro2 - ri2)
}

/// Stool angle at which the spin phase settles, predicted by `k_eff`.
pub fn boundedness_angle(inertias: &InertiaParams, wheel_rate: f64, fluid: &AnnulusFluid) -> f64 {
    -inertias.wheel() * wheel_rate / effective_damping(fluid)
}

/// Stool angle at which the spin phase settles for the full fluid model.
///
/// Integrating the balance of angular momentum of stool, wheel and fluid
/// from rest to the steady state shows that the fluid contributes exactly
/// the steady Couette damping, so the angle is `−I_w v_w / k_exact`.
pub fn exact_boundedness_angle(inertias: &InertiaParams, wheel_rate: f64, fluid: &AnnulusFluid) -> f64 {
    -inertias.wheel() * wheel_rate / exact_annular_damping(fluid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn annulus(inner: f64, outer: f64) -> AnnulusFluid {
        AnnulusFluid::new(1014.7, 1.17e-6, inner, outer).unwrap()
    }

    // Roots of the cross product from an independent library.
    const ROOTS: [(f64, f64, [f64; 4]); 4] = [
        (1.0, 2.0, [3.196578380810635, 6.312349510373264, 9.444464925482272, 12.581202810104106]),
        (0.135, 0.1351, [31415.927190375485, 62831.8533990315, 94247.77982585812, 125663.70630722806]),
        (0.135, 0.27, [23.678358376375073, 46.758144521283434, 69.95899944801683, 93.19409488966005]),
        (0.135, 0.14, [628.350101939447, 1256.652849723868, 1884.9661180098644, 2513.282017350642]),
    ];

    #[test]
    fn roots_match_reference() {
        for (inner, outer, expected) in ROOTS {
            let modes = eigenvalues(&annulus(inner, outer), 4).unwrap();
            for (mode, want) in modes.iter().zip(expected) {
                assert_relative_eq!(mode.wavenumber, want, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn spectrum_is_positive_and_increasing() {
        for ratio in [1.001, 1.1, 2.0] {
            let modes = eigenvalues(&annulus(0.135, 0.135 * ratio), 6).unwrap();
            assert!(modes[0].decay_rate > 0.0);
            assert!(modes.windows(2).all(|w| w[0].decay_rate < w[1].decay_rate));
            for (k, m) in modes.iter().enumerate() {
                assert_eq!(m.index, k + 1);
                assert_relative_eq!(m.decay_rate, 1.17e-6 * m.wavenumber.powi(2), max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn narrow_gap_spacing() {
        let fluid = annulus(0.135, 0.135 * 1.0007);
        for m in eigenvalues(&fluid, 5).unwrap() {
            let scaled = m.wavenumber * fluid.gap() / PI;
            assert!((scaled / m.index as f64 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn root_residual_is_small() {
        for (inner, outer, _) in ROOTS {
            for m in eigenvalues(&annulus(inner, outer), 4).unwrap() {
                let k = m.wavenumber;
                let dk = 1e-6 * k;
                let slope = (cross_product(k + dk, inner, outer) - cross_product(k - dk, inner, outer)) / (2.0 * dk);
                let residual = cross_product(k, inner, outer);
                assert!((residual / (slope * k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn modes_vanish_at_walls_and_are_orthogonal() {
        for (inner, outer) in [(1.0, 2.0), (0.135, 0.14), (0.135, 0.1351)] {
            let modes = eigenvalues(&annulus(inner, outer), 4).unwrap();
            for m in &modes {
                let peak = (0..=400)
                    .map(|i| m.shape(inner + (outer - inner) * i as f64 / 400.0).abs())
                    .fold(0.0, f64::max);
                assert!(m.shape(inner).abs() <= 1e-8 * peak);
                assert!(m.shape(outer).abs() <= 1e-8 * peak);
            }
            for a in &modes {
                for b in &modes {
                    if a.index != b.index {
                        let cross = integrate(|r| a.shape(r) * b.shape(r) * r, inner, outer, 32);
                        let na = integrate(|r| a.shape(r).powi(2) * r, inner, outer, 32);
                        let nb = integrate(|r| b.shape(r).powi(2) * r, inner, outer, 32);
                        assert!(cross.abs() < 1e-9 * (na * nb).sqrt());
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_exponential_forcing() {
        let mode = eigenvalues(&annulus(1.0, 2.0), 1).unwrap()[0];
        // Rescale the time axis so λ is of order one.
        let mode = EigenMode {
            decay_rate: 0.8,
            ..mode
        };
        let alpha = 0.3;
        let dt = 1e-3;
        let history: Vec<(f64, f64)> = (0..=10_000).map(|i| (i as f64 * dt, (-alpha * i as f64 * dt).exp())).collect();
        let (m, l, lam) = (mode.acceleration_coefficient, mode.rate_coefficient, mode.decay_rate);
        for t in [0.5, 2.0, 7.3] {
            let exact = (l - m * alpha) / (lam - alpha) * ((-alpha * t).exp() - (-lam * t).exp());
            let got = transient_mode_amplitude(&mode, &history, t).unwrap();
            assert!(((got - exact) / exact).abs() < 1e-6, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn zero_history_and_decay() {
        let mode = eigenvalues(&annulus(0.135, 0.14), 1).unwrap()[0];
        let zero: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, 0.0)).collect();
        assert_eq!(transient_mode_amplitude(&mode, &zero, 50.0).unwrap(), 0.0);
        assert!(transient_mode_amplitude(&mode, &[], 1.0).is_err());

        let lam = mode.decay_rate;
        let off = 10.0;
        let end = off + 30.0 / lam;
        let n = 20_000;
        let history: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let t = end * i as f64 / n as f64;
                (t, if t < off { (0.7 * t).sin() } else { 0.0 })
            })
            .collect();
        assert!(transient_mode_amplitude(&mode, &history, end).unwrap().abs() < 1e-8);
    }

    #[test]
    fn linear_profile_examples() {
        let fluid = annulus(0.135, 0.14);
        assert_eq!(linear_limit_profile(&fluid, 2.0, 0.14).unwrap(), 0.0);
        assert_relative_eq!(linear_limit_profile(&fluid, 2.0, 0.135).unwrap(), 0.27, max_relative = 1e-14);
        assert_relative_eq!(linear_limit_profile(&fluid, 2.0, 0.1375).unwrap(), 0.135, max_relative = 1e-12);
        assert!(linear_limit_profile(&fluid, 2.0, 0.2).is_err());
    }

    #[test]
    fn damping_constants() {
        let fluid = annulus(0.135, 0.1351);
        assert_relative_eq!(effective_damping(&fluid), 0.18367, max_relative = 1e-4);
        let doubled = fluid.with_viscosity(2.34e-6).unwrap();
        assert_relative_eq!(effective_damping(&doubled), 2.0 * effective_damping(&fluid), max_relative = 1e-14);
        let tiny = annulus(0.135, 0.135 * (1.0 + 1e-9));
        assert_relative_eq!(
            effective_damping(&tiny) * tiny.gap(),
            2.0 * PI * 1014.7 * 1.17e-6 * 0.135f64.powi(3),
            max_relative = 1e-8
        );
        let narrow = annulus(1.0, 1.0001);
        assert!((exact_annular_damping(&narrow) / effective_damping(&narrow) - 1.0).abs() < 1e-4);
        let wide = annulus(1.0, 2.0);
        assert_relative_eq!(exact_annular_damping(&wide) / effective_damping(&wide), 4.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn boundedness_angles() {
        let i = InertiaParams::new(6e-3, 1.96).unwrap();
        let v = 60.0 * PI;
        assert_relative_eq!(boundedness_angle(&i, v, &annulus(0.135, 0.14)).abs(), 297.1, max_relative = 5e-4);
        assert_relative_eq!(boundedness_angle(&i, v, &annulus(0.27, 0.28)).abs(), 74.28, max_relative = 5e-4);
        assert_eq!(boundedness_angle(&i, 0.0, &annulus(0.27, 0.28)), 0.0);
        assert!(boundedness_angle(&i, v, &annulus(0.27, 0.28)) < 0.0);
        for (inner, outer) in [(0.135, 0.1351), (0.135, 0.2), (0.135, 0.27)] {
            let f = annulus(inner, outer);
            let predicted = boundedness_angle(&i, v, &f);
            let exact = exact_boundedness_angle(&i, v, &f);
            assert!(((predicted - exact) / exact - (outer - inner) / (outer + inner)).abs() < 1e-12);
        }
    }
}
