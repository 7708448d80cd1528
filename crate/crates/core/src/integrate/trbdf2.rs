//! Linearly-implicit TR-BDF2 for `y' = A y + g(t)` with a banded, constant `A`.
//!
//! Step size is controlled by step doubling: one step of size `h` is compared
//! with two of size `h/2`, the difference divided by 3 being the local error
//! of the more accurate result, which is the one kept.

use crate::error::{Error, Result};

use super::banded::{BandLu, BandMatrix};
use super::IntegrationStats;

/// A linear system `y' = A y + g(t)` whose matrix has a known band structure.
pub trait LinearSystem {
    fn dim(&self) -> usize;
    /// Number of sub-diagonals of `A`.
    fn lower(&self) -> usize;
    /// Number of super-diagonals of `A`.
    fn upper(&self) -> usize;
    /// `out = A x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = g(t)`.
    fn forcing(&self, time: f64, out: &mut [f64]);

    /// Assembles `A` by probing `apply` with groups of structurally
    /// independent columns.
    fn matrix(&self) -> BandMatrix {
        let n = self.dim();
        let (kl, ku) = (self.lower(), self.upper());
        let stride = kl + ku + 1;
        let mut m = BandMatrix::zeros(n, kl, ku);
        let mut probe = vec![0.0; n];
        let mut out = vec![0.0; n];
        for group in 0..stride.min(n) {
            probe.iter_mut().for_each(|p| *p = 0.0);
            for j in (group..n).step_by(stride) {
                probe[j] = 1.0;
            }
            self.apply(&probe, &mut out);
            for j in (group..n).step_by(stride) {
                for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                    m.set(i, j, out[i]);
                }
            }
        }
        m
    }
}

/// Error control for the stiff integrator; `abs` holds one entry per component.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffTolerances {
    pub rel: f64,
    pub abs: Vec<f64>,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

struct Stepper<'a, S: LinearSystem> {
    sys: &'a S,
    a: BandMatrix,
    /// Factorizations for the full and the half step currently in use.
    cached: Vec<(f64, BandLu)>,
    g: Vec<f64>,
    rhs: Vec<f64>,
}

impl<S: LinearSystem> Stepper<'_, S> {
    fn factor(&mut self, h: f64, stats: &mut IntegrationStats) -> Result<usize> {
        if let Some(k) = self.cached.iter().position(|(hc, _)| *hc == h) {
            return Ok(k);
        }
        let d = 0.5 * GAMMA * h;
        let lu = self.a.identity_minus(d).factor().ok_or_else(|| Error::Integration {
            time: f64::NAN,
            reason: format!("singular iteration matrix for h = {h:e}"),
        })?;
        stats.factorizations += 1;
        if self.cached.len() == 2 {
            self.cached.remove(0);
        }
        self.cached.push((h, lu));
        Ok(self.cached.len() - 1)
    }

    /// One TR-BDF2 step from `(t, y)` with derivative `fy`, written to `out`.
    fn step(
        &mut self,
        t: f64,
        y: &[f64],
        fy: &[f64],
        h: f64,
        out: &mut [f64],
        stats: &mut IntegrationStats,
    ) -> Result<()> {
        let k = self.factor(h, stats)?;
        let lu = &self.cached[k].1;
        let n = y.len();
        let d = 0.5 * GAMMA * h;
        let t_mid = t + GAMMA * h;
        self.sys.forcing(t_mid, &mut self.g);
        for i in 0..n {
            self.rhs[i] = y[i] + d * fy[i] + d * self.g[i];
        }
        lu.solve(&mut self.rhs);
        let denom = GAMMA * (2.0 - GAMMA);
        let cg = 1.0 / denom;
        let cn = (1.0 - GAMMA).powi(2) / denom;
        self.sys.forcing(t + h, &mut self.g);
        for i in 0..n {
            out[i] = cg * self.rhs[i] - cn * y[i] + d * self.g[i];
        }
        lu.solve(out);
        stats.rhs_evals += 2;
        Ok(())
    }

    fn derivative(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        self.sys.apply(y, out);
        self.sys.forcing(t, &mut self.g);
        for (o, g) in out.iter_mut().zip(&self.g) {
            *o += g;
        }
    }
}

/// Integrates the linear system from `t0` to `t1`, reporting the state at
/// each sample time (ascending) through `observe`. Interior samples use
/// cubic Hermite interpolation. Returns the state at `t1`.
#[allow(clippy::too_many_arguments)]
pub fn trbdf2<S, O>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: &StiffTolerances,
    samples: &[f64],
    mut observe: O,
    stats: &mut IntegrationStats,
) -> Result<Vec<f64>>
where
    S: LinearSystem,
    O: FnMut(f64, &[f64]),
{
    let n = sys.dim();
    if y0.len() != n || tol.abs.len() != n {
        return Err(Error::Config(format!(
            "state has {} components, system {} and tolerances {}",
            y0.len(),
            n,
            tol.abs.len()
        )));
    }
    if stats.error_estimate.len() != n {
        stats.error_estimate = vec![0.0; n];
    }
    let mut y = y0.to_vec();
    let mut next_sample = 0;
    while next_sample < samples.len() && samples[next_sample] <= t0 {
        observe(samples[next_sample], &y);
        next_sample += 1;
    }
    if t1 <= t0 {
        return Ok(y);
    }

    let mut stepper = Stepper {
        sys,
        a: sys.matrix(),
        cached: Vec::with_capacity(2),
        g: vec![0.0; n],
        rhs: vec![0.0; n],
    };
    let mut fy = vec![0.0; n];
    let mut f_new = vec![0.0; n];
    let mut full = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut two_halves = vec![0.0; n];
    let mut f_half = vec![0.0; n];
    let mut out = vec![0.0; n];

    let mut t = t0;
    stepper.derivative(t, &y, &mut fy);
    let mut h = tol.initial_step.min(tol.max_step).min(t1 - t0);
    let mut attempts = 0usize;

    while t < t1 {
        attempts += 1;
        if attempts > tol.max_steps {
            return Err(Error::Integration {
                time: t,
                reason: format!("step budget of {} exhausted", tol.max_steps),
            });
        }
        let last = t + h >= t1 * (1.0 - 1e-15) - f64::MIN_POSITIVE;
        if last {
            h = t1 - t;
        }
        if h <= 1e-14 * t.abs().max(1e-300) {
            return Err(Error::Integration {
                time: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let step_err = |e: Error| match e {
            Error::Integration { reason, .. } => Error::Integration { time: t, reason },
            other => other,
        };
        stepper.step(t, &y, &fy, h, &mut full, stats).map_err(step_err)?;
        stepper.step(t, &y, &fy, 0.5 * h, &mut half, stats).map_err(step_err)?;
        stepper.derivative(t + 0.5 * h, &half, &mut f_half);
        stepper
            .step(t + 0.5 * h, &half, &f_half, 0.5 * h, &mut two_halves, stats)
            .map_err(step_err)?;

        let mut norm: f64 = 0.0;
        for i in 0..n {
            let e = (two_halves[i] - full[i]) / 3.0;
            let scale = tol.abs[i] + tol.rel * y[i].abs().max(two_halves[i].abs());
            norm = norm.max(e.abs() / scale);
        }
        if !norm.is_finite() {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        }
        let factor = if norm == 0.0 {
            4.0
        } else {
            (0.9 * norm.powf(-1.0 / 3.0)).clamp(0.2, 4.0)
        };
        if norm <= 1.0 {
            stats.accepted += 1;
            stats.last_step = h;
            for i in 0..n {
                stats.error_estimate[i] += ((two_halves[i] - full[i]) / 3.0).abs();
            }
            let t_new = if last { t1 } else { t + h };
            stepper.derivative(t_new, &two_halves, &mut f_new);
            while next_sample < samples.len() && samples[next_sample] <= t_new {
                let s = samples[next_sample];
                if s >= t_new {
                    observe(s, &two_halves);
                } else {
                    let th = (s - t) / h;
                    let h00 = (1.0 + 2.0 * th) * (1.0 - th).powi(2);
                    let h10 = th * (1.0 - th).powi(2);
                    let h01 = th * th * (3.0 - 2.0 * th);
                    let h11 = th * th * (th - 1.0);
                    for i in 0..n {
                        out[i] = h00 * y[i]
                            + h10 * h * fy[i]
                            + h01 * two_halves[i]
                            + h11 * h * f_new[i];
                    }
                    observe(s, &out);
                }
                next_sample += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut two_halves);
            std::mem::swap(&mut fy, &mut f_new);
            // Keep the factorization when the proposed change is small.
            if !(0.95..=1.3).contains(&factor) {
                h *= factor;
            }
            h = h.min(tol.max_step);
        } else {
            stats.rejected += 1;
            h *= factor.min(0.9);
        }
    }
    Ok(y)
}
