//! Dormand–Prince 5(4) with step-size control and the continuous extension
//! of Hairer, Nørsett & Wanner (order 4 dense output).

use crate::error::{Error, Result};

use super::{IntegrationStats, Tolerances};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` and reports the solution at
/// each of `samples` (ascending, inside `[t0, t1]`) through `observe`.
///
/// Samples equal to `t0` see the initial state and samples equal to `t1` see
/// the final state exactly; interior samples use the dense output. Returns
/// the state at `t1`.
#[allow(clippy::too_many_arguments)]
pub fn dopri5<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: &Tolerances,
    samples: &[f64],
    mut observe: O,
    stats: &mut IntegrationStats,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let n = y0.len();
    if stats.error_estimate.len() != n {
        stats.error_estimate = vec![0.0; n];
    }
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_sample = 0;
    while next_sample < samples.len() && samples[next_sample] <= t0 {
        observe(samples[next_sample], &y);
        next_sample += 1;
    }
    if t1 <= t0 {
        return Ok(y);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut dense = vec![0.0; n];
    let mut out = vec![0.0; n];

    rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut rhs, t, &y, &k1, t1 - t0, tol, stats);

    while t < t1 {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::Integration {
                time: t,
                reason: format!("step budget of {} exhausted", tol.max_steps),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                time: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &stage, &mut k5);
        for i in 0..n {
            stage[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t1 } else { t + h };
        rhs(t_new, &stage, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t_new, &y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut norm = 0.0;
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            norm += (err[i] / scale).powi(2);
        }
        let norm = (norm / n as f64).sqrt();
        if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    time: t,
                    reason: "non-finite state".into(),
                });
            }
            h *= MIN_FACTOR;
            stats.rejected += 1;
            continue;
        }

        if norm <= 1.0 {
            stats.accepted += 1;
            for i in 0..n {
                stats.error_estimate[i] += err[i].abs();
            }
            while next_sample < samples.len() && samples[next_sample] <= t_new {
                let s = samples[next_sample];
                if s >= t_new {
                    observe(s, &y_new);
                } else {
                    for i in 0..n {
                        dense[i] = h
                            * (D1 * k1[i]
                                + D3 * k3[i]
                                + D4 * k4[i]
                                + D5 * k5[i]
                                + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                    let theta = (s - t) / h;
                    let theta1 = 1.0 - theta;
                    for i in 0..n {
                        let r2 = y_new[i] - y[i];
                        let r3 = h * k1[i] - r2;
                        let r4 = r2 - h * k7[i] - r3;
                        out[i] = y[i]
                            + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * dense[i])));
                    }
                    observe(s, &out);
                }
                next_sample += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let factor = if norm == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h = (h * factor).min(tol.max_step);
        } else {
            stats.rejected += 1;
            h *= (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok(y)
}

fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    tol: &Tolerances,
    stats: &mut IntegrationStats,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let scale: Vec<f64> = y.iter().map(|v| tol.abs + tol.rel * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span).min(tol.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    rhs(t + h0, &y1, &mut f1);
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = rms(&diff);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(tol.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_with_dense_output() {
        let tol = Tolerances {
            rel: 1e-10,
            abs: 1e-12,
            max_step: 1.0,
            max_steps: 100_000,
        };
        let samples: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let mut worst: f64 = 0.0;
        let mut stats = IntegrationStats::default();
        let y = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &tol,
            &samples,
            |t, y| {
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
            },
            &mut stats,
        )
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!(worst < 1e-8, "dense output error {worst}");
        assert!(stats.accepted > 10);
    }

    #[test]
    fn dense_output_is_fourth_order_on_coarse_steps() {
        // One forced step of length h: dense-output error must scale ~h^5.
        let run = |h: f64| {
            let tol = Tolerances {
                rel: 1.0,
                abs: 1.0,
                max_step: h,
                max_steps: 10,
            };
            let mut worst: f64 = 0.0;
            let mut stats = IntegrationStats::default();
            dopri5(
                |_, y, dy| dy[0] = y[0],
                0.0,
                &[1.0],
                h,
                &tol,
                &[0.37 * h],
                |t, y| worst = (y[0] - t.exp()).abs(),
                &mut stats,
            )
            .unwrap();
            worst
        };
        let e1 = run(0.2);
        let e2 = run(0.1);
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed local order {order}");
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let tol = Tolerances {
            rel: 1e-12,
            abs: 1e-14,
            max_step: 1e-3,
            max_steps: 5,
        };
        let mut stats = IntegrationStats::default();
        let r = dopri5(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            1.0,
            &tol,
            &[],
            |_, _| {},
            &mut stats,
        );
        assert!(matches!(r, Err(Error::Integration { .. })));
    }
}
