//! Boundedness, recovery and oscillation detectors over simulation traces.

use crate::trace::SimulationTrace;

pub const DEFAULT_RATE_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_HOLD_WINDOW: f64 = 1.0;
pub const DEFAULT_SETTLE_BAND: f64 = 1e-3;

/// Wheel rate must be within this fraction of the steady rate for the stool
/// to count as bounded.
const WHEEL_RATE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundedness {
    /// The stool stopped moving at `angle`; the qualifying window began at `time`.
    Settled { time: f64, angle: f64 },
    Unsettled,
}

impl Boundedness {
    pub fn angle(&self) -> Option<f64> {
        match self {
            Boundedness::Settled { angle, .. } => Some(*angle),
            Boundedness::Unsettled => None,
        }
    }
}

/// Finds the first window of length `hold_window`, inside the spin phase,
/// over which the stool rate stays below `rate_tolerance` while the wheel
/// turns within 1% of the steady rate.
pub fn detect_boundedness(
    trace: &SimulationTrace,
    rate_tolerance: f64,
    hold_window: f64,
) -> Boundedness {
    let steady = trace.meta.profile.steady_rate();
    let stop = trace.meta.profile.stop_time();
    let mut start: Option<(f64, f64)> = None;
    for r in &trace.records {
        let s = &r.state;
        if s.time >= stop {
            break;
        }
        let quiet = s.stool_rate.abs() < rate_tolerance
            && (s.wheel_rate - steady).abs() <= WHEEL_RATE_FRACTION * steady.abs();
        if !quiet {
            start = None;
            continue;
        }
        let (t0, angle) = *start.get_or_insert((s.time, s.stool_angle));
        if s.time - t0 >= hold_window {
            return Boundedness::Settled { time: t0, angle };
        }
    }
    Boundedness::Unsettled
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    /// `|value|` at the last sample.
    pub final_angle_residual: f64,
    /// Largest excursion past zero after the first zero crossing that
    /// follows the ramp stop; zero without a crossing.
    pub peak_overshoot: f64,
    /// Sign changes after the ramp stop, counted with a hysteresis band.
    pub zero_crossing_count: usize,
    /// Time after which the value stays inside the band; `None` if it ends
    /// outside.
    pub settle_time: Option<f64>,
}

impl RecoveryReport {
    pub fn settled(&self) -> bool {
        self.settle_time.is_some()
    }
}

/// Recovery of the stool angle after the ramp stop.
pub fn detect_recovery(trace: &SimulationTrace, settle_band: f64) -> RecoveryReport {
    series_recovery(
        &trace.times(),
        &trace.stool_angles(),
        trace.meta.profile.stop_time(),
        settle_band,
    )
}

/// Recovery of the wheel tracking error `θ^d − θ_w` after the ramp stop.
pub fn wheel_error_recovery(trace: &SimulationTrace, settle_band: f64) -> RecoveryReport {
    series_recovery(
        &trace.times(),
        &trace.wheel_errors(),
        trace.meta.profile.stop_time(),
        settle_band,
    )
}

/// Recovery statistics of an arbitrary sampled series from `after` on.
pub fn series_recovery(times: &[f64], values: &[f64], after: f64, band: f64) -> RecoveryReport {
    let first = times.partition_point(|t| *t < after);
    let (times, values) = (&times[first..], &values[first..]);
    let final_angle_residual = values.last().map_or(0.0, |v| v.abs());

    let zero_crossing_count = hysteresis_crossings(values, band);

    let mut peak_overshoot: f64 = 0.0;
    if let Some(&v0) = values.first() {
        let initial_sign = if v0 != 0.0 {
            v0.signum()
        } else {
            values.iter().find(|v| **v != 0.0).map_or(0.0, |v| v.signum())
        };
        if let Some(k) = values.iter().position(|v| v * initial_sign < 0.0) {
            peak_overshoot = values[k..]
                .iter()
                .map(|v| -v * initial_sign)
                .fold(0.0, f64::max);
        }
    }

    let settle_time = match values.iter().rposition(|v| v.abs() >= band) {
        None => times.first().copied(),
        Some(k) if k + 1 < values.len() => Some(times[k + 1]),
        Some(_) => None,
    };

    RecoveryReport {
        final_angle_residual,
        peak_overshoot,
        zero_crossing_count,
        settle_time,
    }
}

/// Sign changes of a series, where a new sign only registers once the value
/// leaves `[-band, band]`.
pub fn hysteresis_crossings(values: &[f64], band: f64) -> usize {
    let mut state = 0.0;
    let mut count = 0;
    for v in values {
        let s = if *v > band {
            1.0
        } else if *v < -band {
            -1.0
        } else {
            continue;
        };
        if state != 0.0 && s != state {
            count += 1;
        }
        state = s;
    }
    count
}

/// First time at or after `after` where the sampled derivative changes sign,
/// i.e. the first extremum of its antiderivative. Linear interpolation
/// between samples.
pub fn first_extremum_time(times: &[f64], rates: &[f64], after: f64) -> Option<f64> {
    let first = times.partition_point(|t| *t < after);
    (first + 1..times.len()).find_map(|k| {
        let (a, b) = (rates[k - 1], rates[k]);
        if a == 0.0 && k - 1 > first {
            Some(times[k - 1])
        } else if a * b < 0.0 {
            Some(times[k - 1] + (times[k] - times[k - 1]) * a / (a - b))
        } else {
            None
        }
    })
}

/// Times of the first post-stop extremum of the wheel angle and of the
/// stool's overshoot peak (its first extremum after it crosses zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationTiming {
    pub wheel_extremum: Option<f64>,
    pub stool_extremum: Option<f64>,
}

impl OscillationTiming {
    /// Whether the stool's overshoot peak comes after the wheel's.
    pub fn stool_lags_wheel(&self) -> bool {
        matches!(
            (self.wheel_extremum, self.stool_extremum),
            (Some(w), Some(s)) if s > w
        )
    }
}

pub fn oscillation_timing(trace: &SimulationTrace) -> OscillationTiming {
    let stop = trace.meta.profile.stop_time();
    let times = trace.times();
    let wheel_extremum = first_extremum_time(&times, &trace.wheel_rates(), stop);
    let angles = trace.stool_angles();
    let first = times.partition_point(|t| *t < stop);
    let sign = angles.get(first).copied().unwrap_or(0.0).signum();
    let crossing = (first..angles.len()).find(|&k| angles[k] * sign < 0.0);
    let stool_extremum =
        crossing.and_then(|k| first_extremum_time(&times, &trace.stool_rates(), times[k]));
    OscillationTiming {
        wheel_extremum,
        stool_extremum,
    }
}

/// Counts stool-rate sign changes after the wheel has come to rest, i.e.
/// oscillations that restart with the wheel stationary. The wheel counts as
/// at rest from the first post-stop sample after which its rate stays below
/// `rate_tolerance`; returns `None` if that never happens.
pub fn restart_oscillations(trace: &SimulationTrace, rate_tolerance: f64) -> Option<usize> {
    let stop = trace.meta.profile.stop_time();
    let times = trace.times();
    let first = times.partition_point(|t| *t < stop);
    let wheel = trace.wheel_rates();
    let rest = match wheel[first..].iter().rposition(|v| v.abs() >= rate_tolerance) {
        None => first,
        Some(k) if first + k + 1 < wheel.len() => first + k + 1,
        Some(_) => return None,
    };
    let rates = trace.stool_rates();
    Some(hysteresis_crossings(&rates[rest..], rate_tolerance))
}
