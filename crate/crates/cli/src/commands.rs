//! Subcommand bodies, kept out of `main` so tests can call them directly.

use std::fmt::Write as _;
use std::path::Path;

use selfrec_core::analytic::{boundedness_angle, eigenvalues, exact_boundedness_angle};
use selfrec_core::detect::{
    detect_boundedness, detect_recovery, oscillation_timing, restart_oscillations, wheel_error_recovery,
};
use selfrec_core::energy::{min_average_fluid_speed, EnergyLedger};
use selfrec_core::fluid::simulate_fluid;
use selfrec_core::rigid::simulate_rigid;
use selfrec_core::{ModelKind, SimulationTrace};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::Series;
use crate::presets;

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulationTrace> {
    Ok(match cfg.model {
        ModelKind::Rigid => simulate_rigid(&cfg.to_rigid()?)?,
        ModelKind::Fluid => simulate_fluid(&cfg.to_fluid()?)?,
    })
}

/// Human-readable run summary: boundedness, recovery and energy balance.
pub fn summarize(cfg: &ExperimentConfig, trace: &SimulationTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model: {}  records: {}  {}", cfg.model.name(), trace.len(), trace.meta.integrator);
    match detect_boundedness(trace, cfg.rate_tolerance, cfg.hold_window).angle() {
        Some(angle) => {
            let _ = writeln!(out, "bounded at stool angle {angle:.6} rad");
        }
        None => {
            let _ = writeln!(out, "stool did not settle before the stop");
        }
    }
    if let (ModelKind::Fluid, Ok(inertias), Ok(fluid)) = (cfg.model, cfg.inertias(), cfg.fluid()) {
        let _ = writeln!(
            out,
            "predicted: k_eff {:.6} rad, exact Couette {:.6} rad",
            boundedness_angle(&inertias, cfg.steady_rate, &fluid),
            exact_boundedness_angle(&inertias, cfg.steady_rate, &fluid)
        );
    }
    let rec = detect_recovery(trace, cfg.settle_band);
    let _ = writeln!(
        out,
        "final |stool angle| {:.3e} rad, peak overshoot {:.4} rad, zero crossings {}",
        rec.final_angle_residual, rec.peak_overshoot, rec.zero_crossing_count
    );
    let (residual, at) = EnergyLedger::from_trace(trace).worst_residual();
    let _ = writeln!(out, "worst energy residual {residual:.3e} J at t = {at}");
    out
}

pub fn eigen_table(cfg: &ExperimentConfig, count: usize) -> Result<String> {
    let modes = eigenvalues(&cfg.fluid()?, count)?;
    let mut out = String::from("index,wavenumber,decay_rate,mixing_ratio\n");
    for m in modes {
        let _ = writeln!(out, "{},{:?},{:?},{:?}", m.index, m.wavenumber, m.decay_rate, m.mixing_ratio);
    }
    Ok(out)
}

/// Oscillation-energy bound for a stool turning at `stool_rate`.
pub fn fluid_speed_bound(cfg: &ExperimentConfig, stool_rate: f64) -> Result<f64> {
    Ok(min_average_fluid_speed(&cfg.bearing()?, &cfg.inertias()?, stool_rate, cfg.density))
}

/// Series and a text report for a figure preset (`fig10`, `fig11`, `fig13`).
pub fn figure(name: &str) -> Result<(String, Vec<Series>, String)> {
    let mut report = String::new();
    match name {
        "fig10" | "fig11" => {
            let mut series = Vec::new();
            for preset in ["fig10", "fig11"] {
                let cfg = presets::preset(preset).expect("built-in preset");
                let trace = simulate(&cfg)?;
                let times = trace.times();
                let rec = wheel_error_recovery(&trace, cfg.settle_band);
                let timing = oscillation_timing(&trace);
                let _ = writeln!(
                    report,
                    "{preset}: wheel-error sign changes {}, first wheel extremum {:?} s, first stool extremum {:?} s",
                    rec.zero_crossing_count, timing.wheel_extremum, timing.stool_extremum
                );
                let (label, values): (&str, Vec<f64>) = if name == "fig10" {
                    ("wheel angle", trace.records.iter().map(|r| r.state.wheel_angle).collect())
                } else {
                    ("stool angle", trace.stool_angles())
                };
                let gains = if preset == "fig10" { "c0=1, c1=3" } else { "c0=1, c1=1" };
                series.push(Series::new(format!("{label} ({gains})"), &times, &values));
                if name == "fig10" && preset == "fig10" {
                    let desired: Vec<f64> = trace.records.iter().map(|r| r.desired_angle).collect();
                    series.push(Series::new("desired", &times, &desired).dashed());
                }
            }
            let title = if name == "fig10" { "Wheel trajectory" } else { "Stool trajectory" };
            Ok((title.to_string(), series, report))
        }
        "fig13" => {
            let mut series = Vec::new();
            for cfg in presets::fig13_family() {
                let trace = simulate(&cfg)?;
                let restarts = restart_oscillations(&trace, cfg.rate_tolerance);
                let _ = writeln!(report, "{}: wheel-at-rest restarts {:?}", cfg.law.name(), restarts);
                series.push(Series::new(cfg.law.name(), &trace.times(), &trace.stool_angles()));
            }
            Ok(("Stool angle under three damping laws".to_string(), series, report))
        }
        other => Err(CliError::config(
            None,
            format!("no figure for {other:?}; use fig10, fig11 or fig13"),
        )),
    }
}
