//! Named parameter sets for the published tables and figures.

use std::f64::consts::{PI, TAU};

use selfrec_core::{DampingLaw, ModelKind};

use crate::config::ExperimentConfig;
use crate::validation::boundedness_horizon;

/// `(R_i, R_o)` in centimetres for the eighteen validation rows.
pub const APPENDIX_PAIRS: [(f64, f64); 18] = [
    (13.5, 13.51),
    (13.5, 13.68),
    (13.5, 13.75),
    (13.5, 14.0),
    (13.5, 14.5),
    (13.5, 15.0),
    (13.5, 15.5),
    (13.5, 20.0),
    (13.5, 27.0),
    (27.0, 27.02),
    (27.0, 27.36),
    (27.0, 27.5),
    (27.0, 28.0),
    (27.0, 29.0),
    (27.0, 30.0),
    (27.0, 31.0),
    (27.0, 40.0),
    (27.0, 54.0),
];

type LawFamily = (&'static str, fn(f64) -> DampingLaw);

const FIG13_LAWS: [LawFamily; 3] = [
    ("fig13-constant", |k| DampingLaw::Constant { scale: k }),
    ("fig13-raised-cosine", |k| DampingLaw::RaisedCosine { scale: k }),
    ("fig13-cosine-squared", |k| DampingLaw::CosineSquared { scale: k }),
];

pub fn names() -> Vec<&'static str> {
    const ROWS: [&str; 18] = [
        "appendix-row-1",
        "appendix-row-2",
        "appendix-row-3",
        "appendix-row-4",
        "appendix-row-5",
        "appendix-row-6",
        "appendix-row-7",
        "appendix-row-8",
        "appendix-row-9",
        "appendix-row-10",
        "appendix-row-11",
        "appendix-row-12",
        "appendix-row-13",
        "appendix-row-14",
        "appendix-row-15",
        "appendix-row-16",
        "appendix-row-17",
        "appendix-row-18",
    ];
    let mut out = ROWS.to_vec();
    out.extend(["table-1", "table-3", "fig10", "fig11", "fig13"]);
    out.extend(FIG13_LAWS.iter().map(|(name, _)| *name));
    out
}

/// Fluid-model constants used for every validation run.
fn table_3() -> ExperimentConfig {
    ExperimentConfig {
        model: ModelKind::Fluid,
        wheel_inertia: 6e-3,
        stool_inertia: 1.96,
        viscosity: 1.17e-6,
        density: 1014.7,
        steady_rate: 60.0 * PI,
        proportional_gain: 1.0,
        derivative_gain: 100.0,
        inner_radius: 0.135,
        outer_radius: 0.14,
        grid_points: 200,
        stop_time: 20.0,
        end_time: 60.0,
        output_interval: 0.01,
        ..ExperimentConfig::default()
    }
}

/// Rigid wheel-stool run with a ramp stopped at 2 s.
fn figure(c0: f64, c1: f64, law: DampingLaw) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelKind::Rigid,
        wheel_inertia: 0.0625,
        stool_inertia: 0.625,
        law,
        proportional_gain: c0,
        derivative_gain: c1,
        steady_rate: 2.0,
        stop_time: 2.0,
        end_time: 40.0,
        ..ExperimentConfig::default()
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut cfg = if let Some(row) = name.strip_prefix("appendix-row-") {
        let index: usize = row.parse().ok()?;
        let (inner, outer) = *APPENDIX_PAIRS.get(index.checked_sub(1)?)?;
        let mut cfg = table_3();
        cfg.inner_radius = inner / 100.0;
        cfg.outer_radius = outer / 100.0;
        let (inertias, fluid) = (cfg.inertias().ok()?, cfg.fluid().ok()?);
        cfg.stop_time = boundedness_horizon(&inertias, &fluid, cfg.steady_rate, cfg.rate_tolerance).ok()?;
        cfg.end_time = 2.0 * cfg.stop_time;
        cfg.output_interval = 0.5;
        cfg
    } else {
        match name {
            "table-3" => table_3(),
            // Only I_w + I_s = 1 is given; the wheel inertia is the Table 3 value.
            "table-1" => ExperimentConfig {
                wheel_inertia: 6e-3,
                stool_inertia: 0.994,
                density: 1000.0,
                inner_radius: 0.05,
                outer_radius: 0.06,
                bearing_height: 0.01,
                ..table_3()
            },
            "fig10" => figure(1.0, 3.0, DampingLaw::Constant { scale: TAU }),
            "fig11" => figure(1.0, 1.0, DampingLaw::Constant { scale: TAU }),
            "fig13" => figure(1.0, 1.0, DampingLaw::Constant { scale: 1.0 }),
            other => {
                let (_, law) = FIG13_LAWS.iter().find(|(n, _)| *n == other)?;
                figure(1.0, 1.0, law(1.0))
            }
        }
    };
    cfg.preset = Some(name.to_string());
    Some(cfg)
}

/// The three damping-law variants compared in the inadequacy demonstration.
pub fn fig13_family() -> Vec<ExperimentConfig> {
    FIG13_LAWS
        .iter()
        .map(|(name, _)| preset(name).expect("built-in preset"))
        .collect()
}
