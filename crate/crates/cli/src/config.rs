//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. A `preset = name` line
//! loads that preset first, whatever its position, and every other key
//! overrides it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use selfrec_core::detect::{DEFAULT_HOLD_WINDOW, DEFAULT_RATE_TOLERANCE, DEFAULT_SETTLE_BAND};
use selfrec_core::fluid::{build_grid, FluidRunConfig, StoolHold};
use selfrec_core::rigid::{self, RigidRunConfig};
use selfrec_core::{
    AnnulusFluid, BearingGeometry, DampingLaw, DampingTable, InertiaParams, ModelKind, PDGains,
    RampProfile,
};

use crate::error::{CliError, Result};
use crate::presets;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub model: ModelKind,
    pub wheel_inertia: f64,
    pub stool_inertia: f64,
    /// Rigid model only.
    pub law: DampingLaw,
    pub proportional_gain: f64,
    pub derivative_gain: f64,
    pub steady_rate: f64,
    pub stop_time: f64,
    pub end_time: f64,
    pub density: f64,
    pub viscosity: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub grid_points: usize,
    /// Bearing height for the oscillation-energy bound; thickness is the gap.
    pub bearing_height: f64,
    /// `None` selects the model's default.
    pub relative_tolerance: Option<f64>,
    pub absolute_tolerance: Option<f64>,
    /// Rigid output rate (samples per second).
    pub sample_rate: f64,
    /// Fluid output spacing (s).
    pub output_interval: f64,
    pub record_field: bool,
    pub hold_stool_from: Option<f64>,
    pub hold_stool_rate: f64,
    /// Settle thresholds used by the boundedness and recovery detectors.
    pub rate_tolerance: f64,
    pub hold_window: f64,
    pub settle_band: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: None,
            model: ModelKind::Rigid,
            wheel_inertia: 0.0625,
            stool_inertia: 0.625,
            law: DampingLaw::Constant {
                scale: std::f64::consts::TAU,
            },
            proportional_gain: 1.0,
            derivative_gain: 3.0,
            steady_rate: 2.0,
            stop_time: 2.0,
            end_time: 40.0,
            density: 1014.7,
            viscosity: 1.17e-6,
            inner_radius: 0.135,
            outer_radius: 0.14,
            grid_points: 200,
            bearing_height: 0.01,
            relative_tolerance: None,
            absolute_tolerance: None,
            sample_rate: rigid::DEFAULT_SAMPLE_RATE,
            output_interval: 0.01,
            record_field: false,
            hold_stool_from: None,
            hold_stool_rate: 0.0,
            rate_tolerance: DEFAULT_RATE_TOLERANCE,
            hold_window: DEFAULT_HOLD_WINDOW,
            settle_band: DEFAULT_SETTLE_BAND,
            output: None,
        }
    }
}

const KEYS: &[&str] = &[
    "preset",
    "model",
    "wheel_inertia",
    "stool_inertia",
    "damping_law",
    "damping_scale",
    "damping_table",
    "proportional_gain",
    "derivative_gain",
    "steady_rate",
    "stop_time",
    "end_time",
    "density",
    "viscosity",
    "inner_radius",
    "outer_radius",
    "grid_points",
    "bearing_height",
    "relative_tolerance",
    "absolute_tolerance",
    "sample_rate",
    "output_interval",
    "record_field",
    "hold_stool_from",
    "hold_stool_rate",
    "rate_tolerance",
    "hold_window",
    "settle_band",
    "output",
];

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::config(Some(line), format!("{key}: cannot parse number {value:?}")))
}

fn parse_table(line: usize, value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (a, k) = pair.split_once(':').ok_or_else(|| {
                CliError::config(
                    Some(line),
                    format!("damping_table: expected angle:coefficient, got {pair:?}"),
                )
            })?;
            Ok((
                number(line, "damping_table", a.trim())?,
                number(line, "damping_table", k.trim())?,
            ))
        })
        .collect()
}

/// Parses configuration text, applies defaults or the named preset, and
/// validates every parameter.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries: Vec<(usize, &str, &str)> = Vec::new();
    let mut preset: Option<(usize, &str)> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            CliError::config(Some(line), format!("expected `key = value`, got {content:?}"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::config(Some(line), format!("unknown key {key:?}")));
        }
        if entries.iter().any(|(_, k, _)| *k == key) || (key == "preset" && preset.is_some()) {
            return Err(CliError::config(Some(line), format!("key {key:?} given twice")));
        }
        if key == "preset" {
            preset = Some((line, value));
        } else {
            entries.push((line, key, value));
        }
    }

    let mut cfg = match preset {
        Some((line, name)) => presets::preset(name).ok_or_else(|| {
            CliError::config(
                Some(line),
                format!("unknown preset {name:?}; known presets: {}", presets::names().join(", ")),
            )
        })?,
        None => ExperimentConfig::default(),
    };
    let mut lines: HashMap<&str, usize> = HashMap::new();
    if let Some((line, _)) = preset {
        lines.insert("preset", line);
    }

    let (mut law_name, mut scale, mut table) = match &cfg.law {
        DampingLaw::Tabulated(t) => ("tabulated".to_string(), 0.0, Some(t.points().collect::<Vec<_>>())),
        DampingLaw::Constant { scale }
        | DampingLaw::RaisedCosine { scale }
        | DampingLaw::CosineSquared { scale } => (cfg.law.name().to_string(), *scale, None),
    };

    for &(line, key, value) in &entries {
        lines.insert(key, line);
        match key {
            "model" => {
                cfg.model = match value {
                    "rigid" => ModelKind::Rigid,
                    "fluid" => ModelKind::Fluid,
                    _ => {
                        return Err(CliError::config(
                            Some(line),
                            format!("model must be `rigid` or `fluid`, got {value:?}"),
                        ))
                    }
                }
            }
            "damping_law" => law_name = value.to_string(),
            "damping_scale" => scale = number(line, key, value)?,
            "damping_table" => table = Some(parse_table(line, value)?),
            "wheel_inertia" => cfg.wheel_inertia = number(line, key, value)?,
            "stool_inertia" => cfg.stool_inertia = number(line, key, value)?,
            "proportional_gain" => cfg.proportional_gain = number(line, key, value)?,
            "derivative_gain" => cfg.derivative_gain = number(line, key, value)?,
            "steady_rate" => cfg.steady_rate = number(line, key, value)?,
            "stop_time" => cfg.stop_time = number(line, key, value)?,
            "end_time" => cfg.end_time = number(line, key, value)?,
            "density" => cfg.density = number(line, key, value)?,
            "viscosity" => cfg.viscosity = number(line, key, value)?,
            "inner_radius" => cfg.inner_radius = number(line, key, value)?,
            "outer_radius" => cfg.outer_radius = number(line, key, value)?,
            "grid_points" => {
                cfg.grid_points = value.parse().map_err(|_| {
                    CliError::config(Some(line), format!("grid_points: cannot parse integer {value:?}"))
                })?
            }
            "bearing_height" => cfg.bearing_height = number(line, key, value)?,
            "relative_tolerance" => cfg.relative_tolerance = Some(number(line, key, value)?),
            "absolute_tolerance" => cfg.absolute_tolerance = Some(number(line, key, value)?),
            "sample_rate" => cfg.sample_rate = number(line, key, value)?,
            "output_interval" => cfg.output_interval = number(line, key, value)?,
            "record_field" => {
                cfg.record_field = value.parse().map_err(|_| {
                    CliError::config(Some(line), format!("record_field must be true or false, got {value:?}"))
                })?
            }
            "hold_stool_from" => cfg.hold_stool_from = Some(number(line, key, value)?),
            "hold_stool_rate" => cfg.hold_stool_rate = number(line, key, value)?,
            "rate_tolerance" => cfg.rate_tolerance = number(line, key, value)?,
            "hold_window" => cfg.hold_window = number(line, key, value)?,
            "settle_band" => cfg.settle_band = number(line, key, value)?,
            "output" => cfg.output = Some(PathBuf::from(value)),
            _ => unreachable!("key list checked above"),
        }
    }

    let law_line = ["damping_law", "damping_scale", "damping_table"]
        .iter()
        .filter_map(|k| lines.get(k).copied())
        .max();
    cfg.law = match law_name.as_str() {
        "constant" => DampingLaw::Constant { scale },
        "raised_cosine" => DampingLaw::RaisedCosine { scale },
        "cosine_squared" => DampingLaw::CosineSquared { scale },
        "tabulated" => {
            let points = table.ok_or_else(|| {
                CliError::config(law_line, "damping_law = tabulated needs a damping_table")
            })?;
            DampingLaw::Tabulated(DampingTable::new(points).map_err(|e| at(law_line, e))?)
        }
        other => {
            return Err(CliError::config(
                law_line,
                format!(
                    "damping_law must be constant, raised_cosine, cosine_squared or tabulated, got {other:?}"
                ),
            ))
        }
    };
    cfg.preset = preset.map(|(_, name)| name.to_string());
    validate(&cfg, &lines)?;
    Ok(cfg)
}

fn at(line: Option<usize>, err: selfrec_core::Error) -> CliError {
    match CliError::from(err) {
        CliError::Config { message, .. } => CliError::Config { line, message },
        other => other,
    }
}

/// Checks each invariant and blames the latest line among the keys involved.
fn validate(cfg: &ExperimentConfig, lines: &HashMap<&str, usize>) -> Result<()> {
    let blame = |keys: &[&str]| keys.iter().filter_map(|k| lines.get(k).copied()).max();
    let check = |keys: &[&str], outcome: selfrec_core::Result<()>| outcome.map_err(|e| at(blame(keys), e));

    check(&["wheel_inertia", "stool_inertia"], cfg.inertias().map(|_| ()))?;
    check(&["damping_law", "damping_scale", "damping_table"], cfg.law.validate())?;
    check(&["proportional_gain", "derivative_gain"], cfg.gains().map(|_| ()))?;
    check(&["steady_rate", "stop_time"], cfg.profile().map(|_| ()))?;
    let fluid = cfg.fluid().map_err(|e| at(blame(&["density", "viscosity", "inner_radius", "outer_radius"]), e))?;
    check(&["grid_points"], build_grid(&fluid, cfg.grid_points).map(|_| ()))?;
    check(&["bearing_height"], cfg.bearing().map(|_| ()))?;

    if !(cfg.end_time > cfg.stop_time && cfg.end_time.is_finite()) {
        return Err(CliError::config(
            blame(&["end_time", "stop_time"]),
            format!("end_time ({}) must exceed stop_time ({})", cfg.end_time, cfg.stop_time),
        ));
    }
    for (key, value) in [
        ("relative_tolerance", cfg.relative_tolerance),
        ("absolute_tolerance", cfg.absolute_tolerance),
    ] {
        if let Some(v) = value {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(CliError::config(blame(&[key]), format!("{key} = {v} must lie in (0, 1e-2]")));
            }
        }
    }
    for (key, value) in [
        ("sample_rate", cfg.sample_rate),
        ("output_interval", cfg.output_interval),
        ("rate_tolerance", cfg.rate_tolerance),
        ("hold_window", cfg.hold_window),
        ("settle_band", cfg.settle_band),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::config(blame(&[key]), format!("{key} must be positive, got {value}")));
        }
    }
    if let Some(from) = cfg.hold_stool_from {
        if !(from >= 0.0 && from.is_finite()) || !cfg.hold_stool_rate.is_finite() {
            return Err(CliError::config(
                blame(&["hold_stool_from", "hold_stool_rate"]),
                "hold_stool_from must be a finite time >= 0 and hold_stool_rate finite",
            ));
        }
    }
    // Catch anything the model-specific constructors still reject.
    match cfg.model {
        ModelKind::Rigid => cfg.to_rigid().map(|_| ()),
        ModelKind::Fluid => cfg.to_fluid().map(|_| ()),
    }
}

impl ExperimentConfig {
    pub fn inertias(&self) -> selfrec_core::Result<InertiaParams> {
        InertiaParams::new(self.wheel_inertia, self.stool_inertia)
    }

    pub fn gains(&self) -> selfrec_core::Result<PDGains> {
        if self.proportional_gain == 0.0 && self.derivative_gain == 0.0 {
            Ok(PDGains::disabled())
        } else {
            PDGains::new(self.proportional_gain, self.derivative_gain)
        }
    }

    pub fn profile(&self) -> selfrec_core::Result<RampProfile> {
        RampProfile::new(self.steady_rate, self.stop_time)
    }

    pub fn fluid(&self) -> selfrec_core::Result<AnnulusFluid> {
        AnnulusFluid::new(self.density, self.viscosity, self.inner_radius, self.outer_radius)
    }

    pub fn bearing(&self) -> selfrec_core::Result<BearingGeometry> {
        BearingGeometry::new(
            self.inner_radius,
            self.outer_radius - self.inner_radius,
            self.bearing_height,
        )
    }

    pub fn to_rigid(&self) -> Result<RigidRunConfig> {
        let mut run = RigidRunConfig::new(
            self.inertias()?,
            self.law.clone(),
            self.gains()?,
            self.profile()?,
            self.end_time,
        )?;
        if let Some(rel) = self.relative_tolerance {
            run = run.with_tolerance(rel)?;
        }
        if let Some(abs) = self.absolute_tolerance {
            run.absolute_tolerance = abs;
        }
        run.sample_rate = self.sample_rate;
        run.validate()?;
        Ok(run)
    }

    pub fn to_fluid(&self) -> Result<FluidRunConfig> {
        let mut run = FluidRunConfig::new(
            self.inertias()?,
            self.fluid()?,
            self.gains()?,
            self.profile()?,
            self.grid_points,
            self.end_time,
        )?;
        if let Some(rel) = self.relative_tolerance {
            run.relative_tolerance = rel;
        }
        if let Some(abs) = self.absolute_tolerance {
            run.absolute_tolerance = abs;
        }
        run.output_interval = self.output_interval;
        run.record_field = self.record_field;
        run.stool_hold = self.hold_stool_from.map(|from| StoolHold {
            from,
            rate: self.hold_stool_rate,
        });
        run.validate()?;
        Ok(run)
    }

    /// Renders every field so that `parse_config(render())` reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        if let Some(p) = &self.preset {
            put("preset", p.clone());
        }
        put("model", self.model.name().to_string());
        put("wheel_inertia", format!("{:?}", self.wheel_inertia));
        put("stool_inertia", format!("{:?}", self.stool_inertia));
        put("damping_law", self.law.name().to_string());
        match &self.law {
            DampingLaw::Tabulated(t) => put(
                "damping_table",
                t.points()
                    .map(|(a, k)| format!("{a:?}:{k:?}"))
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
            DampingLaw::Constant { scale }
            | DampingLaw::RaisedCosine { scale }
            | DampingLaw::CosineSquared { scale } => put("damping_scale", format!("{scale:?}")),
        }
        put("proportional_gain", format!("{:?}", self.proportional_gain));
        put("derivative_gain", format!("{:?}", self.derivative_gain));
        put("steady_rate", format!("{:?}", self.steady_rate));
        put("stop_time", format!("{:?}", self.stop_time));
        put("end_time", format!("{:?}", self.end_time));
        put("density", format!("{:?}", self.density));
        put("viscosity", format!("{:?}", self.viscosity));
        put("inner_radius", format!("{:?}", self.inner_radius));
        put("outer_radius", format!("{:?}", self.outer_radius));
        put("grid_points", self.grid_points.to_string());
        put("bearing_height", format!("{:?}", self.bearing_height));
        if let Some(v) = self.relative_tolerance {
            put("relative_tolerance", format!("{v:?}"));
        }
        if let Some(v) = self.absolute_tolerance {
            put("absolute_tolerance", format!("{v:?}"));
        }
        put("sample_rate", format!("{:?}", self.sample_rate));
        put("output_interval", format!("{:?}", self.output_interval));
        put("record_field", self.record_field.to_string());
        if let Some(v) = self.hold_stool_from {
            put("hold_stool_from", format!("{v:?}"));
        }
        put("hold_stool_rate", format!("{:?}", self.hold_stool_rate));
        put("rate_tolerance", format!("{:?}", self.rate_tolerance));
        put("hold_window", format!("{:?}", self.hold_window));
        put("settle_band", format!("{:?}", self.settle_band));
        if let Some(p) = &self.output {
            put("output", p.display().to_string());
        }
        out
    }
}
