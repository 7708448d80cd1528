//! CSV and SVG writers, and the trace reader used by the audit and plot commands.
//!
//! Numbers are written with `{:?}`, the shortest decimal that parses back to
//! the same `f64`, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use selfrec_core::energy::EnergyLedger;
use selfrec_core::fluid::RadialGrid;
use selfrec_core::{
    AnnulusFluid, DampingLaw, DampingTable, FluidSample, InertiaParams, ModelKind, RampProfile,
    RigidState, SimulationTrace, TraceMeta, TraceRecord,
};

use crate::error::{CliError, Result};
use crate::validation::ValidationRow;

pub const TRACE_COLUMNS: [&str; 11] = [
    "time",
    "wheel_angle",
    "wheel_rate",
    "stool_angle",
    "stool_rate",
    "torque_u",
    "tau",
    "desired_angle",
    "ke",
    "ie",
    "le",
];

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn law_fields(law: &DampingLaw) -> (String, String, String) {
    match law {
        DampingLaw::Tabulated(t) => (
            "tabulated".into(),
            "damping_table".into(),
            t.points()
                .map(|(a, k)| format!("{a:?}:{k:?}"))
                .collect::<Vec<_>>()
                .join("; "),
        ),
        DampingLaw::Constant { scale }
        | DampingLaw::RaisedCosine { scale }
        | DampingLaw::CosineSquared { scale } => {
            (law.name().into(), "damping_scale".into(), format!("{scale:?}"))
        }
    }
}

/// Trace as CSV: a `# key = value` preamble with the run metadata, the
/// header row, then one row per record.
pub fn render_trace_csv(trace: &SimulationTrace) -> String {
    let meta = &trace.meta;
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "# {key} = {value}");
    };
    put("model", meta.model.name().into());
    put("wheel_inertia", format!("{:?}", meta.inertias.wheel()));
    put("stool_inertia", format!("{:?}", meta.inertias.stool()));
    put("steady_rate", format!("{:?}", meta.profile.steady_rate()));
    put("stop_time", format!("{:?}", meta.profile.stop_time()));
    put("end_time", format!("{:?}", meta.end_time));
    if let Some(law) = &meta.law {
        let (name, key, value) = law_fields(law);
        put("damping_law", name);
        put(&key, value);
    }
    if let Some(fluid) = &meta.fluid {
        put("density", format!("{:?}", fluid.density()));
        put("viscosity", format!("{:?}", fluid.kinematic_viscosity()));
        put("inner_radius", format!("{:?}", fluid.inner_radius()));
        put("outer_radius", format!("{:?}", fluid.outer_radius()));
    }
    if let Some(radii) = &meta.radii {
        put("grid_points", radii.len().to_string());
    }
    put("integrator", meta.integrator.clone());
    put("accepted_steps", meta.accepted_steps.to_string());
    put("rejected_steps", meta.rejected_steps.to_string());
    put("stool_angle_error", format!("{:?}", meta.stool_angle_error));
    if let Some(w) = meta.wheel_check_residual {
        put("wheel_check_residual", format!("{w:?}"));
    }

    let fluid = meta.model == ModelKind::Fluid;
    let field_len = trace
        .records
        .first()
        .and_then(|r| r.fluid.as_ref())
        .and_then(|f| f.velocity.as_ref())
        .map_or(0, Vec::len);
    let mut header: Vec<String> = TRACE_COLUMNS.iter().map(|c| c.to_string()).collect();
    if fluid {
        header.push("fluid_ke".into());
        header.push("fluid_diss".into());
        header.extend((0..field_len).map(|i| format!("v_{i}")));
    }
    out.push_str(&header.join(","));
    out.push('\n');

    for r in &trace.records {
        let s = &r.state;
        let mut row = vec![
            s.time,
            s.wheel_angle,
            s.wheel_rate,
            s.stool_angle,
            s.stool_rate,
            r.torque,
            r.tau,
            r.desired_angle,
            r.kinetic_energy,
            r.input_energy,
            r.lost_energy,
        ];
        if fluid {
            let f = r.fluid.clone().unwrap_or_default();
            row.push(f.kinetic);
            row.push(f.dissipation_rate);
            if let Some(v) = &f.velocity {
                row.extend(v.iter().take(field_len));
            }
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_trace_csv(trace: &SimulationTrace, path: &Path) -> Result<()> {
    write_text(path, &render_trace_csv(trace))
}

fn preamble_value<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Rebuilds a trace from a file written by [`emit_trace_csv`]. The inner-wall
/// torque is not part of the schema and comes back as NaN.
pub fn read_trace_csv(path: &Path) -> Result<SimulationTrace> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trace_csv(&text).map_err(|message| CliError::input(path, message))
}

fn parse_trace_csv(text: &str) -> std::result::Result<SimulationTrace, String> {
    let pairs: Vec<(String, String)> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let get = |key: &str| preamble_value(&pairs, key).ok_or(format!("preamble lacks {key:?}"));
    let num = |key: &str| -> std::result::Result<f64, String> {
        get(key)?.parse().map_err(|_| format!("preamble {key:?} is not a number"))
    };
    let model = match get("model")? {
        "rigid" => ModelKind::Rigid,
        "fluid" => ModelKind::Fluid,
        other => return Err(format!("unknown model {other:?}")),
    };
    let inertias = InertiaParams::new(num("wheel_inertia")?, num("stool_inertia")?).map_err(|e| e.to_string())?;
    let profile = RampProfile::new(num("steady_rate")?, num("stop_time")?).map_err(|e| e.to_string())?;
    let law = match preamble_value(&pairs, "damping_law") {
        None => None,
        Some("tabulated") => {
            let points = get("damping_table")?
                .split(';')
                .map(|p| {
                    let (a, k) = p.split_once(':').ok_or("bad damping_table")?;
                    Ok((
                        a.trim().parse().map_err(|_| "bad damping_table")?,
                        k.trim().parse().map_err(|_| "bad damping_table")?,
                    ))
                })
                .collect::<std::result::Result<Vec<(f64, f64)>, &str>>()?;
            Some(DampingLaw::Tabulated(DampingTable::new(points).map_err(|e| e.to_string())?))
        }
        Some(name) => {
            let scale = num("damping_scale")?;
            Some(match name {
                "constant" => DampingLaw::Constant { scale },
                "raised_cosine" => DampingLaw::RaisedCosine { scale },
                "cosine_squared" => DampingLaw::CosineSquared { scale },
                other => return Err(format!("unknown damping law {other:?}")),
            })
        }
    };
    let fluid = match model {
        ModelKind::Fluid => Some(
            AnnulusFluid::new(num("density")?, num("viscosity")?, num("inner_radius")?, num("outer_radius")?)
                .map_err(|e| e.to_string())?,
        ),
        ModelKind::Rigid => None,
    };
    let radii = match (&fluid, preamble_value(&pairs, "grid_points")) {
        (Some(f), Some(n)) => {
            let n: usize = n.parse().map_err(|_| "grid_points is not an integer")?;
            Some(
                RadialGrid::uniform(f.inner_radius(), f.outer_radius(), n)
                    .map_err(|e| e.to_string())?
                    .radii()
                    .to_vec(),
            )
        }
        _ => None,
    };

    let body: String = text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    for (i, name) in TRACE_COLUMNS.iter().enumerate() {
        if header.get(i) != Some(name) {
            return Err(format!("column {i} should be {name:?}"));
        }
    }
    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let record = result.map_err(|e| e.to_string())?;
        let values = record
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| format!("data row {} has a non-numeric cell", row + 1))?;
        let fluid_sample = (model == ModelKind::Fluid).then(|| FluidSample {
            kinetic: values[11],
            dissipation_rate: values[12],
            inner_torque: f64::NAN,
            velocity: (values.len() > 13).then(|| values[13..].to_vec()),
        });
        records.push(TraceRecord {
            state: RigidState {
                time: values[0],
                wheel_angle: values[1],
                wheel_rate: values[2],
                stool_angle: values[3],
                stool_rate: values[4],
            },
            torque: values[5],
            tau: values[6],
            desired_angle: values[7],
            kinetic_energy: values[8],
            input_energy: values[9],
            lost_energy: values[10],
            fluid: fluid_sample,
        });
    }
    Ok(SimulationTrace {
        meta: TraceMeta {
            model,
            inertias,
            profile,
            law,
            fluid,
            radii,
            end_time: num("end_time")?,
            integrator: get("integrator")?.to_string(),
            accepted_steps: get("accepted_steps")?.parse().map_err(|_| "bad accepted_steps")?,
            rejected_steps: get("rejected_steps")?.parse().map_err(|_| "bad rejected_steps")?,
            stool_angle_error: num("stool_angle_error")?,
            wheel_check_residual: preamble_value(&pairs, "wheel_check_residual").and_then(|v| v.parse().ok()),
        },
        records,
    })
}

/// Column of a trace by header name.
pub fn trace_column(trace: &SimulationTrace, name: &str) -> Option<Vec<f64>> {
    let pick: fn(&TraceRecord) -> Option<f64> = match name {
        "time" => |r| Some(r.state.time),
        "wheel_angle" => |r| Some(r.state.wheel_angle),
        "wheel_rate" => |r| Some(r.state.wheel_rate),
        "stool_angle" => |r| Some(r.state.stool_angle),
        "stool_rate" => |r| Some(r.state.stool_rate),
        "torque_u" => |r| Some(r.torque),
        "tau" => |r| Some(r.tau),
        "desired_angle" => |r| Some(r.desired_angle),
        "ke" => |r| Some(r.kinetic_energy),
        "ie" => |r| Some(r.input_energy),
        "le" => |r| Some(r.lost_energy),
        "fluid_ke" => |r| r.fluid.as_ref().map(|f| f.kinetic),
        "fluid_diss" => |r| r.fluid.as_ref().map(|f| f.dissipation_rate),
        _ => return None,
    };
    trace.records.iter().map(pick).collect()
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:?}"))
}

pub fn render_table_csv(rows: &[ValidationRow]) -> String {
    let mut out = String::from(
        "R_i_cm,R_o_cm,gap_percent,angle_pde,angle_keff,percent_error,oracle_error,horizon,attempts,settled\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{},{:?},{},{:?},{:?},{},{}",
            r.inner_cm,
            r.outer_cm,
            r.gap_percent,
            cell(r.angle_pde),
            r.angle_keff,
            cell(r.percent_error),
            r.oracle_error,
            r.horizon,
            r.attempts,
            r.settled()
        );
    }
    out
}

pub fn emit_table_csv(rows: &[ValidationRow], path: &Path) -> Result<()> {
    write_text(path, &render_table_csv(rows))
}

pub fn render_audit_csv(ledger: &EnergyLedger) -> String {
    let mut out = String::from("time,ke,ie,le,fluid_ke,fluid_diss_cum,residual\n");
    for k in 0..ledger.times.len() {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            ledger.times[k],
            ledger.kinetic_rigid[k],
            ledger.input_energy_cum[k],
            ledger.lost_energy_cum[k],
            ledger.fluid_kinetic[k],
            ledger.fluid_dissipation_cum[k],
            ledger.balance_residual[k]
        );
    }
    out
}

/// Reads `(R_i, R_o)` pairs in centimetres from a two-column CSV with a header.
pub fn read_pairs_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::input(path, e.to_string()))?;
    let mut pairs = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let record = result.map_err(|e| CliError::input(path, e.to_string()))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| CliError::input(path, format!("row {}: expected two numbers", row + 1)))
        };
        pairs.push((parse(0)?, parse(1)?));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: &[f64], ys: &[f64]) -> Self {
        Self {
            label: label.into(),
            points: xs.iter().copied().zip(ys.iter().copied()).collect(),
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f4e9c", "#c0392b", "#2e7d32", "#6a1b9a", "#ef6c00", "#37474f"];

/// Polyline chart with a fixed viewport, linear axes and a legend.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, bottom + 18.0, tick(xv));
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            right - 150.0,
            right - 125.0,
            right - 120.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], path: &Path) -> Result<()> {
    write_text(path, &render_svg(title, x_label, y_label, series))
}
