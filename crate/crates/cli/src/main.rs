use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use selfrec_cli::commands::{self, load_config};
use selfrec_cli::output::{self, Series};
use selfrec_cli::{run_validation_table, Result};
use selfrec_core::energy::EnergyLedger;

#[derive(Parser)]
#[command(name = "selfrec", version, about = "Damping-induced self-recovery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`; without either the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare simulated and predicted boundedness angles over (R_i, R_o) pairs.
    ValidateKeff {
        #[arg(long)]
        config: PathBuf,
        /// Two-column CSV of R_i, R_o in centimetres, with a header row.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the slowest decay modes of the annulus.
    Eigenvalues {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Recompute the energy ledger of a trace.
    EnergyAudit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot trace columns against time.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate a figure preset (fig10, fig11, fig13) as SVG.
    Figure {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimum average fluid speed able to restart a stool turning at the given rate.
    FluidSpeedBound {
        #[arg(long)]
        config: PathBuf,
        /// Stool rate in revolutions per minute.
        #[arg(long, default_value_t = 1.0)]
        rpm: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let trace = commands::simulate(&cfg)?;
            eprint!("{}", commands::summarize(&cfg, &trace));
            match out.or(cfg.output.clone()) {
                Some(path) => output::emit_trace_csv(&trace, &path)?,
                None => print!("{}", output::render_trace_csv(&trace)),
            }
        }
        Command::ValidateKeff { config, pairs, out, jobs } => {
            let cfg = load_config(&config)?;
            let pairs = output::read_pairs_csv(&pairs)?;
            let rows = run_validation_table(&cfg, &pairs, jobs)?;
            for r in &rows {
                let fmt = |v: Option<f64>| v.map_or("unsettled".to_string(), |v| format!("{v:.4}"));
                eprintln!(
                    "{:>6} {:>6}  gap {:>7.3}%  pde {:>10}  k_eff {:>10.4}  error {:>8}%",
                    r.inner_cm,
                    r.outer_cm,
                    r.gap_percent,
                    fmt(r.angle_pde),
                    r.angle_keff,
                    fmt(r.percent_error)
                );
            }
            output::emit_table_csv(&rows, &out)?;
        }
        Command::Eigenvalues { config, count } => {
            let cfg = load_config(&config)?;
            print!("{}", commands::eigen_table(&cfg, count)?);
        }
        Command::EnergyAudit { trace, out } => {
            let trace = output::read_trace_csv(&trace)?;
            let ledger = EnergyLedger::from_trace(&trace);
            let (residual, at) = ledger.worst_residual();
            eprintln!(
                "worst residual {residual:.3e} J at t = {at} (peak input {:.6} J)",
                ledger.peak_input()
            );
            output::write_text(&out, &output::render_audit_csv(&ledger))?;
        }
        Command::Plot { trace: path, columns, out } => {
            let trace = output::read_trace_csv(&path)?;
            let times = trace.times();
            let series = columns
                .iter()
                .map(|c| {
                    output::trace_column(&trace, c)
                        .map(|ys| Series::new(c.clone(), &times, &ys))
                        .ok_or_else(|| selfrec_cli::CliError::config(None, format!("no column {c:?} in {}", path.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            output::emit_plot_svg(&path.display().to_string(), "time (s)", "value", &series, &out)?;
        }
        Command::Figure { preset, out } => {
            let (title, series, report) = commands::figure(&preset)?;
            eprint!("{report}");
            output::emit_plot_svg(&title, "time (s)", "angle (rad)", &series, &out)?;
        }
        Command::FluidSpeedBound { config, rpm } => {
            let cfg = load_config(&config)?;
            let rate = rpm * std::f64::consts::TAU / 60.0;
            let speed = commands::fluid_speed_bound(&cfg, rate)?;
            println!("{speed}");
            eprintln!("stool at {rpm} rpm ({rate:.5} rad/s) needs an average fluid speed of {speed:.4} m/s");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
