//! Command-line front end for the simulation library.
//!
//! Exit codes: 0 success, 1 configuration error, 2 divergence, 3 I/O error.
//! `RISEFLIGHT_OUT` sets the default output root (default `./out`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use riseflight_core::config::{benchmark_experiment, load_config, ExperimentSpec};
use riseflight_core::experiment::{run_experiment, ExperimentError, RunStatus};
use riseflight_core::metrics::compute_metrics;
use riseflight_core::plot::{estimates_chart, overlay_chart};
use riseflight_core::trace::{write_atomic, SimTrace};

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "riseflight",
    about = "Multirotor flight simulation: cascade RISE adaptive control with online mass-inertia estimation vs. a sliding-mode baseline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a JSON experiment specification.
    Run {
        /// Path to the experiment spec (JSON).
        config: PathBuf,
        /// Output directory (default: $RISEFLIGHT_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scenarios to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run the built-in benchmark study: the adaptive RISE controller against
    /// the sliding-mode baseline on the nominal vehicle, plus comparisons.
    ReproducePaper {
        /// Disturbance scale; 0 disables noise (default: 1.0).
        #[arg(long)]
        noise: Option<f64>,
        /// Seed for the disturbance realization.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (default: $RISEFLIGHT_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scenarios to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Recompute metrics for an existing trace CSV.
    Metrics {
        /// Path to a trace.csv produced by `run` or `reproduce-paper`.
        trace: PathBuf,
        /// Scenario configuration; defaults to `scenario.json` next to the
        /// trace.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render SVG charts from one or more trace CSVs.
    Plot {
        /// Trace files; with two or more, overlay comparisons are rendered.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Output directory (default: $RISEFLIGHT_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated labels matching the trace order.
        #[arg(long)]
        labels: Option<String>,
    },
}

fn default_out(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("RISEFLIGHT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn finish_experiment(spec: &ExperimentSpec, out: &Path, jobs: usize) -> ExitCode {
    match run_experiment(spec, out, jobs) {
        Ok(report) => {
            for outcome in &report.outcomes {
                match &outcome.status {
                    RunStatus::Ok => {
                        println!("ok       {:<12} -> {}", outcome.label, outcome.directory.display());
                        if !outcome.gain_checks_passed {
                            println!("warning  {:<12} gain conditions violated; see diagnostics.json", outcome.label);
                        }
                    }
                    RunStatus::Diverged { t, reason } => {
                        eprintln!("DIVERGED {:<12} at t = {t:.3}s: {reason}", outcome.label);
                    }
                }
            }
            if report.any_diverged() {
                ExitCode::from(EXIT_DIVERGED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(ExperimentError::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(ExperimentError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn cmd_metrics(trace_path: &Path, config_path: Option<PathBuf>) -> ExitCode {
    let config_path = config_path.unwrap_or_else(|| {
        trace_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("scenario.json")
    });
    let config_text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "cannot read scenario config {} ({e}); pass --config explicitly",
                config_path.display()
            );
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config: riseflight_core::ScenarioConfig = match serde_json::from_str(&config_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid scenario config {}: {e}", config_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let trace = match SimTrace::read_csv(trace_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read trace: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    if trace.is_empty() {
        eprintln!("trace is empty; no metrics to compute");
        return ExitCode::from(EXIT_CONFIG);
    }
    let metrics = compute_metrics(
        &trace,
        config.vehicle.mass,
        config.vehicle.inertia,
        config.metrics_window,
    );
    println!("{}", serde_json::to_string_pretty(&metrics).expect("json"));
    ExitCode::SUCCESS
}

fn cmd_plot(traces: &[PathBuf], out: &Path, labels: Option<String>) -> ExitCode {
    let labels: Vec<String> = match labels {
        Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
        None => traces
            .iter()
            .map(|p| {
                p.parent()
                    .and_then(|d| d.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string())
            })
            .collect(),
    };
    if labels.len() != traces.len() {
        eprintln!(
            "expected {} labels, got {}",
            traces.len(),
            labels.len()
        );
        return ExitCode::from(EXIT_CONFIG);
    }

    let mut loaded = Vec::new();
    for path in traces {
        match SimTrace::read_csv(path) {
            Ok(t) => loaded.push(t),
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_IO);
            }
        }
    }

    let write = |name: &str, svg: String| -> Result<(), riseflight_core::trace::TraceError> {
        let path = out.join(name);
        write_atomic(&path, svg.as_bytes())?;
        println!("wrote {}", path.display());
        Ok(())
    };

    let result: Result<(), riseflight_core::trace::TraceError> = (|| {
        if loaded.len() == 1 {
            // Truth values are unknown here; chart the estimates alone.
            write(
                "estimates.svg",
                estimates_chart(&loaded[0], f64::NAN, [f64::NAN; 3]),
            )?;
        }
        let pairs: Vec<(&SimTrace, &str)> = loaded
            .iter()
            .zip(labels.iter())
            .map(|(t, l)| (t, l.as_str()))
            .collect();
        write(
            "thrust.svg",
            overlay_chart(&pairs, "Thrust magnitude", "force [N]", |r| {
                (r.force_x * r.force_x + r.force_y * r.force_y + r.force_z * r.force_z).sqrt()
            }),
        )?;
        write(
            "position_error.svg",
            overlay_chart(&pairs, "Position tracking error norm", "error [m]", |r| {
                (r.e_o1_x * r.e_o1_x + r.e_o1_y * r.e_o1_y + r.e_o1_z * r.e_o1_z).sqrt()
            }),
        )?;
        write(
            "attitude_error.svg",
            overlay_chart(&pairs, "Attitude tracking error norm", "error [rad]", |r| {
                (r.e_i1_x * r.e_i1_x + r.e_i1_y * r.e_i1_y + r.e_i1_z * r.e_i1_z).sqrt()
            }),
        )?;
        write(
            "mass_estimate.svg",
            overlay_chart(&pairs, "Mass estimate", "mass [kg]", |r| r.theta1_hat),
        )?;
        Ok(())
    })();

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("io error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, jobs } => {
            let spec = match load_config(&config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            // Explicit flag wins over the spec's own output_dir.
            let out = default_out(out.or_else(|| spec.output_dir.clone().map(PathBuf::from)));
            finish_experiment(&spec, &out, jobs)
        }
        Command::ReproducePaper {
            noise,
            seed,
            out,
            jobs,
        } => {
            let spec = benchmark_experiment(noise, seed);
            finish_experiment(&spec, &default_out(out), jobs)
        }
        Command::Metrics { trace, config } => cmd_metrics(&trace, config),
        Command::Plot { traces, out, labels } => {
            let out = default_out(out);
            if let Err(e) = std::fs::create_dir_all(&out) {
                eprintln!("cannot create {}: {e}", out.display());
                return ExitCode::from(EXIT_IO);
            }
            cmd_plot(&traces, &out, labels)
        }
    }
}
