//! Experiment front end: runs every scenario of a spec, persists traces,
//! metrics, diagnostics and effective configurations, and renders the
//! comparison reports.
//!
//! Output layout under the chosen root:
//!
//! ```text
//! <root>/effective_config.json          fully-resolved experiment spec
//! <root>/<scenario>/trace.csv           fixed-schema run log
//! <root>/<scenario>/scenario.json       resolved scenario configuration
//! <root>/<scenario>/metrics.json        tracking/estimation metrics
//! <root>/<scenario>/diagnostics.json    estimator + gain-check reports
//! <root>/<scenario>/estimates.svg       per-run estimate chart
//! <root>/comparison_<label>/report.json paired metrics summary
//! <root>/comparison_<label>/*.svg       estimate/error/thrust overlays
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ComparisonSpec, ExperimentSpec, ScenarioConfig};
use crate::diagnostics::{estimator_diagnostics, EstimatorDiagnostics};
use crate::metrics::{compute_metrics, RunMetrics};
use crate::plot::{estimates_chart, overlay_chart};
use crate::rise::GainReport;
use crate::sim::{run_scenario, SimError};
use crate::trace::{write_atomic, SimTrace, TRACE_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("io failure: {0}")]
    Io(#[from] crate::trace::TraceError),
}

/// Terminal status of one scenario run.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged { t: f64, reason: String },
}

/// Everything recorded about one scenario after the experiment finishes.
#[derive(Debug, Serialize)]
pub struct ScenarioOutcome {
    pub label: String,
    pub status: RunStatus,
    pub directory: PathBuf,
    pub metrics: Option<RunMetrics>,
    pub saturation_events: u64,
    pub gain_checks_passed: bool,
    #[serde(skip)]
    pub trace: SimTrace,
}

/// Experiment-level result.
#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub output_root: PathBuf,
    pub trace_schema_version: u32,
    pub outcomes: Vec<ScenarioOutcome>,
    pub comparisons: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn any_diverged(&self) -> bool {
        self.outcomes
            .iter()
            .any(|o| matches!(o.status, RunStatus::Diverged { .. }))
    }
}

#[derive(Serialize)]
struct DiagnosticsFile<'a> {
    gain_report: &'a GainReport,
    estimator: Option<&'a EstimatorDiagnostics>,
    saturation_events: u64,
}

#[derive(Serialize)]
struct ComparisonReport<'a> {
    label: &'a str,
    first: &'a str,
    second: &'a str,
    first_metrics: &'a RunMetrics,
    second_metrics: &'a RunMetrics,
    /// first/second chattering-index ratio.
    chattering_ratio: f64,
    first_saturation_events: u64,
    second_saturation_events: u64,
    /// Mass 2%-settling comparison; unsettled runs compare as slowest.
    first_mass_settles_faster: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("json serialization");
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn run_one(
    config: &ScenarioConfig,
    dir: &Path,
) -> Result<ScenarioOutcome, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|source| crate::trace::TraceError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_json(&dir.join("scenario.json"), config)?;

    let (trace, status, gain_report, saturation_events) = match run_scenario(config) {
        Ok(out) => (out.trace, RunStatus::Ok, Some(out.gain_report), out.saturation_events),
        Err(SimError::Diverged { t, reason, partial }) => (
            *partial,
            RunStatus::Diverged { t, reason },
            None,
            0,
        ),
        Err(SimError::Controller { t, source, partial }) => (
            *partial,
            RunStatus::Diverged {
                t,
                reason: source.to_string(),
            },
            None,
            0,
        ),
        Err(SimError::Config(msg)) => return Err(crate::config::ConfigError::Invalid(msg).into()),
    };

    trace.write_csv(&dir.join("trace.csv"))?;

    let metrics = if trace.is_empty() {
        None
    } else {
        let m = compute_metrics(
            &trace,
            config.vehicle.mass,
            config.vehicle.inertia,
            config.metrics_window,
        );
        write_json(&dir.join("metrics.json"), &m)?;
        Some(m)
    };

    let gain_report = gain_report.unwrap_or_else(|| {
        crate::rise::validate_gains(
            &config.outer_gains,
            &config.inner_gains,
            (config.analysis_bounds.xi_outer, config.analysis_bounds.xi_outer_rate),
            (config.analysis_bounds.xi_inner, config.analysis_bounds.xi_inner_rate),
        )
    });
    let estimator = config
        .diagnostics
        .enabled
        .then(|| estimator_diagnostics(&trace, config));
    write_json(
        &dir.join("diagnostics.json"),
        &DiagnosticsFile {
            gain_report: &gain_report,
            estimator: estimator.as_ref(),
            saturation_events,
        },
    )?;

    write_atomic(
        &dir.join("estimates.svg"),
        estimates_chart(&trace, config.vehicle.mass, config.vehicle.inertia).as_bytes(),
    )?;

    Ok(ScenarioOutcome {
        label: config.label.clone(),
        status,
        directory: dir.to_path_buf(),
        metrics,
        saturation_events,
        gain_checks_passed: gain_report.all_satisfied(),
        trace,
    })
}

fn emit_comparison(
    spec: &ComparisonSpec,
    outcomes: &BTreeMap<String, &ScenarioOutcome>,
    dir: &Path,
) -> Result<(), ExperimentError> {
    let first = outcomes[&spec.first];
    let second = outcomes[&spec.second];

    if let (Some(fm), Some(sm)) = (&first.metrics, &second.metrics) {
        let ratio = if sm.chattering_index > 0.0 {
            fm.chattering_index / sm.chattering_index
        } else {
            f64::INFINITY
        };
        let faster = match (fm.mass.settling_s, sm.mass.settling_s) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            _ => false,
        };
        write_json(
            &dir.join("report.json"),
            &ComparisonReport {
                label: &spec.label,
                first: &spec.first,
                second: &spec.second,
                first_metrics: fm,
                second_metrics: sm,
                chattering_ratio: ratio,
                first_saturation_events: first.saturation_events,
                second_saturation_events: second.saturation_events,
                first_mass_settles_faster: faster,
            },
        )?;
    }

    let pair = [
        (&first.trace, first.label.as_str()),
        (&second.trace, second.label.as_str()),
    ];
    let charts: [(&str, String); 5] = [
        (
            "mass_estimate.svg",
            overlay_chart(&pair, "Mass estimate", "mass [kg]", |r| r.theta1_hat),
        ),
        (
            "position_error.svg",
            overlay_chart(&pair, "Position tracking error norm", "error [m]", |r| {
                (r.e_o1_x * r.e_o1_x + r.e_o1_y * r.e_o1_y + r.e_o1_z * r.e_o1_z).sqrt()
            }),
        ),
        (
            "attitude_error.svg",
            overlay_chart(&pair, "Attitude tracking error norm", "error [rad]", |r| {
                (r.e_i1_x * r.e_i1_x + r.e_i1_y * r.e_i1_y + r.e_i1_z * r.e_i1_z).sqrt()
            }),
        ),
        (
            "thrust.svg",
            overlay_chart(&pair, "Thrust magnitude", "force [N]", |r| {
                (r.force_x * r.force_x + r.force_y * r.force_y + r.force_z * r.force_z).sqrt()
            }),
        ),
        (
            "inertia_estimates.svg",
            overlay_chart(&pair, "Yaw inertia estimate", "Iz [kg m^2]", |r| {
                r.theta2_hat_z
            }),
        ),
    ];
    for (name, svg) in charts {
        write_atomic(&dir.join(name), svg.as_bytes())?;
    }
    Ok(())
}

/// Runs every scenario of the spec, `jobs` at a time, then the comparisons.
/// Scenario failures (divergence) are isolated: the partial trace and an
/// error record are persisted and the remaining scenarios still run.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_root: &Path,
    jobs: usize,
) -> Result<ExperimentReport, ExperimentError> {
    spec.validate()?;
    std::fs::create_dir_all(out_root).map_err(|source| crate::trace::TraceError::Io {
        path: out_root.display().to_string(),
        source,
    })?;
    write_json(&out_root.join("effective_config.json"), spec)?;

    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let results: Vec<Result<ScenarioOutcome, ExperimentError>> = pool.install(|| {
        use rayon::prelude::*;
        spec.scenarios
            .par_iter()
            .map(|scenario| run_one(scenario, &out_root.join(&scenario.label)))
            .collect()
    });

    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }

    let by_label: BTreeMap<String, &ScenarioOutcome> = outcomes
        .iter()
        .map(|o| (o.label.clone(), o))
        .collect();

    let mut comparison_dirs = Vec::new();
    if spec.emit_plots {
        for comparison in &spec.comparisons {
            let dir = out_root.join(format!("comparison_{}", comparison.label));
            std::fs::create_dir_all(&dir).map_err(|source| crate::trace::TraceError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            emit_comparison(comparison, &by_label, &dir)?;
            comparison_dirs.push(dir);
        }
    }

    let report = ExperimentReport {
        output_root: out_root.to_path_buf(),
        trace_schema_version: TRACE_SCHEMA_VERSION,
        outcomes,
        comparisons: comparison_dirs,
    };
    write_json(&out_root.join("report.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::benchmark_experiment;

    #[test]
    fn benchmark_experiment_produces_expected_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = benchmark_experiment(Some(0.0), 3);
        for s in &mut spec.scenarios {
            s.duration = 0.5;
        }
        let report = run_experiment(&spec, dir.path(), 2).unwrap();
        assert_eq!(report.outcomes.len(), 2);
        assert!(!report.any_diverged());
        for sub in ["rise", "asmc"] {
            for file in ["trace.csv", "scenario.json", "metrics.json", "diagnostics.json", "estimates.svg"] {
                assert!(
                    dir.path().join(sub).join(file).exists(),
                    "missing {sub}/{file}"
                );
            }
        }
        let cmp = dir.path().join("comparison_rise_vs_asmc");
        for file in ["report.json", "mass_estimate.svg", "thrust.svg", "position_error.svg", "attitude_error.svg"] {
            assert!(cmp.join(file).exists(), "missing comparison {file}");
        }
        assert!(dir.path().join("effective_config.json").exists());
    }

    #[test]
    fn single_scenario_spec_emits_no_comparisons() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = benchmark_experiment(Some(0.0), 3);
        spec.scenarios.truncate(1);
        spec.comparisons.clear();
        spec.scenarios[0].duration = 0.2;
        let report = run_experiment(&spec, dir.path(), 1).unwrap();
        assert!(report.comparisons.is_empty());
        assert!(!dir.path().join("comparison_rise_vs_asmc").exists());
    }

    #[test]
    fn effective_config_round_trips_through_loader() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = benchmark_experiment(Some(0.25), 9);
        for s in &mut spec.scenarios {
            s.duration = 0.1;
        }
        run_experiment(&spec, dir.path(), 1).unwrap();
        let reloaded = crate::config::load_config(&dir.path().join("effective_config.json")).unwrap();
        assert_eq!(spec, reloaded);
    }

    #[test]
    fn diverged_scenario_is_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = benchmark_experiment(Some(0.0), 3);
        spec.scenarios[0].inner_gains.beta = 1e7; // force divergence
        for s in &mut spec.scenarios {
            s.duration = 3.0;
        }
        let report = run_experiment(&spec, dir.path(), 1).unwrap();
        assert!(report.any_diverged());
        // The healthy scenario still produced its outputs.
        assert!(dir.path().join("asmc/metrics.json").exists());
        // The diverged one still wrote its partial trace.
        assert!(dir.path().join("rise/trace.csv").exists());
    }
}
