//! End-to-end checks of the command-line interface: subcommands, exit codes,
//! and artifact layout.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_riseflight")
}

fn short_benchmark_json(duration: f64) -> String {
    let mut spec = riseflight_core::config::benchmark_experiment(Some(0.0), 1);
    for s in &mut spec.scenarios {
        s.duration = duration;
    }
    riseflight_core::config::to_json(&spec)
}

#[test]
fn run_subcommand_produces_artifacts_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(&config, short_benchmark_json(0.5)).unwrap();
    let out = dir.path().join("results");
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--jobs", "2"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for p in [
        "effective_config.json",
        "rise/trace.csv",
        "rise/metrics.json",
        "asmc/trace.csv",
        "comparison_rise_vs_asmc/report.json",
        "comparison_rise_vs_asmc/thrust.svg",
    ] {
        assert!(out.join(p).exists(), "missing {p}");
    }
}

#[test]
fn config_error_exits_one_with_field_message() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        short_benchmark_json(0.5).replace("\"k1\": 1.0", "\"k1\": -1.0"),
    )
    .unwrap();
    let output = Command::new(bin()).arg("run").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("k1"), "stderr: {err}");
}

#[test]
fn empty_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.json");
    std::fs::write(&config, "").unwrap();
    let output = Command::new(bin()).arg("run").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn divergence_exits_two_and_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("diverge.json");
    std::fs::write(
        &config,
        short_benchmark_json(3.0).replace("\"beta\": 1.0", "\"beta\": 1e7"),
    )
    .unwrap();
    let out = dir.path().join("results");
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(out.join("rise/trace.csv").exists());
}

#[test]
fn metrics_subcommand_reads_sibling_scenario_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(&config, short_benchmark_json(0.5)).unwrap();
    let out = dir.path().join("results");
    assert!(Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let output = Command::new(bin())
        .arg("metrics")
        .arg(out.join("rise/trace.csv"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("chattering_index"), "stdout: {text}");
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(parsed["mass"]["final_error_pct"].is_number());
}

#[test]
fn metrics_without_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let orphan = dir.path().join("orphan.csv");
    std::fs::write(&orphan, "t\n").unwrap();
    let output = Command::new(bin()).arg("metrics").arg(&orphan).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn plot_subcommand_renders_overlays() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(&config, short_benchmark_json(0.3)).unwrap();
    let out = dir.path().join("results");
    assert!(Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let plots = dir.path().join("plots");
    let output = Command::new(bin())
        .arg("plot")
        .arg(out.join("rise/trace.csv"))
        .arg(out.join("asmc/trace.csv"))
        .args(["--labels", "rise,asmc"])
        .arg("--out")
        .arg(&plots)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for p in ["thrust.svg", "position_error.svg", "attitude_error.svg", "mass_estimate.svg"] {
        assert!(plots.join(p).exists(), "missing {p}");
    }
}

#[test]
fn env_var_sets_default_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(&config, short_benchmark_json(0.2)).unwrap();
    let out = dir.path().join("env_out");
    let status = Command::new(bin())
        .arg("run")
        .arg(&config)
        .env("RISEFLIGHT_OUT", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("rise/trace.csv").exists());
}

#[test]
fn shipped_benchmark_config_file_matches_builtin() {
    // The checked-in config must load cleanly and resolve to exactly the
    // built-in benchmark experiment.
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_tables.json");
    let loaded = riseflight_core::config::load_config(&path).unwrap();
    let builtin = riseflight_core::config::benchmark_experiment(None, 0);
    assert_eq!(loaded, builtin);
}
