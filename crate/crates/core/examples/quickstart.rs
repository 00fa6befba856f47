//! Minimal library usage: run the zero-noise benchmark scenario and print the
//! estimation metrics.
//!
//! ```text
//! cargo run --release -p riseflight-core --example quickstart
//! ```

use riseflight_core::config::{benchmark_scenario, ControllerKind};
use riseflight_core::disturbance::DisturbanceConfig;
use riseflight_core::metrics::compute_metrics;
use riseflight_core::sim::run_scenario;

fn main() {
    let config = benchmark_scenario(ControllerKind::Rise, "rise", DisturbanceConfig::zero(0));
    let out = run_scenario(&config).expect("benchmark scenario");
    let metrics = compute_metrics(
        &out.trace,
        config.vehicle.mass,
        config.vehicle.inertia,
        config.metrics_window,
    );

    println!("steps logged: {}", out.trace.len());
    println!(
        "mass estimate: settled at {:?} s, final error {:.3}%",
        metrics.mass.settling_s, metrics.mass.final_error_pct
    );
    for (name, m) in ["Ix", "Iy", "Iz"].iter().zip(metrics.inertia.iter()) {
        println!(
            "{name} estimate: settled at {:?} s, final error {:.3}%",
            m.settling_s, m.final_error_pct
        );
    }
    println!(
        "trailing position RMSE per axis: {:?} m",
        metrics.position_rmse
    );
    println!("thrust chattering index: {:.2} N/s", metrics.chattering_index);
}
