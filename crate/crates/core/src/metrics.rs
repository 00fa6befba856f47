//! Run metrics: tracking RMSE, estimate settling and overshoot, chattering.

use serde::{Deserialize, Serialize};

use crate::trace::SimTrace;

/// Settling and overshoot statistics for one estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamMetrics {
    /// First time the estimate enters and remains within +/-2% of truth;
    /// `None` when the run ends outside the band.
    pub settling_s: Option<f64>,
    /// Largest excursion beyond the true value after the first crossing, as a
    /// percentage of truth. Zero when the estimate never crosses.
    pub overshoot_pct: f64,
    /// Relative error at the final sample, percent.
    pub final_error_pct: f64,
}

/// Metrics computed from one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Per-axis position tracking RMSE over the trailing window, m.
    pub position_rmse: [f64; 3],
    /// Per-axis attitude tracking RMSE over the trailing window, rad.
    pub attitude_rmse: [f64; 3],
    pub mass: ParamMetrics,
    pub inertia: [ParamMetrics; 3],
    /// Total variation of the force norm per second, N/s.
    pub chattering_index: f64,
    /// Time at which all four estimates are settled, `None` if any is not.
    pub estimation_convergence_s: Option<f64>,
    /// Trailing window actually used for the RMSE, s.
    pub window_s: f64,
    /// Fraction of steps on which an adaptation clamp was active.
    pub saturation_fraction: f64,
    pub notes: Vec<String>,
}

/// Settling band half-width relative to truth.
pub const SETTLING_BAND: f64 = 0.02;

/// First time `series` enters the +/-`band` around `truth` and stays there.
/// Returns 0 when the whole series is inside the band.
pub fn settling_time(times: &[f64], series: &[f64], truth: f64, band: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), series.len());
    let tol = band * truth.abs();
    let mut last_outside = None;
    for (i, v) in series.iter().enumerate() {
        if (v - truth).abs() > tol {
            last_outside = Some(i);
        }
    }
    match last_outside {
        None => times.first().map(|_| 0.0),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

/// Largest excursion beyond `truth` after the series first crosses it,
/// in percent of truth.
pub fn overshoot_pct(series: &[f64], truth: f64) -> f64 {
    let Some(first) = series.first() else {
        return 0.0;
    };
    let initial_side = (first - truth).signum();
    if initial_side == 0.0 {
        return 0.0;
    }
    let mut crossed = false;
    let mut worst = 0.0f64;
    for v in series {
        let offset = v - truth;
        if !crossed && offset * initial_side < 0.0 {
            crossed = true;
        }
        if crossed && offset * initial_side < 0.0 {
            worst = worst.max(offset.abs());
        }
    }
    100.0 * worst / truth.abs()
}

/// Total variation of a series divided by elapsed time.
pub fn total_variation_rate(times: &[f64], series: &[f64]) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    let tv: f64 = series.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let span = times[times.len() - 1] - times[0];
    if span > 0.0 {
        tv / span
    } else {
        0.0
    }
}

fn rmse_tail(times: &[f64], series: &[f64], window: f64) -> (f64, f64) {
    let end = *times.last().unwrap_or(&0.0);
    let start = (end - window).max(times.first().copied().unwrap_or(0.0));
    let mut sum = 0.0;
    let mut n = 0usize;
    for (t, v) in times.iter().zip(series) {
        if *t >= start {
            sum += v * v;
            n += 1;
        }
    }
    let used = end - start;
    if n == 0 {
        (0.0, used)
    } else {
        ((sum / n as f64).sqrt(), used)
    }
}

fn param_metrics(times: &[f64], series: &[f64], truth: f64) -> ParamMetrics {
    let final_error_pct = series
        .last()
        .map(|v| 100.0 * (v - truth).abs() / truth.abs())
        .unwrap_or(0.0);
    ParamMetrics {
        settling_s: settling_time(times, series, truth, SETTLING_BAND),
        overshoot_pct: overshoot_pct(series, truth),
        final_error_pct,
    }
}

/// Computes all metrics for a trace against the true parameters.
pub fn compute_metrics(
    trace: &SimTrace,
    true_mass: f64,
    true_inertia: [f64; 3],
    window_s: f64,
) -> RunMetrics {
    let times = trace.times();
    let mut notes = Vec::new();
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    let window = if span < window_s {
        if !times.is_empty() {
            notes.push(format!(
                "trace shorter than the {window_s} s window; using {span:.3} s"
            ));
        }
        span
    } else {
        window_s
    };

    let axis_rmse = |f: [fn(&crate::trace::TraceRecord) -> f64; 3]| {
        [
            rmse_tail(&times, &trace.column(f[0]), window).0,
            rmse_tail(&times, &trace.column(f[1]), window).0,
            rmse_tail(&times, &trace.column(f[2]), window).0,
        ]
    };

    let position_rmse = axis_rmse([|r| r.e_o1_x, |r| r.e_o1_y, |r| r.e_o1_z]);
    let attitude_rmse = axis_rmse([|r| r.e_i1_x, |r| r.e_i1_y, |r| r.e_i1_z]);

    let mass_series = trace.column(|r| r.theta1_hat);
    let inertia_series = [
        trace.column(|r| r.theta2_hat_x),
        trace.column(|r| r.theta2_hat_y),
        trace.column(|r| r.theta2_hat_z),
    ];

    let mass = param_metrics(&times, &mass_series, true_mass);
    let inertia = [
        param_metrics(&times, &inertia_series[0], true_inertia[0]),
        param_metrics(&times, &inertia_series[1], true_inertia[1]),
        param_metrics(&times, &inertia_series[2], true_inertia[2]),
    ];

    let estimation_convergence_s = [mass.settling_s, inertia[0].settling_s, inertia[1].settling_s, inertia[2].settling_s]
        .into_iter()
        .try_fold(0.0f64, |acc, s| s.map(|v| acc.max(v)));

    let force_norms = trace.force_norms();
    let chattering_index = total_variation_rate(&times, &force_norms);

    let sat_steps = trace
        .records
        .iter()
        .filter(|r| r.sat_active != 0.0)
        .count();
    let saturation_fraction = if trace.is_empty() {
        0.0
    } else {
        sat_steps as f64 / trace.len() as f64
    };

    RunMetrics {
        position_rmse,
        attitude_rmse,
        mass,
        inertia,
        chattering_index,
        estimation_convergence_s,
        window_s: window,
        saturation_fraction,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ramp_times(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn constant_series_at_truth_settles_immediately() {
        let times = ramp_times(100, 0.01);
        let series = vec![2.0; 100];
        assert_eq!(settling_time(&times, &series, 2.0, 0.02), Some(0.0));
        assert_eq!(overshoot_pct(&series, 2.0), 0.0);
    }

    #[test]
    fn first_order_approach_settles_at_analytic_time() {
        // theta(t) = theta_true (1 - exp(-t/2)): the 2% band is entered at
        // t = -2 ln 0.02 = 7.824.
        let dt = 1e-3;
        let times = ramp_times(12_000, dt);
        let series: Vec<f64> = times
            .iter()
            .map(|t| 3.0 * (1.0 - (-t / 2.0).exp()))
            .collect();
        let settle = settling_time(&times, &series, 3.0, 0.02).unwrap();
        assert_relative_eq!(settle, -2.0 * 0.02f64.ln(), epsilon = 2.0 * dt);
        assert_relative_eq!(settle, 7.824, epsilon = 1e-2);
    }

    #[test]
    fn unsettled_series_reports_none() {
        let times = ramp_times(100, 0.01);
        let series = vec![5.0; 100];
        assert_eq!(settling_time(&times, &series, 2.0, 0.02), None);
    }

    #[test]
    fn overshoot_measures_far_side_excursion() {
        // Starts above truth, dips 10% below, recovers.
        let series = vec![0.3, 0.25, 0.2, 0.18, 0.19, 0.2, 0.2];
        assert_relative_eq!(overshoot_pct(&series, 0.2), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn no_crossing_means_zero_overshoot() {
        let series = vec![0.3, 0.25, 0.22, 0.21];
        assert_eq!(overshoot_pct(&series, 0.2), 0.0);
    }

    #[test]
    fn square_wave_chattering_index_is_4a_over_t() {
        // Square wave of amplitude a and period T: total variation 4a per
        // period.
        let a = 3.0;
        let period = 0.5;
        let dt = 1e-3;
        let times = ramp_times(10_000, dt);
        let series: Vec<f64> = times
            .iter()
            .map(|t| if ((t / (period / 2.0)) as u64).is_multiple_of(2) { a } else { -a })
            .collect();
        let rate = total_variation_rate(&times, &series);
        // Finite sample misses the boundary flips; 3% covers the edge effect.
        assert_relative_eq!(rate, 4.0 * a / period, epsilon = 0.03 * 4.0 * a / period);
    }
}
