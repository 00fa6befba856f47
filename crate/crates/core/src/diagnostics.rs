//! Post-run analysis diagnostics: Lyapunov-style decay monitors and the
//! finite-time consistency check.

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::estimator::{ft_diagnostic, pe_diagnostic, FtReport, PeReport};
use crate::math::Vec3;
use crate::trace::SimTrace;

/// Windowed monotonicity report for a scalar diagnostic signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Window length used for the comparison, s.
    pub window_s: f64,
    /// Time after which the decay is expected, s.
    pub transient_s: f64,
    /// Number of window-to-window increases beyond tolerance.
    pub violations: usize,
    /// Largest relative window-to-window increase observed.
    pub worst_increase: f64,
    pub windows: usize,
}

/// Checks that the per-window maximum of `series` is non-increasing after the
/// transient. A small relative tolerance absorbs floating-point jitter.
pub fn windowed_monotonicity(
    times: &[f64],
    series: &[f64],
    window_s: f64,
    transient_s: f64,
    tolerance: f64,
) -> MonotonicityReport {
    let mut maxima: Vec<f64> = Vec::new();
    let mut window_end = transient_s + window_s;
    let mut current = f64::NEG_INFINITY;
    let mut seen = false;
    for (t, v) in times.iter().zip(series) {
        if *t < transient_s {
            continue;
        }
        if *t >= window_end {
            if seen {
                maxima.push(current);
            }
            current = f64::NEG_INFINITY;
            while *t >= window_end {
                window_end += window_s;
            }
        }
        current = current.max(*v);
        seen = true;
    }
    if seen {
        maxima.push(current);
    }
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for pair in maxima.windows(2) {
        let scale = pair[0].abs().max(1e-12);
        let increase = (pair[1] - pair[0]) / scale;
        if increase > tolerance {
            violations += 1;
            worst = worst.max(increase);
        }
    }
    MonotonicityReport {
        window_s,
        transient_s,
        violations,
        worst_increase: worst,
        windows: maxima.len(),
    }
}

/// Lyapunov diagnostic summary for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub v1_final: f64,
    pub v2_final: f64,
    pub v1_monotonicity: MonotonicityReport,
    pub v2_monotonicity: MonotonicityReport,
}

/// Evaluates the decay monitors on the logged V1/V2 columns.
pub fn lyapunov_diagnostic(
    trace: &SimTrace,
    window_s: f64,
    transient_s: f64,
) -> LyapunovReport {
    let times = trace.times();
    let v1 = trace.column(|r| r.v1);
    let v2 = trace.column(|r| r.v2);
    LyapunovReport {
        v1_final: v1.last().copied().unwrap_or(0.0),
        v2_final: v2.last().copied().unwrap_or(0.0),
        v1_monotonicity: windowed_monotonicity(&times, &v1, window_s, transient_s, 1e-6),
        v2_monotonicity: windowed_monotonicity(&times, &v2, window_s, transient_s, 1e-6),
    }
}

/// Largest square-root decay constant consistent with a realized `V2`
/// trajectory.
///
/// The bound form `dV/dt <= -c1 sqrt(V)` integrates to
/// `sqrt(V(t)) >= sqrt(V(0)) - c1 t / 2`, so the largest admissible constant
/// over the decay from the series maximum down to `v_threshold` is
/// `c1 = min_t 2 (sqrt(V(0)) - sqrt(V(t))) / t`. Returns `None` when the
/// series never reaches the threshold (no finite-time collapse to certify).
pub fn fit_sqrt_decay_constant(times: &[f64], v2: &[f64], v_threshold: f64) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let start = v2
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)?;
    let sqrt_v0 = v2[start].sqrt();
    if sqrt_v0 <= 0.0 {
        return None;
    }
    let mut c1 = f64::INFINITY;
    let mut crossed = false;
    for i in start + 1..times.len() {
        let elapsed = times[i] - times[start];
        if elapsed <= 0.0 {
            continue;
        }
        c1 = c1.min(2.0 * (sqrt_v0 - v2[i].sqrt()) / elapsed);
        if v2[i] <= v_threshold {
            crossed = true;
            break;
        }
    }
    (crossed && c1.is_finite() && c1 > 0.0).then_some(c1)
}

/// Full estimator diagnostic bundle for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorDiagnostics {
    pub ft_inner: FtReport,
    pub pe: PeReport,
    pub lyapunov: LyapunovReport,
    /// Fitted decay constants used when the configuration provides none.
    pub fitted_c1: Option<f64>,
    pub fitted_c2: Option<f64>,
}

/// Builds the estimator diagnostics from a completed trace.
pub fn estimator_diagnostics(trace: &SimTrace, config: &ScenarioConfig) -> EstimatorDiagnostics {
    let times = trace.times();
    let p_inv_h2 = trace.column(|r| r.p_inv_h2_norm);
    let v2: Vec<f64> = p_inv_h2.iter().map(|x| 0.5 * x * x).collect();

    let threshold = 1e-3 * p_inv_h2.first().copied().unwrap_or(0.0);
    let fitted = fit_sqrt_decay_constant(&times, &v2, 0.5 * threshold * threshold);
    let (c1, c2) = match (config.analysis_bounds.ft_c1, config.analysis_bounds.ft_c2) {
        (Some(c1), Some(c2)) => (c1, c2),
        _ => (fitted.unwrap_or(0.0), 0.0),
    };

    let theta_true = Vec3::from_row_slice(&config.vehicle.inertia);
    let theta_init = Vec3::from_row_slice(&config.initial_estimates.inertia);
    let theta_tilde_0 = (theta_true - theta_init).norm();
    let lambda_min_final = trace
        .records
        .last()
        .map(|r| r.p2_lambda_min)
        .unwrap_or(0.0);

    let ft_inner = ft_diagnostic(
        &times,
        &p_inv_h2,
        theta_tilde_0,
        config.analysis_bounds.xi_delta2,
        config.estimator.rho2,
        c1,
        c2,
        lambda_min_final,
        theta_true.norm(),
        1e-3,
    );

    let pe = pe_diagnostic(
        &times,
        &trace.column(|r| r.p1_excess),
        &trace.column(|r| r.p2_lambda_min_excess),
    );

    let lyapunov = lyapunov_diagnostic(
        trace,
        config.diagnostics.window,
        config.diagnostics.transient,
    );

    EstimatorDiagnostics {
        ft_inner,
        pe,
        lyapunov,
        fitted_c1: fitted,
        fitted_c2: fitted.map(|_| 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_accepts_decaying_series() {
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 1e-2).collect();
        let series: Vec<f64> = times.iter().map(|t| (-0.3 * t).exp()).collect();
        let report = windowed_monotonicity(&times, &series, 0.5, 1.0, 1e-9);
        assert_eq!(report.violations, 0);
        assert!(report.windows > 10);
    }

    #[test]
    fn monotonicity_flags_growth() {
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 1e-2).collect();
        let series: Vec<f64> = times.iter().map(|t| 1.0 + 0.1 * t).collect();
        let report = windowed_monotonicity(&times, &series, 0.5, 1.0, 1e-9);
        assert!(report.violations > 0);
    }

    #[test]
    fn fitted_constant_recovers_a_pure_sqrt_decay() {
        // dV/dt = -c1 sqrt(V) reaches zero in finite time 2 sqrt(V0) / c1.
        let c1_true = 0.8;
        let dt = 1e-3;
        let mut v: f64 = 4.0;
        let mut times = Vec::new();
        let mut vs = Vec::new();
        let mut t = 0.0;
        while v > 1e-12 {
            times.push(t);
            vs.push(v);
            let dv = -c1_true * v.sqrt();
            v = (v + dv * dt).max(0.0);
            t += dt;
        }
        let threshold = 1e-5;
        let c1 = fit_sqrt_decay_constant(&times, &vs, threshold).unwrap();
        assert!(c1 > 0.0 && c1 <= c1_true * 1.01, "fitted c1 {c1}");
        // The implied bound must cover the observed crossing time.
        let crossing = times
            .iter()
            .zip(&vs)
            .find(|(_, &v)| v <= threshold)
            .map(|(&t, _)| t)
            .unwrap();
        let bound = crate::estimator::ft_time_bound(c1, 0.0, vs[0].sqrt()).unwrap();
        assert!(bound >= crossing, "bound {bound} < crossing {crossing}");
    }

    #[test]
    fn fit_returns_none_without_a_crossing() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let vs: Vec<f64> = times.iter().map(|t| 1.0 / (1.0 + t)).collect();
        // Series never reaches the (tiny) threshold within the data.
        assert_eq!(fit_sqrt_decay_constant(&times, &vs, 1e-12), None);
    }
}
