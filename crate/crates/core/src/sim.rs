//! Fixed-step closed-loop simulation.
//!
//! Per step: reference evaluation, outer loop, attitude extraction and
//! reference derivatives, inner loop, estimator filter/Gram/update advance,
//! then a classical RK4 plant step with the wrench and disturbance held
//! constant over the step. A run is strictly sequential and fully determined
//! by its configuration (the seed fixes every random draw).

use nalgebra::SVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::asmc::AsmcCascade;
use crate::config::{ControllerKind, ForceApplication, ScenarioConfig};
use crate::disturbance::DisturbanceGenerator;
use crate::estimator::{
    InnerEstimator, InnerFilterBank, InnerGram, OuterEstimator, OuterFilterBank, OuterGram,
};
use crate::math::{rk4_step_vec, rotation_matrix, Vec3};
use crate::model::{
    dynamics_deriv_unchecked, regressor_inner, regressor_outer, ControlWrench, Disturbance,
    MassInertia, VehicleState,
};
use crate::rise::{validate_gains, GainReport, RiseCascade, RiseError};
use crate::trace::{SimTrace, TraceRecord};
use crate::trajectory::reference_trajectory;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation diverged at t = {t:.3}s: {reason}")]
    Diverged {
        t: f64,
        reason: String,
        /// Everything logged up to the failure.
        partial: Box<SimTrace>,
    },
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("controller failure at t = {t:.3}s: {source}")]
    Controller {
        t: f64,
        #[source]
        source: RiseError,
        partial: Box<SimTrace>,
    },
}

/// Successful run output: the trace plus the gain-validation report and the
/// saturation-event counter for sliding-mode runs.
#[derive(Debug)]
pub struct SimOutput {
    pub trace: SimTrace,
    pub gain_report: GainReport,
    pub saturation_events: u64,
}

/// Advances the plant by one RK4 step with wrench and disturbance held.
pub fn rk4_step(
    state: &VehicleState,
    wrench: &ControlWrench,
    params: &MassInertia,
    dist: &Disturbance,
    gravity: f64,
    dt: f64,
) -> VehicleState {
    let y = state.to_vector();
    let f = |v: &SVector<f64, 12>| {
        let s = VehicleState::from_vector(v);
        let d = dynamics_deriv_unchecked(&s, wrench, params, dist, gravity);
        let mut out = SVector::<f64, 12>::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&d.velocity);
        out.fixed_rows_mut::<3>(3).copy_from(&d.acceleration);
        out.fixed_rows_mut::<3>(6).copy_from(&d.rate);
        out.fixed_rows_mut::<3>(9).copy_from(&d.angular_acceleration);
        out
    };
    VehicleState::from_vector(&rk4_step_vec(f, &y, dt))
}

enum Controller {
    Rise(RiseCascade),
    Asmc(AsmcCascade),
}

struct EstimatorPair {
    outer: OuterEstimator,
    inner: InnerEstimator,
    enabled: bool,
}

/// Measurement-noise source for the estimator regressors (plant unaffected).
struct RegressorNoise {
    rng: ChaCha8Rng,
    accel_std: f64,
    angular_std: f64,
}

impl RegressorNoise {
    fn new(seed: u64, accel_std: f64, angular_std: f64) -> Self {
        Self {
            // Independent stream from the disturbance process.
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            accel_std,
            angular_std,
        }
    }

    fn active(&self) -> bool {
        self.accel_std > 0.0 || self.angular_std > 0.0
    }

    fn perturb(&mut self, accel: &Vec3, angular: &Vec3) -> (Vec3, Vec3) {
        if !self.active() {
            return (*accel, *angular);
        }
        let mut draw = |std: f64| -> Vec3 {
            let a: f64 = StandardNormal.sample(&mut self.rng);
            let b: f64 = StandardNormal.sample(&mut self.rng);
            let c: f64 = StandardNormal.sample(&mut self.rng);
            Vec3::new(std * a, std * b, std * c)
        };
        let na = draw(self.accel_std);
        let nw = draw(self.angular_std);
        (accel + na, angular + nw)
    }
}

/// Runs one scenario to completion (or divergence).
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimOutput, SimError> {
    config
        .validate()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let params = config
        .vehicle
        .to_params()
        .map_err(|e| SimError::Config(e.to_string()))?;

    let gain_report = validate_gains(
        &config.outer_gains,
        &config.inner_gains,
        (
            config.analysis_bounds.xi_outer,
            config.analysis_bounds.xi_outer_rate,
        ),
        (
            config.analysis_bounds.xi_inner,
            config.analysis_bounds.xi_inner_rate,
        ),
    );

    let (theta1_0, theta2_0) = config.initial_theta();
    let est_cfg = &config.estimator;
    let mut estimators = EstimatorPair {
        outer: OuterEstimator {
            filters: OuterFilterBank::new(est_cfg.alpha1),
            gram: OuterGram::new(est_cfg.l1, est_cfg.rho1, est_cfg.offset_mode),
            theta1_hat: theta1_0,
            gamma: est_cfg.gamma,
            gamma1: est_cfg.gamma1,
        },
        inner: InnerEstimator {
            filters: InnerFilterBank::new(est_cfg.alpha2),
            gram: InnerGram::new(est_cfg.l2, est_cfg.rho2, est_cfg.offset_mode),
            theta2_hat: Vec3::from_row_slice(&config.initial_estimates.inertia),
            gamma_diag: Vec3::from_row_slice(&est_cfg.gamma_diag),
            sigma1: est_cfg.sigma1,
            sigma2: est_cfg.sigma2,
            eps_h: est_cfg.eps_h,
        },
        enabled: est_cfg.enabled,
    };

    let mut controller = match config.controller {
        ControllerKind::Rise => Controller::Rise(RiseCascade::new(
            config.outer_gains,
            config.inner_gains,
            config.ref_filter_tau,
            config.thrust_epsilon,
            config.cross_epsilon,
        )),
        ControllerKind::Asmc => {
            let gains = config.asmc.expect("validated asmc block");
            Controller::Asmc(AsmcCascade::new(
                gains,
                theta1_0,
                theta2_0,
                config.ref_filter_tau,
                config.thrust_epsilon,
                config.cross_epsilon,
            ))
        }
    };

    let mut disturbance_gen = DisturbanceGenerator::new(config.disturbance);
    let mut regressor_noise = RegressorNoise::new(
        config.disturbance.seed,
        config.measurement_noise.accel_std,
        config.measurement_noise.angular_accel_std,
    );

    let steps = (config.duration / config.dt).round() as usize;
    let mut trace = SimTrace::new();
    let mut state = config.initial_state.to_state();
    let dt = config.dt;
    let gravity = config.gravity;

    // Lyapunov bookkeeping (inner loop): W accumulates -L with
    // L = r^T (N_delta - beta sgn(e_i2)) + C; with zero configured bounds the
    // constant C vanishes. Initialized from the first step's errors.
    let mut w_integral: Option<f64> = None;
    let gamma_diag = Vec3::from_row_slice(&est_cfg.gamma_diag);

    for k in 0..steps {
        let t = k as f64 * dt;
        let flat = reference_trajectory(t, &config.trajectory)
            .map_err(|e| SimError::Config(e.to_string()))?;
        if !flat.is_finite() {
            return Err(SimError::Config(format!(
                "reference trajectory is non-finite at t = {t}"
            )));
        }

        // Controller step.
        let (theta1_hat, theta2_hat) = match &controller {
            Controller::Rise(_) => (estimators.outer.theta1_hat, estimators.inner.theta2_hat),
            Controller::Asmc(c) => (c.theta1_hat, c.theta2_hat),
        };
        let step_result = match &mut controller {
            Controller::Rise(c) => c
                .step(
                    &state.position,
                    &state.velocity,
                    &state.attitude,
                    &state.rate,
                    &flat,
                    theta1_hat,
                    &theta2_hat,
                    gravity,
                    dt,
                )
                .map(|s| (s.wrench, s.e_o1, s.e_o2, s.e_i1, s.e_i2, s.attitude_ref, false)),
            Controller::Asmc(c) => c
                .step(
                    &state.position,
                    &state.velocity,
                    &state.attitude,
                    &state.rate,
                    &flat,
                    gravity,
                    dt,
                )
                .map(|s| (s.wrench, s.e_o1, s.e_o2, s.e_i1, s.e_i2, s.attitude_ref, s.saturated)),
        };
        let (wrench, e_o1, e_o2, e_i1, e_i2, attitude_ref, saturated) = match step_result {
            Ok(v) => v,
            Err(source) => {
                return Err(SimError::Controller {
                    t,
                    source,
                    partial: Box::new(trace),
                })
            }
        };

        // Force realization mode.
        let applied = match config.force_application {
            ForceApplication::Ideal => wrench,
            ForceApplication::ProjectedBodyZ => {
                let body_z = rotation_matrix(&state.attitude) * Vec3::new(0.0, 0.0, 1.0);
                ControlWrench {
                    force: body_z * wrench.force.norm(),
                    torque: wrench.torque,
                }
            }
        };

        // Disturbance held over the step.
        let dist = disturbance_gen.step(dt);

        // Plant-truth accelerations at the step start, for the estimator and
        // the log.
        let deriv = dynamics_deriv_unchecked(&state, &applied, &params, &dist, gravity);
        let accel1 = deriv.acceleration;
        let accel2 = deriv.angular_acceleration;

        // Estimator advance (adaptive cascade only; the sliding-mode baseline
        // adapts inside its own controller step).
        let (psi1_meas, psi2_meas) = {
            let (a1, a2) = regressor_noise.perturb(&accel1, &accel2);
            (regressor_outer(&a1, gravity), regressor_inner(&state.rate, &a2))
        };
        let is_rise = matches!(controller, Controller::Rise(_));
        let (h1, h2) = if is_rise {
            let h1 = estimators.outer.gram.extract_h(estimators.outer.theta1_hat);
            let h2 = estimators.inner.gram.extract_h(&estimators.inner.theta2_hat);
            (h1, h2)
        } else {
            (0.0, Vec3::zeros())
        };

        // Diagnostics before the estimator advances, consistent with the
        // logged estimates.
        let p1 = estimators.outer.gram.p();
        let p1_excess = estimators.outer.gram.excess;
        let p2 = estimators.inner.gram.p();
        let p2_lambda_min = estimators.inner.gram.lambda_min();
        let p2_lambda_min_excess = estimators.inner.gram.lambda_min_excess();
        let p2_norm = p2.norm();
        let psi2f_norm = estimators.inner.filters.psi_f.norm();
        let p_inv_h1 = if is_rise { (h1 / p1).abs() } else { 0.0 };
        let p_inv_h2 = if is_rise {
            p2.try_inverse()
                .map(|inv| (inv * h2).norm())
                .unwrap_or(f64::INFINITY)
        } else {
            0.0
        };
        let v2 = 0.5 * p_inv_h2 * p_inv_h2;

        // Filtered-regression identity residuals (simulation-only: they use
        // the true parameters). Exact up to rounding in zero-disturbance
        // runs; the normalization keeps them comparable as P grows.
        let (ident_outer, ident_inner) = if is_rise {
            let outer_res = (h1
                + p1 * (params.mass - estimators.outer.theta1_hat)
                - estimators.outer.gram.offset() * params.mass)
                .abs()
                / (1.0 + p1.abs());
            let inner_res = (h2
                + p2 * (params.inertia - estimators.inner.theta2_hat)
                - estimators.inner.gram.offset() * params.inertia)
                .norm()
                / (1.0 + p2_norm);
            (outer_res, inner_res)
        } else {
            (0.0, 0.0)
        };

        // Inner-loop Lyapunov diagnostic: reconstruct the analysis-only
        // filtered error r_i from the logged accelerations.
        let v1 = if is_rise {
            let gains = &config.inner_gains;
            let e_i1_dot = attitude_ref.rates - state.rate;
            let e_i2_dot = (attitude_ref.accels - accel2) + gains.k1 * e_i1_dot;
            let r_i = e_i2_dot + gains.k2 * e_i2;
            let w0_or_acc = *w_integral.get_or_insert_with(|| {
                gains.beta * e_i2.abs().sum()
            });
            // W advances by -L dt with L = -beta r^T sgn(e_i2) (zero bounds).
            let l_term = -config.inner_gains.beta * r_i.dot(&crate::math::signum_vec(&e_i2));
            w_integral = Some(w0_or_acc - l_term * dt);
            let theta_tilde = params.inertia - estimators.inner.theta2_hat;
            let gamma_inv_quad = theta_tilde
                .iter()
                .zip(gamma_diag.iter())
                .map(|(e, g)| if *g > 0.0 { e * e / g } else { 0.0 })
                .sum::<f64>();
            0.5 * e_i1.norm_squared()
                + 0.5 * e_i2.norm_squared()
                + 0.5 * r_i.dot(&params.inertia.component_mul(&r_i))
                + w0_or_acc
                + 0.5 * gamma_inv_quad
        } else {
            0.0
        };

        // Log the step.
        let mut r = TraceRecord {
            t,
            ..TraceRecord::default()
        };
        [r.pos_x, r.pos_y, r.pos_z] = state.position.into();
        [r.vel_x, r.vel_y, r.vel_z] = state.velocity.into();
        [r.roll, r.pitch, r.yaw] = state.attitude.into();
        [r.rate_x, r.rate_y, r.rate_z] = state.rate.into();
        [r.des_pos_x, r.des_pos_y, r.des_pos_z] = flat.position[0].into();
        [r.des_vel_x, r.des_vel_y, r.des_vel_z] = flat.position[1].into();
        [r.des_acc_x, r.des_acc_y, r.des_acc_z] = flat.position[2].into();
        r.des_yaw = flat.yaw[0];
        [r.ref_roll, r.ref_pitch, r.ref_yaw] = attitude_ref.angles.into();
        [r.ref_rate_x, r.ref_rate_y, r.ref_rate_z] = attitude_ref.rates.into();
        [r.ref_acc_x, r.ref_acc_y, r.ref_acc_z] = attitude_ref.accels.into();
        [r.e_o1_x, r.e_o1_y, r.e_o1_z] = e_o1.into();
        [r.e_o2_x, r.e_o2_y, r.e_o2_z] = e_o2.into();
        [r.e_i1_x, r.e_i1_y, r.e_i1_z] = e_i1.into();
        [r.e_i2_x, r.e_i2_y, r.e_i2_z] = e_i2.into();
        [r.force_x, r.force_y, r.force_z] = applied.force.into();
        [r.torque_x, r.torque_y, r.torque_z] = applied.torque.into();
        r.theta1_hat = theta1_hat;
        [r.theta2_hat_x, r.theta2_hat_y, r.theta2_hat_z] = theta2_hat.into();
        r.h1 = h1;
        [r.h2_x, r.h2_y, r.h2_z] = h2.into();
        r.p1 = p1;
        r.p1_excess = p1_excess;
        r.p2_lambda_min = p2_lambda_min;
        r.p2_lambda_min_excess = p2_lambda_min_excess;
        r.p2_norm = p2_norm;
        r.psi2f_norm = psi2f_norm;
        [r.dist_force_x, r.dist_force_y, r.dist_force_z] = dist.delta1.into();
        [r.dist_torque_x, r.dist_torque_y, r.dist_torque_z] = dist.delta2.into();
        [r.acc1_x, r.acc1_y, r.acc1_z] = accel1.into();
        [r.acc2_x, r.acc2_y, r.acc2_z] = accel2.into();
        r.v1 = v1;
        r.v2 = v2;
        r.p_inv_h1 = p_inv_h1;
        r.p_inv_h2_norm = p_inv_h2;
        r.ident_outer = ident_outer;
        r.ident_inner = ident_inner;
        r.sat_active = if saturated { 1.0 } else { 0.0 };
        trace.push(r);

        // Estimator state advance (after logging, so logged H/P match the
        // logged estimates).
        if is_rise && estimators.enabled {
            estimators.outer.step(&psi1_meas, &applied.force, dt);
            estimators.inner.step(&psi2_meas, &applied.torque, dt);
        } else if is_rise {
            // Frozen estimates: keep the filters and accumulators moving so
            // the logged diagnostics stay meaningful.
            estimators.outer.advance_signals(&psi1_meas, &applied.force, dt);
            estimators.inner.advance_signals(&psi2_meas, &applied.torque, dt);
        }

        // Plant advance.
        state = rk4_step(&state, &applied, &params, &dist, gravity, dt);

        if !state.is_finite() {
            return Err(SimError::Diverged {
                t: t + dt,
                reason: "non-finite state".into(),
                partial: Box::new(trace),
            });
        }
        if !state.within_attitude_envelope() {
            return Err(SimError::Diverged {
                t: t + dt,
                reason: format!(
                    "attitude left the validity envelope (roll {:.3}, pitch {:.3})",
                    state.attitude.x, state.attitude.y
                ),
                partial: Box::new(trace),
            });
        }
    }

    let saturation_events = match &controller {
        Controller::Asmc(c) => c.saturation_events,
        Controller::Rise(_) => 0,
    };

    Ok(SimOutput {
        trace,
        gain_report,
        saturation_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{benchmark_scenario, ControllerKind};
    use crate::disturbance::DisturbanceConfig;
    use approx::assert_relative_eq;

    fn nominal_params() -> MassInertia {
        MassInertia::new(3.12, Vec3::new(0.1, 0.1, 0.2)).unwrap()
    }

    #[test]
    fn rk4_free_fall_matches_constant_acceleration() {
        let params = nominal_params();
        let state = VehicleState::at_rest();
        let dt = 1e-3;
        let next = rk4_step(
            &state,
            &ControlWrench::zero(),
            &params,
            &Disturbance::ZERO,
            9.81,
            dt,
        );
        assert_relative_eq!(next.position.z, -0.5 * 9.81 * dt * dt, epsilon = 1e-15);
        assert_relative_eq!(next.velocity.z, -9.81 * dt, epsilon = 1e-15);
    }

    #[test]
    fn rk4_hover_is_stationary() {
        let params = nominal_params();
        let state = VehicleState::at_rest();
        let wrench = ControlWrench {
            force: Vec3::new(0.0, 0.0, params.mass * 9.81),
            torque: Vec3::zeros(),
        };
        let next = rk4_step(&state, &wrench, &params, &Disturbance::ZERO, 9.81, 1e-3);
        assert!(next.position.norm() <= 1e-15);
        assert!(next.velocity.norm() <= 1e-15);
    }

    #[test]
    fn rk4_order_on_linear_system() {
        // Harmonic oscillator y'' = -y integrated to t = 1; the global error
        // must shrink by about 2^4 when dt halves.
        let f = |y: &SVector<f64, 2>| SVector::<f64, 2>::new(y[1], -y[0]);
        let run = |dt: f64| {
            let mut y = SVector::<f64, 2>::new(1.0, 0.0);
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                y = rk4_step_vec(f, &y, dt);
            }
            (y[0] - 1.0f64.cos()).abs() + (y[1] + 1.0f64.sin()).abs()
        };
        let e1 = run(1e-2);
        let e2 = run(5e-3);
        let order = (e1 / e2).log2();
        assert!(order >= 3.9, "observed order {order}");
    }

    #[test]
    fn zero_duration_yields_empty_trace() {
        let mut config = benchmark_scenario(
            ControllerKind::Rise,
            "empty",
            DisturbanceConfig::zero(0),
        );
        config.duration = 0.0;
        let out = run_scenario(&config).unwrap();
        assert!(out.trace.is_empty());
        // Schema is still valid.
        let csv = out.trace.to_csv();
        assert!(SimTrace::from_csv(&csv).unwrap().is_empty());
    }

    #[test]
    fn identical_configs_are_bitwise_deterministic() {
        let mut config = benchmark_scenario(
            ControllerKind::Rise,
            "det",
            crate::config::benchmark_noise(7, 1.0),
        );
        config.duration = 2.0;
        let a = run_scenario(&config).unwrap();
        let b = run_scenario(&config).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    }

    #[test]
    fn rotational_energy_is_conserved_without_torque() {
        // With zero control and zero disturbance the gyroscopic term does no
        // work on the diagonal-inertia Euler model.
        let params = nominal_params();
        let mut state = VehicleState::at_rest();
        state.rate = Vec3::new(0.7, -0.4, 1.2);
        let energy = |s: &VehicleState| 0.5 * s.rate.dot(&params.inertia.component_mul(&s.rate));
        let e0 = energy(&state);
        let dt = 1e-3;
        for _ in 0..1000 {
            state = rk4_step(
                &state,
                &ControlWrench::zero(),
                &params,
                &Disturbance::ZERO,
                9.81,
                dt,
            );
        }
        let drift = (energy(&state) - e0).abs();
        assert!(drift <= 1e-9, "energy drift {drift} over 1 s");
    }

    #[test]
    fn divergence_produces_partial_trace() {
        let mut config = benchmark_scenario(
            ControllerKind::Rise,
            "diverge",
            DisturbanceConfig::zero(0),
        );
        // An absurd signum gain destabilizes the inner loop quickly.
        config.inner_gains.beta = 1e7;
        config.duration = 5.0;
        match run_scenario(&config) {
            Err(SimError::Diverged { partial, t, .. }) => {
                assert!(!partial.is_empty());
                assert!(t > 0.0);
            }
            Err(SimError::Controller { partial, .. }) => {
                assert!(!partial.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
