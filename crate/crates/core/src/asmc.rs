//! Adaptive sliding-mode baseline controller.
//!
//! Reconstruction of a classical comparison design: per-loop sliding surfaces
//! `s = e1_dot + lambda e1`, model feedforward with adapted parameters, and a
//! switching term `eta .* sgn(s)` acting directly on the control signal. The
//! parameter adaptation is a clamped gradient step driven by the surface.
//! The discontinuous switching term is the chattering mechanism this baseline
//! is meant to exhibit; the attitude reference is extracted from a low-passed
//! copy of the force so the inner loop is not fed the raw relay signal.

use serde::{Deserialize, Serialize};

use crate::math::{signum_vec, Vec3};
use crate::model::{regressor_inner, regressor_outer, ControlWrench, DesiredFlatOutput};
use crate::rise::{attitude_extraction, AttitudeRef, DerivativeFilter, RiseError};

/// Sliding-mode gains and adaptation parameters for both loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcGains {
    /// Outer sliding-surface slope per axis, 1/s.
    pub lambda_outer: [f64; 3],
    /// Inner sliding-surface slope per axis, 1/s.
    pub lambda_inner: [f64; 3],
    /// Outer switching gain per axis, N.
    pub eta_outer: [f64; 3],
    /// Inner switching gain per axis, N m.
    pub eta_inner: [f64; 3],
    /// Gradient adaptation gain for the mass estimate.
    pub k_grad_mass: f64,
    /// Gradient adaptation gain for the inertia estimates.
    pub k_grad_inertia: f64,
    /// Saturation bounds for the mass estimate, kg.
    pub mass_bounds: [f64; 2],
    /// Saturation bounds for each inertia estimate, kg m^2.
    pub inertia_bounds: [f64; 2],
    /// Time constant of the low-pass applied to the force before attitude
    /// extraction, s.
    pub ref_force_tau: f64,
}

impl SmcGains {
    pub fn all_positive(&self) -> bool {
        self.lambda_outer.iter().all(|&v| v > 0.0)
            && self.lambda_inner.iter().all(|&v| v > 0.0)
            && self.eta_outer.iter().all(|&v| v > 0.0)
            && self.eta_inner.iter().all(|&v| v > 0.0)
            && self.k_grad_mass > 0.0
            && self.k_grad_inertia > 0.0
            && self.mass_bounds[0] > 0.0
            && self.mass_bounds[1] > self.mass_bounds[0]
            && self.inertia_bounds[0] > 0.0
            && self.inertia_bounds[1] > self.inertia_bounds[0]
            && self.ref_force_tau > 0.0
    }
}

/// Sliding-mode control output for one loop.
pub fn smc_control(
    psi_d_theta: &Vec3,
    surface: &Vec3,
    eta_switch: &[f64; 3],
) -> Vec3 {
    let sw = signum_vec(surface);
    psi_d_theta + Vec3::new(eta_switch[0] * sw.x, eta_switch[1] * sw.y, eta_switch[2] * sw.z)
}

/// Clamped gradient adaptation step. Returns the updated estimate and whether
/// the clamp was active on any component.
pub fn smc_adapt_scalar(
    theta_hat: f64,
    drive: f64,
    k_grad: f64,
    dt: f64,
    bounds: [f64; 2],
) -> (f64, bool) {
    let raw = theta_hat + k_grad * drive * dt;
    let clamped = raw.clamp(bounds[0], bounds[1]);
    (clamped, raw != clamped)
}

pub fn smc_adapt_vec(
    theta_hat: &Vec3,
    drive: &Vec3,
    k_grad: f64,
    dt: f64,
    bounds: [f64; 2],
) -> (Vec3, bool) {
    let mut out = Vec3::zeros();
    let mut saturated = false;
    for i in 0..3 {
        let raw = theta_hat[i] + k_grad * drive[i] * dt;
        out[i] = raw.clamp(bounds[0], bounds[1]);
        saturated |= raw != out[i];
    }
    (out, saturated)
}

/// One ASMC session: adapted estimates, the force low-pass state, and the
/// shared attitude-reference machinery.
#[derive(Debug, Clone)]
pub struct AsmcCascade {
    pub gains: SmcGains,
    pub theta1_hat: f64,
    pub theta2_hat: Vec3,
    force_filtered: Option<Vec3>,
    ref_filter: DerivativeFilter,
    last_ref: Option<AttitudeRef>,
    thrust_epsilon: f64,
    cross_epsilon: f64,
    /// Number of steps on which an estimate clamp was active.
    pub saturation_events: u64,
}

/// Signals logged per ASMC step; mirrors the cascade step record.
#[derive(Debug, Clone, Copy)]
pub struct AsmcStep {
    pub wrench: ControlWrench,
    pub e_o1: Vec3,
    pub e_o2: Vec3,
    pub e_i1: Vec3,
    pub e_i2: Vec3,
    pub attitude_ref: AttitudeRef,
    pub saturated: bool,
}

impl AsmcCascade {
    pub fn new(
        gains: SmcGains,
        theta1_initial: f64,
        theta2_initial: Vec3,
        ref_filter_tau: f64,
        thrust_epsilon: f64,
        cross_epsilon: f64,
    ) -> Self {
        Self {
            gains,
            theta1_hat: theta1_initial.clamp(gains.mass_bounds[0], gains.mass_bounds[1]),
            theta2_hat: theta2_initial,
            force_filtered: None,
            ref_filter: DerivativeFilter::new(ref_filter_tau),
            last_ref: None,
            thrust_epsilon,
            cross_epsilon,
            saturation_events: 0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        position: &Vec3,
        velocity: &Vec3,
        attitude: &Vec3,
        rate: &Vec3,
        flat: &DesiredFlatOutput,
        gravity: f64,
        dt: f64,
    ) -> Result<AsmcStep, RiseError> {
        let g = &self.gains;
        let e_o1 = flat.position[0] - position;
        let e_o1_dot = flat.position[1] - velocity;
        let lambda_o = Vec3::new(g.lambda_outer[0], g.lambda_outer[1], g.lambda_outer[2]);
        let s_o = e_o1_dot + lambda_o.component_mul(&e_o1);

        let psi1d = regressor_outer(&flat.position[2], gravity);
        let force = smc_control(&(psi1d * self.theta1_hat), &s_o, &g.eta_outer);
        let f_norm = force.norm();
        if f_norm <= self.thrust_epsilon {
            return Err(RiseError::SingularThrust(f_norm));
        }

        // Mass adaptation driven by the surface through the feedforward basis.
        let mut saturated = false;
        let (theta1, sat1) = smc_adapt_scalar(
            self.theta1_hat,
            psi1d.dot(&s_o),
            g.k_grad_mass,
            dt,
            g.mass_bounds,
        );
        self.theta1_hat = theta1;
        saturated |= sat1;

        // Attitude reference from the smoothed force.
        let tau = g.ref_force_tau;
        let filtered = match self.force_filtered {
            None => force,
            Some(prev) => {
                let a = (-dt / tau).exp();
                prev * a + force * (1.0 - a)
            }
        };
        self.force_filtered = Some(filtered);

        let extraction = match attitude_extraction(
            &filtered,
            flat.yaw[0],
            self.thrust_epsilon,
            self.cross_epsilon,
        ) {
            Ok(e) => Some(e),
            Err(RiseError::DegenerateExtraction(_)) => None,
            Err(e) => return Err(e),
        };
        let attitude_ref = match extraction {
            Some(e) => {
                let roll_pitch = Vec3::new(e.roll, e.pitch, 0.0);
                let (rp_angles, rp_rates, rp_accels) = self.ref_filter.push(&roll_pitch, dt)?;
                let reference = AttitudeRef {
                    angles: Vec3::new(rp_angles.x, rp_angles.y, flat.yaw[0]),
                    rates: Vec3::new(rp_rates.x, rp_rates.y, flat.yaw[1]),
                    accels: Vec3::new(rp_accels.x, rp_accels.y, flat.yaw[2]),
                };
                self.last_ref = Some(reference);
                reference
            }
            None => self.last_ref.unwrap_or_else(AttitudeRef::level),
        };

        let e_i1 = attitude_ref.angles - attitude;
        let e_i1_dot = attitude_ref.rates - rate;
        let lambda_i = Vec3::new(g.lambda_inner[0], g.lambda_inner[1], g.lambda_inner[2]);
        let s_i = e_i1_dot + lambda_i.component_mul(&e_i1);

        let psi2d = regressor_inner(&attitude_ref.rates, &attitude_ref.accels);
        let torque = smc_control(&(psi2d * self.theta2_hat), &s_i, &g.eta_inner);

        let (theta2, sat2) = smc_adapt_vec(
            &self.theta2_hat,
            &(psi2d.transpose() * s_i),
            g.k_grad_inertia,
            dt,
            g.inertia_bounds,
        );
        self.theta2_hat = theta2;
        saturated |= sat2;
        if saturated {
            self.saturation_events += 1;
        }

        Ok(AsmcStep {
            wrench: ControlWrench { force, torque },
            e_o1,
            e_o2: s_o,
            e_i1,
            e_i2: s_i,
            attitude_ref,
            saturated,
        })
    }
}
