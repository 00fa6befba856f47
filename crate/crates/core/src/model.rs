//! Rigid-body model of the multirotor: domain types, the simplified
//! Euler-rate dynamics, and the linear-in-parameters regressors used by the
//! controllers and the estimator.
//!
//! The translational dynamics are `m * a = F - [0, 0, m g] - d1` with the
//! force `F` expressed in the inertial frame (z up). The rotational dynamics
//! use the Euler-rate model `J * eta2_ddot = tau - eta2_dot x (J eta2_dot) - d2`
//! with a diagonal inertia matrix; the same model drives both the plant and
//! the controller feedforward.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{skew, vec_finite, Mat3, Vec3};

/// Default gravitational acceleration, m/s^2.
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("mass and inertia components must be positive (got {0})")]
    NonPositiveParameter(f64),
}

/// Integrated simulation state: position/velocity in the inertial frame and
/// ZYX Euler angles (roll, pitch, yaw) with their rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Vec3,
    pub rate: Vec3,
}

impl VehicleState {
    pub fn at_rest() -> Self {
        Self {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            attitude: Vec3::zeros(),
            rate: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        vec_finite(&self.position)
            && vec_finite(&self.velocity)
            && vec_finite(&self.attitude)
            && vec_finite(&self.rate)
    }

    /// The simplified attitude model is only meaningful while roll and pitch
    /// stay clear of the gimbal locus.
    pub fn within_attitude_envelope(&self) -> bool {
        self.attitude.x.abs() < std::f64::consts::FRAC_PI_2
            && self.attitude.y.abs() < std::f64::consts::FRAC_PI_2
    }

    pub fn to_vector(&self) -> SVector<f64, 12> {
        let mut v = SVector::<f64, 12>::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.position);
        v.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        v.fixed_rows_mut::<3>(6).copy_from(&self.attitude);
        v.fixed_rows_mut::<3>(9).copy_from(&self.rate);
        v
    }

    pub fn from_vector(v: &SVector<f64, 12>) -> Self {
        Self {
            position: v.fixed_rows::<3>(0).into(),
            velocity: v.fixed_rows::<3>(3).into(),
            attitude: v.fixed_rows::<3>(6).into(),
            rate: v.fixed_rows::<3>(9).into(),
        }
    }
}

/// True or estimated parameter vector: mass and the diagonal of the inertia
/// matrix. The scalar mass is the outer-loop parameter, the inertia diagonal
/// the inner-loop parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassInertia {
    /// Mass, kg.
    pub mass: f64,
    /// Diagonal of the inertia matrix (Ix, Iy, Iz), kg m^2.
    pub inertia: Vec3,
}

impl MassInertia {
    pub fn new(mass: f64, inertia: Vec3) -> Result<Self, ModelError> {
        let candidate = Self { mass, inertia };
        candidate.validate()?;
        Ok(candidate)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for v in [self.mass, self.inertia.x, self.inertia.y, self.inertia.z] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite("mass-inertia"));
            }
            if v <= 0.0 {
                return Err(ModelError::NonPositiveParameter(v));
            }
        }
        Ok(())
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.inertia)
    }
}

/// Inertial-frame force and body torque produced by a controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlWrench {
    /// Force in the inertial frame, N.
    pub force: Vec3,
    /// Torque in the body frame, N m.
    pub torque: Vec3,
}

impl ControlWrench {
    pub fn zero() -> Self {
        Self {
            force: Vec3::zeros(),
            torque: Vec3::zeros(),
        }
    }
}

/// Additive translational and rotational disturbances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    /// Translational disturbance, N.
    pub delta1: Vec3,
    /// Rotational disturbance, N m.
    pub delta2: Vec3,
}

impl Disturbance {
    pub const ZERO: Disturbance = Disturbance {
        delta1: Vec3::new(0.0, 0.0, 0.0),
        delta2: Vec3::new(0.0, 0.0, 0.0),
    };
}

/// Desired flat output: position and yaw together with derivatives up to
/// fourth order, all evaluated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredFlatOutput {
    /// `position[k]` is the k-th time derivative of the desired position.
    pub position: [Vec3; 5],
    /// `yaw[k]` is the k-th time derivative of the desired yaw angle.
    pub yaw: [f64; 5],
}

impl DesiredFlatOutput {
    pub fn is_finite(&self) -> bool {
        self.position.iter().all(vec_finite) && self.yaw.iter().all(|y| y.is_finite())
    }
}

/// Time derivative of [`VehicleState`] under the rigid-body model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub rate: Vec3,
    pub angular_acceleration: Vec3,
}

/// Evaluates the rigid-body dynamics.
///
/// Returns the state derivative `(velocity, acceleration, rate, angular
/// acceleration)` for the given wrench, parameters and disturbance.
pub fn dynamics_deriv(
    state: &VehicleState,
    wrench: &ControlWrench,
    params: &MassInertia,
    dist: &Disturbance,
    gravity: f64,
) -> Result<StateDerivative, ModelError> {
    if !state.is_finite() {
        return Err(ModelError::NonFinite("state"));
    }
    if !vec_finite(&wrench.force) || !vec_finite(&wrench.torque) {
        return Err(ModelError::NonFinite("wrench"));
    }
    if !vec_finite(&dist.delta1) || !vec_finite(&dist.delta2) {
        return Err(ModelError::NonFinite("disturbance"));
    }
    params.validate()?;
    Ok(dynamics_deriv_unchecked(state, wrench, params, dist, gravity))
}

/// Same as [`dynamics_deriv`] but without input validation; used inside the
/// integrator hot loop where inputs were already checked once per step.
pub fn dynamics_deriv_unchecked(
    state: &VehicleState,
    wrench: &ControlWrench,
    params: &MassInertia,
    dist: &Disturbance,
    gravity: f64,
) -> StateDerivative {
    let gravity_force = Vec3::new(0.0, 0.0, params.mass * gravity);
    let acceleration = (wrench.force - gravity_force - dist.delta1) / params.mass;

    let omega = state.rate;
    let j_omega = params.inertia.component_mul(&omega);
    let gyroscopic = omega.cross(&j_omega);
    let torque_net = wrench.torque - gyroscopic - dist.delta2;
    let angular_acceleration = torque_net.component_div(&params.inertia);

    StateDerivative {
        velocity: state.velocity,
        acceleration,
        rate: state.rate,
        angular_acceleration,
    }
}

/// Outer-loop regressor: `psi1 * m == m * accel + [0, 0, m g]`.
pub fn regressor_outer(accel: &Vec3, gravity: f64) -> Vec3 {
    Vec3::new(accel.x, accel.y, accel.z + gravity)
}

/// Inner-loop regressor matrix for the inertia diagonal:
/// `psi2 * (Ix, Iy, Iz) == J * angular_accel + rate x (J * rate)`.
pub fn regressor_inner(rate: &Vec3, angular_accel: &Vec3) -> Mat3 {
    let (p, q, r) = (rate.x, rate.y, rate.z);
    Mat3::new(
        angular_accel.x,
        -q * r,
        q * r,
        p * r,
        angular_accel.y,
        -p * r,
        -p * q,
        p * q,
        angular_accel.z,
    )
}

/// Regressors evaluated on desired signals, used as the feedforward basis.
pub fn regressor_desired(
    flat: &DesiredFlatOutput,
    attitude_rate_des: &Vec3,
    attitude_accel_des: &Vec3,
    gravity: f64,
) -> (Vec3, Mat3) {
    (
        regressor_outer(&flat.position[2], gravity),
        regressor_inner(attitude_rate_des, attitude_accel_des),
    )
}

/// Torque-side nonlinearity `C(rate) * rate = rate x (J rate)` expressed via
/// the skew form; exposed for the analysis diagnostics.
pub fn coriolis_term(inertia: &Vec3, rate: &Vec3) -> Vec3 {
    let j_omega = inertia.component_mul(rate);
    -skew(&j_omega) * rate
}
