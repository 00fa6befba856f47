//! Small linear-algebra helpers shared by the dynamics and controllers.

use nalgebra::{Matrix3, Vector3};

/// 3D vector type used throughout the crate.
pub type Vec3 = Vector3<f64>;
/// 3x3 matrix type used throughout the crate.
pub type Mat3 = Matrix3<f64>;

/// Skew-symmetric matrix `S(v)` such that `S(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Rotation matrix from the body-fixed frame to the inertial frame for
/// ZYX Euler angles `(roll, pitch, yaw)`.
pub fn rotation_matrix(euler: &Vec3) -> Mat3 {
    let (sp, cp) = euler.x.sin_cos(); // roll (phi)
    let (st, ct) = euler.y.sin_cos(); // pitch (theta)
    let (sy, cy) = euler.z.sin_cos(); // yaw (psi)
    Mat3::new(
        cy * ct,
        cy * st * sp - sy * cp,
        cy * st * cp + sy * sp,
        sy * ct,
        sy * st * sp + cy * cp,
        sy * st * cp - cy * sp,
        -st,
        ct * sp,
        ct * cp,
    )
}

/// Recovers `(roll, pitch)` from a rotation matrix under the ZYX convention.
///
/// The yaw channel is assumed known by the caller, so only the bottom row is
/// consulted. Pitch is clamped into the principal branch `|pitch| <= pi/2`.
pub fn roll_pitch_from_rotation(rot: &Mat3) -> (f64, f64) {
    let pitch = (-rot[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = rot[(2, 1)].atan2(rot[(2, 2)]);
    (roll, pitch)
}

/// Componentwise signum with `sgn(0) = 0`.
pub fn signum_vec(v: &Vec3) -> Vec3 {
    Vec3::new(sgn(v.x), sgn(v.y), sgn(v.z))
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// True when every component is finite.
pub fn vec_finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Classical fourth-order Runge-Kutta step for an autonomous ODE.
pub fn rk4_step_vec<const N: usize>(
    f: impl Fn(&nalgebra::SVector<f64, N>) -> nalgebra::SVector<f64, N>,
    y: &nalgebra::SVector<f64, N>,
    dt: f64,
) -> nalgebra::SVector<f64, N> {
    let k1 = f(y);
    let k2 = f(&(y + k1 * (dt / 2.0)));
    let k3 = f(&(y + k2 * (dt / 2.0)));
    let k4 = f(&(y + k3 * dt));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}
