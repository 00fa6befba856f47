//! Closed-form reference trajectories.
//!
//! Each family evaluates the desired position and yaw together with their
//! first four time derivatives analytically; nothing is differentiated
//! numerically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;
use crate::model::DesiredFlatOutput;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory evaluated at negative time {0}")]
    NegativeTime(f64),
}

/// Sinusoid parameters for a single scalar channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidChannel {
    pub amplitude: f64,
    pub angular_frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub offset: f64,
}

impl SinusoidChannel {
    /// k-th derivative of `offset + A sin(w t + phi)` for k = 0..=4.
    fn derivatives(&self, t: f64) -> [f64; 5] {
        let arg = self.angular_frequency * t + self.phase;
        let (s, c) = arg.sin_cos();
        let w = self.angular_frequency;
        let a = self.amplitude;
        [
            self.offset + a * s,
            a * w * c,
            -a * w * w * s,
            -a * w * w * w * c,
            a * w * w * w * w * s,
        ]
    }
}

/// Trajectory family selected by scenario configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryConfig {
    /// Independent sinusoid per position axis plus a sinusoidal yaw.
    Sinusoid {
        x: SinusoidChannel,
        y: SinusoidChannel,
        z: SinusoidChannel,
        yaw: SinusoidChannel,
    },
    /// Constant position and yaw setpoint; all derivatives vanish.
    Setpoint { position: [f64; 3], yaw: f64 },
}

impl TrajectoryConfig {
    /// The benchmark trajectory: position `2 sin(t)` on every axis and yaw
    /// `sin(1.1 t)`.
    pub fn benchmark() -> Self {
        let axis = SinusoidChannel {
            amplitude: 2.0,
            angular_frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
        };
        TrajectoryConfig::Sinusoid {
            x: axis,
            y: axis,
            z: axis,
            yaw: SinusoidChannel {
                amplitude: 1.0,
                angular_frequency: 1.1,
                phase: 0.0,
                offset: 0.0,
            },
        }
    }
}

/// Evaluates the configured trajectory at time `t >= 0`.
pub fn reference_trajectory(
    t: f64,
    config: &TrajectoryConfig,
) -> Result<DesiredFlatOutput, TrajectoryError> {
    if t < 0.0 {
        return Err(TrajectoryError::NegativeTime(t));
    }
    Ok(match config {
        TrajectoryConfig::Sinusoid { x, y, z, yaw } => {
            let dx = x.derivatives(t);
            let dy = y.derivatives(t);
            let dz = z.derivatives(t);
            let mut position = [Vec3::zeros(); 5];
            for k in 0..5 {
                position[k] = Vec3::new(dx[k], dy[k], dz[k]);
            }
            DesiredFlatOutput {
                position,
                yaw: yaw.derivatives(t),
            }
        }
        TrajectoryConfig::Setpoint { position, yaw } => {
            let mut derivs = [Vec3::zeros(); 5];
            derivs[0] = Vec3::new(position[0], position[1], position[2]);
            DesiredFlatOutput {
                position: derivs,
                yaw: [*yaw, 0.0, 0.0, 0.0, 0.0],
            }
        }
    })
}
