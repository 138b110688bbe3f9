//! Concrete measurement factors: structureless vision factors,
//! preintegrated IMU factors, white-noise-on-acceleration motion
//! priors, and GP-interpolated GPS factors.

mod gp;
mod gps;
mod imu_factor;
mod preintegration;
mod prior;
mod vision;

pub use gp::{gp_interpolated_gps_factor, gp_prior_factor, interpolate_position, GpPriorParams};
pub use gps::{enu_from_geodetic, geodetic_from_enu, GeodeticFix, GpsFix};
pub use imu_factor::{angular_rate_factor, imu_factor, ImuFactorParams};
pub use preintegration::{preintegrate, ImuSample, PreintegratedImu};
pub use prior::{state_prior_factor, PriorSigmas};
pub use vision::{smart_vision_factor, SmartVisionFactor, TrackObservation};

use nalgebra::{DVectorView, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::geometry::{Pose3, Rotation3};

/// Full per-image state: pose, velocities, and IMU bias.
///
/// The bias vector stacks gyro bias (rad/s) then accelerometer bias
/// (m/s²). Timestamps are seconds and must increase strictly along a
/// trajectory.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CameraState {
    pub rotation: Rotation3,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub angular_rate: Vector3<f64>,
    pub imu_bias: Vector6<f64>,
    pub timestamp: f64,
}

impl CameraState {
    /// Tangent dimension: rotation(3) + position(3) + velocity(3) +
    /// angular rate(3) + bias(6).
    pub const DIM: usize = 18;

    /// Tangent offsets of each block.
    pub const ROT: usize = 0;
    pub const POS: usize = 3;
    pub const VEL: usize = 6;
    pub const OMEGA: usize = 9;
    pub const BIAS: usize = 12;

    pub fn new(
        rotation: Rotation3,
        position: Vector3<f64>,
        velocity: Vector3<f64>,
        angular_rate: Vector3<f64>,
        imu_bias: Vector6<f64>,
        timestamp: f64,
    ) -> Self {
        CameraState {
            rotation,
            position,
            velocity,
            angular_rate,
            imu_bias,
            timestamp,
        }
    }

    pub fn pose(&self) -> Pose3 {
        Pose3::new(self.rotation, self.position)
    }

    pub fn gyro_bias(&self) -> Vector3<f64> {
        self.imu_bias.fixed_rows::<3>(0).into_owned()
    }

    pub fn accel_bias(&self) -> Vector3<f64> {
        self.imu_bias.fixed_rows::<3>(3).into_owned()
    }

    /// Manifold plus: the rotation is perturbed on the right
    /// (`R ← R·exp(δθ)`), every other block by vector addition. The
    /// timestamp is not a variable.
    pub fn retract(&self, delta: DVectorView<'_, f64>) -> CameraState {
        debug_assert_eq!(delta.len(), Self::DIM);
        let dr = Vector3::new(delta[0], delta[1], delta[2]);
        let mut bias = self.imu_bias;
        for i in 0..6 {
            bias[i] += delta[Self::BIAS + i];
        }
        CameraState {
            rotation: self.rotation.compose(&Rotation3::exp(dr)),
            position: self.position + Vector3::new(delta[3], delta[4], delta[5]),
            velocity: self.velocity + Vector3::new(delta[6], delta[7], delta[8]),
            angular_rate: self.angular_rate + Vector3::new(delta[9], delta[10], delta[11]),
            imu_bias: bias,
            timestamp: self.timestamp,
        }
    }
}
