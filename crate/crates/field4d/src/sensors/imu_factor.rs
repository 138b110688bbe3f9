use nalgebra::{DMatrix, DVector, Vector3};

use crate::factorgraph::{Evaluation, Factor, NoiseModel, Residual, Value, VariableKey};
use crate::geometry::Rotation3;
use crate::sensors::CameraState;

use super::PreintegratedImu;

/// Noise floors keep whitening finite on noiseless synthetic data.
const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct ImuFactorParams {
    pub gravity: Vector3<f64>,
    /// Bias random-walk sigma per sqrt-second.
    pub bias_rw_sigma: f64,
}

struct ImuResidual {
    pre: PreintegratedImu,
    gravity: Vector3<f64>,
}

impl Residual for ImuResidual {
    fn dim(&self) -> usize {
        15
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let si = values[0].as_state();
        let sj = values[1].as_state();
        let dt = self.pre.dt;
        let g = self.gravity;

        // First-order bias correction around the preintegration point.
        let db = si.imu_bias - self.pre.bias_ref;
        let dbg = Vector3::new(db[0], db[1], db[2]);
        let dba = Vector3::new(db[3], db[4], db[5]);
        let corrected_rot = self
            .pre
            .delta_rot
            .compose(&Rotation3::exp(self.pre.d_rot_d_bg * dbg));
        let corrected_vel = self.pre.delta_vel + self.pre.d_vel_d_bg * dbg + self.pre.d_vel_d_ba * dba;
        let corrected_pos = self.pre.delta_pos + self.pre.d_pos_d_bg * dbg + self.pre.d_pos_d_ba * dba;

        let ri_inv = si.rotation.inverse();
        let r_rot = corrected_rot
            .inverse()
            .compose(&ri_inv.compose(&sj.rotation))
            .log();
        let r_vel = ri_inv.rotate(&(sj.velocity - si.velocity - g * dt)) - corrected_vel;
        let r_pos = ri_inv.rotate(
            &(sj.position - si.position - si.velocity * dt - 0.5 * g * dt * dt),
        ) - corrected_pos;
        let r_bias = sj.imu_bias - si.imu_bias;

        let mut r = DVector::zeros(15);
        r.fixed_rows_mut::<3>(0).copy_from(&r_rot);
        r.fixed_rows_mut::<3>(3).copy_from(&r_vel);
        r.fixed_rows_mut::<3>(6).copy_from(&r_pos);
        r.fixed_rows_mut::<6>(9).copy_from(&r_bias);
        Evaluation::valid(r)
    }

    fn active_dims(&self, _slot: usize, dim: usize) -> Option<Vec<usize>> {
        // The angular-rate block of the state never enters.
        Some(
            (0..dim)
                .filter(|d| !(CameraState::OMEGA..CameraState::BIAS).contains(d))
                .collect(),
        )
    }
}

/// Builds the preintegrated IMU factor between two consecutive states:
/// a 9D preintegration residual plus a 6D bias random-walk residual.
pub fn imu_factor(
    key_i: VariableKey,
    key_j: VariableKey,
    pre: PreintegratedImu,
    params: &ImuFactorParams,
) -> Factor {
    let mut sigmas = DVector::zeros(15);
    for k in 0..9 {
        sigmas[k] = pre.covariance[(k, k)].sqrt().max(SIGMA_FLOOR);
    }
    let walk = params.bias_rw_sigma * pre.dt.sqrt().max(1e-3);
    for k in 9..15 {
        sigmas[k] = walk.max(SIGMA_FLOOR);
    }
    Factor::new(
        vec![key_i, key_j],
        NoiseModel::diagonal(sigmas),
        Box::new(ImuResidual {
            pre,
            gravity: params.gravity,
        }),
    )
}

struct AngularRateResidual {
    /// Bias-corrected target: ω measured mean, before subtracting the
    /// state's own gyro bias estimate.
    mean_gyro: Vector3<f64>,
}

impl Residual for AngularRateResidual {
    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let s = values[0].as_state();
        let r = s.angular_rate - (self.mean_gyro - s.gyro_bias());
        Evaluation::valid(DVector::from_column_slice(r.as_slice()))
    }

    fn jacobians(&self, values: &[&Value]) -> Option<Vec<DMatrix<f64>>> {
        let dim = values[0].dim();
        let mut j = DMatrix::zeros(3, dim);
        for k in 0..3 {
            j[(k, CameraState::OMEGA + k)] = 1.0;
            j[(k, CameraState::BIAS + k)] = 1.0;
        }
        Some(vec![j])
    }
}

/// Constrains a state's angular-rate block against the mean
/// bias-corrected gyro reading over its inter-frame window.
pub fn angular_rate_factor(key: VariableKey, mean_gyro: Vector3<f64>, sigma: f64) -> Factor {
    Factor::new(
        vec![key],
        NoiseModel::isotropic(sigma.max(SIGMA_FLOOR)),
        Box::new(AngularRateResidual { mean_gyro }),
    )
}
