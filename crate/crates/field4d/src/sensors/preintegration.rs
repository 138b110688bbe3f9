//! On-manifold IMU preintegration.
//!
//! Samples are zero-order held: sample `k` applies over
//! `[t_k, t_{k+1})` and the **last sample is the window boundary**,
//! contributing no interval of its own. Integration within an interval
//! is exact for the held signal (closed forms built from the SO(3)
//! integrals), so preintegrating a piecewise-constant stream incurs no
//! discretization error beyond rounding.

use nalgebra::{Matrix3, SMatrix, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{double_integral_exp, left_jacobian, right_jacobian, skew, Rotation3};

/// One IMU reading: body-frame angular rate and specific force.
#[derive(Clone, Copy, Debug)]
pub struct ImuSample {
    pub timestamp: f64,
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
}

type Matrix9 = SMatrix<f64, 9, 9>;

/// Gravity-free relative motion accumulated over an IMU window.
#[derive(Clone, Debug)]
pub struct PreintegratedImu {
    pub delta_rot: Rotation3,
    pub delta_vel: Vector3<f64>,
    pub delta_pos: Vector3<f64>,
    pub dt: f64,
    /// Bias the deltas were integrated at (gyro, accel).
    pub bias_ref: Vector6<f64>,
    /// Propagated covariance over [δθ, δv, δp].
    pub covariance: Matrix9,
    /// First-order bias sensitivities of the deltas.
    pub d_rot_d_bg: Matrix3<f64>,
    pub d_vel_d_bg: Matrix3<f64>,
    pub d_vel_d_ba: Matrix3<f64>,
    pub d_pos_d_bg: Matrix3<f64>,
    pub d_pos_d_ba: Matrix3<f64>,
}

impl PreintegratedImu {
    pub fn identity(bias_ref: Vector6<f64>) -> Self {
        PreintegratedImu {
            delta_rot: Rotation3::identity(),
            delta_vel: Vector3::zeros(),
            delta_pos: Vector3::zeros(),
            dt: 0.0,
            bias_ref,
            covariance: Matrix9::zeros(),
            d_rot_d_bg: Matrix3::zeros(),
            d_vel_d_bg: Matrix3::zeros(),
            d_vel_d_ba: Matrix3::zeros(),
            d_pos_d_bg: Matrix3::zeros(),
            d_pos_d_ba: Matrix3::zeros(),
        }
    }

    /// Integrates one zero-order-hold interval at per-sample noise
    /// sigmas `(gyro, accel)`.
    pub fn integrate(
        &mut self,
        gyro: Vector3<f64>,
        accel: Vector3<f64>,
        dt: f64,
        noise: (f64, f64),
    ) {
        let omega = gyro - self.bias_ref.fixed_rows::<3>(0);
        let acc: Vector3<f64> = accel - self.bias_ref.fixed_rows::<3>(3);
        let phi = omega * dt;
        let step = Rotation3::exp(phi);
        let rot = self.delta_rot.matrix();
        let jl = left_jacobian(&phi);
        let cc = double_integral_exp(&phi);

        // Bias sensitivities use the pre-update state.
        let acc_hat = skew(&acc);
        let jr_dt = right_jacobian(&phi) * dt;
        let d_rot_prev = self.d_rot_d_bg;
        self.d_pos_d_ba += self.d_vel_d_ba * dt - 0.5 * rot * dt * dt;
        self.d_pos_d_bg += self.d_vel_d_bg * dt - 0.5 * rot * acc_hat * d_rot_prev * dt * dt;
        self.d_vel_d_ba -= rot * dt;
        self.d_vel_d_bg -= rot * acc_hat * d_rot_prev * dt;
        self.d_rot_d_bg = step.matrix().transpose() * d_rot_prev - jr_dt;

        // First-order covariance propagation over [δθ, δv, δp].
        let (sigma_g, sigma_a) = noise;
        let mut a = Matrix9::identity();
        a.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&step.matrix().transpose());
        a.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(-rot * acc_hat * dt));
        a.fixed_view_mut::<3, 3>(6, 0)
            .copy_from(&(-0.5 * rot * acc_hat * dt * dt));
        a.fixed_view_mut::<3, 3>(6, 3)
            .copy_from(&(Matrix3::identity() * dt));
        let mut b = SMatrix::<f64, 9, 6>::zeros();
        b.fixed_view_mut::<3, 3>(0, 0).copy_from(&jr_dt);
        b.fixed_view_mut::<3, 3>(3, 3).copy_from(&(rot * dt));
        b.fixed_view_mut::<3, 3>(6, 3)
            .copy_from(&(0.5 * rot * dt * dt));
        let mut q = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..3 {
            q[(i, i)] = sigma_g * sigma_g;
            q[(i + 3, i + 3)] = sigma_a * sigma_a;
        }
        self.covariance = a * self.covariance * a.transpose() + b * q * b.transpose();

        // Exact zero-order-hold deltas.
        self.delta_pos += self.delta_vel * dt + rot * (cc * acc) * dt * dt;
        self.delta_vel += rot * (jl * acc) * dt;
        self.delta_rot = self.delta_rot.compose(&step);
        self.dt += dt;
    }

    /// Chains two windows (`self` then `other`).
    pub fn compose(&self, other: &PreintegratedImu) -> PreintegratedImu {
        let rot = self.delta_rot.matrix();
        let mut out = self.clone();
        out.delta_pos = self.delta_pos + self.delta_vel * other.dt + rot * other.delta_pos;
        out.delta_vel = self.delta_vel + rot * other.delta_vel;
        out.delta_rot = self.delta_rot.compose(&other.delta_rot);
        out.dt = self.dt + other.dt;
        out
    }
}

/// Preintegrates a sample window at a fixed bias linearization point,
/// with per-sample white-noise sigmas `(gyro, accel)`.
pub fn preintegrate(
    samples: &[ImuSample],
    bias: Vector6<f64>,
    noise_sigmas: (f64, f64),
) -> Result<PreintegratedImu> {
    if samples.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut pre = PreintegratedImu::identity(bias);
    for pair in samples.windows(2) {
        let dt = pair[1].timestamp - pair[0].timestamp;
        if dt <= 0.0 {
            return Err(Error::NonMonotoneTime);
        }
        pre.integrate(pair[0].gyro, pair[0].accel, dt, noise_sigmas);
    }
    Ok(pre)
}
