//! Vehicle trajectory synthesis.
//!
//! The trajectory is *defined* by piecewise-constant body rates: a
//! small tracking controller picks a constant angular rate and specific
//! force for every IMU interval, and the state is advanced with the
//! exact constant-rate integrals. The emitted IMU stream is therefore
//! perfectly consistent with the ground-truth poses — preintegrating
//! the noiseless stream reproduces the true deltas to rounding — while
//! the trajectory still follows the field row with gentle bobbing and
//! heading wobble.

use nalgebra::Vector3;

use crate::geometry::{double_integral_exp, left_jacobian, Pose3, Rotation3};

use super::scene::GroundModel;

#[derive(Clone, Copy, Debug)]
pub struct TrajectoryParams {
    pub speed_m_s: f64,
    pub imu_rate_hz: f64,
    /// Camera mount pitch below the horizon, degrees.
    pub camera_pitch_deg: f64,
    /// Camera height above ground, meters.
    pub camera_height_m: f64,
    pub gravity: Vector3<f64>,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        TrajectoryParams {
            speed_m_s: 3.0,
            imu_rate_hz: 167.0,
            camera_pitch_deg: 50.0,
            camera_height_m: 1.8,
            gravity: Vector3::new(0.0, 0.0, -9.81),
        }
    }
}

/// State at the start of one IMU interval plus the body rates held
/// through it.
#[derive(Clone, Copy, Debug)]
pub struct TrajStep {
    pub t: f64,
    pub rotation: Rotation3,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// True body angular rate over [t, t+dt).
    pub gyro: Vector3<f64>,
    /// True body specific force over [t, t+dt).
    pub accel: Vector3<f64>,
}

#[derive(Clone, Debug)]
pub struct TrajectorySim {
    pub dt: f64,
    pub gravity: Vector3<f64>,
    pub steps: Vec<TrajStep>,
    pub t_end: f64,
    /// Final state, at `t_end`.
    pub final_rotation: Rotation3,
    pub final_position: Vector3<f64>,
    pub final_velocity: Vector3<f64>,
}

/// Camera orientation from a forward direction: columns are (image
/// right, image down, viewing direction).
pub fn camera_rotation(forward: Vector3<f64>) -> Rotation3 {
    let f = forward.normalize();
    let r = f.cross(&Vector3::z()).normalize();
    let d = f.cross(&r);
    Rotation3::from_columns(r, d, f)
}

fn advance(
    rot: &mut Rotation3,
    pos: &mut Vector3<f64>,
    vel: &mut Vector3<f64>,
    gyro: Vector3<f64>,
    accel: Vector3<f64>,
    gravity: Vector3<f64>,
    dt: f64,
) {
    let phi = gyro * dt;
    let r = rot.matrix();
    *pos += *vel * dt + 0.5 * gravity * dt * dt + r * (double_integral_exp(&phi) * accel) * dt * dt;
    *vel += gravity * dt + r * (left_jacobian(&phi) * accel) * dt;
    *rot = rot.compose(&Rotation3::exp(phi));
}

impl TrajectorySim {
    /// True state at any `t` within the trajectory, from the exact
    /// constant-rate integral of the covering interval. Returns
    /// (rotation, position, velocity, body angular rate).
    pub fn state_at(&self, t: f64) -> (Rotation3, Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let last = self.steps.len() - 1;
        let idx = (((t - self.steps[0].t) / self.dt).floor() as isize).clamp(0, last as isize) as usize;
        let step = &self.steps[idx];
        let tau = (t - step.t).max(0.0);
        let mut rot = step.rotation;
        let mut pos = step.position;
        let mut vel = step.velocity;
        advance(
            &mut rot,
            &mut pos,
            &mut vel,
            step.gyro,
            step.accel,
            self.gravity,
            tau,
        );
        (rot, pos, vel, step.gyro)
    }

    pub fn pose_at(&self, t: f64) -> Pose3 {
        let (r, p, _, _) = self.state_at(t);
        Pose3::new(r, p)
    }
}

/// Synthesizes the trajectory of one row traversal: along +x at the
/// row's y offset, camera pitched down, with gentle lateral/vertical
/// bobbing and heading wobble. `wobble_phase` decorrelates rows and
/// sessions.
pub fn simulate_row_trajectory(
    ground: &GroundModel,
    row_y: f64,
    row_length: f64,
    params: &TrajectoryParams,
    wobble_phase: f64,
) -> TrajectorySim {
    let dt = 1.0 / params.imu_rate_hz;
    let duration = row_length / params.speed_m_s;
    let n = (duration / dt).ceil() as usize;
    let pitch = params.camera_pitch_deg.to_radians();

    let target = |t: f64| -> Vector3<f64> {
        let x = params.speed_m_s * t;
        let y = row_y + 0.05 * (std::f64::consts::TAU * t / 6.3 + wobble_phase).sin();
        let z = ground.elevation(x, y)
            + params.camera_height_m
            + 0.02 * (std::f64::consts::TAU * t / 4.1 + 1.3 * wobble_phase).sin();
        Vector3::new(x, y, z)
    };
    let target_heading = |t: f64| -> Vector3<f64> {
        let yaw = 0.03 * (std::f64::consts::TAU * t / 7.9 + 0.7 * wobble_phase).sin();
        let c = pitch.cos();
        Vector3::new(c * yaw.cos(), c * yaw.sin(), -pitch.sin())
    };

    // Finite differences of the (smooth) target path for feedforward.
    let h = 1e-3;
    let target_vel = |t: f64| (target(t + h) - target(t - h)) / (2.0 * h);
    let target_acc = |t: f64| (target(t + h) - 2.0 * target(t) + target(t - h)) / (h * h);

    let mut rot = camera_rotation(target_heading(0.0));
    let mut pos = target(0.0);
    let mut vel = target_vel(0.0);

    let (kp, kd, kr) = (4.0, 3.5, 4.0);
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let a_des = target_acc(t) + kp * (target(t) - pos) + kd * (target_vel(t) - vel);
        let a_des = if a_des.norm() > 4.0 {
            a_des * (4.0 / a_des.norm())
        } else {
            a_des
        };
        let accel = rot.unrotate(&(a_des - params.gravity));

        let r_des = camera_rotation(target_heading(t));
        let r_des_next = camera_rotation(target_heading(t + dt));
        let omega_ff = r_des.between_log(&r_des_next) / dt;
        let omega = omega_ff + kr * rot.between_log(&r_des);
        let omega = if omega.norm() > 1.0 {
            omega * (1.0 / omega.norm())
        } else {
            omega
        };

        steps.push(TrajStep {
            t,
            rotation: rot,
            position: pos,
            velocity: vel,
            gyro: omega,
            accel,
        });
        advance(&mut rot, &mut pos, &mut vel, omega, accel, params.gravity, dt);
    }

    TrajectorySim {
        dt,
        gravity: params.gravity,
        t_end: n as f64 * dt,
        steps,
        final_rotation: rot,
        final_position: pos,
        final_velocity: vel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::{preintegrate, ImuSample};
    use approx::assert_relative_eq;
    use nalgebra::Vector6;

    fn flat_ground() -> GroundModel {
        GroundModel {
            slope_x: 0.002,
            slope_y: -0.001,
            waves: [
                (0.015, 1.0 / 7.0, 1.0 / 11.0, 0.4),
                (0.010, 1.0 / 3.0, 1.0 / 5.0, 2.0),
                (0.005, 1.0 / 1.7, 1.0 / 2.3, 1.1),
            ],
        }
    }

    #[test]
    fn trajectory_tracks_the_row() {
        let params = TrajectoryParams::default();
        let traj = simulate_row_trajectory(&flat_ground(), 2.0, 20.0, &params, 0.3);
        for step in traj.steps.iter().skip(200) {
            assert!((step.position.y - 2.0).abs() < 0.25, "y = {}", step.position.y);
            let ground_z = flat_ground().elevation(step.position.x, step.position.y);
            assert!(
                (step.position.z - ground_z - params.camera_height_m).abs() < 0.2,
                "z = {}",
                step.position.z
            );
        }
        assert!(traj.final_position.x > 19.0);
    }

    /// The emitted IMU stream, preintegrated over any window, must
    /// reproduce the true state deltas: the streams and the poses are
    /// one consistent object.
    #[test]
    fn noiseless_imu_reproduces_state_deltas() {
        let params = TrajectoryParams::default();
        let traj = simulate_row_trajectory(&flat_ground(), 0.0, 12.0, &params, 1.1);
        let g = params.gravity;
        for (a, b) in [(0usize, 400usize), (137, 904), (511, 512), (2, 600)] {
            let samples: Vec<ImuSample> = traj.steps[a..=b]
                .iter()
                .map(|s| ImuSample {
                    timestamp: s.t,
                    gyro: s.gyro,
                    accel: s.accel,
                })
                .collect();
            let pre = preintegrate(&samples, Vector6::zeros(), (1e-9, 1e-9)).unwrap();
            let (sa, sb) = (&traj.steps[a], &traj.steps[b]);
            let dt = sb.t - sa.t;
            let ra = sa.rotation;
            let dv = ra.unrotate(&(sb.velocity - sa.velocity - g * dt));
            let dp = ra.unrotate(&(sb.position - sa.position - sa.velocity * dt - 0.5 * g * dt * dt));
            let d_rot_true = ra.inverse().compose(&sb.rotation);
            assert!(pre.delta_rot.between_log(&d_rot_true).norm() < 1e-9);
            assert_relative_eq!(pre.delta_vel, dv, epsilon = 1e-9);
            assert_relative_eq!(pre.delta_pos, dp, epsilon = 1e-9);
        }
    }

    #[test]
    fn state_at_matches_step_boundaries() {
        let traj = simulate_row_trajectory(&flat_ground(), 1.0, 8.0, &TrajectoryParams::default(), 0.0);
        for k in [0usize, 10, 500, traj.steps.len() - 1] {
            let (r, p, v, w) = traj.state_at(traj.steps[k].t);
            assert!(r.between_log(&traj.steps[k].rotation).norm() < 1e-12);
            assert_relative_eq!(p, traj.steps[k].position, epsilon = 1e-12);
            assert_relative_eq!(v, traj.steps[k].velocity, epsilon = 1e-12);
            assert_relative_eq!(w, traj.steps[k].gyro, epsilon = 1e-12);
        }
    }
}
