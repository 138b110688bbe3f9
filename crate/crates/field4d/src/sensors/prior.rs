use nalgebra::{DMatrix, DVector};

use crate::factorgraph::{Evaluation, Factor, NoiseModel, Residual, Value, VariableKey};
use crate::geometry::right_jacobian_inv;
use crate::sensors::CameraState;

/// Per-block prior sigmas for a full-state prior.
#[derive(Clone, Copy, Debug)]
pub struct PriorSigmas {
    pub rotation_rad: f64,
    pub position_m: f64,
    pub velocity_m_s: f64,
    pub angular_rate_rad_s: f64,
    pub bias: f64,
}

impl Default for PriorSigmas {
    fn default() -> Self {
        PriorSigmas {
            rotation_rad: 1.0,
            position_m: 10.0,
            velocity_m_s: 1.0,
            angular_rate_rad_s: 1.0,
            bias: 0.1,
        }
    }
}

struct StatePriorResidual {
    mean: CameraState,
}

impl Residual for StatePriorResidual {
    fn dim(&self) -> usize {
        CameraState::DIM
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let s = values[0].as_state();
        let mut r = DVector::zeros(CameraState::DIM);
        r.fixed_rows_mut::<3>(CameraState::ROT)
            .copy_from(&self.mean.rotation.between_log(&s.rotation));
        r.fixed_rows_mut::<3>(CameraState::POS)
            .copy_from(&(s.position - self.mean.position));
        r.fixed_rows_mut::<3>(CameraState::VEL)
            .copy_from(&(s.velocity - self.mean.velocity));
        r.fixed_rows_mut::<3>(CameraState::OMEGA)
            .copy_from(&(s.angular_rate - self.mean.angular_rate));
        r.fixed_rows_mut::<6>(CameraState::BIAS)
            .copy_from(&(s.imu_bias - self.mean.imu_bias));
        Evaluation::valid(r)
    }

    fn jacobians(&self, values: &[&Value]) -> Option<Vec<DMatrix<f64>>> {
        let s = values[0].as_state();
        let mut j = DMatrix::identity(CameraState::DIM, CameraState::DIM);
        let theta = self.mean.rotation.between_log(&s.rotation);
        j.fixed_view_mut::<3, 3>(CameraState::ROT, CameraState::ROT)
            .copy_from(&right_jacobian_inv(&theta));
        Some(vec![j])
    }
}

/// Gauge-fixing prior on a full camera state.
pub fn state_prior_factor(key: VariableKey, mean: CameraState, sigmas: &PriorSigmas) -> Factor {
    let mut sv = DVector::zeros(CameraState::DIM);
    for k in 0..3 {
        sv[CameraState::ROT + k] = sigmas.rotation_rad;
        sv[CameraState::POS + k] = sigmas.position_m;
        sv[CameraState::VEL + k] = sigmas.velocity_m_s;
        sv[CameraState::OMEGA + k] = sigmas.angular_rate_rad_s;
        sv[CameraState::BIAS + k] = sigmas.bias;
        sv[CameraState::BIAS + 3 + k] = sigmas.bias;
    }
    Factor::new(
        vec![key],
        NoiseModel::diagonal(sv),
        Box::new(StatePriorResidual { mean }),
    )
    .absolute()
}
