use nalgebra::{DVector, Vector2};

use crate::error::{Error, Result};
use crate::factorgraph::{Evaluation, Factor, NoiseModel, Residual, Value, VariableKey};
use crate::geometry::{project, triangulate, CameraIntrinsics, Observation};
use crate::sensors::CameraState;

/// One observation feeding a structureless vision factor.
#[derive(Clone, Copy, Debug)]
pub struct TrackObservation {
    pub state_key: VariableKey,
    pub pixel: Vector2<f64>,
}

/// Structureless (smart) vision factor: the landmark is triangulated
/// from the current camera estimates at every evaluation, so no
/// landmark variable enters the graph. The residual stacks the
/// per-observation reprojection errors.
pub struct SmartVisionFactor {
    pub intrinsics: CameraIntrinsics,
    pub pixels: Vec<Vector2<f64>>,
}

impl SmartVisionFactor {
    fn triangulate_from(&self, values: &[&Value]) -> Result<nalgebra::Vector3<f64>> {
        let observations: Vec<Observation> = values
            .iter()
            .zip(&self.pixels)
            .map(|(v, px)| Observation {
                intrinsics: self.intrinsics,
                pose: v.as_state().pose(),
                pixel: *px,
            })
            .collect();
        triangulate(&observations)
    }
}

impl Residual for SmartVisionFactor {
    fn dim(&self) -> usize {
        2 * self.pixels.len()
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let point = match self.triangulate_from(values) {
            Ok(p) => p,
            Err(_) => return Evaluation::invalid(self.dim()),
        };
        let mut r = DVector::zeros(self.dim());
        for (i, (v, px)) in values.iter().zip(&self.pixels).enumerate() {
            match project(&self.intrinsics, &v.as_state().pose(), &point) {
                Ok(proj) => {
                    r[2 * i] = proj.x - px.x;
                    r[2 * i + 1] = proj.y - px.y;
                }
                Err(_) => return Evaluation::invalid(self.dim()),
            }
        }
        Evaluation::valid(r)
    }

    fn active_dims(&self, _slot: usize, _dim: usize) -> Option<Vec<usize>> {
        // Only the pose blocks influence reprojection.
        Some((CameraState::ROT..CameraState::VEL).collect())
    }

    fn reprojection_errors_px(&self, values: &[&Value]) -> Option<Vec<f64>> {
        let point = self.triangulate_from(values).ok()?;
        let mut errs = Vec::with_capacity(self.pixels.len());
        for (v, px) in values.iter().zip(&self.pixels) {
            match project(&self.intrinsics, &v.as_state().pose(), &point) {
                Ok(proj) => errs.push((proj - px).norm()),
                Err(_) => errs.push(f64::INFINITY),
            }
        }
        Some(errs)
    }
}

/// Builds a smart vision factor from a feature track. Tracks must span
/// more than 6 images.
pub fn smart_vision_factor(
    intrinsics: CameraIntrinsics,
    observations: &[TrackObservation],
    pixel_sigma: f64,
) -> Result<Factor> {
    if observations.len() <= 6 {
        return Err(Error::TrackTooShort {
            images: observations.len(),
        });
    }
    let keys: Vec<VariableKey> = observations.iter().map(|o| o.state_key).collect();
    let pixels: Vec<Vector2<f64>> = observations.iter().map(|o| o.pixel).collect();
    Ok(Factor::new(
        keys,
        NoiseModel::isotropic(pixel_sigma.max(1e-6)),
        Box::new(SmartVisionFactor { intrinsics, pixels }),
    )
    .vision())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose3, Rotation3};
    use nalgebra::{Vector3, Vector6};

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480)
    }

    fn camera_state(i: usize) -> CameraState {
        // A line of cameras looking down at the ground plane z = 0.
        let rot = Rotation3::from_columns(Vector3::x(), -Vector3::y(), -Vector3::z());
        CameraState::new(
            rot,
            Vector3::new(0.3 * i as f64, 0.0, 2.0),
            Vector3::new(0.5, 0.0, 0.0),
            Vector3::zeros(),
            Vector6::zeros(),
            i as f64 * 0.1,
        )
    }

    fn observations_of(point: Vector3<f64>, n: usize) -> (Vec<TrackObservation>, Vec<Value>) {
        let mut obs = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            let s = camera_state(i);
            let px = project(&intr(), &s.pose(), &point).unwrap();
            obs.push(TrackObservation {
                state_key: VariableKey::camera(0, 0, i as u32),
                pixel: px,
            });
            vals.push(Value::State(s));
        }
        (obs, vals)
    }

    #[test]
    fn exact_track_has_zero_residual() {
        let (obs, vals) = observations_of(Vector3::new(0.8, 0.2, 0.0), 7);
        let f = smart_vision_factor(intr(), &obs, 0.5).unwrap();
        let refs: Vec<&Value> = vals.iter().collect();
        let eval = f.residual.evaluate(&refs);
        assert!(eval.valid);
        assert!(eval.residual.norm() < 1e-8);
    }

    #[test]
    fn six_image_track_is_rejected() {
        let (obs, _) = observations_of(Vector3::new(0.8, 0.2, 0.0), 6);
        assert!(matches!(
            smart_vision_factor(intr(), &obs, 0.5),
            Err(Error::TrackTooShort { images: 6 })
        ));
    }

    #[test]
    fn pose_perturbation_matches_first_order_prediction() {
        let (obs, vals) = observations_of(Vector3::new(0.8, 0.2, 0.0), 8);
        let f = smart_vision_factor(intr(), &obs, 0.5).unwrap();
        let refs: Vec<&Value> = vals.iter().collect();

        // Finite-difference directional derivative along a 1 cm shift
        // of camera 3.
        let mut dir = DVector::zeros(CameraState::DIM);
        dir[CameraState::POS] = 1.0; // x shift
        let h = 1e-5;
        let plus = vals[3].retract((dir.clone() * h).rows(0, CameraState::DIM));
        let minus = vals[3].retract((dir.clone() * -h).rows(0, CameraState::DIM));
        let mut shifted = refs.clone();
        shifted[3] = &plus;
        let rp = f.residual.evaluate(&shifted).residual;
        shifted[3] = &minus;
        let rm = f.residual.evaluate(&shifted).residual;
        let deriv = (rp - rm) / (2.0 * h);

        // Predicted change for a 1 cm perturbation vs actual.
        let step = 0.01;
        let moved = vals[3].retract((dir * step).rows(0, CameraState::DIM));
        shifted[3] = &moved;
        let r1 = f.residual.evaluate(&shifted).residual;
        let predicted = deriv * step;
        assert!(r1.norm() > 0.0);
        let rel = (r1.clone() - predicted.clone()).norm() / r1.norm();
        assert!(rel < 0.1, "first-order mismatch {rel}");
    }

    #[test]
    fn degenerate_geometry_flags_invalid() {
        // All cameras at the same center: triangulation must fail and
        // the factor must evaluate as inactive rather than erroring.
        let s = camera_state(0);
        let vals: Vec<Value> = (0..7).map(|_| Value::State(s)).collect();
        let obs: Vec<TrackObservation> = (0..7)
            .map(|i| TrackObservation {
                state_key: VariableKey::camera(0, 0, i as u32),
                pixel: Vector2::new(100.0 + i as f64, 120.0),
            })
            .collect();
        let f = smart_vision_factor(intr(), &obs, 0.5).unwrap();
        let refs: Vec<&Value> = vals.iter().collect();
        let eval = f.residual.evaluate(&refs);
        assert!(!eval.valid);
        assert_eq!(eval.residual.norm(), 0.0);
    }

    #[test]
    fn pose_of_state_is_what_projection_uses() {
        let s = camera_state(2);
        let p = Vector3::new(0.7, 0.1, 0.0);
        let px = project(&intr(), &Pose3::new(s.rotation, s.position), &p).unwrap();
        let px2 = project(&intr(), &s.pose(), &p).unwrap();
        assert_eq!(px, px2);
    }
}
