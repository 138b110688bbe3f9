use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Rotation3;

/// A rigid transform, used as a camera/body pose: maps local (camera)
/// coordinates into world coordinates, so `translation` is the camera
/// center expressed in the world frame.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Pose3 {
    pub rotation: Rotation3,
    pub translation: Vector3<f64>,
}

impl Pose3 {
    pub fn identity() -> Self {
        Pose3 {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3, translation: Vector3<f64>) -> Self {
        Pose3 {
            rotation,
            translation,
        }
    }

    /// self ∘ other: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3 {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose3 {
        let rot_inv = self.rotation.inverse();
        Pose3 {
            translation: -rot_inv.rotate(&self.translation),
            rotation: rot_inv,
        }
    }

    /// Local → world.
    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    /// World → local.
    pub fn transform_inverse(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.unrotate(&(p - self.translation))
    }

    /// Relative transform self⁻¹ ∘ other (maps `other` local coords into
    /// `self` local coords).
    pub fn between(&self, other: &Pose3) -> Pose3 {
        self.inverse().compose(other)
    }
}
