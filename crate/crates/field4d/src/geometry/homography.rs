use nalgebra::{Matrix3, Vector2, Vector3};

use super::{CameraIntrinsics, PlaneEstimate, Pose3};

/// Homography induced by a scene plane between two views:
/// `H = K2 (R - t nᵀ / d) K1⁻¹`.
///
/// `relative` maps camera-1 coordinates into camera-2 coordinates
/// (`x2 = R x1 + t`; build it as `pose2.between(&pose1)` for
/// camera-to-world poses). The plane must be expressed in the camera-1
/// frame with its normal oriented toward camera 1, so `plane.distance`
/// is the positive distance from camera 1 to the plane.
///
/// For any world point on the plane visible in both views, `H` maps its
/// image-1 pixel onto its image-2 pixel (projectively).
pub fn induced_homography(
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
    relative: &Pose3,
    plane: &PlaneEstimate,
) -> Matrix3<f64> {
    debug_assert!(plane.distance > 0.0, "plane must lie in front of camera 1");
    let r = relative.rotation.matrix();
    let t = relative.translation;
    let mid = r - t * plane.normal.transpose() / plane.distance;
    k2.matrix() * mid * k1.matrix_inv()
}

/// Applies a homography to a pixel; `None` if the result is at infinity.
pub fn apply_homography(h: &Matrix3<f64>, pixel: &Vector2<f64>) -> Option<Vector2<f64>> {
    let v = h * Vector3::new(pixel.x, pixel.y, 1.0);
    if v.z.abs() < 1e-12 {
        return None;
    }
    Some(Vector2::new(v.x / v.z, v.y / v.z))
}
