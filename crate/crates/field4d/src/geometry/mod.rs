//! Lie-group poses, the pinhole camera model, triangulation, plane
//! estimation, and the plane-induced homography between two views.
//!
//! Frame conventions used throughout the crate:
//!
//! * [`Pose3`] maps **camera/body coordinates to world coordinates**
//!   (`p_world = R * p_cam + t`), so `translation` is the camera center.
//! * A [`PlaneEstimate`] `{n, d}` is the point set `{X : n·X + d = 0}`
//!   in whatever frame its points were expressed in. The normal is
//!   oriented toward the reference point used when fitting, so a plane
//!   fitted in a camera frame has `d > 0` when it lies in front of that
//!   camera.

mod camera;
mod homography;
mod plane;
mod pose;
mod rotation;
mod triangulate;

pub use camera::{project, CameraIntrinsics};
pub use homography::{apply_homography, induced_homography};
pub use plane::{fit_plane_local, PlaneEstimate};
pub use pose::Pose3;
pub use rotation::Rotation3;
pub use triangulate::{triangulate, Observation};

pub(crate) use rotation::{
    double_integral_exp, left_jacobian, right_jacobian, right_jacobian_inv, skew,
};
