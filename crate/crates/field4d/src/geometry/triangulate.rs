use nalgebra::{DMatrix, Matrix2x3, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

use super::{CameraIntrinsics, Pose3};

/// One image observation of a 3D point.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose3,
    pub pixel: Vector2<f64>,
}

const GN_ITERS: usize = 10;

/// Linear (DLT) triangulation refined by a few Gauss-Newton iterations
/// on reprojection error.
pub fn triangulate(observations: &[Observation]) -> Result<Vector3<f64>> {
    if observations.len() < 2 {
        return Err(Error::DegenerateGeometry("triangulation needs >= 2 views"));
    }
    // Zero baseline: all camera centers coincide.
    let c0 = observations[0].pose.translation;
    let max_baseline = observations
        .iter()
        .map(|o| (o.pose.translation - c0).norm())
        .fold(0.0, f64::max);
    if max_baseline < 1e-12 {
        return Err(Error::DegenerateGeometry("zero baseline"));
    }

    // DLT: each view contributes two rows of A X_hom = 0 built from the
    // 3x4 projection matrix.
    let mut a = DMatrix::zeros(2 * observations.len(), 4);
    for (i, obs) in observations.iter().enumerate() {
        let w2c = obs.pose.inverse();
        let r = w2c.rotation.matrix();
        let k = obs.intrinsics.matrix();
        let kr = k * r;
        let kt = k * w2c.translation;
        // Projection rows p0..p2 as (3-vector, scalar) pairs.
        let rows = [
            (kr.row(0).transpose(), kt.x),
            (kr.row(1).transpose(), kt.y),
            (kr.row(2).transpose(), kt.z),
        ];
        for (j, &coord) in [obs.pixel.x, obs.pixel.y].iter().enumerate() {
            let v3 = rows[2].0.clone() * coord - rows[j].0.clone();
            let vs = coord * rows[2].1 - rows[j].1;
            a[(2 * i + j, 0)] = v3.x;
            a[(2 * i + j, 1)] = v3.y;
            a[(2 * i + j, 2)] = v3.z;
            a[(2 * i + j, 3)] = vs;
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let sv = &svd.singular_values;
    // Rank-deficient system: more than one vanishing singular value.
    if sv.len() >= 2 && sv[sv.len() - 2] <= 1e-12 * sv[0].max(1e-300) {
        return Err(Error::DegenerateGeometry("rank-deficient DLT system"));
    }
    let h = vt.row(vt.nrows() - 1);
    if h[3].abs() <= 1e-14 * h.norm() {
        return Err(Error::DegenerateGeometry("point at infinity"));
    }
    let mut point = Vector3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]);

    // Gauss-Newton refinement of the reprojection error.
    for _ in 0..GN_ITERS {
        let mut hess = Matrix3::zeros();
        let mut grad = Vector3::zeros();
        let mut ok = true;
        for obs in observations {
            let w2c = obs.pose.inverse();
            let pc = w2c.transform(&point);
            if pc.z <= 0.0 {
                ok = false;
                break;
            }
            let k = &obs.intrinsics;
            let res = Vector2::new(
                k.fx * pc.x / pc.z + k.cx - obs.pixel.x,
                k.fy * pc.y / pc.z + k.cy - obs.pixel.y,
            );
            let z2 = pc.z * pc.z;
            let dproj = Matrix2x3::new(
                k.fx / pc.z,
                0.0,
                -k.fx * pc.x / z2,
                0.0,
                k.fy / pc.z,
                -k.fy * pc.y / z2,
            );
            let jac = dproj * w2c.rotation.matrix();
            hess += jac.transpose() * jac;
            grad += jac.transpose() * res;
        }
        if !ok {
            break;
        }
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&(-grad)),
            None => break,
        };
        point += step;
        if step.norm() < 1e-14 {
            break;
        }
    }
    if !point.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateGeometry("triangulation diverged"));
    }
    Ok(point)
}
