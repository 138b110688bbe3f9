use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The plane `{X : normal·X + distance = 0}`.
///
/// `distance` is the signed distance from the frame origin along
/// `-normal`; with the normal oriented toward a reference camera whose
/// center is the origin, `distance > 0` for planes in front of it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlaneEstimate {
    pub normal: Vector3<f64>,
    pub distance: f64,
}

impl PlaneEstimate {
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) + self.distance
    }

    /// Re-expresses the plane after points are moved by `X' = R X + t`.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let n = rotation * self.normal;
        PlaneEstimate {
            normal: n,
            distance: self.distance - n.dot(translation),
        }
    }
}

/// Least-squares plane through a local cluster of points: centroid plus
/// the smallest principal direction as normal, oriented toward
/// `toward` (the reference camera center).
pub fn fit_plane_local(points: &[Vector3<f64>], toward: &Vector3<f64>) -> Result<PlaneEstimate> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry("plane fit needs at least 3 points"));
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    // Eigenvalues are unordered; locate smallest and largest.
    let mut i_min = 0;
    let mut i_max = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[i_min] {
            i_min = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[i_max] {
            i_max = i;
        }
    }
    let i_mid = 3 - i_min - i_max;
    // Collinear input: two near-zero principal directions.
    if eig.eigenvalues[i_mid] <= 1e-12 * eig.eigenvalues[i_max].max(1e-300) {
        return Err(Error::DegenerateGeometry("collinear points"));
    }
    let mut normal = eig.eigenvectors.column(i_min).normalize();
    if normal.dot(&(toward - centroid)) < 0.0 {
        normal = -normal;
    }
    Ok(PlaneEstimate {
        normal,
        distance: -normal.dot(&centroid),
    })
}
