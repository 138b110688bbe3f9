//! Robust data association between two views of the field, possibly
//! from different rows or sessions.
//!
//! Every landmark visible in the first view is back-projected into the
//! second view and matched only against features inside a bounding box
//! around that prediction. When the two cameras are far apart the
//! landmark's appearance is viewpoint-distorted, so its descriptor is
//! first re-rendered through the homography induced by the landmark's
//! local scene plane; short baselines keep the original descriptor.
//! A final eight-point RANSAC rejects leftover outliers.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{
    apply_homography, fit_plane_local, induced_homography, project, CameraIntrinsics, Pose3,
};

use super::{
    descriptor_at, descriptor_distance, match_descriptors_nn, ransac_8point, FeaturePoint,
    PatchSource, RansacParams,
};

/// A calibrated view with its (SLAM-estimated) pose.
#[derive(Clone, Copy, Debug)]
pub struct CameraView {
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose3,
}

/// A landmark visible in the first view: estimated position, its source
/// feature, and a resampleable patch of the first image around that
/// feature.
pub struct AssocLandmark<'a> {
    pub position: Vector3<f64>,
    pub feature: &'a FeaturePoint,
    pub patch: &'a dyn PatchSource,
}

#[derive(Clone, Copy, Debug)]
pub struct AssocConfig {
    /// Baseline beyond which homography warping kicks in (m).
    pub baseline_switch_m: f64,
    /// Half-width of the bounded search box (px).
    pub bbox_half_width_px: f64,
    /// Neighborhood for the local plane: K nearest landmarks...
    pub plane_neighbors: usize,
    /// ...within this radius of the landmark (m).
    pub plane_radius_m: f64,
    /// Descriptor sampling step (px).
    pub descriptor_step_px: f64,
    pub ransac: RansacParams,
    /// Ablation switch: force the short-baseline branch everywhere.
    pub disable_homography_warp: bool,
}

impl Default for AssocConfig {
    fn default() -> Self {
        AssocConfig {
            baseline_switch_m: 0.5,
            bbox_half_width_px: 20.0,
            plane_neighbors: 12,
            plane_radius_m: 0.5,
            descriptor_step_px: 2.0,
            ransac: RansacParams::default(),
            disable_homography_warp: false,
        }
    }
}

/// One accepted correspondence before/after RANSAC.
#[derive(Clone, Debug)]
pub struct MatchPair {
    /// Index into the landmark list passed to [`associate_robust`].
    pub landmark: usize,
    /// Pixel of the source feature in image 1.
    pub pixel1: Vector2<f64>,
    /// Index of the matched feature in image 2.
    pub feature2: usize,
    pub pixel2: Vector2<f64>,
}

/// Output of data association between two images.
#[derive(Clone, Debug)]
pub struct MatchSet {
    pub image1: u32,
    pub image2: u32,
    pub pairs: Vec<MatchPair>,
    pub inliers: Vec<bool>,
}

impl MatchSet {
    pub fn inlier_pairs(&self) -> impl Iterator<Item = &MatchPair> {
        self.pairs
            .iter()
            .zip(&self.inliers)
            .filter_map(|(p, ok)| ok.then_some(p))
    }

    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|m| **m).count()
    }
}

/// K nearest cloud points within a radius, used as the plane
/// neighborhood of one landmark.
fn plane_neighborhood(
    center: &Vector3<f64>,
    cloud: &[Vector3<f64>],
    k: usize,
    radius: f64,
) -> Vec<Vector3<f64>> {
    let mut near: Vec<(f64, usize)> = cloud
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let d = (p - center).norm();
            (d <= radius).then_some((d, i))
        })
        .collect();
    near.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    near.truncate(k);
    near.into_iter().map(|(_, i)| cloud[i]).collect()
}

/// Re-renders the landmark's descriptor as the second camera would see
/// it: each descriptor sample position around the predicted pixel is
/// mapped back into image 1 through the plane-induced homography and
/// sampled from the source patch.
fn warped_descriptor(
    landmark: &AssocLandmark<'_>,
    cam1: &CameraView,
    cam2: &CameraView,
    cloud: &[Vector3<f64>],
    predicted_px: Vector2<f64>,
    cfg: &AssocConfig,
) -> Result<Vec<f64>> {
    let neighbors = plane_neighborhood(
        &landmark.position,
        cloud,
        cfg.plane_neighbors,
        cfg.plane_radius_m,
    );
    let plane_world = fit_plane_local(&neighbors, &cam1.pose.translation)?;
    // Express in the camera-1 frame.
    let w2c1 = cam1.pose.inverse();
    let plane_c1 = plane_world.transformed(&w2c1.rotation.matrix(), &w2c1.translation);
    if plane_c1.distance <= 0.0 {
        return Err(Error::DegenerateGeometry("plane behind camera 1"));
    }
    let relative = cam2.pose.between(&cam1.pose);
    let h12 = induced_homography(&cam1.intrinsics, &cam2.intrinsics, &relative, &plane_c1);
    let h21: Matrix3<f64> = h12
        .try_inverse()
        .ok_or(Error::DegenerateGeometry("homography not invertible"))?;
    descriptor_at(landmark.patch, predicted_px, cfg.descriptor_step_px, |px| {
        apply_homography(&h21, &px)
    })
    .ok_or(Error::DegenerateGeometry("warp left the image"))
}

/// Robust data association: bounded back-projection search with
/// homography-warped descriptors on wide baselines, sealed by 8-point
/// RANSAC.
pub fn associate_robust(
    image1: u32,
    image2: u32,
    cam1: &CameraView,
    cam2: &CameraView,
    landmarks: &[AssocLandmark<'_>],
    landmark_cloud: &[Vector3<f64>],
    features2: &[FeaturePoint],
    cfg: &AssocConfig,
) -> Result<MatchSet> {
    let baseline = (cam1.pose.translation - cam2.pose.translation).norm();
    let warp = baseline >= cfg.baseline_switch_m && !cfg.disable_homography_warp;

    let mut pairs: Vec<MatchPair> = Vec::new();
    for (li, lm) in landmarks.iter().enumerate() {
        let Ok(predicted) = project(&cam2.intrinsics, &cam2.pose, &lm.position) else {
            continue;
        };
        if !cam2.intrinsics.contains(&predicted) {
            continue;
        }
        let descriptor = if warp {
            match warped_descriptor(lm, cam1, cam2, landmark_cloud, predicted, cfg) {
                Ok(d) => d,
                // Degenerate local geometry: this landmark contributes
                // no pair.
                Err(_) => continue,
            }
        } else {
            lm.feature.descriptor.clone()
        };

        // Bounded search: candidates inside the box around the
        // prediction; min-L2 wins, lowest index on ties.
        let mut best: Option<(usize, f64)> = None;
        for (fi, f2) in features2.iter().enumerate() {
            let d = f2.pixel - predicted;
            if d.x.abs() > cfg.bbox_half_width_px || d.y.abs() > cfg.bbox_half_width_px {
                continue;
            }
            let dist = descriptor_distance(&descriptor, &f2.descriptor);
            let better = match best {
                None => true,
                Some((_, bd)) => dist < bd,
            };
            if better {
                best = Some((fi, dist));
            }
        }
        if let Some((fi, _)) = best {
            debug_assert!(
                (features2[fi].pixel - predicted).x.abs() <= cfg.bbox_half_width_px
                    && (features2[fi].pixel - predicted).y.abs() <= cfg.bbox_half_width_px
            );
            pairs.push(MatchPair {
                landmark: li,
                pixel1: lm.feature.pixel,
                feature2: fi,
                pixel2: features2[fi].pixel,
            });
        }
    }

    if pairs.len() < 8 {
        return Err(Error::InsufficientCorrespondences {
            found: pairs.len(),
            needed: 8,
        });
    }
    let px_pairs: Vec<(Vector2<f64>, Vector2<f64>)> =
        pairs.iter().map(|p| (p.pixel1, p.pixel2)).collect();
    let inliers = ransac_8point(&px_pairs, &cfg.ransac)?;
    Ok(MatchSet {
        image1,
        image2,
        pairs,
        inliers,
    })
}

/// The naive baseline: whole-image mutual NN matching with the Lowe
/// ratio test, then 8-point RANSAC. Used for benchmarking against
/// [`associate_robust`].
pub fn naive_associate(
    image1: u32,
    image2: u32,
    features1: &[FeaturePoint],
    features2: &[FeaturePoint],
    ratio: f64,
    ransac: &RansacParams,
) -> Result<MatchSet> {
    let nn = match_descriptors_nn(features1, features2, ratio);
    if nn.len() < 8 {
        return Err(Error::InsufficientCorrespondences {
            found: nn.len(),
            needed: 8,
        });
    }
    let pairs: Vec<MatchPair> = nn
        .iter()
        .map(|&(i, j)| MatchPair {
            landmark: i,
            pixel1: features1[i].pixel,
            feature2: j,
            pixel2: features2[j].pixel,
        })
        .collect();
    let px_pairs: Vec<(Vector2<f64>, Vector2<f64>)> =
        pairs.iter().map(|p| (p.pixel1, p.pixel2)).collect();
    let inliers = ransac_8point(&px_pairs, ransac)?;
    Ok(MatchSet {
        image1,
        image2,
        pairs,
        inliers,
    })
}
