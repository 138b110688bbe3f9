//! Feature front-end: descriptor matching and track building for
//! single-row SLAM, plus the robust wide-baseline data association used
//! to link rows and sessions.

mod associate;
mod descriptor;
mod matching;
mod ransac;
mod tracks;

pub use associate::{
    associate_robust, naive_associate, AssocConfig, AssocLandmark, CameraView, MatchPair,
    MatchSet,
};
pub use descriptor::{
    descriptor_at, descriptor_distance, normalize_descriptor, DescriptorPatch, PatchSource,
    DESCRIPTOR_DIM, DESCRIPTOR_GRID,
};
pub use matching::match_descriptors_nn;
pub use ransac::{ransac_8point, RansacParams};
pub use tracks::{build_tracks, PairMatches};

use nalgebra::Vector2;

/// A detected feature: pixel location plus appearance descriptor.
#[derive(Clone, Debug)]
pub struct FeaturePoint {
    pub image: u32,
    pub pixel: Vector2<f64>,
    pub descriptor: Vec<f64>,
}

/// A multi-image feature track (landmark candidate). At most one
/// feature per image; accepted only when it spans more than 6 images.
#[derive(Clone, Debug)]
pub struct Track {
    pub id: u32,
    /// (image id, feature index within that image), sorted by image.
    pub observations: Vec<(u32, u32)>,
}

impl Track {
    pub fn image_count(&self) -> usize {
        self.observations.len()
    }
}
