//! Patch descriptors.
//!
//! The descriptor is an 8×8 grid of intensities sampled around a
//! feature, normalized to zero mean and unit norm. Sampling goes
//! through the [`PatchSource`] trait so the same code path serves both
//! descriptors computed on stored feature patches (bilinear) and
//! exactly resampleable sources; swapping in a different descriptor
//! (e.g. gradient histograms) only requires another implementation of
//! the sampling front.

use nalgebra::Vector2;

pub const DESCRIPTOR_GRID: usize = 8;
pub const DESCRIPTOR_DIM: usize = DESCRIPTOR_GRID * DESCRIPTOR_GRID;

/// Resampleable local appearance of a source image around one feature.
pub trait PatchSource {
    /// Intensity at an arbitrary source-image pixel. Implementations
    /// clamp or extrapolate outside their support.
    fn intensity(&self, pixel: Vector2<f64>) -> f64;
}

/// Grid offsets of the descriptor samples relative to its center, in
/// units of the sampling step.
pub fn grid_offsets() -> impl Iterator<Item = Vector2<f64>> {
    (0..DESCRIPTOR_GRID).flat_map(|row| {
        (0..DESCRIPTOR_GRID).map(move |col| {
            Vector2::new(
                col as f64 - (DESCRIPTOR_GRID - 1) as f64 / 2.0,
                row as f64 - (DESCRIPTOR_GRID - 1) as f64 / 2.0,
            )
        })
    })
}

/// Zero-mean, unit-norm normalization. An (almost) flat patch comes
/// back as all zeros.
pub fn normalize_descriptor(raw: &mut [f64]) {
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    for v in raw.iter_mut() {
        *v -= mean;
    }
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for v in raw.iter_mut() {
            *v /= norm;
        }
    } else {
        raw.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Samples a normalized descriptor from `source` on a grid centered at
/// `center` with `step` pixels between samples. `map` transforms each
/// grid pixel into source-image coordinates (identity for a plain
/// descriptor, an inverse homography for a warped one).
pub fn descriptor_at(
    source: &dyn PatchSource,
    center: Vector2<f64>,
    step: f64,
    map: impl Fn(Vector2<f64>) -> Option<Vector2<f64>>,
) -> Option<Vec<f64>> {
    let mut raw = Vec::with_capacity(DESCRIPTOR_DIM);
    for off in grid_offsets() {
        let target_px = center + off * step;
        let source_px = map(target_px)?;
        raw.push(source.intensity(source_px));
    }
    normalize_descriptor(&mut raw);
    Some(raw)
}

pub fn descriptor_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A descriptor grid reinterpreted as a tiny image: bilinear
/// interpolation inside its support, clamped at the border. This is
/// the patch source available when a dataset carries only descriptors.
pub struct DescriptorPatch {
    center: Vector2<f64>,
    step: f64,
    grid: Vec<f64>,
}

impl DescriptorPatch {
    pub fn new(center: Vector2<f64>, step: f64, descriptor: &[f64]) -> Self {
        assert_eq!(descriptor.len(), DESCRIPTOR_DIM);
        DescriptorPatch {
            center,
            step,
            grid: descriptor.to_vec(),
        }
    }
}

impl PatchSource for DescriptorPatch {
    fn intensity(&self, pixel: Vector2<f64>) -> f64 {
        let half = (DESCRIPTOR_GRID - 1) as f64 / 2.0;
        // Grid coordinates of the query.
        let gx = ((pixel.x - self.center.x) / self.step + half)
            .clamp(0.0, (DESCRIPTOR_GRID - 1) as f64);
        let gy = ((pixel.y - self.center.y) / self.step + half)
            .clamp(0.0, (DESCRIPTOR_GRID - 1) as f64);
        let x0 = gx.floor() as usize;
        let y0 = gy.floor() as usize;
        let x1 = (x0 + 1).min(DESCRIPTOR_GRID - 1);
        let y1 = (y0 + 1).min(DESCRIPTOR_GRID - 1);
        let fx = gx - x0 as f64;
        let fy = gy - y0 as f64;
        let v00 = self.grid[y0 * DESCRIPTOR_GRID + x0];
        let v10 = self.grid[y0 * DESCRIPTOR_GRID + x1];
        let v01 = self.grid[y1 * DESCRIPTOR_GRID + x0];
        let v11 = self.grid[y1 * DESCRIPTOR_GRID + x1];
        v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }
}
