//! Eight-point RANSAC for fundamental-matrix outlier rejection.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct RansacParams {
    pub iterations: usize,
    pub inlier_threshold_px: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 2000,
            inlier_threshold_px: 2.0,
            seed: 0,
        }
    }
}

fn normalization(points: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector2<f64>>() / n;
    let mean_dist = points.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    let scale = if mean_dist > 1e-12 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(
        scale,
        0.0,
        -scale * centroid.x,
        0.0,
        scale,
        -scale * centroid.y,
        0.0,
        0.0,
        1.0,
    )
}

/// Normalized 8-point estimate from the given correspondence subset.
fn eight_point(pairs: &[(Vector2<f64>, Vector2<f64>)], subset: &[usize]) -> Option<Matrix3<f64>> {
    let p1: Vec<Vector2<f64>> = subset.iter().map(|&i| pairs[i].0).collect();
    let p2: Vec<Vector2<f64>> = subset.iter().map(|&i| pairs[i].1).collect();
    let t1 = normalization(&p1);
    let t2 = normalization(&p2);

    let mut a = DMatrix::zeros(subset.len(), 9);
    for (row, (x1, x2)) in p1.iter().zip(&p2).enumerate() {
        let h1 = t1 * Vector3::new(x1.x, x1.y, 1.0);
        let h2 = t2 * Vector3::new(x2.x, x2.y, 1.0);
        a[(row, 0)] = h2.x * h1.x;
        a[(row, 1)] = h2.x * h1.y;
        a[(row, 2)] = h2.x;
        a[(row, 3)] = h2.y * h1.x;
        a[(row, 4)] = h2.y * h1.y;
        a[(row, 5)] = h2.y;
        a[(row, 6)] = h1.x;
        a[(row, 7)] = h1.y;
        a[(row, 8)] = 1.0;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t?;
    let f_vec = vt.row(vt.nrows() - 1);
    let f_norm = Matrix3::new(
        f_vec[0], f_vec[1], f_vec[2], f_vec[3], f_vec[4], f_vec[5], f_vec[6], f_vec[7], f_vec[8],
    );
    // Enforce rank 2.
    let mut svd_f = f_norm.svd(true, true);
    svd_f.singular_values[2] = 0.0;
    let f_rank2 = svd_f.recompose().ok()?;
    Some(t2.transpose() * f_rank2 * t1)
}

/// Symmetric epipolar distance in pixels.
fn epipolar_distance(f: &Matrix3<f64>, x1: &Vector2<f64>, x2: &Vector2<f64>) -> f64 {
    let h1 = Vector3::new(x1.x, x1.y, 1.0);
    let h2 = Vector3::new(x2.x, x2.y, 1.0);
    let l2 = f * h1;
    let l1 = f.transpose() * h2;
    let num = h2.dot(&l2);
    let d2 = l2.x * l2.x + l2.y * l2.y;
    let d1 = l1.x * l1.x + l1.y * l1.y;
    if d1 <= 1e-300 || d2 <= 1e-300 {
        return f64::INFINITY;
    }
    (num * num * (1.0 / d1 + 1.0 / d2)).sqrt()
}

/// RANSAC with the 8-point algorithm: returns the inlier mask of the
/// best model, refit once on its inliers.
///
/// Pairs are canonicalized by content before sampling, so the inlier
/// set is invariant under permutation of the input for a fixed seed.
pub fn ransac_8point(
    pairs: &[(Vector2<f64>, Vector2<f64>)],
    params: &RansacParams,
) -> Result<Vec<bool>> {
    if pairs.len() < 8 {
        return Err(Error::InsufficientCorrespondences {
            found: pairs.len(),
            needed: 8,
        });
    }
    // Canonical content order.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = (pairs[a].0.x, pairs[a].0.y, pairs[a].1.x, pairs[a].1.y);
        let kb = (pairs[b].0.x, pairs[b].0.y, pairs[b].1.x, pairs[b].1.y);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let canon: Vec<(Vector2<f64>, Vector2<f64>)> = order.iter().map(|&i| pairs[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best_mask: Vec<bool> = Vec::new();
    let mut best_count = 0usize;
    let mut subset = [0usize; 8];
    for _ in 0..params.iterations {
        // Sample 8 distinct indices.
        let mut chosen = 0;
        while chosen < 8 {
            let cand = rng.gen_range(0..canon.len());
            if !subset[..chosen].contains(&cand) {
                subset[chosen] = cand;
                chosen += 1;
            }
        }
        let Some(f) = eight_point(&canon, &subset) else {
            continue;
        };
        let mask: Vec<bool> = canon
            .iter()
            .map(|(x1, x2)| epipolar_distance(&f, x1, x2) < params.inlier_threshold_px)
            .collect();
        let count = mask.iter().filter(|m| **m).count();
        if count > best_count {
            best_count = count;
            best_mask = mask;
        }
    }
    if best_count < 8 {
        return Err(Error::InsufficientCorrespondences {
            found: best_count,
            needed: 8,
        });
    }

    // One least-squares refit over the consensus set.
    let inlier_idx: Vec<usize> = (0..canon.len()).filter(|&i| best_mask[i]).collect();
    if let Some(f) = eight_point(&canon, &inlier_idx) {
        let refit: Vec<bool> = canon
            .iter()
            .map(|(x1, x2)| epipolar_distance(&f, x1, x2) < params.inlier_threshold_px)
            .collect();
        if refit.iter().filter(|m| **m).count() >= best_count {
            best_mask = refit;
        }
    }

    // Back to input order.
    let mut mask = vec![false; pairs.len()];
    for (canon_pos, &orig) in order.iter().enumerate() {
        mask[orig] = best_mask[canon_pos];
    }
    Ok(mask)
}
