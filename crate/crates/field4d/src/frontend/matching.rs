use super::{descriptor_distance, FeaturePoint};

/// Mutual nearest-neighbor descriptor matching under L2 with the Lowe
/// ratio test (default ratio 0.8). Exact search; the desk-scale
/// replacement for an approximate NN index.
pub fn match_descriptors_nn(
    a: &[FeaturePoint],
    b: &[FeaturePoint],
    ratio: f64,
) -> Vec<(usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }

    let nearest = |from: &FeaturePoint, to: &[FeaturePoint]| -> (usize, f64, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut second = f64::INFINITY;
        for (j, cand) in to.iter().enumerate() {
            let d = descriptor_distance(&from.descriptor, &cand.descriptor);
            if d < best.1 {
                second = best.1;
                best = (j, d);
            } else if d < second {
                second = d;
            }
        }
        (best.0, best.1, second)
    };

    let b_best: Vec<usize> = b.iter().map(|f| nearest(f, a).0).collect();

    let mut matches = Vec::new();
    for (i, fa) in a.iter().enumerate() {
        let (j, d1, d2) = nearest(fa, b);
        if j == usize::MAX {
            continue;
        }
        // Ambiguous when the runner-up is as good (d2 == 0 included).
        if !(d1 < ratio * d2) {
            continue;
        }
        if b_best[j] == i {
            matches.push((i, j));
        }
    }
    matches
}
