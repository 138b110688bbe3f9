use std::collections::BTreeMap;

use super::Track;

/// Filtered matches between one temporally nearby image pair.
#[derive(Clone, Debug)]
pub struct PairMatches {
    pub image_a: u32,
    pub image_b: u32,
    /// (feature index in a, feature index in b).
    pub pairs: Vec<(u32, u32)>,
}

/// Transitive closure of pairwise matches into feature tracks.
///
/// Tracks containing two different features in the same image are
/// discarded (deterministically, as whole tracks), and only tracks
/// spanning more than `min_images` images survive. Track ids are
/// assigned in order of each track's smallest (image, feature) node.
pub fn build_tracks(matches: &[PairMatches], min_images: usize) -> Vec<Track> {
    // Union-find over (image, feature) nodes.
    let mut index: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut nodes: Vec<(u32, u32)> = Vec::new();
    let mut parent: Vec<usize> = Vec::new();

    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut node_of = |key: (u32, u32),
                       index: &mut BTreeMap<(u32, u32), usize>,
                       nodes: &mut Vec<(u32, u32)>,
                       parent: &mut Vec<usize>| {
        *index.entry(key).or_insert_with(|| {
            nodes.push(key);
            parent.push(nodes.len() - 1);
            nodes.len() - 1
        })
    };

    for m in matches {
        for &(fa, fb) in &m.pairs {
            let na = node_of((m.image_a, fa), &mut index, &mut nodes, &mut parent);
            let nb = node_of((m.image_b, fb), &mut index, &mut nodes, &mut parent);
            let (ra, rb) = (find(&mut parent, na), find(&mut parent, nb));
            if ra != rb {
                // Union by smaller root index keeps grouping stable.
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<(u32, u32)>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(nodes[i]);
    }
    // Order groups by content, not by union-find root, so track ids do
    // not depend on match insertion order.
    let mut sorted_groups: Vec<Vec<(u32, u32)>> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            members
        })
        .collect();
    sorted_groups.sort();

    let mut tracks = Vec::new();
    'group: for members in sorted_groups {
        // One feature per image, or the track is discarded.
        for w in members.windows(2) {
            if w[0].0 == w[1].0 {
                continue 'group;
            }
        }
        if members.len() <= min_images {
            continue;
        }
        tracks.push(Track {
            id: tracks.len() as u32,
            observations: members,
        });
    }
    tracks
}
