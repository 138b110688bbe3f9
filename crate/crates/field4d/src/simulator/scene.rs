use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::sensors::GeodeticFix;

use super::texture::{LandmarkInstance, TextureParams};

/// Scene generation parameters (desk-scale defaults).
#[derive(Clone, Debug)]
pub struct SceneParams {
    pub rows: usize,
    pub sessions: usize,
    pub row_length_m: f64,
    pub row_spacing_m: f64,
    pub session_interval_days: f64,
    pub plant_spacing_m: f64,
    /// Asymptote of the logistic growth curve.
    pub plant_max_height_m: f64,
    pub ground_landmarks_per_m2: f64,
    /// Half-width of the landmark swath around each row.
    pub swath_half_width_m: f64,
    /// Canopy landmarks per plant at full height.
    pub canopy_landmarks_max: usize,
    /// Relative per-landmark texture deviation from the class base.
    pub texture_variation: f64,
    /// Ground-texture phase drift per session (radians).
    pub session_appearance_drift: f64,
    /// When set, overrides the growth curve: plant height at session s
    /// is `height_targets[s]` (small per-plant jitter still applies).
    pub height_targets: Option<Vec<f64>>,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            rows: 3,
            sessions: 3,
            row_length_m: 30.0,
            row_spacing_m: 1.0,
            session_interval_days: 7.0,
            plant_spacing_m: 0.6,
            plant_max_height_m: 0.6,
            ground_landmarks_per_m2: 12.0,
            swath_half_width_m: 1.5,
            canopy_landmarks_max: 26,
            texture_variation: 0.35,
            session_appearance_drift: 0.15,
            height_targets: None,
        }
    }
}

/// Gently sloped ground with low-amplitude smooth undulation.
#[derive(Clone, Debug)]
pub struct GroundModel {
    pub slope_x: f64,
    pub slope_y: f64,
    /// (amplitude, freq x, freq y, phase) of the undulation waves.
    pub waves: [(f64, f64, f64, f64); 3],
}

impl GroundModel {
    pub fn elevation(&self, x: f64, y: f64) -> f64 {
        let mut z = self.slope_x * x + self.slope_y * y;
        for &(a, fx, fy, ph) in &self.waves {
            z += a * (std::f64::consts::TAU * (fx * x + fy * y) + ph).sin();
        }
        z
    }

    pub fn normal(&self, x: f64, y: f64) -> Vector3<f64> {
        let mut dzdx = self.slope_x;
        let mut dzdy = self.slope_y;
        for &(a, fx, fy, ph) in &self.waves {
            let c = a * std::f64::consts::TAU * (std::f64::consts::TAU * (fx * x + fy * y) + ph).cos();
            dzdx += c * fx;
            dzdy += c * fy;
        }
        Vector3::new(-dzdx, -dzdy, 1.0).normalize()
    }
}

/// One plant: stem position and per-session canopy geometry.
#[derive(Clone, Debug)]
pub struct Plant {
    pub row: usize,
    /// Stem base on the ground surface.
    pub base: Vector3<f64>,
    /// Per-session canopy height above ground (non-decreasing).
    pub heights: Vec<f64>,
    /// Per-session horizontal canopy radius.
    pub radii: Vec<f64>,
    pub albedo: [f64; 3],
}

impl Plant {
    /// Center and vertical semi-axis of the session's canopy ellipsoid.
    pub fn canopy(&self, session: usize) -> (Vector3<f64>, f64, f64) {
        let h = self.heights[session];
        let rv = 0.45 * h;
        let center = self.base + Vector3::new(0.0, 0.0, h - rv);
        (center, self.radii[session], rv)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LandmarkKind {
    Ground,
    Canopy { plant: usize },
}

/// A synthetic landmark: per-session placement (canopy landmarks exist
/// in a single session; ground landmarks persist) plus appearance.
#[derive(Clone, Debug)]
pub struct SceneLandmark {
    pub id: u64,
    pub kind: LandmarkKind,
    pub albedo: [f64; 3],
    pub texture: TextureParams,
    pub instances: Vec<Option<LandmarkInstance>>,
}

/// The generated field: geometry, plants, landmarks, and ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub params: SceneParams,
    pub ground: GroundModel,
    pub plants: Vec<Plant>,
    pub landmarks: Vec<SceneLandmark>,
    /// Day tag of each session (date analog).
    pub session_days: Vec<f64>,
    /// Geodetic anchor of the world origin.
    pub origin: GeodeticFix,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn landmarks_alive(&self, session: usize) -> impl Iterator<Item = &SceneLandmark> {
        self.landmarks
            .iter()
            .filter(move |l| l.instances[session].is_some())
    }

    /// Ground-truth colored cloud of one session.
    pub fn ground_truth_cloud(&self, session: usize) -> Vec<(Vector3<f64>, [f64; 3])> {
        self.landmarks_alive(session)
            .map(|l| (l.instances[session].as_ref().unwrap().position, l.albedo))
            .collect()
    }

    /// True height of a plant at a session.
    pub fn plant_height(&self, plant: usize, session: usize) -> f64 {
        self.plants[plant].heights[session]
    }
}

pub(crate) fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for &t in tags {
        h ^= t.wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(h << 6)
            .wrapping_add(h >> 2);
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    }
    h
}

/// Logistic growth curve through the configured sessions, scaled so the
/// season spans roughly 8% to 100% of the plant's maximum height.
fn logistic_heights(
    rng: &mut impl Rng,
    params: &SceneParams,
) -> Vec<f64> {
    if let Some(targets) = &params.height_targets {
        assert_eq!(targets.len(), params.sessions);
        let jitter = 1.0 + 0.03 * rng.gen_range(-1.0..1.0);
        return targets.iter().map(|h| h * jitter).collect();
    }
    let hmax = params.plant_max_height_m * (1.0 + 0.1 * rng.gen_range(-1.0..1.0));
    let season = params.session_interval_days * (params.sessions.max(2) - 1) as f64;
    let mid = season * rng.gen_range(0.45..0.55);
    let rate = 5.0 / season.max(1.0);
    (0..params.sessions)
        .map(|s| {
            let day = s as f64 * params.session_interval_days;
            hmax / (1.0 + (-(rate * (day - mid))).exp())
        })
        .collect()
}

/// Deterministically generates the synthetic field.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<SyntheticScene> {
    if params.rows < 1 || params.sessions < 1 {
        return Err(Error::InvalidParams(
            "need at least one row and one session".into(),
        ));
    }
    if let Some(t) = &params.height_targets {
        if t.len() != params.sessions {
            return Err(Error::InvalidParams(
                "height_targets length must equal sessions".into(),
            ));
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, &[1]));

    let ground = GroundModel {
        slope_x: rng.gen_range(-0.01..0.01),
        slope_y: rng.gen_range(-0.01..0.01),
        waves: [
            (0.015, 1.0 / 7.0, 1.0 / 11.0, rng.gen_range(0.0..6.28)),
            (0.010, 1.0 / 3.0, 1.0 / 5.0, rng.gen_range(0.0..6.28)),
            (0.005, 1.0 / 1.7, 1.0 / 2.3, rng.gen_range(0.0..6.28)),
        ],
    };

    // Class base textures: ground and canopy share their own repetitive
    // looks, which is what makes naive cross-row matching ambiguous.
    let ground_base = TextureParams::base(&mut rng, (0.02, 0.08));
    let canopy_base = TextureParams::base(&mut rng, (0.015, 0.05));

    // Plants along each row.
    let mut plants = Vec::new();
    for row in 0..params.rows {
        let y_row = row as f64 * params.row_spacing_m;
        let mut x = params.plant_spacing_m / 2.0;
        while x < params.row_length_m {
            let px = x + rng.gen_range(-0.08..0.08) * params.plant_spacing_m;
            let py = y_row + rng.gen_range(-0.05..0.05);
            let heights = logistic_heights(&mut rng, params);
            let radii = heights.iter().map(|h| 0.55 * h + 0.02).collect();
            plants.push(Plant {
                row,
                base: Vector3::new(px, py, ground.elevation(px, py)),
                heights,
                radii,
                albedo: [
                    0.10 + rng.gen_range(0.0..0.06),
                    0.55 + rng.gen_range(0.0..0.15),
                    0.10 + rng.gen_range(0.0..0.06),
                ],
            });
            x += params.plant_spacing_m;
        }
    }

    let mut landmarks = Vec::new();
    let mut next_id = 0u64;

    // Ground landmarks: persistent across sessions, planes tangent to
    // the ground surface.
    let y_min = -params.swath_half_width_m;
    let y_max = (params.rows - 1) as f64 * params.row_spacing_m + params.swath_half_width_m;
    let area = params.row_length_m * (y_max - y_min);
    let n_ground = (area * params.ground_landmarks_per_m2).round() as usize;
    for _ in 0..n_ground {
        let x = rng.gen_range(0.0..params.row_length_m);
        let y = rng.gen_range(y_min..y_max);
        let pos = Vector3::new(x, y, ground.elevation(x, y));
        let instance = LandmarkInstance::new(pos, ground.normal(x, y));
        let texture = TextureParams::generate(
            &mut rng,
            &ground_base,
            params.texture_variation,
            params.session_appearance_drift,
        );
        let gray = 0.35 + rng.gen_range(0.0..0.15);
        landmarks.push(SceneLandmark {
            id: next_id,
            kind: LandmarkKind::Ground,
            albedo: [gray + 0.05, gray, gray - 0.05],
            texture,
            instances: vec![Some(instance); params.sessions],
        });
        next_id += 1;
    }

    // Canopy landmarks: born and dying with each session's canopy.
    for (pi, plant) in plants.iter().enumerate() {
        for session in 0..params.sessions {
            let (center, rh, rv) = plant.canopy(session);
            let count = ((plant.heights[session] / params.plant_max_height_m)
                * params.canopy_landmarks_max as f64)
                .round() as usize;
            for _ in 0..count {
                // Upper-hemisphere-biased sampling keeps the canopy top
                // well represented.
                let u: f64 = rng.gen_range(-0.25..1.0);
                let phi = u.clamp(-1.0, 1.0).acos();
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let dir = Vector3::new(
                    phi.sin() * theta.cos(),
                    phi.sin() * theta.sin(),
                    phi.cos(),
                );
                let pos = center + Vector3::new(rh * dir.x, rh * dir.y, rv * dir.z);
                // Outward ellipsoid normal.
                let normal = Vector3::new(dir.x / rh, dir.y / rh, dir.z / rv).normalize();
                let texture = TextureParams::generate(
                    &mut rng,
                    &canopy_base,
                    params.texture_variation,
                    0.0,
                );
                let mut instances = vec![None; params.sessions];
                instances[session] = Some(LandmarkInstance::new(pos, normal));
                landmarks.push(SceneLandmark {
                    id: next_id,
                    kind: LandmarkKind::Canopy { plant: pi },
                    albedo: plant.albedo,
                    texture,
                    instances,
                });
                next_id += 1;
            }
        }
    }

    Ok(SyntheticScene {
        params: params.clone(),
        ground,
        plants,
        landmarks,
        session_days: (0..params.sessions)
            .map(|s| s as f64 * params.session_interval_days)
            .collect(),
        origin: GeodeticFix {
            timestamp: 0.0,
            latitude_deg: 31.48,
            longitude_deg: -83.53,
            altitude_m: 104.0,
        },
        seed,
    })
}
