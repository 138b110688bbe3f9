//! Analytic landmark appearance.
//!
//! Each landmark carries a smooth intensity function on its local scene
//! plane (a small sum of plane waves). Because the texture can be
//! evaluated at arbitrary plane points, a view's descriptor is obtained
//! by exact resampling — viewpoint distortion in the rendered
//! descriptors is therefore physically consistent with the plane-induced
//! homography between views.

use nalgebra::{Vector2, Vector3};
use rand::Rng;

use crate::frontend::PatchSource;
use crate::geometry::{CameraIntrinsics, Pose3};

/// One landmark's local plane frame: a point on the plane, its unit
/// normal, and a fixed in-plane basis. The basis is chosen once at
/// generation time so every view samples the same parameterization.
#[derive(Clone, Copy, Debug)]
pub struct LandmarkInstance {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
}

impl LandmarkInstance {
    pub fn new(position: Vector3<f64>, normal: Vector3<f64>) -> Self {
        let normal = normal.normalize();
        let helper = if normal.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = normal.cross(&helper).normalize();
        let e2 = normal.cross(&e1);
        LandmarkInstance {
            position,
            normal,
            e1,
            e2,
        }
    }
}

const WAVES: usize = 4;

/// Sum-of-plane-waves intensity on the landmark plane. Wave phases
/// drift a little from session to session (weathering, lighting), which
/// is what makes cross-session matching non-trivial.
#[derive(Clone, Debug)]
pub struct TextureParams {
    /// (amplitude, spatial frequency s [1/m], frequency t [1/m], phase).
    pub waves: [(f64, f64, f64, f64); WAVES],
    /// Per-session phase drift, radians per session.
    pub drift: [f64; WAVES],
}

impl TextureParams {
    /// Draws a texture as `base + variation·individual`: the shared base
    /// reproduces the field's repetitive look, the individual part is
    /// what matching must latch onto.
    pub fn generate(
        rng: &mut impl Rng,
        base: &TextureParams,
        variation: f64,
        session_drift: f64,
    ) -> TextureParams {
        let mut waves = base.waves;
        let mut drift = [0.0; WAVES];
        for k in 0..WAVES {
            let (a, fs, ft, ph) = waves[k];
            waves[k] = (
                a * (1.0 + variation * rng.gen_range(-1.0..1.0)),
                fs * (1.0 + variation * rng.gen_range(-0.5..0.5)),
                ft * (1.0 + variation * rng.gen_range(-0.5..0.5)),
                ph + variation * rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            );
            drift[k] = session_drift * rng.gen_range(-1.0..1.0);
        }
        TextureParams { waves, drift }
    }

    /// Shared base texture of a landmark class.
    pub fn base(rng: &mut impl Rng, wavelength_range_m: (f64, f64)) -> TextureParams {
        let mut waves = [(0.0, 0.0, 0.0, 0.0); WAVES];
        for wave in &mut waves {
            let lambda = rng.gen_range(wavelength_range_m.0..wavelength_range_m.1);
            let dir = rng.gen_range(0.0..std::f64::consts::TAU);
            *wave = (
                rng.gen_range(0.5..1.0) * lambda.sqrt(),
                dir.cos() / lambda,
                dir.sin() / lambda,
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
        }
        TextureParams {
            waves,
            drift: [0.0; WAVES],
        }
    }

    pub fn eval(&self, s: f64, t: f64, session: usize) -> f64 {
        let mut v = 0.0;
        for (k, &(a, fs, ft, ph)) in self.waves.iter().enumerate() {
            v += a * (std::f64::consts::TAU * (fs * s + ft * t)
                + ph
                + self.drift[k] * session as f64)
                .cos();
        }
        v
    }
}

/// Exactly resampleable appearance of one landmark as seen from one
/// view: a pixel ray is intersected with the landmark plane and the
/// texture evaluated there.
pub struct AnalyticPatch<'a> {
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose3,
    pub instance: &'a LandmarkInstance,
    pub texture: &'a TextureParams,
    pub session: usize,
}

impl PatchSource for AnalyticPatch<'_> {
    fn intensity(&self, pixel: Vector2<f64>) -> f64 {
        let dir = self.pose.rotation.rotate(&self.intrinsics.ray(&pixel));
        let center = self.pose.translation;
        let inst = self.instance;
        let denom = inst.normal.dot(&dir);
        if denom.abs() < 1e-12 {
            return 0.0;
        }
        let lambda = inst.normal.dot(&(inst.position - center)) / denom;
        if lambda <= 0.0 {
            return 0.0;
        }
        let hit = center + lambda * dir;
        let rel = hit - inst.position;
        self.texture
            .eval(inst.e1.dot(&rel), inst.e2.dot(&rel), self.session)
    }
}
