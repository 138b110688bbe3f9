use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Angle below which exp/log and the SO(3) Jacobians switch to their
/// Taylor expansions.
const SMALL_ANGLE: f64 = 1e-6;

/// An element of SO(3), stored as a unit quaternion.
///
/// The quaternion is renormalized after every composition, so chains of
/// thousands of compositions stay orthonormal to well below 1e-9.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(UnitQuaternion<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(UnitQuaternion::identity())
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>) -> Self {
        Rotation3(q)
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Rotation3(UnitQuaternion::from_matrix(m))
    }

    /// Builds a rotation from orthonormal column vectors.
    pub fn from_columns(x: Vector3<f64>, y: Vector3<f64>, z: Vector3<f64>) -> Self {
        Self::from_matrix(&Matrix3::from_columns(&[x, y, z]))
    }

    /// Rodrigues exponential map: axis-angle vector to rotation.
    pub fn exp(v: Vector3<f64>) -> Self {
        let theta_sq = v.norm_squared();
        let (w, s) = if theta_sq < SMALL_ANGLE * SMALL_ANGLE {
            // q = [cos(θ/2), sin(θ/2)/θ · v]
            (1.0 - theta_sq / 8.0, 0.5 - theta_sq / 48.0)
        } else {
            let theta = theta_sq.sqrt();
            ((0.5 * theta).cos(), (0.5 * theta).sin() / theta)
        };
        let q = Quaternion::new(w, s * v.x, s * v.y, s * v.z);
        Rotation3(UnitQuaternion::new_normalize(q))
    }

    /// Inverse of [`Rotation3::exp`] on the ball ‖v‖ < π.
    pub fn log(&self) -> Vector3<f64> {
        let q = self.0.quaternion();
        // Both q and -q encode the same rotation; pick w >= 0 so the
        // returned angle lies in [0, π].
        let (w, vec) = if q.w >= 0.0 {
            (q.w, q.imag())
        } else {
            (-q.w, -q.imag())
        };
        let vnorm = vec.norm();
        if vnorm < 1e-9 {
            vec * (2.0 / w)
        } else {
            vec * (2.0 * vnorm.atan2(w) / vnorm)
        }
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        let q = self.0.quaternion() * other.0.quaternion();
        Rotation3(UnitQuaternion::new_normalize(q))
    }

    pub fn inverse(&self) -> Rotation3 {
        Rotation3(self.0.inverse())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn unrotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.inverse_transform_vector(v)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        self.0
    }

    /// log(self⁻¹ · other), the tangent-space difference.
    pub fn between_log(&self, other: &Rotation3) -> Vector3<f64> {
        self.inverse().compose(other).log()
    }

    /// Angle of the rotation in radians.
    pub fn angle(&self) -> f64 {
        self.log().norm()
    }
}

/// Skew-symmetric (hat) matrix of v.
pub(crate) fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Right Jacobian of SO(3) at φ: exp(φ + δ) ≈ exp(φ)·exp(Jr(φ)·δ).
pub(crate) fn right_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta_sq = phi.norm_squared();
    let hat = skew(phi);
    if theta_sq < SMALL_ANGLE * SMALL_ANGLE {
        Matrix3::identity() - 0.5 * hat + hat * hat / 6.0
    } else {
        let theta = theta_sq.sqrt();
        Matrix3::identity() - ((1.0 - theta.cos()) / theta_sq) * hat
            + ((theta - theta.sin()) / (theta_sq * theta)) * hat * hat
    }
}

/// Inverse of the right Jacobian.
pub(crate) fn right_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta_sq = phi.norm_squared();
    let hat = skew(phi);
    if theta_sq < SMALL_ANGLE * SMALL_ANGLE {
        Matrix3::identity() + 0.5 * hat + hat * hat / 12.0
    } else {
        let theta = theta_sq.sqrt();
        let coeff = 1.0 / theta_sq - (1.0 + theta.cos()) / (2.0 * theta * theta.sin());
        Matrix3::identity() + 0.5 * hat + coeff * hat * hat
    }
}

/// Left Jacobian of SO(3): ∫₀¹ exp(sφ) ds.
pub(crate) fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta_sq = phi.norm_squared();
    let hat = skew(phi);
    if theta_sq < SMALL_ANGLE * SMALL_ANGLE {
        Matrix3::identity() + 0.5 * hat + hat * hat / 6.0
    } else {
        let theta = theta_sq.sqrt();
        Matrix3::identity() + ((1.0 - theta.cos()) / theta_sq) * hat
            + ((theta - theta.sin()) / (theta_sq * theta)) * hat * hat
    }
}

/// Double integral of the exponential: ∫₀¹∫₀ᵘ exp(sφ) ds du.
///
/// Series Σ φ̂ⁿ/(n+2)!, used by the exact constant-rate integration step.
pub(crate) fn double_integral_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta_sq = phi.norm_squared();
    let hat = skew(phi);
    if theta_sq < SMALL_ANGLE * SMALL_ANGLE {
        0.5 * Matrix3::identity() + hat / 6.0 + hat * hat / 24.0
    } else {
        let theta = theta_sq.sqrt();
        0.5 * Matrix3::identity() + ((theta - theta.sin()) / (theta_sq * theta)) * hat
            + ((theta.cos() - 1.0 + 0.5 * theta_sq) / (theta_sq * theta_sq)) * hat * hat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vec(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
        Vector3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let r = Rotation3::exp(Vector3::zeros());
        assert_relative_eq!(r.matrix(), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let r = Rotation3::exp(Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let y = r.rotate(&Vector3::x());
        assert_relative_eq!(y, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn log_is_inverse_of_exp() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let v = random_vec(&mut rng, 0.999);
            let back = Rotation3::exp(v).log();
            assert_relative_eq!(back, v, epsilon = 1e-10);
        }
        // Tiny angles go through the Taylor branch.
        for _ in 0..100 {
            let v = random_vec(&mut rng, 1e-8);
            let back = Rotation3::exp(v).log();
            assert_relative_eq!(back, v, epsilon = 1e-14);
        }
    }

    #[test]
    fn composition_chain_stays_orthonormal() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut r = Rotation3::identity();
        for _ in 0..1000 {
            r = r.compose(&Rotation3::exp(random_vec(&mut rng, 1.0)));
        }
        let m = r.matrix();
        let gram = m.transpose() * m;
        assert_relative_eq!(gram, Matrix3::identity(), epsilon = 1e-9);
        assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn right_jacobian_matches_finite_difference() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let phi = random_vec(&mut rng, 1.5);
            let jr = right_jacobian(&phi);
            let h = 1e-7;
            for i in 0..3 {
                let mut dphi = Vector3::zeros();
                dphi[i] = h;
                // exp(φ)ᵀ exp(φ + δ) ≈ exp(Jr δ)
                let lhs = Rotation3::exp(phi)
                    .between_log(&Rotation3::exp(phi + dphi))
                    / h;
                assert_relative_eq!(lhs, jr.column(i).into_owned(), epsilon = 1e-5);
            }
            let jr_inv = right_jacobian_inv(&phi);
            assert_relative_eq!(jr * jr_inv, Matrix3::identity(), epsilon = 1e-9);
        }
    }

    #[test]
    fn integral_identities_match_quadrature() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let phi = random_vec(&mut rng, 2.0);
            let n = 20_000;
            let mut single = Matrix3::zeros();
            let mut double = Matrix3::zeros();
            let mut inner = Matrix3::zeros();
            for k in 0..n {
                let s = (k as f64 + 0.5) / n as f64;
                let e = Rotation3::exp(phi * s).matrix();
                single += e / n as f64;
                inner += e / n as f64;
                double += inner / n as f64;
            }
            assert_relative_eq!(single, left_jacobian(&phi), epsilon = 1e-6);
            assert_relative_eq!(double, double_integral_exp(&phi), epsilon = 1e-4);
        }
    }
}
