use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, Vector2, Vector3, Vector6};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Error;
use crate::geometry::{project, CameraIntrinsics, Pose3, Rotation3};
use crate::sensors::CameraState;

use super::*;

/// A plain linear residual `r = A x - b` over one 3-vector variable.
struct LinearResidual {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Residual for LinearResidual {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let x = values[0].as_point();
        Evaluation::valid(&self.a * DVector::from_column_slice(x.as_slice()) - &self.b)
    }
}

/// Classic reprojection factor over (camera state, landmark point),
/// used by the bundle-adjustment tests. Jacobians come from the
/// finite-difference path.
struct ProjectionResidual {
    intrinsics: CameraIntrinsics,
    pixel: Vector2<f64>,
}

impl Residual for ProjectionResidual {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let pose = values[0].as_state().pose();
        let point = values[1].as_point();
        match project(&self.intrinsics, &pose, point) {
            Ok(proj) => Evaluation::valid(DVector::from_column_slice(
                (proj - self.pixel).as_slice(),
            )),
            Err(_) => Evaluation::invalid(2),
        }
    }

    fn active_dims(&self, slot: usize, dim: usize) -> Option<Vec<usize>> {
        if slot == 0 {
            Some((CameraState::ROT..CameraState::VEL).collect())
        } else {
            Some((0..dim).collect())
        }
    }

    fn reprojection_errors_px(&self, values: &[&Value]) -> Option<Vec<f64>> {
        let pose = values[0].as_state().pose();
        match project(&self.intrinsics, &pose, values[1].as_point()) {
            Ok(proj) => Some(vec![(proj - self.pixel).norm()]),
            Err(_) => Some(vec![f64::INFINITY]),
        }
    }
}

fn intr() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480)
}

fn down_state(x: f64, y: f64, z: f64) -> CameraState {
    CameraState::new(
        Rotation3::from_columns(Vector3::x(), -Vector3::y(), -Vector3::z()),
        Vector3::new(x, y, z),
        Vector3::zeros(),
        Vector3::zeros(),
        Vector6::zeros(),
        0.0,
    )
}

/// Point prior used to anchor landmark-only test graphs.
struct PointPrior {
    mean: Vector3<f64>,
}

impl Residual for PointPrior {
    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, values: &[&Value]) -> Evaluation {
        let x = values[0].as_point();
        Evaluation::valid(DVector::from_column_slice((x - self.mean).as_slice()))
    }
}

#[test]
fn linearize_single_linear_factor_matches_gram_matrix() {
    let key = VariableKey::landmark(0, 0, 0);
    let a = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.0, 0.5, -1.0, 3.0, 2.0, 0.0, 1.0, 0.0, 0.3, -0.7]);
    let b = DVector::from_column_slice(&[1.0, -2.0, 0.5, 0.1]);
    let mut graph = FactorGraph::new();
    graph.values.insert(key, Value::Point(Vector3::new(0.2, -0.3, 0.4)));
    graph.add_factor(Factor::new(
        vec![key],
        NoiseModel::isotropic(1.0),
        Box::new(LinearResidual { a: a.clone(), b }),
    ));
    let system = linearize(&graph, &graph.values).unwrap();
    let gram = a.transpose() * &a;
    let block = &system.hessian[&(0, 0)];
    assert_relative_eq!(block.clone(), gram, epsilon = 1e-8);
}

#[test]
fn linearize_empty_graph_is_empty() {
    let graph = FactorGraph::new();
    let system = linearize(&graph, &graph.values).unwrap();
    assert_eq!(system.dim, 0);
    assert!(system.hessian.is_empty());
    assert_eq!(system.error, 0.0);
}

#[test]
fn missing_variable_is_reported() {
    let mut graph = FactorGraph::new();
    graph.add_factor(Factor::new(
        vec![VariableKey::landmark(0, 0, 7)],
        NoiseModel::isotropic(1.0),
        Box::new(PointPrior {
            mean: Vector3::zeros(),
        }),
    ));
    assert!(matches!(
        linearize(&graph, &graph.values),
        Err(Error::MissingVariable(_))
    ));
}

#[test]
fn linear_least_squares_matches_normal_equations() {
    let mut rng = StdRng::seed_from_u64(5);
    let key = VariableKey::landmark(0, 0, 0);
    let a = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
    let b = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));

    let mut graph = FactorGraph::new();
    graph
        .values
        .insert(key, Value::Point(Vector3::new(0.1, 0.1, 0.1)));
    graph.add_factor(
        Factor::new(
            vec![key],
            NoiseModel::isotropic(1.0),
            Box::new(LinearResidual {
                a: a.clone(),
                b: b.clone(),
            }),
        )
        .absolute(),
    );
    let (solution, report) = optimize_lm(&graph).unwrap();

    // Oracle: closed-form normal equations.
    let expected = (a.transpose() * &a)
        .cholesky()
        .unwrap()
        .solve(&(a.transpose() * &b));
    let got = solution.point(&key);
    assert_relative_eq!(got.x, expected[0], epsilon = 1e-10);
    assert_relative_eq!(got.y, expected[1], epsilon = 1e-10);
    assert_relative_eq!(got.z, expected[2], epsilon = 1e-10);
    assert!(report.final_error <= report.initial_error);
}

struct BaSetup {
    graph: FactorGraph,
    pose_keys: Vec<VariableKey>,
    landmark_keys: Vec<VariableKey>,
    true_states: Vec<CameraState>,
    true_points: Vec<Vector3<f64>>,
}

/// Three down-looking poses, five ground landmarks, optional pixel
/// noise, priors pinning the first two poses.
fn toy_bundle_adjustment(pixel_noise: f64, seed: u64) -> BaSetup {
    let mut rng = StdRng::seed_from_u64(seed);
    let true_states = vec![
        down_state(0.0, 0.0, 2.0),
        down_state(0.6, 0.1, 2.05),
        down_state(1.2, -0.1, 1.95),
    ];
    let true_points: Vec<Vector3<f64>> = (0..5)
        .map(|i| {
            Vector3::new(
                0.2 + 0.25 * i as f64,
                -0.4 + 0.2 * i as f64,
                0.05 * ((i % 2) as f64),
            )
        })
        .collect();

    let mut graph = FactorGraph::new();
    let mut pose_keys = Vec::new();
    let mut landmark_keys = Vec::new();
    for (i, s) in true_states.iter().enumerate() {
        let key = VariableKey::camera(0, 0, i as u32);
        pose_keys.push(key);
        let mut init = *s;
        if i >= 2 {
            init.position += Vector3::new(
                rng.gen_range(-0.02..0.02),
                rng.gen_range(-0.02..0.02),
                rng.gen_range(-0.02..0.02),
            );
            init.rotation = init
                .rotation
                .compose(&Rotation3::exp(Vector3::new(0.01, -0.01, 0.02)));
        }
        graph.values.insert(key, Value::State(init));
    }
    for (j, p) in true_points.iter().enumerate() {
        let key = VariableKey::landmark(0, 0, j as u32);
        landmark_keys.push(key);
        graph.values.insert(
            key,
            Value::Point(
                p + Vector3::new(
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                ),
            ),
        );
    }
    // Tight priors on the first two poses fix gauge and scale.
    for key in &pose_keys[..2] {
        let idx = key.index as usize;
        graph.add_factor(crate::sensors::state_prior_factor(
            *key,
            true_states[idx],
            &crate::sensors::PriorSigmas {
                rotation_rad: 1e-4,
                position_m: 1e-4,
                velocity_m_s: 1.0,
                angular_rate_rad_s: 1.0,
                bias: 0.1,
            },
        ));
    }
    for (i, s) in true_states.iter().enumerate() {
        for (j, p) in true_points.iter().enumerate() {
            let clean = project(&intr(), &s.pose(), p).unwrap();
            let pixel = clean
                + Vector2::new(
                    rng.gen_range(-pixel_noise..pixel_noise.max(1e-12)),
                    rng.gen_range(-pixel_noise..pixel_noise.max(1e-12)),
                );
            graph.add_factor(
                Factor::new(
                    vec![pose_keys[i], landmark_keys[j]],
                    NoiseModel::isotropic(0.5),
                    Box::new(ProjectionResidual {
                        intrinsics: intr(),
                        pixel,
                    }),
                )
                .vision(),
            );
        }
    }
    BaSetup {
        graph,
        pose_keys,
        landmark_keys,
        true_states,
        true_points,
    }
}

fn reprojection_rms(graph: &FactorGraph, values: &Values) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for f in graph.factors.iter().filter(|f| f.active && f.vision) {
        let vals: Vec<&Value> = f.keys.iter().map(|k| values.get(k).unwrap()).collect();
        if let Some(errs) = f.residual.reprojection_errors_px(&vals) {
            for e in errs {
                sum += e * e;
                n += 1;
            }
        }
    }
    (sum / n as f64).sqrt()
}

#[test]
fn toy_bundle_adjustment_reaches_half_pixel_rms() {
    let setup = toy_bundle_adjustment(0.5, 42);
    let (solution, report) = optimize_lm(&setup.graph).unwrap();
    assert!(report.final_error <= report.initial_error);
    let rms = reprojection_rms(&setup.graph, &solution);
    assert!(rms <= 0.6, "reprojection rms {rms}");
}

#[test]
fn gate_outliers_leaves_clean_graph_alone() {
    let mut setup = toy_bundle_adjustment(0.3, 7);
    let (solution, _) = optimize_lm(&setup.graph).unwrap();
    let deactivated = gate_outliers(&mut setup.graph, &solution, 10.0);
    assert_eq!(deactivated, 0);
}

/// A corrupted observation lives inside one structureless track factor,
/// so gating rejects exactly that factor and leaves the rest alone.
#[test]
fn gate_outliers_rejects_exactly_the_planted_fault() {
    use crate::sensors::{smart_vision_factor, TrackObservation};

    let mut graph = FactorGraph::new();
    let states: Vec<CameraState> = (0..8)
        .map(|i| down_state(0.3 * i as f64, 0.02 * i as f64, 2.0))
        .collect();
    let keys: Vec<VariableKey> = (0..8).map(|i| VariableKey::camera(0, 0, i)).collect();
    for (key, s) in keys.iter().zip(&states) {
        graph.values.insert(*key, Value::State(*s));
        graph.add_factor(crate::sensors::state_prior_factor(
            *key,
            *s,
            &crate::sensors::PriorSigmas {
                rotation_rad: 1e-4,
                position_m: 1e-4,
                velocity_m_s: 1.0,
                angular_rate_rad_s: 1.0,
                bias: 0.1,
            },
        ));
    }
    let points = [
        Vector3::new(1.0, 0.1, 0.0),
        Vector3::new(1.2, -0.2, 0.05),
        Vector3::new(0.8, 0.3, 0.0),
    ];
    for (t, point) in points.iter().enumerate() {
        let obs: Vec<TrackObservation> = keys
            .iter()
            .zip(&states)
            .enumerate()
            .map(|(i, (key, s))| {
                let mut px = project(&intr(), &s.pose(), point).unwrap();
                // Corrupt one observation of the second track.
                if t == 1 && i == 4 {
                    px += Vector2::new(100.0, 0.0);
                }
                TrackObservation {
                    state_key: *key,
                    pixel: px,
                }
            })
            .collect();
        graph.add_factor(smart_vision_factor(intr(), &obs, 0.5).unwrap());
    }
    let corrupt_idx = graph.factors.len() - 2;

    let params = LmParams::default();
    let (_, report) = optimize_with_gating(&mut graph, &params, 10.0, 5).unwrap();
    assert_eq!(report.deactivated, 1);
    assert!(!graph.factors[corrupt_idx].active);
    for (i, f) in graph.factors.iter().enumerate() {
        if i != corrupt_idx {
            assert!(f.active, "factor {i} wrongly deactivated");
        }
    }
}

#[test]
fn deactivating_zero_residual_factor_keeps_optimum() {
    let mut setup = toy_bundle_adjustment(0.0, 3);
    let (before, _) = optimize_lm(&setup.graph).unwrap();
    // Noiseless problem: every vision factor has zero residual at the
    // optimum. Drop one and re-solve.
    let last = setup.graph.factors.len() - 1;
    setup.graph.factors[last].active = false;
    let (after, _) = optimize_lm(&setup.graph).unwrap();
    for key in setup.pose_keys.iter().chain(&setup.landmark_keys) {
        match (before.get(key).unwrap(), after.get(key).unwrap()) {
            (Value::State(a), Value::State(b)) => {
                assert!((a.position - b.position).norm() < 1e-7);
                assert!(a.rotation.between_log(&b.rotation).norm() < 1e-7);
            }
            (Value::Point(a), Value::Point(b)) => {
                assert!((a - b).norm() < 1e-6);
            }
            _ => panic!("mismatched kinds"),
        }
    }
    let _ = (setup.true_states, setup.true_points);
}

#[test]
fn solution_is_gauge_consistent_under_rigid_transform() {
    let shift = Vector3::new(5.0, -3.0, 1.5);

    let setup = toy_bundle_adjustment(0.4, 11);
    let (base, _) = optimize_lm(&setup.graph).unwrap();

    // Shift every initial value and prior mean by a constant
    // translation; measurements are unchanged.
    let mut moved = toy_bundle_adjustment(0.4, 11);
    let mut new_values = Values::new();
    for (k, v) in moved.graph.values.iter() {
        let nv = match v {
            Value::State(s) => {
                let mut s2 = *s;
                s2.position += shift;
                Value::State(s2)
            }
            Value::Point(p) => Value::Point(p + shift),
        };
        new_values.insert(*k, nv);
    }
    moved.graph.values = new_values;
    // Rebuild the priors around the shifted means.
    for f in &mut moved.graph.factors {
        if f.absolute {
            let key = f.keys[0];
            let mut mean = setup.true_states[key.index as usize];
            mean.position += shift;
            *f = crate::sensors::state_prior_factor(
                key,
                mean,
                &crate::sensors::PriorSigmas {
                    rotation_rad: 1e-4,
                    position_m: 1e-4,
                    velocity_m_s: 1.0,
                    angular_rate_rad_s: 1.0,
                    bias: 0.1,
                },
            );
        }
    }
    let (shifted, _) = optimize_lm(&moved.graph).unwrap();
    for key in setup.pose_keys.iter().chain(&setup.landmark_keys) {
        match (base.get(key).unwrap(), shifted.get(key).unwrap()) {
            (Value::State(a), Value::State(b)) => {
                assert!(((a.position + shift) - b.position).norm() < 1e-8);
                assert!(a.rotation.between_log(&b.rotation).norm() < 1e-8);
            }
            (Value::Point(a), Value::Point(b)) => {
                assert!(((a + shift) - b).norm() < 1e-8);
            }
            _ => panic!("mismatched kinds"),
        }
    }
}

#[test]
fn unanchored_component_fails_gauge_check() {
    let mut graph = FactorGraph::new();
    let k0 = VariableKey::landmark(0, 0, 0);
    let k1 = VariableKey::landmark(0, 0, 1);
    graph.values.insert(k0, Value::Point(Vector3::zeros()));
    graph.values.insert(k1, Value::Point(Vector3::x()));
    graph.add_factor(Factor::new(
        vec![k0],
        NoiseModel::isotropic(1.0),
        Box::new(PointPrior {
            mean: Vector3::zeros(),
        }),
    ));
    // k1 is untouched by any absolute factor (and by any factor at all).
    assert!(matches!(graph.check_gauge(), Err(Error::GaugeNotFixed)));

    // Anchoring it fixes the check.
    graph.add_factor(
        Factor::new(
            vec![k1],
            NoiseModel::isotropic(1.0),
            Box::new(PointPrior { mean: Vector3::x() }),
        )
        .absolute(),
    );
    // The k0 prior is not marked absolute, so k0's component is still free.
    assert!(matches!(graph.check_gauge(), Err(Error::GaugeNotFixed)));
    graph.factors[0].absolute = true;
    assert!(graph.check_gauge().is_ok());
}
