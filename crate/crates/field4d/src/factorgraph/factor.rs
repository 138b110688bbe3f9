use nalgebra::{DMatrix, DVector};

use super::{Value, VariableKey};

/// Gaussian measurement noise, diagonal or isotropic.
#[derive(Clone, Debug)]
pub enum NoiseModel {
    Isotropic { sigma: f64 },
    Diagonal { sigmas: DVector<f64> },
}

impl NoiseModel {
    pub fn isotropic(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        NoiseModel::Isotropic { sigma }
    }

    pub fn diagonal(sigmas: DVector<f64>) -> Self {
        assert!(sigmas.iter().all(|s| *s > 0.0));
        NoiseModel::Diagonal { sigmas }
    }

    pub fn whiten_residual(&self, r: &mut DVector<f64>) {
        match self {
            NoiseModel::Isotropic { sigma } => *r /= *sigma,
            NoiseModel::Diagonal { sigmas } => {
                for (v, s) in r.iter_mut().zip(sigmas.iter()) {
                    *v /= *s;
                }
            }
        }
    }

    pub fn whiten_jacobian(&self, j: &mut DMatrix<f64>) {
        match self {
            NoiseModel::Isotropic { sigma } => *j /= *sigma,
            NoiseModel::Diagonal { sigmas } => {
                for (mut row, s) in j.row_iter_mut().zip(sigmas.iter()) {
                    row /= *s;
                }
            }
        }
    }
}

/// Result of evaluating a factor's residual. `valid = false` marks an
/// evaluation that could not be formed at the current linearization
/// point (e.g. a structureless vision factor whose triangulation was
/// degenerate); such factors contribute nothing to the system.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub residual: DVector<f64>,
    pub valid: bool,
}

impl Evaluation {
    pub fn valid(residual: DVector<f64>) -> Self {
        Evaluation {
            residual,
            valid: true,
        }
    }

    pub fn invalid(dim: usize) -> Self {
        Evaluation {
            residual: DVector::zeros(dim),
            valid: false,
        }
    }
}

/// A measurement term: produces an (unwhitened) residual from the
/// values of its variables, in key order.
pub trait Residual: Send + Sync {
    /// Residual dimension.
    fn dim(&self) -> usize;

    fn evaluate(&self, values: &[&Value]) -> Evaluation;

    /// Analytic Jacobians, one per involved variable, with respect to
    /// the local (retract) parameterization. `None` requests central
    /// finite differences.
    fn jacobians(&self, _values: &[&Value]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Tangent dimensions of variable `slot` the residual actually
    /// depends on; `None` means all of them. Lets finite differencing
    /// skip dimensions that are known to have zero columns.
    fn active_dims(&self, _slot: usize, _dim: usize) -> Option<Vec<usize>> {
        None
    }

    /// Per-observation reprojection errors in pixels, for vision
    /// factors subject to outlier gating.
    fn reprojection_errors_px(&self, _values: &[&Value]) -> Option<Vec<f64>> {
        None
    }
}

/// A factor: variable keys, residual evaluator, noise, and flags.
pub struct Factor {
    pub keys: Vec<VariableKey>,
    pub noise: NoiseModel,
    pub residual: Box<dyn Residual>,
    /// Inactive factors are excluded from linearization and error.
    pub active: bool,
    /// Constrains the global frame (prior or GPS-like): used by the
    /// gauge check.
    pub absolute: bool,
    /// Subject to reprojection-error gating.
    pub vision: bool,
}

impl Factor {
    pub fn new(keys: Vec<VariableKey>, noise: NoiseModel, residual: Box<dyn Residual>) -> Self {
        assert!(residual.dim() > 0, "residual dimension must be positive");
        Factor {
            keys,
            noise,
            residual,
            active: true,
            absolute: false,
            vision: false,
        }
    }

    pub fn absolute(mut self) -> Self {
        self.absolute = true;
        self
    }

    pub fn vision(mut self) -> Self {
        self.vision = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.residual.dim()
    }
}
