use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::linearize::factor_residual_norms;
use super::sparse::{LdlFactorization, SymmetricCsc};
use super::{linearize, total_error, FactorGraph, Values};

/// Levenberg-Marquardt controls. The damping multiplies the diagonal of
/// JᵀJ (Marquardt scaling), ×10 on a rejected step and ÷10 on an
/// accepted one.
#[derive(Clone, Copy, Debug)]
pub struct LmParams {
    pub lambda_init: f64,
    pub lambda_factor: f64,
    pub lambda_max: f64,
    pub max_iterations: usize,
    /// Stop when the accepted relative error decrease falls below this.
    pub relative_decrease: f64,
    /// Stop when the step norm falls below this.
    pub step_tolerance: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        LmParams {
            lambda_init: 1e-4,
            lambda_factor: 10.0,
            lambda_max: 1e10,
            max_iterations: 100,
            relative_decrease: 1e-9,
            step_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergenceReason {
    RelativeDecrease,
    StepTolerance,
    MaxIterations,
    /// Damping hit its ceiling without finding a descent step.
    LambdaExhausted,
}

/// Outcome of a batch solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub initial_error: f64,
    pub final_error: f64,
    /// Accepted steps.
    pub iterations: usize,
    pub convergence: ConvergenceReason,
    /// Whitened residual norm per factor at the solution (zero for
    /// inactive factors).
    pub factor_residual_norms: Vec<f64>,
    pub deactivated_factors: usize,
}

/// MAP estimation by batch Levenberg-Marquardt with default controls.
pub fn optimize_lm(graph: &FactorGraph) -> Result<(Values, SolveReport)> {
    optimize_lm_with(graph, &LmParams::default())
}

pub fn optimize_lm_with(graph: &FactorGraph, params: &LmParams) -> Result<(Values, SolveReport)> {
    graph.check_gauge()?;
    let mut values = graph.values.clone();
    let mut error = total_error(graph, &values)?;
    let initial_error = error;
    let mut lambda = params.lambda_init;
    let mut iterations = 0;
    let mut convergence = ConvergenceReason::MaxIterations;

    'outer: for _ in 0..params.max_iterations {
        let system = linearize(graph, &values)?;
        if system.dim == 0 {
            convergence = ConvergenceReason::RelativeDecrease;
            break;
        }
        let base = SymmetricCsc::from_blocks(system.dim, &system.hessian);
        let diag = base.diagonal();
        let neg_grad = -&system.gradient;

        loop {
            if lambda > params.lambda_max {
                if iterations == 0 && initial_error == 0.0 {
                    // Already at an exact optimum.
                    convergence = ConvergenceReason::RelativeDecrease;
                    break 'outer;
                }
                convergence = ConvergenceReason::LambdaExhausted;
                if error > initial_error {
                    return Err(Error::SingularSystem);
                }
                break 'outer;
            }
            let damping: Vec<f64> = diag.iter().map(|d| lambda * (d + 1e-12)).collect();
            let damped = base.with_damped_diagonal(&damping);
            let step = match LdlFactorization::factor(&damped) {
                Ok(f) => f.solve(&neg_grad),
                Err(_) => {
                    lambda *= params.lambda_factor;
                    continue;
                }
            };
            if step.norm() < params.step_tolerance {
                convergence = ConvergenceReason::StepTolerance;
                break 'outer;
            }
            let candidate = values.retract_all(&system.offsets, &step);
            let candidate_error = total_error(graph, &candidate)?;
            if candidate_error <= error && candidate_error.is_finite() {
                let decrease = error - candidate_error;
                values = candidate;
                error = candidate_error;
                iterations += 1;
                lambda = (lambda / params.lambda_factor).max(1e-12);
                if decrease < params.relative_decrease * error.max(1e-300) {
                    convergence = ConvergenceReason::RelativeDecrease;
                    break 'outer;
                }
                break;
            }
            lambda *= params.lambda_factor;
        }
    }

    let report = SolveReport {
        initial_error,
        final_error: error,
        iterations,
        convergence,
        factor_residual_norms: factor_residual_norms(graph, &values)?,
        deactivated_factors: graph.deactivated_factor_count(),
    };
    debug_assert!(report.final_error <= report.initial_error);
    Ok((values, report))
}
