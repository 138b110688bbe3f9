use crate::error::Result;

use super::{optimize_lm_with, FactorGraph, LmParams, SolveReport, Values};

/// Outcome of the alternation between solving and outlier gating.
#[derive(Clone, Debug)]
pub struct GatingReport {
    pub solve: SolveReport,
    pub rounds: usize,
    pub deactivated: usize,
}

/// Deactivates vision factors whose maximum per-observation
/// reprojection error exceeds `threshold_px` (default 10 px). Returns
/// the number of factors deactivated by this call.
pub fn gate_outliers(graph: &mut FactorGraph, values: &Values, threshold_px: f64) -> usize {
    assert!(threshold_px > 0.0);
    let mut deactivated = 0;
    for factor in graph.factors.iter_mut().filter(|f| f.active && f.vision) {
        let vals: Vec<_> = factor
            .keys
            .iter()
            .filter_map(|k| values.get(k))
            .collect();
        if vals.len() != factor.keys.len() {
            continue;
        }
        if let Some(errors) = factor.residual.reprojection_errors_px(&vals) {
            if errors.iter().any(|e| *e > threshold_px) {
                factor.active = false;
                deactivated += 1;
            }
        }
    }
    deactivated
}

/// Solves, gates, and re-solves until no further vision factor is
/// rejected (at most `max_rounds` alternations).
pub fn optimize_with_gating(
    graph: &mut FactorGraph,
    params: &LmParams,
    threshold_px: f64,
    max_rounds: usize,
) -> Result<(Values, GatingReport)> {
    let mut rounds = 0;
    let mut total_deactivated = 0;
    loop {
        let (values, solve) = optimize_lm_with(graph, params)?;
        rounds += 1;
        let newly = gate_outliers(graph, &values, threshold_px);
        total_deactivated += newly;
        if newly == 0 || rounds >= max_rounds {
            return Ok((
                values,
                GatingReport {
                    solve,
                    rounds,
                    deactivated: total_deactivated,
                },
            ));
        }
    }
}
