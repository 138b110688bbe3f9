//! Generic nonlinear factor graph with batch Levenberg-Marquardt MAP
//! optimization.
//!
//! Variables live on manifolds (camera states carry a rotation block);
//! factors supply residuals and, optionally, analytic Jacobians —
//! anything without one is linearized by central finite differences.
//! The damped normal equations are solved by a block-assembled sparse
//! LDLᵀ with camera states ordered before landmarks.

mod factor;
mod gating;
mod key;
mod linearize;
mod lm;
mod sparse;
#[cfg(test)]
mod tests;
mod values;

pub use factor::{Evaluation, Factor, NoiseModel, Residual};
pub use gating::{gate_outliers, optimize_with_gating, GatingReport};
pub use key::{VariableKey, VariableKind};
pub use linearize::{factor_linearization, linearize, total_error, LinearSystem};
pub use lm::{optimize_lm, optimize_lm_with, ConvergenceReason, LmParams, SolveReport};
pub use values::{Value, Values};

use crate::error::{Error, Result};

/// Variables with initial values plus the factors that constrain them.
pub struct FactorGraph {
    pub values: Values,
    pub factors: Vec<Factor>,
}

impl Default for FactorGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl FactorGraph {
    pub fn new() -> Self {
        FactorGraph {
            values: Values::new(),
            factors: Vec::new(),
        }
    }

    pub fn add_factor(&mut self, factor: Factor) {
        self.factors.push(factor);
    }

    pub fn active_factor_count(&self) -> usize {
        self.factors.iter().filter(|f| f.active).count()
    }

    pub fn deactivated_factor_count(&self) -> usize {
        self.factors.len() - self.active_factor_count()
    }

    /// Every connected component must contain at least one absolute
    /// (prior-like) factor, otherwise the solution gauge is free.
    pub fn check_gauge(&self) -> Result<()> {
        let keys: Vec<&VariableKey> = self.values.keys().collect();
        if keys.is_empty() {
            return Ok(());
        }
        let index: std::collections::BTreeMap<&VariableKey, usize> =
            keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut parent: Vec<usize> = (0..keys.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for f in self.factors.iter().filter(|f| f.active) {
            for pair in f.keys.windows(2) {
                if let (Some(&a), Some(&b)) = (index.get(&pair[0]), index.get(&pair[1])) {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
            }
        }
        let mut anchored = vec![false; keys.len()];
        for f in self.factors.iter().filter(|f| f.active && f.absolute) {
            for k in &f.keys {
                if let Some(&i) = index.get(k) {
                    let r = find(&mut parent, i);
                    anchored[r] = true;
                }
            }
        }
        for i in 0..keys.len() {
            let r = find(&mut parent, i);
            if !anchored[r] {
                return Err(Error::GaugeNotFixed);
            }
        }
        Ok(())
    }
}
