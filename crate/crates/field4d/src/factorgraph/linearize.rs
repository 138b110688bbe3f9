use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{Factor, FactorGraph, Value, Values, VariableKey};

/// Central finite-difference step for Jacobians without an analytic
/// implementation.
const FD_STEP: f64 = 1e-6;

/// Block-assembled normal equations `H δ = -g` of the whitened problem,
/// with `H = JᵀJ` and `g = Jᵀr`.
pub struct LinearSystem {
    /// Variable order: key → (column offset, tangent dimension).
    pub offsets: BTreeMap<VariableKey, (usize, usize)>,
    /// Total tangent dimension.
    pub dim: usize,
    /// Upper-triangular blocks of `JᵀJ`, keyed by (block row offset,
    /// block col offset) with row ≤ col.
    pub hessian: BTreeMap<(usize, usize), DMatrix<f64>>,
    pub gradient: DVector<f64>,
    /// Total squared whitened residual at the linearization point.
    pub error: f64,
    /// Factors whose evaluation was invalid at this point.
    pub invalid_factors: usize,
}

fn gather<'a>(factor: &Factor, values: &'a Values) -> Result<Vec<&'a Value>> {
    factor
        .keys
        .iter()
        .map(|k| values.get(k).ok_or(Error::MissingVariable(*k)))
        .collect()
}

/// Whitened residual and per-variable Jacobians for one factor.
/// Returns `None` when the factor cannot be evaluated at this point.
pub fn factor_linearization(
    factor: &Factor,
    vals: &[&Value],
) -> Option<(DVector<f64>, Vec<DMatrix<f64>>)> {
    let eval = factor.residual.evaluate(vals);
    if !eval.valid {
        return None;
    }
    let mut jacs = match factor.residual.jacobians(vals) {
        Some(jacs) => jacs,
        None => {
            // Central finite differences on the manifold.
            let m = factor.residual.dim();
            let mut jacs = Vec::with_capacity(vals.len());
            for slot in 0..vals.len() {
                let dim = vals[slot].dim();
                let mut jac = DMatrix::zeros(m, dim);
                let cols = factor
                    .residual
                    .active_dims(slot, dim)
                    .unwrap_or_else(|| (0..dim).collect());
                let mut delta = DVector::zeros(dim);
                for &col in &cols {
                    delta[col] = FD_STEP;
                    let plus = vals[slot].retract(delta.rows(0, dim));
                    delta[col] = -FD_STEP;
                    let minus = vals[slot].retract(delta.rows(0, dim));
                    delta[col] = 0.0;

                    let mut shifted: Vec<&Value> = vals.to_vec();
                    shifted[slot] = &plus;
                    let ep = factor.residual.evaluate(&shifted);
                    shifted[slot] = &minus;
                    let em = factor.residual.evaluate(&shifted);
                    if !ep.valid || !em.valid {
                        return None;
                    }
                    jac.set_column(col, &((ep.residual - em.residual) / (2.0 * FD_STEP)));
                }
                jacs.push(jac);
            }
            jacs
        }
    };
    let mut r = eval.residual;
    factor.noise.whiten_residual(&mut r);
    for j in &mut jacs {
        factor.noise.whiten_jacobian(j);
    }
    Some((r, jacs))
}

/// Assembles the block-sparse normal equations over all active factors.
pub fn linearize(graph: &FactorGraph, values: &Values) -> Result<LinearSystem> {
    let mut offsets = BTreeMap::new();
    let mut dim = 0;
    for (key, value) in values.iter() {
        offsets.insert(*key, (dim, value.dim()));
        dim += value.dim();
    }

    let mut hessian: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
    let mut gradient = DVector::zeros(dim);
    let mut error = 0.0;
    let mut invalid = 0;

    for factor in graph.factors.iter().filter(|f| f.active) {
        let vals = gather(factor, values)?;
        let Some((r, jacs)) = factor_linearization(factor, &vals) else {
            invalid += 1;
            continue;
        };
        error += r.norm_squared();
        let slots: Vec<(usize, usize)> = factor
            .keys
            .iter()
            .map(|k| offsets[k])
            .collect();
        for (a, &(off_a, dim_a)) in slots.iter().enumerate() {
            let mut seg = gradient.rows_mut(off_a, dim_a);
            seg += jacs[a].transpose() * &r;
            for (b, &(off_b, _dim_b)) in slots.iter().enumerate() {
                if off_b < off_a {
                    continue;
                }
                let block = jacs[a].transpose() * &jacs[b];
                match hessian.entry((off_a, off_b)) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += &block;
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(block);
                    }
                }
            }
        }
    }

    Ok(LinearSystem {
        offsets,
        dim,
        hessian,
        gradient,
        error,
        invalid_factors: invalid,
    })
}

/// Total squared whitened residual over active factors; invalid
/// evaluations contribute nothing.
pub fn total_error(graph: &FactorGraph, values: &Values) -> Result<f64> {
    let mut error = 0.0;
    for factor in graph.factors.iter().filter(|f| f.active) {
        let vals = gather(factor, values)?;
        let eval = factor.residual.evaluate(&vals);
        if !eval.valid {
            continue;
        }
        let mut r = eval.residual;
        factor.noise.whiten_residual(&mut r);
        error += r.norm_squared();
    }
    Ok(error)
}

/// Per-factor whitened residual norms (inactive or invalid factors
/// report NaN-free zeros alongside their status).
pub fn factor_residual_norms(graph: &FactorGraph, values: &Values) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(graph.factors.len());
    for factor in &graph.factors {
        if !factor.active {
            norms.push(0.0);
            continue;
        }
        let vals = gather(factor, values)?;
        let eval = factor.residual.evaluate(&vals);
        if !eval.valid {
            norms.push(0.0);
            continue;
        }
        let mut r = eval.residual;
        factor.noise.whiten_residual(&mut r);
        norms.push(r.norm());
    }
    Ok(norms)
}

impl Values {
    /// Applies a stacked tangent step to every variable.
    pub fn retract_all(
        &self,
        offsets: &BTreeMap<VariableKey, (usize, usize)>,
        delta: &DVector<f64>,
    ) -> Values {
        let mut out = Values::new();
        for (key, value) in self.iter() {
            let (off, dim) = offsets[key];
            out.insert(*key, value.retract(delta.rows(off, dim)));
        }
        out
    }
}
