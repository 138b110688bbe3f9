//! Simplicial sparse LDLᵀ on upper-triangular CSC matrices, used to
//! solve the damped normal equations. Natural ordering is kept: keys
//! sort camera states chronologically with landmarks last, which keeps
//! fill-in low for trajectory-shaped graphs.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric positive-definite matrix stored as upper-triangular CSC
/// (diagonal included, rows ascending within each column).
pub struct SymmetricCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
    /// Positions of the diagonal entries inside `values`.
    diag_pos: Vec<usize>,
}

impl SymmetricCsc {
    /// Assembles from upper block storage: `(row offset, col offset) →
    /// block` with row offset ≤ col offset. Every diagonal entry is
    /// materialized so damping can always be applied.
    pub fn from_blocks(dim: usize, blocks: &BTreeMap<(usize, usize), DMatrix<f64>>) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (&(off_r, off_c), block) in blocks {
            for jc in 0..block.ncols() {
                let col = off_c + jc;
                for jr in 0..block.nrows() {
                    let row = off_r + jr;
                    if row <= col {
                        cols[col].push((row, block[(jr, jc)]));
                    }
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut diag_pos = vec![0; dim];
        col_ptr.push(0);
        for (col, entries) in cols.iter_mut().enumerate() {
            entries.sort_by_key(|(r, _)| *r);
            let mut saw_diag = false;
            for &(row, val) in entries.iter() {
                // Merge duplicates (same entry touched by several blocks).
                if let Some(last) = row_idx.last() {
                    if *last == row && row_idx.len() > col_ptr[col] {
                        *values.last_mut().unwrap() += val;
                        continue;
                    }
                }
                if row == col {
                    saw_diag = true;
                    diag_pos[col] = values.len();
                }
                row_idx.push(row);
                values.push(val);
            }
            if !saw_diag {
                diag_pos[col] = values.len();
                row_idx.push(col);
                values.push(0.0);
            }
            col_ptr.push(row_idx.len());
        }
        SymmetricCsc {
            n: dim,
            col_ptr,
            row_idx,
            values,
            diag_pos,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag_pos.iter().map(|&p| self.values[p]).collect()
    }

    /// Returns a copy with `extra[i]` added to each diagonal entry.
    pub fn with_damped_diagonal(&self, extra: &[f64]) -> SymmetricCsc {
        let mut values = self.values.clone();
        for (i, &p) in self.diag_pos.iter().enumerate() {
            values[p] += extra[i];
        }
        SymmetricCsc {
            n: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
            diag_pos: self.diag_pos.clone(),
        }
    }
}

/// LDLᵀ factorization (unit lower-triangular L, diagonal D).
pub struct LdlFactorization {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactorization {
    pub fn factor(a: &SymmetricCsc) -> Result<Self> {
        let n = a.n;
        // Symbolic: elimination tree and column counts.
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in a.col_ptr[k]..a.col_ptr[k + 1] {
                let mut i = a.row_idx[p];
                debug_assert!(i <= k);
                while flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        // Numeric factorization.
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0f64; nnz];
        let mut d = vec![0f64; n];
        let mut y = vec![0f64; n];
        let mut pattern = vec![0usize; n];
        let mut path = vec![0usize; n];
        let mut fill = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            fill[k] = 0;
            for p in a.col_ptr[k]..a.col_ptr[k + 1] {
                let entry = a.row_idx[p];
                y[entry] += a.values[p];
                // Stash the etree path, then reverse it onto the
                // pattern so it ends up in topological order.
                let mut len = 0;
                let mut i = entry;
                while flag[i] != k {
                    path[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = path[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + fill[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                fill[i] += 1;
            }
            if d[k] <= 0.0 || !d[k].is_finite() {
                return Err(Error::SingularSystem);
            }
        }
        Ok(LdlFactorization { n, lp, li, lx, d })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        for j in 0..self.n {
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * x[j];
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            for p in self.lp[j]..self.lp[j + 1] {
                x[j] -= self.lx[p] * x[self.li[p]];
            }
        }
        x
    }
}
