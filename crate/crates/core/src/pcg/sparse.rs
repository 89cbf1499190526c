//! Compressed-row view of the unmasked weights, with multiply-add counting.

use ndarray::{Array1, Array2};

use crate::topology::Mask;

/// Row pointers and column indices of the unmasked entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl CsrPattern {
    pub fn from_mask(mask: &Mask) -> Self {
        let n = mask.size();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(mask.count());
        row_ptr.push(0);
        for r in 0..n {
            cols.extend((0..n).filter(|&c| mask.get(r, c)));
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Gathers the current values of `weights` in pattern order.
    pub fn gather(&self, weights: &Array2<f64>) -> SparseWeights<'_> {
        let mut values = Vec::with_capacity(self.nnz());
        for r in 0..self.rows() {
            values.extend(self.row(r).iter().map(|&c| weights[[r, c]]));
        }
        SparseWeights { pattern: self, values }
    }
}

pub struct SparseWeights<'a> {
    pattern: &'a CsrPattern,
    values: Vec<f64>,
}

impl SparseWeights<'_> {
    /// `W·v`, adding one to `madds` per stored entry visited.
    pub fn matvec(&self, v: &Array1<f64>, madds: &mut u64) -> Array1<f64> {
        let p = self.pattern;
        let mut out = Array1::zeros(p.rows());
        for r in 0..p.rows() {
            let mut acc = 0.0;
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                acc += self.values[k] * v[p.cols[k]];
                *madds += 1;
            }
            out[r] = acc;
        }
        out
    }

    /// `Wᵀ·v` by scattering along rows.
    pub fn transpose_matvec(&self, v: &Array1<f64>, madds: &mut u64) -> Array1<f64> {
        let p = self.pattern;
        let mut out = Array1::zeros(p.rows());
        for r in 0..p.rows() {
            let coef = v[r];
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                out[p.cols[k]] += self.values[k] * coef;
                *madds += 1;
            }
        }
        out
    }
}
