//! Sequential matrix-vector products.
//!
//! Sums always run in index order with a single accumulator, so a product
//! over a block and the same product over a zero-padded superset of that
//! block round to identical values.

use ndarray::{Array1, ArrayView1, ArrayView2};

/// `w·v`
pub fn matvec(w: ArrayView2<f64>, v: ArrayView1<f64>) -> Array1<f64> {
    debug_assert_eq!(w.ncols(), v.len());
    Array1::from_iter(w.rows().into_iter().map(|row| {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(v.iter()) {
            acc += a * b;
        }
        acc
    }))
}

/// `wᵀ·v`
pub fn matvec_t(w: ArrayView2<f64>, v: ArrayView1<f64>) -> Array1<f64> {
    debug_assert_eq!(w.nrows(), v.len());
    let mut out = Array1::zeros(w.ncols());
    for (row, &coef) in w.rows().into_iter().zip(v.iter()) {
        for (o, a) in out.iter_mut().zip(row.iter()) {
            *o += a * coef;
        }
    }
    out
}
