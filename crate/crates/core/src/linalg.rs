//! Small dense helpers shared by the solver, refit and theory modules.
//!
//! Designs are stored column-major (`DMatrix`), so a column is a contiguous
//! slice of length `n`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Ridge added to `X_SᵀX_S` before factorization, divided by `n`.
pub const RIDGE_NUMERATOR: f64 = 1e-7;

/// Contiguous view of column `j`.
#[inline]
pub fn column(x: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = x.nrows();
    &x.as_slice()[j * n..(j + 1) * n]
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// `sign(0) = 0`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `X_Aᵀ X_A` for the columns listed in `support`.
pub fn gram(x: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    let k = support.len();
    let mut g = DMatrix::zeros(k, k);
    for (a, &i) in support.iter().enumerate() {
        let ci = column(x, i);
        for (b, &j) in support.iter().enumerate().skip(a) {
            let v = dot(ci, column(x, j));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// `X_Aᵀ v`.
pub fn restricted_correlation(x: &DMatrix<f64>, support: &[usize], v: &[f64]) -> DVector<f64> {
    DVector::from_iterator(support.len(), support.iter().map(|&j| dot(column(x, j), v)))
}

/// `X β` computed column by column, skipping zero coefficients.
pub fn mat_vec(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; x.nrows()];
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (o, xv) in out.iter_mut().zip(column(x, j)) {
                *o += b * xv;
            }
        }
    }
    out
}

/// Cholesky factor of `gram + shift·I`.
pub fn cholesky_shifted(gram: &DMatrix<f64>, shift: f64) -> Result<Cholesky<f64, Dyn>> {
    let k = gram.nrows();
    let mut m = gram.clone();
    for i in 0..k {
        m[(i, i)] += shift;
    }
    Cholesky::new(m).ok_or(Error::Factorization { size: k })
}

/// Ratio of the extreme eigenvalues of a symmetric matrix. Infinite when the
/// smallest eigenvalue is not positive.
pub fn condition_number(sym: &DMatrix<f64>) -> (f64, f64) {
    if sym.nrows() == 0 {
        return (1.0, 0.0);
    }
    let eig = SymmetricEigen::new(sym.clone());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &e in eig.eigenvalues.iter() {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    (cond, lo)
}

/// Checks `(XᵀX)_jj = n` to relative tolerance `rel_tol`.
pub fn check_normalized(x: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    let n = x.nrows();
    for j in 0..x.ncols() {
        let c = column(x, j);
        let norm_sq = dot(c, c);
        if ((norm_sq - n as f64) / n as f64).abs() > rel_tol {
            return Err(Error::UnnormalizedColumn { column: j, norm_sq, n });
        }
    }
    Ok(())
}

/// Sum with Neumaier compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
