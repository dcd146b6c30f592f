//! Small dense helpers shared across modules.
//!
//! Everything here works on `ndarray` matrices. Factorizations of the small
//! K x K matrices go through `nalgebra`.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{LoveError, Result};

pub(crate) fn to_nalgebra(m: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Lower Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky(m: ArrayView2<f64>) -> Result<Array2<f64>> {
    let chol = to_nalgebra(m)
        .cholesky()
        .ok_or_else(|| LoveError::Numeric("matrix is not positive definite".into()))?;
    Ok(from_nalgebra(&chol.l()))
}

pub fn inverse(m: ArrayView2<f64>) -> Result<Array2<f64>> {
    let inv = to_nalgebra(m)
        .try_inverse()
        .ok_or_else(|| LoveError::Numeric("matrix is singular".into()))?;
    Ok(from_nalgebra(&inv))
}

/// `log det(m)` for a symmetric positive-definite matrix, `None` otherwise.
pub fn log_det_pd(m: ArrayView2<f64>) -> Option<f64> {
    let sym = symmetrize(m);
    let chol = to_nalgebra(sym.view()).cholesky()?;
    let l = chol.l();
    Some((0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

pub fn symmetric_eigenvalues(m: ArrayView2<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = to_nalgebra(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn symmetrize(m: ArrayView2<f64>) -> Array2<f64> {
    let t = m.t();
    (&m + &t) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: ArrayView2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Maximum row ℓ₁-norm, written ‖M‖∞,1 throughout the crate.
pub fn inf_one_norm(m: ArrayView2<f64>) -> f64 {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

pub fn l1(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn lq(v: ArrayView1<f64>, q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    } else if q == 1.0 {
        l1(v)
    } else if q == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub fn max_asymmetry(m: ArrayView2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

pub fn identity(k: usize) -> Array2<f64> {
    Array2::eye(k)
}

pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn vec_of(v: ArrayView1<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn rows_of(m: ArrayView2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(vec_of).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(LoveError::Dimension("ragged nested array".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| LoveError::Dimension(e.to_string()))
}
