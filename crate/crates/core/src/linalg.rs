//! Small bridge to nalgebra for pseudo-inverses and SPD solves.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};

use crate::error::{ImprintError, Result};

pub(crate) fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Pseudo-inverse of a symmetric matrix. Its eigendecomposition doubles as
/// an SVD with singular values |λ|; values at or below
/// `scale * sigma_max * 1e-12` are treated as zero. Also returns the rank.
///
/// nalgebra's general SVD can lose several digits on rank-deficient
/// symmetric input, while the symmetric eigensolver stays accurate.
pub(crate) fn pinv_symmetric(a: ArrayView2<'_, f64>, scale: f64) -> (Array2<f64>, usize) {
    let eig = SymmetricEigen::new(to_na(a));
    let sigma_max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = scale * sigma_max * 1e-12;
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff && lambda != 0.0 {
            rank += 1;
            let q = eig.eigenvectors.column(i);
            out += (q * q.transpose()) / lambda;
        }
    }
    (from_na(&out), rank)
}

/// Solves `x a = b` for symmetric positive semi-definite `a` (so `x = b a⁻¹`),
/// failing with [`ImprintError::Singular`] when `a` is numerically singular.
pub(crate) fn solve_right_spd(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let m = to_na(a);
    let sv = SymmetricEigen::new(m.clone()).eigenvalues.map(f64::abs);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    // NaN eigenvalues also count as singular.
    if n == 0 || min.partial_cmp(&(max * n as f64 * f64::EPSILON)) != Some(std::cmp::Ordering::Greater) {
        return Err(ImprintError::Singular);
    }
    // a is symmetric, so x a = b  <=>  a xᵀ = bᵀ.
    let rhs = to_na(b).transpose();
    let sol = match m.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => m.lu().solve(&rhs).ok_or(ImprintError::Singular)?,
    };
    Ok(from_na(&sol.transpose()))
}
