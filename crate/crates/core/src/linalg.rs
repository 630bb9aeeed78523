//! Thin helpers over `nalgebra` for symmetric positive-definite systems.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn cholesky(a: &Matrix, what: &str) -> Result<Cholesky<f64, Dyn>> {
    a.clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric(alloc::format!("{what} is not positive definite")))
}

/// Eigen-decomposition with eigenvalues sorted in descending order; the
/// eigenvector columns are permuted accordingly.
pub fn sorted_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(a.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Returns `true` when `XᵀX` is numerically nonsingular (full column rank).
pub fn full_column_rank(x: &Matrix) -> bool {
    if x.nrows() < x.ncols() {
        return false;
    }
    let svd = x.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    max > 0.0 && min > max * 1e-10 * x.nrows().max(x.ncols()) as f64
}

/// Ordinary least squares `(XᵀX)⁻¹Xᵀy` via Cholesky.
pub fn ols(x: &Matrix, y: &Vector) -> Result<Vector> {
    let xtx = x.transpose() * x;
    let chol = cholesky(&xtx, "XᵀX")?;
    Ok(chol.solve(&(x.transpose() * y)))
}
