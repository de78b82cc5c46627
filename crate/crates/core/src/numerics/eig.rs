use super::hermitian_part;
use crate::error::{IsacError, Result};
use crate::{CMat, CVec, C64};
use nalgebra::{Cholesky, Dyn};

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `v^H A v / v^H B v`.
pub fn rayleigh_quotient(a: &CMat, b: &CMat, v: &CVec) -> f64 {
    v.dotc(&(a * v)).re / v.dotc(&(b * v)).re
}

pub(crate) fn cholesky(m: &CMat) -> Option<Cholesky<C64, Dyn>> {
    Cholesky::new(hermitian_part(m))
}

/// Unit vector maximizing the generalized Rayleigh quotient of the pencil `(A, B)`.
///
/// `B` must be positive definite; a failed Cholesky factorization is reported
/// as [`IsacError::IllConditioned`].
pub fn generalized_max_eigvec(a: &CMat, b: &CMat) -> Result<CVec> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(IsacError::Domain("pencil dimensions differ".into()));
    }
    let chol = cholesky(b)
        .ok_or_else(|| IsacError::IllConditioned("B is not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} A L^{-H}
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| IsacError::IllConditioned("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| IsacError::IllConditioned("singular Cholesky factor".into()))?;
    let (_, vecs) = hermitian_eigen(&c);
    let y = vecs.column(n - 1).into_owned();
    let v = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| IsacError::IllConditioned("singular Cholesky factor".into()))?;
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(IsacError::IllConditioned("degenerate eigenvector".into()));
    }
    Ok(v / C64::new(norm, 0.0))
}
