//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen, QR};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Eigenvalues in `[-NEGATIVE_EIGEN_TOLERANCE, 0)` are treated as rounding noise.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;

/// Largest entrywise magnitude of `R - Rᴴ`.
pub fn hermitian_defect(r: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..r.nrows() {
        for j in i..r.ncols() {
            worst = worst.max((r[(i, j)] - r[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Principal square root `U Λ^{1/2} Uᴴ` of a Hermitian PSD matrix.
///
/// Eigenvalues below `-NEGATIVE_EIGEN_TOLERANCE` are rejected; the rest of
/// the negative ones are clamped to zero.
pub fn hermitian_sqrt(r: &CMatrix) -> Result<CMatrix> {
    if r.nrows() != r.ncols() {
        return Err(Error::DimensionMismatch { expected: r.nrows(), got: r.ncols() });
    }
    let scale = r.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    let defect = hermitian_defect(r);
    if defect > 1e-9 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let sym = (r + r.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for &ev in eig.eigenvalues.iter() {
        if ev < -NEGATIVE_EIGEN_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite(ev));
        }
        roots.push(C64::new(ev.max(0.0).sqrt(), 0.0));
    }
    let u = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * roots[j]);
    Ok(scaled * u.adjoint())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(r: &CMatrix) -> f64 {
    let sym = (r + r.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Singular values in descending order.
pub fn singular_values(h: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = h.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Orthonormal basis of the span of `vectors`, dropping directions whose
/// residual norm falls below `rel_tol` times the original vector norm.
///
/// Classical Gram–Schmidt with one re-orthogonalisation pass.
pub fn orthonormal_basis(vectors: &[CVector], rel_tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let n = w.norm();
        if n > rel_tol * norm0 {
            basis.push(w / C64::new(n, 0.0));
        }
    }
    basis
}

/// Component of `h` orthogonal to the span of an orthonormal `basis`.
pub fn project_out(h: &CVector, basis: &[CVector]) -> CVector {
    let mut w = h.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(&w);
            w.axpy(-c, q, C64::new(1.0, 0.0));
        }
    }
    w
}

/// Orthonormal basis (as columns) of the orthogonal complement of the
/// column space of `a` (`M × k`, full column rank assumed).
///
/// Built from the full Householder `Q` of `a`, so the result has
/// `M - k` columns.
pub fn orthogonal_complement(a: &CMatrix) -> Result<CMatrix> {
    let (m, k) = a.shape();
    if k > m {
        return Err(Error::RankDeficient(format!("{k} columns in dimension {m}")));
    }
    if k == 0 {
        return Ok(CMatrix::identity(m, m));
    }
    let basis = orthonormal_basis(&a.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>(), 1e-10);
    if basis.len() < k {
        return Err(Error::RankDeficient(format!("column rank {} < {k}", basis.len())));
    }
    let qr = QR::new(a.clone());
    let mut qh = CMatrix::identity(m, m);
    qr.q_tr_mul(&mut qh);
    let q = qh.adjoint();
    Ok(q.columns(k, m - k).into_owned())
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let chol = nalgebra::Cholesky::new(a.clone())
        .ok_or_else(|| Error::RankDeficient("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}
