//! Dense linear-algebra helpers shared by the factorization, estimation and
//! transport code.
//!
//! The symmetric eigensolver is faer's tridiagonal divide-and-conquer run
//! sequentially, so repeated calls on the same input are bit-identical.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::Par;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{GrdError, Result};

/// Relative tolerance under which two magnitudes count as tied for the sign
/// convention.
const SIGN_TIE_RTOL: f64 = 1e-9;

/// Largest absolute asymmetry `|a_ij - a_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Validate that `a` is square, finite and symmetric to `tol` (absolute,
/// scaled by the largest entry).
pub fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(GrdError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if let Some(bad) = a.iter().find(|v| !v.is_finite()) {
        return Err(GrdError::NonFinite(format!("matrix entry {bad}")));
    }
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let asym = max_asymmetry(a);
    if asym > tol * scale {
        return Err(GrdError::NotSymmetric(asym));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in nondecreasing order and the matching orthonormal
/// eigenvectors as columns. Only the lower triangle is read.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let src = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let mut u = faer::Mat::<f64>::zeros(n, n);
    let par = Par::Seq;
    let scratch = evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    evd::self_adjoint_evd(
        src.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| GrdError::Solver(format!("symmetric eigensolver failed: {e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| s.column_vector()[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((values, vectors))
}

/// Replace the eigenvector basis of every cluster of (numerically) repeated
/// eigenvalues by the Gram-Schmidt orthonormalization of the projected
/// standard basis vectors `e_1, e_2, ...` taken in order.
///
/// `values` must be sorted. Eigenvalues within `tol` of their neighbour are
/// grouped. The result is independent of whatever basis the solver returned.
pub fn resolve_degenerate(values: &[f64], vectors: &mut DMatrix<f64>, tol: f64) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[end - 1]).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<usize> = (start..end).collect();
            let basis = lexicographic_basis(vectors, &cols);
            for (c, b) in cols.iter().zip(basis) {
                vectors.set_column(*c, &b);
            }
        }
        start = end;
    }
}

fn lexicographic_basis(vectors: &DMatrix<f64>, cols: &[usize]) -> Vec<DVector<f64>> {
    let dim = vectors.nrows();
    let span: Vec<DVector<f64>> = cols.iter().map(|&c| vectors.column(c).into_owned()).collect();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    for k in 0..dim {
        if out.len() == cols.len() {
            break;
        }
        // projection of e_k onto the eigenspace
        let mut v = DVector::zeros(dim);
        for s in &span {
            v.axpy(s[k], s, 1.0);
        }
        for b in &out {
            let d = b.dot(&v);
            v.axpy(-d, b, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            out.push(v / norm);
        }
    }
    // numerically the projections always span the space; fall back to the
    // solver basis otherwise
    if out.len() < cols.len() {
        return span;
    }
    out
}

/// Index of the largest-magnitude entry, ties (to a relative tolerance)
/// resolved to the lower index.
pub fn dominant_index(v: impl IntoIterator<Item = f64>) -> Option<usize> {
    let vals: Vec<f64> = v.into_iter().collect();
    let max = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return None;
    }
    vals.iter()
        .position(|x| x.abs() >= max * (1.0 - SIGN_TIE_RTOL))
}

/// Flip column `c` so that its largest-magnitude entry is nonnegative.
/// Returns `true` when the column was negated.
pub fn fix_column_sign(m: &mut DMatrix<f64>, c: usize) -> bool {
    let idx = dominant_index(m.column(c).iter().copied());
    match idx {
        Some(i) if m[(i, c)] < 0.0 => {
            m.column_mut(c).neg_mut();
            true
        }
        _ => false,
    }
}

/// Draw a Haar-distributed orthogonal matrix: QR of a Gaussian matrix with
/// the signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Orthogonal `Q` maximizing `tr(Qᵀ C)` (the orthogonal Procrustes solution
/// `Q = U Vᵀ` for `C = U Σ Vᵀ`).
pub fn procrustes_rotation(cross: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cross.nrows();
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    let svd = cross.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => u * v_t,
        _ => DMatrix::identity(d, d),
    }
}

/// `max |qᵀq - I|` over entries.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let d = q.ncols();
    let g = q.transpose() * q;
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}
