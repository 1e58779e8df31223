//! Small dense vector helpers on plain slices.

use nalgebra::DMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Numerical rank from singular values, thresholded at `rel_tol * sigma_max`.
pub fn rank_of_rows(rows: &[&[f64]], dim: usize, rel_tol: f64) -> usize {
    if rows.is_empty() || dim == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Orthonormal basis (as rows) of the span of `rows`, using the same relative
/// rank threshold as [`rank_of_rows`].
pub fn span_basis(rows: &[&[f64]], dim: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() || dim == 0 {
        return Vec::new();
    }
    // Columns of the data matrix transposed: dim x m.
    let m = DMatrix::from_fn(dim, rows.len(), |i, j| rows[j][i]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > rel_tol * max {
            out.push(u.column(k).iter().cloned().collect());
        }
    }
    out
}
