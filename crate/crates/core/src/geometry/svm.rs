//! Hard-margin SVM through the origin.
//!
//! Dual coordinate ascent on `max sum(a) - |sum a_i z_i|^2 / 2, a >= 0`
//! with `z_i = y_i x_i`, periodically polished by an exact solve on the
//! current active set. Separability is settled by a min-norm-point search on
//! the hull of the `z_i` when ascent has not produced a separator early on.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};

pub const MAX_SWEEPS: usize = 1_000_000;
const POLISH_EVERY: usize = 10;
const SEPARABILITY_PROBE_AT: usize = 256;
const ENUMERATION_MAX_N: usize = 12;

/// Raw SVM solution before the subspace decomposition is built.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub w_hat: Vec<f64>,
    /// One entry per sample, zero off the support set.
    pub alphas: Vec<f64>,
    /// Ascending sample indices (0-based).
    pub support: Vec<usize>,
    pub gamma: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

pub fn support_tol(tol: f64) -> f64 {
    (10.0 * tol).max(1e-7)
}

/// Solves the hard-margin SVM to KKT residual `tol`.
pub fn solve_svm(ds: &Dataset, tol: f64) -> Result<SvmSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let z: Vec<&[f64]> = ds.signed_rows().collect();
    let sq: Vec<f64> = z.iter().map(|r| dot(r, r)).collect();
    if sq.contains(&0.0) {
        // A zero row has margin 0 under every w.
        return Err(Error::NotSeparable);
    }

    let (alpha, sweeps, residual) = ascend(&z, &sq, ds.d(), tol)?;
    let sol = finish(ds, &z, alpha, tol, sweeps, residual)?;
    if ds.n() <= ENUMERATION_MAX_N {
        cross_check(ds, &z, &sol)?;
    }
    Ok(sol)
}

fn ascend(z: &[&[f64]], sq: &[f64], d: usize, tol: f64) -> Result<(Vec<f64>, usize, f64)> {
    let n = z.len();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut residual = f64::INFINITY;
    let mut probed = false;

    for sweep in 1..=MAX_SWEEPS {
        for i in 0..n {
            let m = dot(z[i], &w);
            let next = (alpha[i] + (1.0 - m) / sq[i]).max(0.0);
            let delta = next - alpha[i];
            if delta != 0.0 {
                axpy(delta, z[i], &mut w);
                alpha[i] = next;
            }
        }

        // Rebuild w from alpha now and then to shed accumulated drift.
        if sweep % 64 == 0 {
            w = combine(z, &alpha, d);
        }
        residual = kkt_residual(z, &alpha, &w);
        if residual < tol {
            return Ok((alpha, sweep, residual));
        }

        if !probed && sweep >= SEPARABILITY_PROBE_AT {
            probed = true;
            let min_margin = z.iter().map(|r| dot(r, &w)).fold(f64::INFINITY, f64::min);
            if min_margin <= 0.0 && !hull_excludes_origin(z) {
                return Err(Error::NotSeparable);
            }
        }

        if sweep % POLISH_EVERY == 0 {
            if let Some((a, r)) = polish(z, &alpha, d, tol) {
                return Ok((a, sweep, r));
            }
        }
    }
    Err(Error::NoConvergence { residual, sweeps: MAX_SWEEPS })
}

fn combine(z: &[&[f64]], alpha: &[f64], d: usize) -> Vec<f64> {
    let mut w = vec![0.0; d];
    for (r, a) in z.iter().zip(alpha) {
        if *a != 0.0 {
            axpy(*a, r, &mut w);
        }
    }
    w
}

/// Projected-gradient residual of the dual: `|max(0, a + g) - a|` with `g = 1 - m`.
fn kkt_residual(z: &[&[f64]], alpha: &[f64], w: &[f64]) -> f64 {
    z.iter()
        .zip(alpha)
        .map(|(r, &a)| {
            let g = 1.0 - dot(r, w);
            ((a + g).max(0.0) - a).abs()
        })
        .fold(0.0, f64::max)
}

/// Exact solve `K_S a_S = 1` on the active set of `alpha`; accepted only
/// when it is dual feasible and meets the KKT tolerance.
fn polish(z: &[&[f64]], alpha: &[f64], d: usize, tol: f64) -> Option<(Vec<f64>, f64)> {
    let amax = alpha.iter().cloned().fold(0.0, f64::max);
    let active: Vec<usize> = (0..z.len()).filter(|&i| alpha[i] > 1e-14 * amax).collect();
    if active.is_empty() || active.len() > d {
        return None;
    }
    let a_s = solve_active(z, &active)?;
    if a_s.iter().any(|&a| a < 0.0) {
        return None;
    }
    let mut cand = vec![0.0; z.len()];
    for (k, &i) in active.iter().enumerate() {
        cand[i] = a_s[k];
    }
    let w = combine(z, &cand, d);
    let r = kkt_residual(z, &cand, &w);
    (r < tol).then_some((cand, r))
}

/// Solves `K_S a = 1` with `K_ij = <z_i, z_j>`; `None` if singular.
fn solve_active(z: &[&[f64]], set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    let gram = DMatrix::from_fn(k, k, |a, b| dot(z[set[a]], z[set[b]]));
    let rhs = DVector::from_element(k, 1.0);
    let chol = gram.cholesky()?;
    let sol = chol.solve(&rhs);
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().cloned().collect())
}

fn finish(
    ds: &Dataset,
    z: &[&[f64]],
    mut alpha: Vec<f64>,
    tol: f64,
    sweeps: usize,
    residual: f64,
) -> Result<SvmSolution> {
    let s_tol = support_tol(tol);
    let w0 = combine(z, &alpha, ds.d());
    let support: Vec<usize> = (0..ds.n()).filter(|&i| dot(z[i], &w0) <= 1.0 + s_tol).collect();
    for (i, a) in alpha.iter_mut().enumerate() {
        if support.binary_search(&i).is_err() {
            *a = 0.0;
        }
    }
    let w_hat = combine(z, &alpha, ds.d());
    let wn = norm(&w_hat);
    if !(wn > 0.0) || !wn.is_finite() {
        return Err(Error::NotSeparable);
    }
    Ok(SvmSolution { w_hat, alphas: alpha, support, gamma: 1.0 / wn, sweeps, kkt_residual: residual })
}

/// Dual-route enumeration for small `n`: the first linearly independent
/// active set whose solution is nonnegative and primal feasible is optimal.
fn cross_check(ds: &Dataset, z: &[&[f64]], sol: &SvmSolution) -> Result<()> {
    let n = ds.n();
    let d = ds.d();
    let max_k = n.min(d);
    let feas_tol = 1e-9;
    let mut best: Option<Vec<f64>> = None;
    'outer: for size in 1..=max_k {
        for set in subsets(n, size) {
            let Some(a) = solve_active(z, &set) else { continue };
            if a.iter().any(|&v| v < -feas_tol) {
                continue;
            }
            let mut w = vec![0.0; d];
            for (k, &i) in set.iter().enumerate() {
                axpy(a[k], z[i], &mut w);
            }
            if z.iter().all(|r| dot(r, &w) >= 1.0 - feas_tol) {
                best = Some(w);
                break 'outer;
            }
        }
    }
    let Some(w) = best else {
        return Err(Error::SolverMismatch("ascent converged but no active set reproduces a feasible solution".into()));
    };
    let diff = norm(&crate::linalg::sub(&w, &sol.w_hat));
    if diff > 1e-6 * norm(&w).max(1.0) {
        return Err(Error::SolverMismatch(format!("ascent and enumeration differ by {diff:e}")));
    }
    Ok(())
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                cur = Some(next);
                break;
            }
        }
        Some(out)
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// True when the origin lies strictly outside the convex hull of `z`.
///
/// Wolfe's min-norm-point algorithm; the hull norm is compared against a
/// relative threshold.
pub fn hull_excludes_origin(z: &[&[f64]]) -> bool {
    let scale = z.iter().map(|r| norm(r)).fold(0.0, f64::max);
    min_norm_point(z).is_some_and(|p| norm(&p) > 1e-10 * scale)
}

/// Minimum-norm point of `conv(z)`.
pub fn min_norm_point(z: &[&[f64]]) -> Option<Vec<f64>> {
    let n = z.len();
    if n == 0 {
        return None;
    }
    let d = z[0].len();
    let scale2 = z.iter().map(|r| dot(r, r)).fold(0.0, f64::max);
    let eps = 1e-12 * scale2;

    let start = (0..n).min_by(|&a, &b| dot(z[a], z[a]).total_cmp(&dot(z[b], z[b]))).expect("non-empty");
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = z[start].to_vec();

    for _ in 0..(50 * n + 100) {
        let xx = dot(&x, &x);
        if xx <= eps {
            return Some(x);
        }
        let j = (0..n).min_by(|&a, &b| dot(z[a], &x).total_cmp(&dot(z[b], &x))).expect("non-empty");
        if xx - dot(z[j], &x) <= 1e-12 * scale2 || corral.contains(&j) {
            return Some(x);
        }
        corral.push(j);
        lambda.push(0.0);

        loop {
            let mu = affine_min_norm(z, &corral)?;
            if mu.iter().all(|&m| m > 1e-15) {
                lambda = mu;
                break;
            }
            let mut step = 1.0_f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= 1e-15 && l - m > 0.0 {
                    step = step.min(l / (l - m));
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += step * (m - *l);
            }
            let mut k = 0;
            while k < corral.len() {
                if lambda[k] <= 1e-15 {
                    corral.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            if corral.is_empty() {
                return None;
            }
        }
        x = vec![0.0; d];
        for (k, &i) in corral.iter().enumerate() {
            axpy(lambda[k], z[i], &mut x);
        }
    }
    Some(x)
}

/// Affine combination of the corral points with minimum norm.
fn affine_min_norm(z: &[&[f64]], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = dot(z[corral[a]], z[corral[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.clone().lu().solve(&rhs).or_else(|| m.svd(true, true).solve(&rhs, 1e-14).ok())?;
    let mu: Vec<f64> = sol.iter().take(k).cloned().collect();
    mu.iter().all(|v| v.is_finite()).then_some(mu)
}
