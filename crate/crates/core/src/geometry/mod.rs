//! Max-margin geometry: SVM solution, the split of feature space into the
//! max-margin direction and its orthogonal complement, and the margin offset.

mod offset;
mod svm;

use serde::{Deserialize, Serialize};

pub use offset::{offset_of_features, Offset, ENUMERATION_CAP};
pub use svm::{hull_excludes_origin, min_norm_point, solve_svm, support_tol, SvmSolution, MAX_SWEEPS};

use crate::data::{Dataset, RANK_REL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, rank_of_rows};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MarginGeometry {
    pub gamma: f64,
    /// Minimum-norm separator, `|w_hat| = 1 / gamma`.
    pub w_hat: Vec<f64>,
    /// Ascending 0-based indices.
    pub support: Vec<usize>,
    /// One per sample, zero off the support set.
    pub alphas: Vec<f64>,
    pub theta: Option<f64>,
    /// Orthonormal basis `f_1..f_{d-1}` of the complement of `w_hat`.
    pub basis: Vec<Vec<f64>>,
    pub offset_b: f64,
    pub offset_exact: bool,
    pub solve_tol: f64,
    pub support_tol: f64,
}

/// Solves the SVM and builds the full decomposition.
pub fn solve_hard_margin(ds: &Dataset, tol: f64) -> Result<MarginGeometry> {
    let svm = solve_svm(ds, tol)?;
    MarginGeometry::from_svm(ds, svm, tol)
}

/// Like [`solve_hard_margin`], but a degenerate offset is returned next to a
/// geometry whose `offset_b` is NaN instead of failing the whole solve.
pub fn solve_hard_margin_lenient(ds: &Dataset, tol: f64) -> Result<(MarginGeometry, Option<Error>)> {
    let svm = solve_svm(ds, tol)?;
    let mut geo = MarginGeometry::without_offset(ds, svm, tol);
    match compute_offset(&geo, ds) {
        Ok(off) => {
            geo.offset_b = off.b;
            geo.offset_exact = off.exact;
            Ok((geo, None))
        }
        Err(e @ Error::DegenerateOffset(_)) => Ok((geo, Some(e))),
        Err(e) => Err(e),
    }
}

impl MarginGeometry {
    pub fn from_svm(ds: &Dataset, svm: SvmSolution, tol: f64) -> Result<Self> {
        let mut geo = Self::without_offset(ds, svm, tol);
        let off = compute_offset(&geo, ds)?;
        geo.offset_b = off.b;
        geo.offset_exact = off.exact;
        Ok(geo)
    }

    fn without_offset(ds: &Dataset, svm: SvmSolution, tol: f64) -> Self {
        let basis = householder_complement(&svm.w_hat);
        let mut geo = MarginGeometry {
            gamma: svm.gamma,
            w_hat: svm.w_hat,
            support: svm.support,
            alphas: svm.alphas,
            theta: None,
            basis,
            offset_b: f64::NAN,
            offset_exact: false,
            solve_tol: tol,
            support_tol: support_tol(tol),
        };
        geo.theta = second_margin(&geo, ds);
        geo
    }

    pub fn d(&self) -> usize {
        self.w_hat.len()
    }

    /// Whether every sample is a support vector.
    pub fn all_support(&self) -> bool {
        self.support.len() == self.alphas.len()
    }

    pub fn is_support(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// Unit vector along `w_hat`.
    pub fn direction(&self) -> Vec<f64> {
        self.w_hat.iter().map(|v| v * self.gamma).collect()
    }

    /// `<v, w_hat> / |w_hat|`.
    pub fn project_mm(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v)?;
        Ok(dot(v, &self.w_hat) * self.gamma)
    }

    /// Coordinates of `v` in the complement basis.
    pub fn project_ns(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok(self.basis.iter().map(|f| dot(f, v)).collect())
    }

    /// `w0 = mm * w_hat/|w_hat| + sum_j ns_j f_j`.
    pub fn compose(&self, mm: f64, ns: &[f64]) -> Result<Vec<f64>> {
        if ns.len() != self.basis.len() {
            return Err(Error::DimensionMismatch { expected: self.basis.len(), got: ns.len() });
        }
        let mut w: Vec<f64> = self.direction().iter().map(|u| u * mm).collect();
        for (c, f) in ns.iter().zip(&self.basis) {
            crate::linalg::axpy(*c, f, &mut w);
        }
        Ok(w)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: v.len() });
        }
        Ok(())
    }

    /// Complement features `y_i P(x_i)` of the support vectors.
    pub fn support_features(&self, ds: &Dataset) -> Vec<Vec<f64>> {
        self.support.iter().map(|&i| self.basis.iter().map(|f| dot(f, ds.signed_row(i))).collect()).collect()
    }

    /// Complement features and margins `y_i <x_i, w_hat>/|w_hat|` of the other samples.
    pub fn nonsupport_features(&self, ds: &Dataset) -> Vec<(Vec<f64>, f64)> {
        (0..ds.n())
            .filter(|&i| !self.is_support(i))
            .map(|i| {
                let z = ds.signed_row(i);
                let ns = self.basis.iter().map(|f| dot(f, z)).collect();
                (ns, dot(z, &self.w_hat) * self.gamma)
            })
            .collect()
    }

    pub fn to_json(&self) -> GeometryJson {
        GeometryJson {
            gamma: self.gamma,
            w_hat: self.w_hat.clone(),
            support: self.support.iter().map(|i| i + 1).collect(),
            alphas: self.support.iter().map(|&i| self.alphas[i]).collect(),
            theta: self.theta,
            offset_b: self.offset_b.is_finite().then_some(self.offset_b),
            offset_exact: self.offset_exact,
            basis: self.basis.clone(),
        }
    }
}

/// Serialized geometry. Support indices are 1-based and `alphas` follows
/// their order; an infinite offset (no complement to move in) is `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryJson {
    pub gamma: f64,
    pub w_hat: Vec<f64>,
    pub support: Vec<usize>,
    pub alphas: Vec<f64>,
    pub theta: Option<f64>,
    pub offset_b: Option<f64>,
    pub offset_exact: bool,
    pub basis: Vec<Vec<f64>>,
}

/// Columns 2..d of the Householder reflector sending `w/|w|` to `-+e_1`.
pub fn householder_complement(w: &[f64]) -> Vec<Vec<f64>> {
    let d = w.len();
    let wn = norm(w);
    let mut v: Vec<f64> = w.iter().map(|x| x / wn).collect();
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s;
    let vv = dot(&v, &v);
    (1..d)
        .map(|j| {
            (0..d)
                .map(|i| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    delta - 2.0 * v[i] * v[j] / vv
                })
                .collect()
        })
        .collect()
}

/// Smallest normalized margin outside the support set.
pub fn second_margin(geo: &MarginGeometry, ds: &Dataset) -> Option<f64> {
    let theta = (0..ds.n())
        .filter(|&i| !geo.is_support(i))
        .map(|i| ds.margin(i, &geo.w_hat) * geo.gamma)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))));
    if let Some(t) = theta {
        assert!(t > geo.gamma, "second margin {t} does not exceed gamma {}", geo.gamma);
    }
    theta
}

/// Recomputes the margin offset of `geo` on `ds`.
pub fn margin_offset(geo: &MarginGeometry, ds: &Dataset) -> Result<f64> {
    compute_offset(geo, ds).map(|o| o.b)
}

fn compute_offset(geo: &MarginGeometry, ds: &Dataset) -> Result<Offset> {
    // The dynamics started in the data span never leave it, so the offset is
    // measured inside the complement part of that span.
    let all: Vec<Vec<f64>> =
        (0..ds.n()).map(|i| geo.basis.iter().map(|f| dot(f, ds.signed_row(i))).collect()).collect();
    let rows: Vec<&[f64]> = all.iter().map(Vec::as_slice).collect();
    let ambient = rank_of_rows(&rows, geo.basis.len(), RANK_REL_TOL);
    offset_of_features(&geo.support_features(ds), ambient, geo.solve_tol)
}

/// A pair of support vectors on opposite sides of the hyperplane `v^perp`.
pub fn nonseparability_witness(geo: &MarginGeometry, ds: &Dataset, v: &[f64]) -> Result<(usize, usize)> {
    geo.check_dim(v)?;
    let vn = norm(v);
    if vn == 0.0 {
        return Err(Error::InvalidParameter("direction must be non-zero".into()));
    }
    if dot(v, &geo.w_hat).abs() * geo.gamma > 1e-8 * vn {
        return Err(Error::InvalidParameter("direction is not orthogonal to w_hat".into()));
    }
    let mut neg: Option<(usize, f64)> = None;
    let mut pos: Option<(usize, f64)> = None;
    for &i in &geo.support {
        let m = ds.margin(i, v);
        if m < 0.0 && neg.map_or(true, |(_, b)| m < b) {
            neg = Some((i, m));
        }
        if m > 0.0 && pos.map_or(true, |(_, b)| m > b) {
            pos = Some((i, m));
        }
    }
    match (neg, pos) {
        (Some((i, _)), Some((j, _))) => Ok((i, j)),
        _ => Err(Error::NoWitness),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_separable, make_two_point};

    fn two_point() -> (Dataset, MarginGeometry) {
        let ds = make_two_point(0.2).unwrap();
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        (ds, geo)
    }

    #[test]
    fn two_point_geometry() {
        let (_, geo) = two_point();
        assert!((geo.gamma - 0.2).abs() < 1e-12);
        assert!((geo.w_hat[0] - 5.0).abs() < 1e-9);
        assert_eq!(geo.support, vec![0, 1]);
        assert!((geo.alphas[0] + geo.alphas[1] - 25.0).abs() < 1e-6);
        assert_eq!(geo.theta, None);
        assert!(geo.basis[0][0].abs() < 1e-15 && (geo.basis[0][1] - 1.0).abs() < 1e-15);
        assert!((geo.offset_b - 1.0).abs() < 1e-12);
        assert!(geo.offset_exact);
    }

    #[test]
    fn orthonormal_pair_geometry() {
        let ds = Dataset::new("e", vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, 1]).unwrap();
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        assert!((geo.w_hat[0] - 1.0).abs() < 1e-9 && (geo.w_hat[1] - 1.0).abs() < 1e-9);
        assert!((geo.gamma - 0.5_f64.sqrt()).abs() < 1e-9);
        assert_eq!(geo.support, vec![0, 1]);
    }

    #[test]
    fn projections() {
        let (_, geo) = two_point();
        assert!((geo.project_mm(&[3.0, 4.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((geo.project_mm(&geo.w_hat.clone()).unwrap() - 5.0).abs() < 1e-9);
        assert_eq!(geo.project_mm(&[0.0, 2.0]).unwrap(), 0.0);
        assert!((geo.project_ns(&[3.0, 4.0]).unwrap()[0] - 4.0).abs() < 1e-12);
        assert!(geo.project_ns(&geo.w_hat.clone()).unwrap()[0].abs() < 1e-9);
        assert!(matches!(geo.project_mm(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn householder_basis_is_orthonormal() {
        let w = [0.3, -1.2, 0.7, 2.0, -0.1];
        let b = householder_complement(&w);
        assert_eq!(b.len(), 4);
        for (i, f) in b.iter().enumerate() {
            assert!(dot(f, &w).abs() < 1e-12);
            for (j, g) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(f, g) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn witness_examples() {
        let (ds, geo) = two_point();
        assert_eq!(nonseparability_witness(&geo, &ds, &[0.0, 1.0]).unwrap(), (1, 0));
        assert_eq!(nonseparability_witness(&geo, &ds, &[0.0, -1.0]).unwrap(), (0, 1));
        assert!(nonseparability_witness(&geo, &ds, &[1.0, 0.0]).is_err());
        assert!(nonseparability_witness(&geo, &ds, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn second_margin_with_extra_point() {
        // Support margin 0.3 on two points; a third point at margin 0.6.
        let ds = Dataset::new("m", vec![vec![0.3, 0.5], vec![0.3, -0.5], vec![0.6, 0.1]], vec![1, 1, 1]).unwrap();
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        assert_eq!(geo.support, vec![0, 1]);
        assert!((geo.theta.unwrap() - 0.6).abs() < 1e-9);
        assert!((geo.gamma - 0.3).abs() < 1e-9);
    }

    #[test]
    fn synthetic_geometry_invariants() {
        let ds = gen_separable(20, 3, 0.3, 7).unwrap();
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        assert!((geo.gamma - 0.3).abs() < 1e-9);
        assert_eq!(geo.support.len(), 3);
        let s: f64 = geo.alphas.iter().sum();
        assert!((s * geo.gamma * geo.gamma - 1.0).abs() < 1e-6);
        assert!(geo.theta.unwrap() >= 0.45 - 1e-9);
        assert!(geo.offset_b > 0.0);
    }

    #[test]
    fn json_is_one_based() {
        let (_, geo) = two_point();
        let j = geo.to_json();
        assert_eq!(j.support, vec![1, 2]);
        assert_eq!(j.alphas.len(), 2);
        assert_eq!(j.offset_b, Some(1.0));
    }
}
