//! Margin offset: how far every unit direction of the complement subspace
//! misclassifies at least one support feature.
//!
//! `b = -max_{|v|=1} min_i <a_i, v>`, which for an origin strictly inside
//! `conv{a_i}` is the distance from the origin to the hull boundary. That
//! distance is `1 / max |u|` over the vertices `u` of the polar polytope
//! `{u : <a_i, u> <= 1}`, and the vertices are enumerated exactly.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, span_basis};

use super::svm::{binomial, subsets};

/// Vertex enumeration is skipped above this many candidate subsets.
pub const ENUMERATION_CAP: f64 = 1e5;
const STARTS: usize = 64;
const SUBGRADIENT_ITERS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offset {
    pub b: f64,
    /// False when `b` came from the multi-start search (an upper estimate).
    pub exact: bool,
}

/// Offset of the features `a_i` measured inside `ambient`, the span the
/// dynamics can move in. Returns `+inf` when that span is trivial.
pub fn offset_of_features(features: &[Vec<f64>], ambient_rank: usize, tol: f64) -> Result<Offset> {
    if ambient_rank == 0 {
        return Ok(Offset { b: f64::INFINITY, exact: true });
    }
    let Some(dim) = features.first().map(Vec::len) else {
        return Err(Error::DegenerateOffset(0.0));
    };
    let rows: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let basis = span_basis(&rows, dim, crate::data::RANK_REL_TOL);
    if basis.len() < ambient_rank {
        // Some direction of the ambient span is orthogonal to every feature.
        return Err(Error::DegenerateOffset(0.0));
    }
    let coords: Vec<Vec<f64>> = features.iter().map(|a| basis.iter().map(|f| dot(f, a)).collect()).collect();
    let k = basis.len();
    let scale = coords.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let rel = tol.max(1e-9);

    if k == 1 {
        let hi = coords.iter().map(|c| c[0]).fold(f64::NEG_INFINITY, f64::max);
        let lo = coords.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
        let b = hi.min(-lo);
        return checked(b, scale, rel, true);
    }

    if binomial(coords.len(), k) <= ENUMERATION_CAP {
        let b = polar_vertices(&coords, k, rel)?;
        return checked(b, scale, rel, true);
    }
    let b = multistart(&coords, k);
    checked(b, scale, rel, false)
}

fn checked(b: f64, scale: f64, rel: f64, exact: bool) -> Result<Offset> {
    if !(b > rel * scale.max(1.0)) {
        return Err(Error::DegenerateOffset(b));
    }
    Ok(Offset { b, exact })
}

/// Facet distances of `conv{c_i}` from the origin via `k`-subsets.
///
/// Each subset spans either a hyperplane `<c, u> = 1` missing the origin or
/// one through it. A supporting hyperplane with the origin on the wrong
/// side, or through the origin, means the origin is not interior.
fn polar_vertices(c: &[Vec<f64>], k: usize, rel: f64) -> Result<f64> {
    let scale = c.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut best = f64::INFINITY;
    for set in subsets(c.len(), k) {
        let m = DMatrix::from_fn(k, k, |i, j| c[set[i]][j]);
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin > 1e-10 * smax {
            let Some(u) = m.lu().solve(&DVector::from_element(k, 1.0)) else { continue };
            let u: Vec<f64> = u.iter().cloned().collect();
            let vals: Vec<f64> = c.iter().map(|ci| dot(ci, &u)).collect();
            if vals.iter().all(|&v| v <= 1.0 + rel) {
                best = best.min(1.0 / norm(&u));
            } else if vals.iter().all(|&v| v >= 1.0 - rel) {
                return Err(Error::DegenerateOffset(-1.0 / norm(&u)));
            }
        } else {
            // Rank k-1 subsets whose hyperplane contains the origin.
            let sv = &svd.singular_values;
            let small = (0..k).filter(|&i| sv[i] <= 1e-10 * smax).count();
            if small != 1 {
                continue;
            }
            let v_t = svd.v_t.as_ref().expect("requested");
            let idx = (0..k).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).expect("k >= 1");
            let r: Vec<f64> = v_t.row(idx).iter().cloned().collect();
            let vals: Vec<f64> = c.iter().map(|ci| dot(ci, &r)).collect();
            let t = rel * scale;
            if vals.iter().all(|&v| v >= -t) || vals.iter().all(|&v| v <= t) {
                return Err(Error::DegenerateOffset(0.0));
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::DegenerateOffset(0.0))
    }
}

/// Best value of `max_i <c_i, u>` over unit `u` from seeded projected
/// subgradient runs. Any unit `u` gives a value at least `b`.
fn multistart(c: &[Vec<f64>], k: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let h = |u: &[f64]| c.iter().map(|ci| dot(ci, u)).fold(f64::NEG_INFINITY, f64::max);
    let mut best = f64::INFINITY;
    for _ in 0..STARTS {
        let mut u: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let nu = norm(&u);
        u.iter_mut().for_each(|x| *x /= nu);
        for it in 0..SUBGRADIENT_ITERS {
            let val = h(&u);
            best = best.min(val);
            let arg = c
                .iter()
                .enumerate()
                .max_by(|a, b| dot(a.1, &u).total_cmp(&dot(b.1, &u)))
                .map(|(i, _)| i)
                .expect("non-empty");
            let step = 0.5 / (1.0 + it as f64).sqrt();
            for (x, g) in u.iter_mut().zip(&c[arg]) {
                *x -= step * g;
            }
            let nu = norm(&u);
            if nu == 0.0 {
                break;
            }
            u.iter_mut().for_each(|x| *x /= nu);
        }
        best = best.min(h(&u));
    }
    best
}
