//! Slow reference computations that share no code with the library.

use nalgebra::{DMatrix, DVector};

pub const ORACLE_MAX_N: usize = 12;
pub const ORACLE_MAX_D: usize = 4;

#[derive(Debug, Clone)]
pub struct BruteSvm {
    pub w: Vec<f64>,
    pub gamma: f64,
    /// Indices with margin within 1e-7 of one.
    pub support: Vec<usize>,
}

#[derive(Debug, PartialEq)]
pub enum OracleError {
    /// Instance too large for enumeration.
    Cap,
    NotSeparable,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Hard-margin SVM by the primal route: for every subset of at most `d`
/// signed samples, the least-norm `w` with `<z_i, w> = 1` on the subset
/// (pseudo-inverse); the shortest candidate that is feasible for all samples
/// wins.
pub fn brute_svm(z: &[Vec<f64>]) -> Result<BruteSvm, OracleError> {
    let n = z.len();
    let d = z[0].len();
    if n > ORACLE_MAX_N || d > ORACLE_MAX_D {
        return Err(OracleError::Cap);
    }
    let mut best: Option<Vec<f64>> = None;
    for k in 1..=d.min(n) {
        for s in combinations(n, k) {
            let a = DMatrix::from_fn(k, d, |r, c| z[s[r]][c]);
            let Ok(pinv) = a.clone().pseudo_inverse(1e-12) else { continue };
            let w = &pinv * DVector::from_element(k, 1.0);
            let resid = (&a * &w).add_scalar(-1.0).amax();
            if resid > 1e-9 {
                continue;
            }
            let w: Vec<f64> = w.iter().copied().collect();
            if z.iter().all(|zi| dot(zi, &w) >= 1.0 - 1e-9) && best.as_ref().map_or(true, |b| dot(&w, &w) < dot(b, b)) {
                best = Some(w);
            }
        }
    }
    let w = best.ok_or(OracleError::NotSeparable)?;
    let gamma = 1.0 / dot(&w, &w).sqrt();
    let support = (0..n).filter(|&i| (dot(&z[i], &w) - 1.0).abs() < 1e-7).collect();
    Ok(BruteSvm { w, gamma, support })
}

/// Orthonormal basis of the complement of `w`, from an SVD.
pub fn complement_basis(w: &[f64]) -> Vec<Vec<f64>> {
    let d = w.len();
    let m = DMatrix::from_fn(d, d, |r, c| if c == 0 { w[r] } else { 0.0 });
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    // The left singular vector for the only non-zero singular value spans w.
    let top = svd.singular_values.imax();
    (0..d).filter(|&j| j != top).map(|j| u.column(j).iter().copied().collect()).collect()
}

fn worst(features: &[Vec<f64>], u: &[f64]) -> f64 {
    features.iter().map(|a| dot(a, u)).fold(f64::NEG_INFINITY, f64::max)
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `b = min over unit u of max_i <a_i, u>` by a sphere grid followed by a
/// shrinking random-perturbation polish. Complement dimension 1 to 3.
pub fn brute_offset_b(features: &[Vec<f64>]) -> Result<f64, OracleError> {
    let k = features[0].len();
    let mut cands: Vec<Vec<f64>> = match k {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..20_000)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 20_000.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let m = 60_000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - y * y).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), y, r * a.sin()]
                })
                .collect()
        }
        _ => return Err(OracleError::Cap),
    };
    if k == 1 {
        return Ok(cands.iter().map(|u| worst(features, u)).fold(f64::INFINITY, f64::min));
    }
    cands.sort_by(|a, b| worst(features, a).total_cmp(&worst(features, b)));
    let mut best = f64::INFINITY;
    let mut state = 0x9E37_79B9_7F4A_7C15_u64;
    let mut rnd = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for start in cands.into_iter().take(8) {
        let mut u = start;
        let mut f = worst(features, &u);
        let mut step = 0.05;
        while step > 1e-9 {
            let mut improved = false;
            for _ in 0..40 {
                let v = unit(u.iter().map(|x| x + step * rnd()).collect());
                let fv = worst(features, &v);
                if fv < f {
                    u = v;
                    f = fv;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(f);
    }
    Ok(best)
}

/// Central-difference gradient with step `h`.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Loss written directly from its definition, without the stable branches.
pub fn naive_loss(z: &[Vec<f64>], w: &[f64], exponential: bool) -> f64 {
    z.iter()
        .map(|zi| {
            let m = dot(zi, w);
            if exponential {
                (-m).exp()
            } else {
                (1.0 + (-m).exp()).ln()
            }
        })
        .sum()
}
