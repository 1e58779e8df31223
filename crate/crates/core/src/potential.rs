//! The complement-subspace potential `G`, its companion `H` over the
//! non-support samples, the minimizer of `G`, and the bound constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::MarginGeometry;
use crate::linalg::{axpy, dot, norm};

/// Largest exponent `potential_eval` accepts.
pub const EXP_GUARD: f64 = 700.0;
const NEWTON_MAX_ITERS: usize = 200;
const NEWTON_GRAD_TOL: f64 = 1e-10;

/// Complement features of a solved geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    dim: usize,
    /// `a_i = y_i P(x_i)` for support samples.
    pub support: Vec<Vec<f64>>,
    /// Complement features of the other samples.
    pub nonsupport: Vec<Vec<f64>>,
    /// Their normalized margins along the max-margin direction.
    pub nonsupport_margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEval {
    pub g: f64,
    pub grad: Vec<f64>,
    pub hess_top: f64,
}

impl Potential {
    pub fn new(geo: &MarginGeometry, ds: &Dataset) -> Self {
        let (nonsupport, nonsupport_margins) = geo.nonsupport_features(ds).into_iter().unzip();
        Potential { dim: geo.basis.len(), support: geo.support_features(ds), nonsupport, nonsupport_margins }
    }

    pub fn from_features(dim: usize, support: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = support.iter().find(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(Potential { dim, support, nonsupport: Vec::new(), nonsupport_margins: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `G(v)` without the exponent guard; may be `inf`.
    pub fn g(&self, v: &[f64]) -> f64 {
        self.support.iter().map(|a| (-dot(a, v)).exp()).sum()
    }

    /// `H(v)`; zero when every sample is a support vector.
    pub fn h(&self, v: &[f64]) -> f64 {
        self.nonsupport.iter().map(|a| (-dot(a, v)).exp()).sum()
    }

    pub fn grad(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for a in &self.support {
            axpy(-(-dot(a, v)).exp(), a, &mut g);
        }
        g
    }

    pub fn hessian(&self, v: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for a in &self.support {
            let e = (-dot(a, v)).exp();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    h[(i, j)] += e * a[i] * a[j];
                }
            }
        }
        h
    }

    /// `G`, its gradient and the top Hessian eigenvalue, with the exponent guard.
    pub fn eval(&self, v: &[f64]) -> Result<PotentialEval> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if let Some(e) = self.support.iter().map(|a| -dot(a, v)).find(|&e| e > EXP_GUARD) {
            return Err(Error::Overflow(format!("exponent {e:.1} exceeds {EXP_GUARD}")));
        }
        let hess_top = if self.dim == 0 { 0.0 } else { SymmetricEigen::new(self.hessian(v)).eigenvalues.max() };
        Ok(PotentialEval { g: self.g(v), grad: self.grad(v), hess_top })
    }

    /// Damped Newton from the origin with halving backtracking.
    pub fn minimize(&self) -> Result<(Vec<f64>, f64)> {
        let mut v = vec![0.0; self.dim];
        let mut g = self.g(&v);
        for _ in 0..NEWTON_MAX_ITERS {
            let grad = self.grad(&v);
            if norm(&grad) <= NEWTON_GRAD_TOL {
                return Ok((v, g));
            }
            let hess = self.hessian(&v);
            let rhs = -DVector::from_column_slice(&grad);
            let step = match hess.clone().cholesky() {
                Some(c) => c.solve(&rhs),
                None => hess.svd(true, true).solve(&rhs, 1e-12).map_err(|e| Error::Overflow(e.to_string()))?,
            };
            let step: Vec<f64> = step.iter().cloned().collect();
            let slope = dot(&grad, &step);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = v.clone();
                axpy(t, &step, &mut trial);
                let gt = self.g(&trial);
                if gt <= g + 1e-4 * t * slope {
                    v = trial;
                    g = gt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // Rounding floor reached before the gradient tolerance.
                break;
            }
        }
        let gn = norm(&self.grad(&v));
        if gn <= NEWTON_GRAD_TOL {
            Ok((v, g))
        } else {
            Err(Error::Stalled(gn))
        }
    }
}

/// `W_max`, `G_max`, `H_max` for one stepsize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub w_max: f64,
    pub g_max: f64,
    pub h_max: f64,
    /// Logarithms, finite even when the constants overflow.
    pub log_g_max: f64,
    pub log_h_max: f64,
}

/// `W_max = max{4n/b, eta n^2/b} + eta n`; `G_max` and `H_max` are the
/// per-term suprema `sum exp(W_max |a_i|)` over the `W_max` ball.
pub fn bound_constants(n: usize, b: f64, eta: f64, pot: &Potential) -> BoundConstants {
    let nf = n as f64;
    let w_max = (4.0 * nf / b).max(eta * nf * nf / b) + eta * nf;
    let log_g_max = log_sum_exp(pot.support.iter().map(|a| w_max * norm(a)));
    let log_h_max = log_sum_exp(pot.nonsupport.iter().map(|a| w_max * norm(a)));
    BoundConstants { w_max, g_max: log_g_max.exp(), h_max: log_h_max.exp(), log_g_max, log_h_max }
}

/// `log sum exp(x_i)`, `-inf` for an empty sequence.
pub fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Everything the trajectory checks need about the potential at one stepsize.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialContext {
    pub potential: Potential,
    pub w_star: Vec<f64>,
    pub g_min: f64,
    pub n: usize,
    pub b: f64,
    pub eta: f64,
    pub gamma: f64,
    pub theta: Option<f64>,
    pub bounds: BoundConstants,
}

impl PotentialContext {
    pub fn new(geo: &MarginGeometry, ds: &Dataset, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        let potential = Potential::new(geo, ds);
        let (w_star, g_min) = potential.minimize()?;
        let bounds = bound_constants(ds.n(), geo.offset_b, eta, &potential);
        Ok(PotentialContext {
            potential,
            w_star,
            g_min,
            n: ds.n(),
            b: geo.offset_b,
            eta,
            gamma: geo.gamma,
            theta: geo.theta,
            bounds,
        })
    }

    pub fn w_max(&self) -> f64 {
        self.bounds.w_max
    }
}
