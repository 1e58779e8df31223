//! Losses, gradients, Hessian power iteration and constant-stepsize GD runs.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::MarginGeometry;
use crate::linalg::{axpy, dot, norm};
use crate::potential::Potential;

/// Coordinates or losses beyond this count as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;
const SOFTPLUS_BRANCH: f64 = 30.0;
pub const DEFAULT_HESS_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Logistic,
    Exponential,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Logistic => "logistic",
            LossKind::Exponential => "exponential",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(LossKind::Logistic),
            "exponential" | "exp" => Ok(LossKind::Exponential),
            other => Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        }
    }
}

/// `log(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > SOFTPLUS_BRANCH {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^m)`, the logistic gradient weight at margin `m`.
#[inline]
pub fn sigmoid_neg(m: f64) -> f64 {
    if m >= 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

/// Loss at `w`, gradient written into `grad`. Exponential values may be
/// infinite.
pub fn loss_grad_into(ds: &Dataset, kind: LossKind, w: &[f64], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for z in ds.signed_rows() {
        let m = dot(z, w);
        let (l, weight) = match kind {
            LossKind::Logistic => (softplus(-m), sigmoid_neg(m)),
            LossKind::Exponential => {
                let e = (-m).exp();
                (e, e)
            }
        };
        loss += l;
        if weight != 0.0 {
            axpy(-weight, z, grad);
        }
    }
    loss
}

/// `(L(w), grad L(w))`. Non-finite exponential values are reported as overflow.
pub fn loss_and_grad(ds: &Dataset, kind: LossKind, w: &[f64]) -> Result<(f64, Vec<f64>)> {
    if w.len() != ds.d() {
        return Err(Error::DimensionMismatch { expected: ds.d(), got: w.len() });
    }
    let mut grad = vec![0.0; ds.d()];
    let loss = loss_grad_into(ds, kind, w, &mut grad);
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Overflow(format!("{kind} loss is not finite at the given w")));
    }
    Ok((loss, grad))
}

fn hessian_weight(kind: LossKind, m: f64) -> f64 {
    match kind {
        LossKind::Logistic => {
            let s = sigmoid_neg(m);
            s * (1.0 - s)
        }
        LossKind::Exponential => (-m).exp(),
    }
}

/// Top Hessian eigenvalue by power iteration from the normalized all-ones
/// vector; the Rayleigh quotient after `iters` steps.
pub fn hessian_top_eig(ds: &Dataset, kind: LossKind, w: &[f64], iters: usize) -> Result<f64> {
    if iters < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 iterations, got {iters}")));
    }
    if w.len() != ds.d() {
        return Err(Error::DimensionMismatch { expected: ds.d(), got: w.len() });
    }
    let weights: Vec<f64> = ds.signed_rows().map(|z| hessian_weight(kind, dot(z, w))).collect();
    if weights.iter().any(|h| !h.is_finite()) {
        return Err(Error::Overflow("non-finite Hessian weight".into()));
    }
    Ok(power_iteration(ds, &weights, iters))
}

fn power_iteration(ds: &Dataset, weights: &[f64], iters: usize) -> f64 {
    let d = ds.d();
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut hv = vec![0.0; d];
    let mut rayleigh = 0.0;
    for _ in 0..iters {
        hv.iter_mut().for_each(|x| *x = 0.0);
        for (z, h) in ds.signed_rows().zip(weights) {
            let c = h * dot(z, &v);
            if c != 0.0 {
                axpy(c, z, &mut hv);
            }
        }
        rayleigh = dot(&v, &hv);
        let n = norm(&hv);
        if n == 0.0 || !n.is_finite() {
            break;
        }
        v.iter_mut().zip(&hv).for_each(|(a, b)| *a = b / n);
    }
    rayleigh
}

/// Which steps a run stores.
///
/// Every step up to `dense_until`, then every `ceil(growth^k)` together with
/// its successor (the pair feeds the one-step checks), and the final step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordSchedule {
    pub dense_until: u64,
    pub growth: f64,
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule { dense_until: 1000, growth: 1.05 }
    }
}

impl RecordSchedule {
    /// Sorted recorded steps for a run of `steps` steps.
    pub fn steps(&self, steps: u64) -> Vec<u64> {
        let mut out: Vec<u64> = (0..=self.dense_until.min(steps)).collect();
        if self.growth > 1.0 {
            let mut k = 0_i32;
            loop {
                let g = self.growth.powi(k).ceil();
                if g > steps as f64 {
                    break;
                }
                let g = g as u64;
                if g > self.dense_until {
                    out.push(g);
                    if g < steps {
                        out.push(g + 1);
                    }
                }
                k += 1;
            }
        }
        out.push(steps);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn describe(&self) -> String {
        format!("every step to {}, then ceil({}^k) and successor, plus the final step", self.dense_until, self.growth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    Overflow(u64),
    NonFinite(u64),
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => f.write_str("completed"),
            Termination::Overflow(t) => write!(f, "overflow at step {t}"),
            Termination::NonFinite(t) => write!(f, "non-finite at step {t}"),
        }
    }
}

/// Diagnostics at one recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub t: u64,
    /// Full iterate; empty for records read back from CSV.
    pub w: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub proj_mm: f64,
    /// Empty for records read back from CSV.
    pub ns_coords: Vec<f64>,
    pub ns_norm: f64,
    pub g_val: f64,
    pub h_val: f64,
    pub eff_step: f64,
    pub hess_top: Option<f64>,
    /// First complement coordinate.
    pub ns_sign: f64,
}

impl IterateRecord {
    /// `|w|` from its two orthogonal parts.
    pub fn w_norm(&self) -> f64 {
        self.proj_mm.hypot(self.ns_norm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<IterateRecord>,
    pub eta: f64,
    pub loss_kind: LossKind,
    pub w0: Vec<f64>,
    pub steps: u64,
    pub terminated: Termination,
    pub schedule: RecordSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub schedule: RecordSchedule,
    /// Power-iteration steps for the Hessian diagnostic; `None` skips it.
    pub hess_iters: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { schedule: RecordSchedule::default(), hess_iters: Some(DEFAULT_HESS_ITERS) }
    }
}

/// Constant-stepsize gradient descent `w <- w - eta grad L(w)`.
pub fn gd_run(
    ds: &Dataset,
    kind: LossKind,
    eta: f64,
    steps: u64,
    w0: &[f64],
    geo: &MarginGeometry,
    opts: &RunOptions,
) -> Result<Trajectory> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if steps < 1 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if w0.len() != ds.d() {
        return Err(Error::DimensionMismatch { expected: ds.d(), got: w0.len() });
    }
    if geo.d() != ds.d() {
        return Err(Error::DimensionMismatch { expected: ds.d(), got: geo.d() });
    }
    if let Some(it) = opts.hess_iters {
        if it < 10 {
            return Err(Error::InvalidParameter(format!("need at least 10 Hessian iterations, got {it}")));
        }
    }

    let pot = Potential::new(geo, ds);
    let schedule = opts.schedule.steps(steps);
    let mut next_rec = 0;
    let mut records = Vec::with_capacity(schedule.len());
    let mut w = w0.to_vec();
    let mut grad = vec![0.0; ds.d()];
    let mut terminated = Termination::Completed;

    for t in 0..=steps {
        let loss = loss_grad_into(ds, kind, &w, &mut grad);
        let status = if w.iter().any(|x| x.is_nan()) || loss.is_nan() {
            Some(Termination::NonFinite(t))
        } else if loss > OVERFLOW_LIMIT || w.iter().any(|x| x.abs() > OVERFLOW_LIMIT) {
            Some(Termination::Overflow(t))
        } else {
            None
        };
        let due = next_rec < schedule.len() && schedule[next_rec] == t;
        if due || status.is_some() {
            records.push(record(ds, kind, eta, t, &w, loss, &grad, geo, &pot, opts.hess_iters));
            if due {
                next_rec += 1;
            }
        }
        if let Some(s) = status {
            terminated = s;
            break;
        }
        if t == steps {
            break;
        }
        axpy(-eta, &grad, &mut w);
    }

    Ok(Trajectory { records, eta, loss_kind: kind, w0: w0.to_vec(), steps, terminated, schedule: opts.schedule })
}

#[allow(clippy::too_many_arguments)]
fn record(
    ds: &Dataset,
    kind: LossKind,
    eta: f64,
    t: u64,
    w: &[f64],
    loss: f64,
    grad: &[f64],
    geo: &MarginGeometry,
    pot: &Potential,
    hess_iters: Option<usize>,
) -> IterateRecord {
    let proj_mm = dot(w, &geo.w_hat) * geo.gamma;
    let ns_coords: Vec<f64> = geo.basis.iter().map(|f| dot(f, w)).collect();
    let hess_top = hess_iters.and_then(|it| hessian_top_eig(ds, kind, w, it).ok());
    IterateRecord {
        t,
        w: w.to_vec(),
        loss,
        grad_norm: norm(grad),
        proj_mm,
        ns_norm: norm(&ns_coords),
        g_val: pot.g(&ns_coords),
        h_val: pot.h(&ns_coords),
        eff_step: eta * (-geo.gamma * proj_mm).exp(),
        hess_top,
        ns_sign: ns_coords.first().copied().unwrap_or(0.0),
        ns_coords,
    }
}

pub const TRAJECTORY_HEADER: [&str; 10] =
    ["t", "loss", "grad_norm", "proj_mm", "ns_norm", "G_val", "H_val", "eff_step", "hess_top", "ns_sign"];

/// Shortest round-trip text for finite values; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::InvalidDataset(format!("bad number `{s}` in trajectory CSV")))
}

impl Trajectory {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("a trajectory always holds the t = 0 record")
    }

    pub fn final_t(&self) -> u64 {
        self.last().t
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRAJECTORY_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                fmt_f64(r.loss),
                fmt_f64(r.grad_norm),
                fmt_f64(r.proj_mm),
                fmt_f64(r.ns_norm),
                fmt_f64(r.g_val),
                fmt_f64(r.h_val),
                fmt_f64(r.eff_step),
                fmt_f64(r.hess_top.unwrap_or(f64::NAN)),
                fmt_f64(r.ns_sign),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trajectory>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads scalar records back. Vectors are left empty, so only the checks
    /// that work on scalar columns apply to the result.
    pub fn load_csv(path: &Path, eta: f64, kind: LossKind, terminated: Termination) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != TRAJECTORY_HEADER {
            return Err(Error::InvalidDataset(format!("trajectory header must be `{}`", TRAJECTORY_HEADER.join(","))));
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let f = |i: usize| parse_f64(&rec[i]);
            let hess = f(8)?;
            records.push(IterateRecord {
                t: rec[0].trim().parse().map_err(|_| Error::InvalidDataset(format!("bad step `{}`", &rec[0])))?,
                w: Vec::new(),
                loss: f(1)?,
                grad_norm: f(2)?,
                proj_mm: f(3)?,
                ns_norm: f(4)?,
                g_val: f(5)?,
                h_val: f(6)?,
                eff_step: f(7)?,
                hess_top: (!hess.is_nan()).then_some(hess),
                ns_sign: f(9)?,
                ns_coords: Vec::new(),
            });
        }
        if records.is_empty() {
            return Err(Error::InvalidDataset("trajectory CSV has no rows".into()));
        }
        let steps = records.last().map(|r| r.t).unwrap_or(0);
        Ok(Trajectory {
            records,
            eta,
            loss_kind: kind,
            w0: Vec::new(),
            steps,
            terminated,
            schedule: RecordSchedule::default(),
        })
    }
}
