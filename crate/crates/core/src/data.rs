//! Datasets: construction, CSV I/O, normalization, synthetic generators and
//! the assumption report.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{solve_svm, MarginGeometry};
use crate::linalg::{dot, norm, rank_of_rows};

/// Row norms may exceed one by this much and still count as normalized.
pub const NORM_SLACK: f64 = 1e-12;
/// Relative singular-value threshold used for every rank decision.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Binary classification data: `n` rows of `d` features with labels in {-1, +1}.
///
/// Immutable once built. Rows are stored row-major, together with the signed
/// rows `y_i * x_i` that every loss and margin computation works with.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<i8>,
    signed: Vec<f64>,
    normalized: bool,
}

impl Dataset {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!("{} rows but {} labels", n, labels.len())));
        }
        let mut features = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!("row {} has {} features, expected {}", i, row.len(), d)));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i} has a non-finite feature")));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(name.into(), n, d, features, labels)
    }

    fn from_flat(name: String, n: usize, d: usize, features: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::InvalidDataset(format!("label {bad} is not -1 or +1")));
        }
        let mut signed = features.clone();
        for (i, y) in labels.iter().enumerate() {
            if *y < 0 {
                for v in &mut signed[i * d..(i + 1) * d] {
                    *v = -*v;
                }
            }
        }
        let mut ds = Dataset { name, n, d, features, labels, signed, normalized: false };
        ds.normalized = ds.max_row_norm() <= 1.0 + NORM_SLACK;
        Ok(ds)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// `y_i * x_i`.
    pub fn signed_row(&self, i: usize) -> &[f64] {
        &self.signed[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn signed_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.signed.chunks_exact(self.d)
    }

    /// Margin `y_i <x_i, w>`.
    pub fn margin(&self, i: usize, w: &[f64]) -> f64 {
        dot(self.signed_row(i), w)
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    /// Applies `f` to every row, keeping labels and name.
    pub fn map_rows(&self, f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let rows = self.rows().map(f).collect();
        Dataset::new(self.name.clone(), rows, self.labels.clone())
    }

    /// Writes the dataset as CSV (`x1..xd,label`) plus a JSON sidecar next to it.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.d).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let meta = DatasetMeta { name: self.name.clone(), normalized: self.normalized };
        let side = sidecar_path(path);
        fs::write(&side, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(side, e))?;
        Ok(())
    }
}

/// Sidecar metadata stored next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub normalized: bool,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Loads a headered CSV. Every column except `label_column` is a feature.
///
/// The two label values are mapped lexicographically: the smaller string
/// becomes -1. Rows keep file order and no normalization is applied.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len().saturating_sub(1));
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: r + 1,
                column: headers.get(j).unwrap_or("?").to_string(),
                value: cell.to_string(),
            })?;
            row.push(v);
        }
        rows.push(row);
    }

    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if distinct.len() != 2 {
        return Err(Error::DegenerateLabels(distinct.len()));
    }
    let negative = *distinct.iter().next().expect("two labels");
    let labels = raw_labels.iter().map(|l| if l == negative { -1 } else { 1 }).collect();

    let side = sidecar_path(path);
    let name = fs::read_to_string(&side)
        .ok()
        .and_then(|s| serde_json::from_str::<DatasetMeta>(&s).ok())
        .map(|m| m.name)
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into()));
    Dataset::new(name, rows, labels)
}

/// Divides every row by `max(1, max_i ||x_i||)`.
///
/// Datasets already within the unit ball (up to [`NORM_SLACK`]) come back
/// unchanged, which makes the operation idempotent bit-for-bit.
pub fn normalize(ds: &Dataset) -> Result<Dataset> {
    let m = ds.max_row_norm();
    if m == 0.0 {
        return Err(Error::InvalidDataset("all-zero feature matrix".into()));
    }
    if m <= 1.0 + NORM_SLACK {
        return Ok(ds.clone());
    }
    let features = ds.features.iter().map(|v| v / m).collect();
    let mut out = Dataset::from_flat(ds.name.clone(), ds.n, ds.d, features, ds.labels.clone())?;
    out.normalized = true;
    Ok(out)
}

/// The two-sample dataset `x1 = (gamma, 1)`, `x2 = (gamma, -1)`, both labelled +1.
///
/// Left unnormalized on purpose: its rows have norm `sqrt(1 + gamma^2)`.
pub fn make_two_point(gamma: f64) -> Result<Dataset> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Dataset::new(format!("two-point(gamma={gamma})"), vec![vec![gamma, 1.0], vec![gamma, -1.0]], vec![1, 1])
}

const GEN_ROUNDS: usize = 64;

/// Random separable dataset with a planted max-margin direction.
///
/// `d` support vectors sit exactly at `margin` along a random unit direction
/// `u`; their components orthogonal to `u` are drawn so that the origin is a
/// strictly positive combination of them (which makes the dual coefficients
/// positive and the offset `b` strictly positive). The other `n - d` points
/// sit at margin at least `1.5 * margin`. All rows lie in the unit ball.
pub fn gen_separable(n: usize, d: usize, margin: f64, seed: u64) -> Result<Dataset> {
    if d < 2 || n < d {
        return Err(Error::InvalidParameter(format!("need n >= d >= 2, got n={n}, d={d}")));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter(format!("margin must lie in (0, 1), got {margin}")));
    }
    let far = 1.5 * margin;
    if far >= 1.0 {
        return Err(Error::Infeasible(format!("non-support points need margin 1.5*{margin} < 1 inside the unit ball")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = d - 1;
    let r_max = (1.0 - margin * margin).sqrt();

    for _ in 0..GEN_ROUNDS {
        let q = random_orthogonal(d, &mut rng);
        let u: Vec<f64> = q.column(0).iter().cloned().collect();
        let frame: Vec<Vec<f64>> = (1..d).map(|j| q.column(j).iter().cloned().collect()).collect();

        // Complement coordinates of the support vectors.
        let mut comps: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..k {
            let dir = random_unit(k, &mut rng);
            let radius = rng.random_range(0.4..1.0) * r_max;
            comps.push(dir.iter().map(|v| v * radius).collect());
        }
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let mut m = vec![0.0; k];
        for (c, w) in comps.iter().zip(&weights) {
            crate::linalg::axpy(*w, c, &mut m);
        }
        let m_norm = norm(&m);
        if m_norm < 1e-3 * r_max {
            continue;
        }
        let rho = rng.random_range(0.4..1.0) * r_max;
        comps.push(m.iter().map(|v| -rho * v / m_norm).collect());

        if !well_spread(&comps, margin) {
            continue;
        }

        let mut signed_rows: Vec<Vec<f64>> = comps.iter().map(|c| embed(margin, c, &u, &frame)).collect();

        let hi = far + 0.5 * (1.0 - far);
        for _ in d..n {
            let mm = rng.random_range(far..hi);
            let radius = rng.random_range(0.0..1.0) * (1.0 - mm * mm).sqrt();
            let c: Vec<f64> = random_unit(k, &mut rng).iter().map(|v| v * radius).collect();
            signed_rows.push(embed(mm, &c, &u, &frame));
        }

        signed_rows.shuffle(&mut rng);
        let labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        let rows =
            signed_rows.into_iter().zip(&labels).map(|(z, &y)| z.into_iter().map(|v| v * y as f64).collect()).collect();
        return Dataset::new(format!("synthetic(n={n},d={d},margin={margin},seed={seed})"), rows, labels);
    }
    Err(Error::Infeasible(format!("no well-conditioned support configuration after {GEN_ROUNDS} rounds")))
}

fn embed(along: f64, comp: &[f64], u: &[f64], frame: &[Vec<f64>]) -> Vec<f64> {
    let mut z: Vec<f64> = u.iter().map(|v| v * along).collect();
    for (c, f) in comp.iter().zip(frame) {
        crate::linalg::axpy(*c, f, &mut z);
    }
    z
}

/// Rejects support configurations that are close to degenerate: the lifted
/// points `(margin, c_i)` must be well conditioned and the origin must sit
/// well inside the simplex spanned by the `c_i`.
fn well_spread(comps: &[Vec<f64>], margin: f64) -> bool {
    let d = comps.len();
    let lifted = DMatrix::from_fn(d, d, |i, j| if j == 0 { margin } else { comps[i][j - 1] });
    let sv = lifted.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < 0.02 * margin {
        return false;
    }
    // Barycentric coordinates of the origin: [C^T; 1^T] lambda = e_last.
    let mut aug = DMatrix::zeros(d, d);
    for (j, c) in comps.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            aug[(i, j)] = *v;
        }
        aug[(d - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(d);
    rhs[d - 1] = 1.0;
    match aug.lu().solve(&rhs) {
        Some(lambda) => lambda.iter().all(|&l| l > 0.05 / d as f64),
        None => false,
    }
}

fn random_unit(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm(&v);
        if nv > 1e-8 {
            return v.iter().map(|x| x / nv).collect();
        }
    }
}

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Sign-fix so the factorization (and hence the dataset) is unique per seed.
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Which of the standing assumptions hold for a dataset and its geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub separable: bool,
    pub witness: Option<Vec<f64>>,
    pub norms_ok: bool,
    pub full_rank: bool,
    pub rank: usize,
    pub support_spans: bool,
    pub support_rank: usize,
    pub duals_positive: bool,
    pub min_alpha: f64,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.separable && self.norms_ok && self.full_rank && self.support_spans && self.duals_positive
    }

    /// Report for data on which no separating geometry exists.
    pub fn not_separable(ds: &Dataset) -> Self {
        let rows: Vec<&[f64]> = ds.rows().collect();
        let rank = rank_of_rows(&rows, ds.d(), RANK_REL_TOL);
        AssumptionReport {
            separable: false,
            witness: None,
            norms_ok: ds.max_row_norm() <= 1.0 + NORM_SLACK,
            full_rank: rank == ds.d(),
            rank,
            support_spans: false,
            support_rank: 0,
            duals_positive: false,
            min_alpha: f64::NAN,
        }
    }
}

/// Evaluates the separability, regularity and non-degeneracy assumptions.
pub fn check_assumptions(ds: &Dataset, geo: &MarginGeometry) -> AssumptionReport {
    assumption_flags(ds, &geo.w_hat, &geo.support, &geo.alphas, geo.solve_tol)
}

fn assumption_flags(ds: &Dataset, w_hat: &[f64], support: &[usize], alphas: &[f64], tol: f64) -> AssumptionReport {
    let tol = tol.max(1e-9);
    let min_margin = (0..ds.n()).map(|i| ds.margin(i, w_hat)).fold(f64::INFINITY, f64::min);
    let separable = min_margin >= 1.0 - tol;

    let rows: Vec<&[f64]> = ds.rows().collect();
    let rank = rank_of_rows(&rows, ds.d(), RANK_REL_TOL);
    let support_rows: Vec<&[f64]> = support.iter().map(|&i| ds.row(i)).collect();
    let support_rank = rank_of_rows(&support_rows, ds.d(), RANK_REL_TOL);
    let min_alpha = support.iter().map(|&i| alphas[i]).fold(f64::INFINITY, f64::min);

    AssumptionReport {
        separable,
        witness: separable.then(|| w_hat.to_vec()),
        norms_ok: ds.max_row_norm() <= 1.0 + NORM_SLACK,
        full_rank: rank == ds.d(),
        rank,
        support_spans: support_rank == rank,
        support_rank,
        duals_positive: min_alpha > tol,
        min_alpha,
    }
}

/// Solves the geometry and reports on the assumptions.
///
/// Non-separable data yields `separable = false` and no geometry. When the
/// offset degenerates the report is built from the bare SVM solution and the
/// geometry is again absent.
pub fn assess(ds: &Dataset, tol: f64) -> Result<(AssumptionReport, Option<MarginGeometry>)> {
    let svm = match solve_svm(ds, tol) {
        Ok(s) => s,
        Err(Error::NotSeparable) => return Ok((AssumptionReport::not_separable(ds), None)),
        Err(e) => return Err(e),
    };
    let report = assumption_flags(ds, &svm.w_hat, &svm.support, &svm.alphas, tol);
    match MarginGeometry::from_svm(ds, svm, tol) {
        Ok(geo) => Ok((report, Some(geo))),
        Err(Error::DegenerateOffset(_)) => Ok((report, None)),
        Err(e) => Err(e),
    }
}
