//! Batch runs over a list of stepsizes and the files they produce.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{gen_separable, load_csv, make_two_point, normalize, Dataset};
use crate::dynamics::{gd_run, IterateRecord, LossKind, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{solve_hard_margin, MarginGeometry, DEFAULT_TOL};
use crate::plot::{line_plot, Axes, Series};
use crate::potential::PotentialContext;
use crate::verify::{build_report, VerificationReport, VerifyMode};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    TwoPoint(f64),
    Csv { path: PathBuf, label_column: String },
    Gen { n: usize, d: usize, margin: f64, seed: u64 },
}

impl DataSource {
    /// Loads the data, rescaling CSV input into the unit ball when asked.
    pub fn load(&self, rescale: bool) -> Result<Dataset> {
        let ds = match self {
            DataSource::TwoPoint(g) => make_two_point(*g)?,
            DataSource::Csv { path, label_column } => load_csv(path, label_column)?,
            DataSource::Gen { n, d, margin, seed } => gen_separable(*n, *d, *margin, *seed)?,
        };
        if rescale {
            normalize(&ds)
        } else {
            Ok(ds)
        }
    }
}

/// Parses `n,d,margin`.
pub fn parse_gen_spec(s: &str, seed: u64) -> Result<DataSource> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::InvalidParameter(format!("generator spec `{s}` is not n,d,margin"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(DataSource::Gen {
        n: parts[0].parse().map_err(|_| bad())?,
        d: parts[1].parse().map_err(|_| bad())?,
        margin: parts[2].parse().map_err(|_| bad())?,
        seed,
    })
}

/// Parses a comma-separated list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("`{p}` in `{s}` is not a number")))
        })
        .collect()
}

/// Starting point of every run.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    Vector(Vec<f64>),
    /// `s f_1`: zero max-margin coordinate, complement offset along `f_1`.
    Offset(f64),
}

impl InitSpec {
    pub fn resolve(&self, geo: &MarginGeometry) -> Result<Vec<f64>> {
        let d = geo.d();
        match self {
            InitSpec::Zero => Ok(vec![0.0; d]),
            InitSpec::Vector(v) if v.len() == d => Ok(v.clone()),
            InitSpec::Vector(v) => Err(Error::DimensionMismatch { expected: d, got: v.len() }),
            InitSpec::Offset(s) => {
                if d < 2 {
                    return Err(Error::InvalidParameter("offset start needs d >= 2".into()));
                }
                let mut ns = vec![0.0; d - 1];
                ns[0] = *s;
                geo.compose(0.0, &ns)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub rescale: bool,
    pub loss: LossKind,
    pub etas: Vec<f64>,
    pub steps: u64,
    pub init: InitSpec,
    pub mode: VerifyMode,
    pub options: RunOptions,
    pub out_dir: PathBuf,
    /// Concurrent runs; `0` uses every core.
    pub jobs: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.etas.is_empty() {
            return Err(Error::InvalidParameter("stepsize list is empty".into()));
        }
        if let Some(e) = self.etas.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter(format!("stepsize {e} must be positive and finite")));
        }
        if self.steps < 1 {
            return Err(Error::InvalidParameter("step count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome for one stepsize.
#[derive(Debug, Clone)]
pub struct EtaRun {
    pub eta: f64,
    pub trajectory: Trajectory,
    pub report: VerificationReport,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub dataset: Dataset,
    pub geometry: MarginGeometry,
    pub runs: Vec<EtaRun>,
}

impl Experiment {
    pub fn all_passed(&self) -> bool {
        self.runs.iter().all(|r| r.report.overall)
    }
}

pub fn eta_tag(eta: f64) -> String {
    format!("{eta}")
}

pub fn trajectory_path(dir: &Path, eta: f64) -> PathBuf {
    dir.join(format!("traj_eta{}.csv", eta_tag(eta)))
}

pub fn report_path(dir: &Path, eta: f64) -> PathBuf {
    dir.join(format!("report_eta{}.json", eta_tag(eta)))
}

fn run_one(ds: &Dataset, geo: &MarginGeometry, cfg: &RunConfig, eta: f64) -> Result<EtaRun> {
    let w0 = cfg.init.resolve(geo)?;
    let trajectory = gd_run(ds, cfg.loss, eta, cfg.steps, &w0, geo, &cfg.options)?;
    let ctx = PotentialContext::new(geo, ds, eta)?;
    let report = build_report(ds, geo, &ctx, &trajectory, cfg.mode)?;
    Ok(EtaRun { eta, trajectory, report })
}

/// Solves the geometry once and runs every stepsize, in parallel up to
/// `cfg.jobs`. Nothing is written.
pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment> {
    cfg.validate()?;
    let dataset = cfg.source.load(cfg.rescale)?;
    let geometry = solve_hard_margin(&dataset, DEFAULT_TOL)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let runs = pool.install(|| {
        cfg.etas.par_iter().map(|&eta| run_one(&dataset, &geometry, cfg, eta)).collect::<Result<Vec<_>>>()
    })?;
    Ok(Experiment { dataset, geometry, runs })
}

/// Writes trajectories, reports and the two overlay plots into `dir`.
pub fn write_artifacts(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    exp.runs.par_iter().try_for_each(|r| -> Result<()> {
        r.trajectory.save_csv(&trajectory_path(dir, r.eta))?;
        let path = report_path(dir, r.eta);
        let mut json = serde_json::to_string_pretty(&r.report)?;
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| Error::io(path, e))
    })?;
    let series = |f: &dyn Fn(&IterateRecord) -> Option<f64>| -> Vec<Series> {
        exp.runs
            .iter()
            .map(|r| Series {
                label: format!("eta = {}", eta_tag(r.eta)),
                points: r.trajectory.records.iter().filter_map(|rec| f(rec).map(|v| (rec.t as f64, v))).collect(),
            })
            .collect()
    };
    let loss =
        line_plot("training loss", "step t", "L(w_t)", &series(&|r| Some(r.loss)), Axes { log_x: true, log_y: true });
    let sharp = line_plot(
        "sharpness",
        "step t",
        "top Hessian eigenvalue",
        &series(&|r| r.hess_top),
        Axes { log_x: true, log_y: false },
    );
    for (name, body) in [("loss_vs_t.svg", loss), ("sharpness_vs_t.svg", sharp)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Parses `key=value` lines; `#` starts a comment. Errors name the line.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::InvalidParameter(format!("config line {}: expected key=value, got `{line}`", i + 1)));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::InvalidParameter(format!("config line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            source: DataSource::TwoPoint(0.2),
            rescale: false,
            loss: LossKind::Logistic,
            etas: vec![1.0],
            steps: 100_000,
            init: InitSpec::Zero,
            mode: VerifyMode::ExpectStable,
            options: RunOptions::default(),
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::TwoPoint(g) => write!(f, "two-point({g})"),
            DataSource::Csv { path, .. } => write!(f, "{}", path.display()),
            DataSource::Gen { n, d, margin, seed } => write!(f, "gen({n},{d},{margin}; seed {seed})"),
        }
    }
}
