use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, CommandFactory, Parser, Subcommand};

use eoslab::data::{check_assumptions, AssumptionReport};
use eoslab::dynamics::{LossKind, RecordSchedule, RunOptions, Termination, Trajectory};
use eoslab::experiment::{parse_config, parse_gen_spec, parse_list, report_path, trajectory_path, write_artifacts};
use eoslab::geometry::{solve_hard_margin, solve_hard_margin_lenient, GeometryJson, DEFAULT_TOL};
use eoslab::{
    build_report, gen_separable, run_experiment, DataSource, Error, InitSpec, PotentialContext, RunConfig, VerifyMode,
};

#[derive(Parser, Debug)]
#[command(
    name = "eoslab",
    version,
    about = "Gradient descent on separable data: geometry, trajectories and bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run GD for each stepsize, verify, and write CSV/JSON/SVG artifacts.
    Run(RunArgs),
    /// Print the max-margin geometry and the assumption report.
    Geometry(GeometryArgs),
    /// Re-check a stored trajectory CSV.
    Verify(VerifyArgs),
    /// Write a synthetic separable dataset as CSV.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// Two-point dataset with margin GAMMA.
    #[arg(long, value_name = "GAMMA", group = "source")]
    two_point: Option<f64>,
    /// CSV file with a header row.
    #[arg(long, value_name = "PATH", group = "source")]
    csv: Option<PathBuf>,
    /// Synthetic data `n,d,margin`, seeded by --seed.
    #[arg(long, value_name = "N,D,MARGIN", group = "source")]
    gen: Option<String>,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Label column of the CSV.
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Rescale rows so the largest norm is 1.
    #[arg(long)]
    normalize: bool,
    #[arg(long, env = "EOSLAB_SEED", default_value_t = 0)]
    seed: u64,
}

impl DataArgs {
    fn source(&self) -> anyhow::Result<DataSource> {
        let s = &self.source;
        Ok(if let Some(g) = s.two_point {
            DataSource::TwoPoint(g)
        } else if let Some(p) = &s.csv {
            DataSource::Csv { path: p.clone(), label_column: self.label_col.clone() }
        } else if let Some(spec) = &s.gen {
            parse_gen_spec(spec, self.seed)?
        } else {
            bail!("no dataset given")
        })
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "logistic")]
    loss: LossKind,
    /// Comma-separated stepsizes.
    #[arg(long, value_name = "LIST", required = true)]
    eta: String,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    /// Initial iterate, comma-separated.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true, conflicts_with = "w0_offset")]
    w0: Option<String>,
    /// Start at S f_1: zero on the max-margin direction, S along the first
    /// complement basis vector.
    #[arg(long, value_name = "S", allow_hyphen_values = true)]
    w0_offset: Option<f64>,
    /// expect-eos, expect-stable or exp-divergence. Defaults to
    /// expect-stable for logistic and exp-divergence for exponential loss.
    #[arg(long)]
    mode: Option<VerifyMode>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Concurrent stepsize runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Power-iteration steps for the sharpness column; 0 skips it.
    #[arg(long, default_value_t = 50)]
    hess_iters: usize,
    /// Record every step up to this one.
    #[arg(long, default_value_t = 1000)]
    dense_until: u64,
    /// Geometric growth of the recorded steps after the dense phase.
    #[arg(long, default_value_t = 1.05)]
    growth: f64,
    /// key=value file with defaults for these flags; flags given on the
    /// command line win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also write the JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Trajectory CSV written by `run`.
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value = "logistic")]
    loss: LossKind,
    #[arg(long)]
    mode: Option<VerifyMode>,
    /// Planned step count; a shorter trajectory counts as ended early.
    #[arg(long)]
    steps: Option<u64>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    margin: f64,
    #[arg(long, env = "EOSLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Failure that maps to exit status 1.
struct Failed(String);

fn default_mode(loss: LossKind) -> VerifyMode {
    match loss {
        LossKind::Logistic => VerifyMode::ExpectStable,
        LossKind::Exponential => VerifyMode::ExpDivergence,
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<Result<(), Failed>> {
    let init = match (&a.w0, a.w0_offset) {
        (Some(v), _) => InitSpec::Vector(parse_list(v)?),
        (None, Some(s)) => InitSpec::Offset(s),
        (None, None) => InitSpec::Zero,
    };
    let cfg = RunConfig {
        source: a.data.source()?,
        rescale: a.data.normalize,
        loss: a.loss,
        etas: parse_list(&a.eta)?,
        steps: a.steps,
        init,
        mode: a.mode.unwrap_or(default_mode(a.loss)),
        options: RunOptions {
            schedule: RecordSchedule { dense_until: a.dense_until, growth: a.growth },
            hess_iters: (a.hess_iters > 0).then_some(a.hess_iters),
        },
        out_dir: a.out.clone(),
        jobs: a.jobs,
    };
    let exp = run_experiment(&cfg)?;
    write_artifacts(&exp, &cfg.out_dir)?;

    let mut first = None;
    for r in &exp.runs {
        let rep = &r.report;
        match rep.first_failure() {
            None => println!("eta={} pass ({} checks, {})", r.eta, rep.checks.len(), r.trajectory.terminated),
            Some(c) => {
                println!("eta={} FAIL", r.eta);
                eprintln!("eta={}: first failing check `{}`: {}", r.eta, c.name, c.detail);
                first.get_or_insert_with(|| format!("eta={}: `{}`", r.eta, c.name));
            }
        }
        println!("  {} {}", trajectory_path(&cfg.out_dir, r.eta).display(), report_path(&cfg.out_dir, r.eta).display());
    }
    Ok(match first {
        None => Ok(()),
        Some(f) => Err(Failed(format!("verification failed; first failing check {f}"))),
    })
}

#[derive(serde::Serialize)]
struct GeometryOutput {
    dataset: String,
    n: usize,
    d: usize,
    geometry: Option<GeometryJson>,
    assumptions: AssumptionReport,
}

fn cmd_geometry(a: GeometryArgs) -> anyhow::Result<Result<(), Failed>> {
    let ds = a.data.source()?.load(a.data.normalize)?;
    let (geo, warning) = match solve_hard_margin_lenient(&ds, a.tol) {
        Ok(v) => v,
        Err(Error::NotSeparable) => {
            let out = GeometryOutput {
                dataset: ds.name().into(),
                n: ds.n(),
                d: ds.d(),
                geometry: None,
                assumptions: AssumptionReport::not_separable(&ds),
            };
            emit_json(&out, a.out.as_deref())?;
            return Ok(Err(Failed("not separable".into())));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(w) = warning {
        eprintln!("warning: {w}; offset_b is null");
    }
    let out = GeometryOutput {
        dataset: ds.name().into(),
        n: ds.n(),
        d: ds.d(),
        geometry: Some(geo.to_json()),
        assumptions: check_assumptions(&ds, &geo),
    };
    emit_json(&out, a.out.as_deref())?;
    Ok(Ok(()))
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<Result<(), Failed>> {
    let ds = a.data.source()?.load(a.data.normalize)?;
    let geo = solve_hard_margin(&ds, DEFAULT_TOL)?;
    let probe = Trajectory::load_csv(&a.traj, a.eta, a.loss, Termination::Completed)?;
    let terminated = match a.steps {
        Some(s) if probe.final_t() < s => Termination::Overflow(probe.final_t() + 1),
        _ => Termination::Completed,
    };
    let traj = Trajectory { terminated, ..probe };
    let ctx = PotentialContext::new(&geo, &ds, a.eta)?;
    let report = build_report(&ds, &geo, &ctx, &traj, a.mode.unwrap_or(default_mode(a.loss)))?;
    emit_json(&report, a.out.as_deref())?;
    Ok(match report.first_failure() {
        None => Ok(()),
        Some(c) => Err(Failed(format!("first failing check `{}`: {}", c.name, c.detail))),
    })
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<Result<(), Failed>> {
    let ds = gen_separable(a.n, a.d, a.margin, a.seed)?;
    ds.write_csv(&a.out)?;
    println!("wrote {} ({} x {}, seed {})", a.out.display(), ds.n(), ds.d(), a.seed);
    Ok(Ok(()))
}

fn emit_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> anyhow::Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    print!("{json}");
    if let Some(p) = path {
        std::fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

/// Splices `--config` entries into the argument list ahead of the user's own
/// flags. Keys already given on the command line, or in the same exclusive
/// group as one that was, are dropped.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, s) in strs.iter().enumerate() {
        if s == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    if strs.get(1).map(String::as_str) != Some("run") {
        return Err("--config is only accepted by `run`".into());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| format!("config {path}: {e}"))?;
    let entries = parse_config(&text).map_err(|e| format!("config {path}: {e}"))?;

    let cmd = Cli::command();
    let run = cmd.find_subcommand("run").expect("run subcommand");
    let given = |flag: &str| strs.iter().any(|s| s == flag || s.starts_with(&format!("{flag}=")));
    let groups: [&[&str]; 2] = [&["two-point", "csv", "gen"], &["w0", "w0-offset"]];

    let mut spliced = Vec::new();
    for (line, (key, value)) in entries.iter().enumerate() {
        let Some(arg) = run.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return Err(format!("config {path}: entry {}: unknown key `{key}`", line + 1));
        };
        if key == "config" {
            return Err(format!("config {path}: nested config is not supported"));
        }
        let group = groups.iter().find(|g| g.contains(&key.as_str()));
        let overridden = match group {
            Some(g) => g.iter().any(|k| given(&format!("--{k}"))),
            None => given(&format!("--{key}")),
        };
        if overridden {
            continue;
        }
        if arg.get_action().takes_values() {
            spliced.push(OsString::from(format!("--{key}={value}")));
        } else {
            match value.as_str() {
                "true" => spliced.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => return Err(format!("config {path}: `{key}` takes true or false, got `{other}`")),
            }
        }
    }
    let mut out = args;
    out.splice(2..2, spliced);
    Ok(out)
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Geometry(a) => cmd_geometry(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failed(msg))) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::InvalidParameter(_) | Error::Infeasible(_)));
            eprintln!("error: {e:#}");
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
