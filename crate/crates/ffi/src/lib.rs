//! C ABI over the eoslab library.
//!
//! Every object crosses the boundary as an opaque handle written through an
//! out-pointer by a constructor (`eoslab_dataset_*`, `eoslab_geometry_solve`,
//! `eoslab_gd_run`, `eoslab_verify`) and released by the matching `_free`.
//! Functions return an [`EoslabStatus`]; on failure the message is available
//! from [`eoslab_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use eoslab::geometry::DEFAULT_TOL;
use eoslab::{
    build_report, gd_run, gen_separable, load_csv, make_two_point, solve_hard_margin, solve_hard_margin_lenient,
    Dataset, Error, LossKind, MarginGeometry, PotentialContext, RunOptions, Termination, Trajectory,
    VerificationReport, VerifyMode,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EoslabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    NotSeparable = 5,
    DegenerateOffset = 6,
    NoConvergence = 7,
    Infeasible = 8,
    Numerical = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EoslabLoss {
    Logistic = 0,
    Exponential = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EoslabMode {
    ExpectEos = 0,
    ExpectStable = 1,
    ExpDivergence = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EoslabTermination {
    Completed = 0,
    Overflow = 1,
    NonFinite = 2,
}

/// Scalar diagnostics of one recorded step. `hess_top` is NaN when the
/// Hessian diagnostic was not computed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EoslabRecord {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub proj_mm: f64,
    pub ns_norm: f64,
    pub ns_sign: f64,
    pub g_val: f64,
    pub h_val: f64,
    pub eff_step: f64,
    pub hess_top: f64,
}

pub struct EoslabDataset(Dataset);

pub struct EoslabGeometry(MarginGeometry);

pub struct EoslabTrajectory(Trajectory);

pub struct EoslabReport {
    report: VerificationReport,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EoslabStatus {
    match e {
        Error::Io { .. } => EoslabStatus::Io,
        Error::Csv(_) | Error::Json(_) | Error::MissingLabelColumn(_) | Error::NonNumeric { .. } => EoslabStatus::Parse,
        Error::DegenerateLabels(_)
        | Error::InvalidDataset(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::NotApplicable(_) => EoslabStatus::InvalidArgument,
        Error::NotSeparable => EoslabStatus::NotSeparable,
        Error::DegenerateOffset(_) => EoslabStatus::DegenerateOffset,
        Error::NoConvergence { .. } | Error::Stalled(_) | Error::SolverMismatch(_) => EoslabStatus::NoConvergence,
        Error::Infeasible(_) => EoslabStatus::Infeasible,
        Error::Overflow(_) | Error::NoWitness => EoslabStatus::Numerical,
    }
}

struct Fail(EoslabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EoslabStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EoslabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EoslabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            EoslabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(EoslabStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eoslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eoslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The two-point dataset with margin `gamma`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_two_point(gamma: f64, out: *mut *mut EoslabDataset) -> EoslabStatus {
    guard(|| put(out, EoslabDataset(make_two_point(gamma)?)))
}

/// A seeded synthetic dataset with `n` points in `d` dimensions and hard margin `margin`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_generate(
    n: usize,
    d: usize,
    margin: f64,
    seed: u64,
    out: *mut *mut EoslabDataset,
) -> EoslabStatus {
    guard(|| put(out, EoslabDataset(gen_separable(n, d, margin, seed)?)))
}

/// A dataset from `n` row-major rows of length `d` and labels in {-1, +1}.
///
/// # Safety
/// `rows` must point to `n * d` doubles, `labels` to `n` bytes, `name` to a
/// NUL-terminated string or be null, and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_from_rows(
    name: *const c_char,
    rows: *const f64,
    labels: *const i8,
    n: usize,
    d: usize,
    out: *mut *mut EoslabDataset,
) -> EoslabStatus {
    guard(|| {
        let name = if name.is_null() { "data" } else { str_arg(name, "name")? };
        let len = n.checked_mul(d).ok_or_else(|| Fail(EoslabStatus::InvalidArgument, "n * d overflows".into()))?;
        let flat = slice_arg(rows, len, "rows")?;
        let labels = slice_arg(labels, n, "labels")?;
        let rows: Vec<Vec<f64>> =
            if d == 0 { vec![Vec::new(); n] } else { flat.chunks(d).map(<[f64]>::to_vec).collect() };
        put(out, EoslabDataset(Dataset::new(name, rows, labels.to_vec())?))
    })
}

/// A dataset read from a CSV file with a header and a label column.
///
/// # Safety
/// `path` and `label_column` must be NUL-terminated strings and `out` must
/// point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    out: *mut *mut EoslabDataset,
) -> EoslabStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let label = str_arg(label_column, "label_column")?;
        put(out, EoslabDataset(load_csv(Path::new(path), label)?))
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_n(ds: *const EoslabDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_d(ds: *const EoslabDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.d())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoslab_dataset_free(ds: *mut EoslabDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Solves the hard-margin SVM and the complement geometry.
///
/// With `lenient` nonzero a degenerate margin offset is not an error: the
/// geometry is returned with a NaN offset.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_solve(
    ds: *const EoslabDataset,
    lenient: bool,
    out: *mut *mut EoslabGeometry,
) -> EoslabStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let geo =
            if lenient { solve_hard_margin_lenient(ds, DEFAULT_TOL)?.0 } else { solve_hard_margin(ds, DEFAULT_TOL)? };
        put(out, EoslabGeometry(geo))
    })
}

/// Max margin, or NaN for a null handle.
///
/// # Safety
/// `geo` must be null or a live geometry handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_gamma(geo: *const EoslabGeometry) -> f64 {
    geo.as_ref().map_or(f64::NAN, |g| g.0.gamma)
}

/// Margin offset `b`: infinite for a trivial complement, NaN when degenerate.
///
/// # Safety
/// `geo` must be null or a live geometry handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_offset_b(geo: *const EoslabGeometry) -> f64 {
    geo.as_ref().map_or(f64::NAN, |g| g.0.offset_b)
}

/// Number of support vectors, or 0 for a null handle.
///
/// # Safety
/// `geo` must be null or a live geometry handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_support_len(geo: *const EoslabGeometry) -> usize {
    geo.as_ref().map_or(0, |g| g.0.support.len())
}

/// Copies the minimum-norm separator into `buf`, which must hold `d` doubles.
///
/// # Safety
/// `geo` must be a live geometry handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_w_hat(geo: *const EoslabGeometry, buf: *mut f64, len: usize) -> EoslabStatus {
    guard(|| {
        let w = &deref(geo, "geometry")?.0.w_hat;
        copy_out(w, buf, len)
    })
}

/// Copies the 0-based support indices into `buf`.
///
/// # Safety
/// `geo` must be a live geometry handle and `buf` must point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_support(
    geo: *const EoslabGeometry,
    buf: *mut usize,
    len: usize,
) -> EoslabStatus {
    guard(|| {
        let s = &deref(geo, "geometry")?.0.support;
        copy_out(s, buf, len)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Fail> {
    if len != src.len() {
        return Err(Fail(EoslabStatus::OutOfRange, format!("buffer holds {len} elements, need {}", src.len())));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    }
    Ok(())
}

/// # Safety
/// `geo` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoslab_geometry_free(geo: *mut EoslabGeometry) {
    if !geo.is_null() {
        drop(Box::from_raw(geo));
    }
}

/// Runs `steps` steps of constant-stepsize GD from `w0` (zero when null).
///
/// An overflowing run still succeeds; its termination is reported by
/// [`eoslab_trajectory_termination`].
///
/// # Safety
/// `ds` and `geo` must be live handles for the same data, `w0` must be null
/// or point to `d` doubles, and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_gd_run(
    ds: *const EoslabDataset,
    geo: *const EoslabGeometry,
    loss: EoslabLoss,
    eta: f64,
    steps: u64,
    w0: *const f64,
    out: *mut *mut EoslabTrajectory,
) -> EoslabStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let geo = &deref(geo, "geometry")?.0;
        let w0 = if w0.is_null() { vec![0.0; ds.d()] } else { slice_arg(w0, ds.d(), "w0")?.to_vec() };
        let kind = match loss {
            EoslabLoss::Logistic => LossKind::Logistic,
            EoslabLoss::Exponential => LossKind::Exponential,
        };
        let traj = gd_run(ds, kind, eta, steps, &w0, geo, &RunOptions::default())?;
        put(out, EoslabTrajectory(traj))
    })
}

/// Number of recorded steps, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_trajectory_len(traj: *const EoslabTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.records.len())
}

/// Scalar diagnostics of the `index`-th record.
///
/// # Safety
/// `traj` must be a live trajectory handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_trajectory_record(
    traj: *const EoslabTrajectory,
    index: usize,
    out: *mut EoslabRecord,
) -> EoslabStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.0;
        let r = t
            .records
            .get(index)
            .ok_or_else(|| Fail(EoslabStatus::OutOfRange, format!("record {index} of {}", t.records.len())))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = EoslabRecord {
            t: r.t,
            loss: r.loss,
            grad_norm: r.grad_norm,
            proj_mm: r.proj_mm,
            ns_norm: r.ns_norm,
            ns_sign: r.ns_sign,
            g_val: r.g_val,
            h_val: r.h_val,
            eff_step: r.eff_step,
            hess_top: r.hess_top.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// How the run ended, and the step at which it stopped early (0 if it completed).
///
/// # Safety
/// `traj` must be a live trajectory handle; `kind` and `step` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_trajectory_termination(
    traj: *const EoslabTrajectory,
    kind: *mut EoslabTermination,
    step: *mut u64,
) -> EoslabStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.0;
        if kind.is_null() || step.is_null() {
            return Err(null("output pointer"));
        }
        (*kind, *step) = match t.terminated {
            Termination::Completed => (EoslabTermination::Completed, 0),
            Termination::Overflow(s) => (EoslabTermination::Overflow, s),
            Termination::NonFinite(s) => (EoslabTermination::NonFinite, s),
        };
        Ok(())
    })
}

/// Writes the per-step scalar diagnostics as CSV.
///
/// # Safety
/// `traj` must be a live trajectory handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn eoslab_trajectory_save_csv(
    traj: *const EoslabTrajectory,
    path: *const c_char,
) -> EoslabStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.0;
        t.save_csv(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoslab_trajectory_free(traj: *mut EoslabTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Runs every check that applies to `traj` under `mode`.
///
/// # Safety
/// `ds`, `geo` and `traj` must be live handles from the same data and `out`
/// must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn eoslab_verify(
    ds: *const EoslabDataset,
    geo: *const EoslabGeometry,
    traj: *const EoslabTrajectory,
    mode: EoslabMode,
    out: *mut *mut EoslabReport,
) -> EoslabStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let geo = &deref(geo, "geometry")?.0;
        let traj = &deref(traj, "trajectory")?.0;
        let mode = match mode {
            EoslabMode::ExpectEos => VerifyMode::ExpectEos,
            EoslabMode::ExpectStable => VerifyMode::ExpectStable,
            EoslabMode::ExpDivergence => VerifyMode::ExpDivergence,
        };
        let ctx = PotentialContext::new(geo, ds, traj.eta)?;
        let report = build_report(ds, geo, &ctx, traj, mode)?;
        let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
        let json = CString::new(json).map_err(|e| Fail(EoslabStatus::Numerical, e.to_string()))?;
        put(out, EoslabReport { report, json })
    })
}

/// Whether every check passed; false for a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_report_passed(report: *const EoslabReport) -> bool {
    report.as_ref().is_some_and(|r| r.report.overall)
}

/// Number of checks run.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_report_len(report: *const EoslabReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.checks.len())
}

/// The report as pretty JSON, owned by the handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn eoslab_report_json(report: *const EoslabReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eoslab_report_free(report: *mut EoslabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
