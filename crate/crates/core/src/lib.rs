//! Constant-stepsize gradient descent with logistic and exponential losses on
//! linearly separable data.
//!
//! The crate solves the max-margin geometry of a dataset, runs GD at any
//! stepsize while recording per-step diagnostics, and checks each trajectory
//! against the known convergence bounds for the logistic loss and the
//! divergence pattern of the exponential loss.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod plot;
pub mod potential;

pub use data::{check_assumptions, gen_separable, load_csv, make_two_point, normalize, AssumptionReport, Dataset};
pub use dynamics::{
    gd_run, hessian_top_eig, loss_and_grad, IterateRecord, LossKind, RecordSchedule, RunOptions, Termination,
    Trajectory,
};
pub use error::{Error, Result};
pub use geometry::{
    margin_offset, nonseparability_witness, second_margin, solve_hard_margin, solve_hard_margin_lenient, MarginGeometry,
};
pub use potential::{bound_constants, Potential, PotentialContext};
pub mod verify;

pub use experiment::{run_experiment, write_artifacts, DataSource, Experiment, InitSpec, RunConfig};
pub use verify::{build_report, CheckResult, VerificationReport, VerifyMode};
