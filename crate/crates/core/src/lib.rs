//! Deterministic ADAM (without bias correction), a piecewise cubic Hermite
//! counterexample on which it diverges for every `(beta1, beta2)` in `[0, 1)^2`,
//! and the numerical diagnostics that certify the construction.
//!
//! The crate is organised as:
//!
//! - [`optimizer`]: the ADAM state machine and its epsilon-denominator variants.
//! - [`functions`]: C1 scalar test functions, the Hermite forge and the counterexample.
//! - [`diagnostics`]: divergence verdicts, Lipschitz and lower-bound estimation,
//!   Taylor residuals and finite-difference audits.
//! - [`harness`]: trajectories, parameter sweeps and file export.
//! - [`verify`]: the aggregated certification suite behind `adam-divergence verify`.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod functions;
pub mod harness;
pub mod numeric;
pub mod optimizer;
pub mod verify;

pub use error::{Error, Result};
pub use functions::{
    build_counterexample, hermite_build, Counterexample, CounterexampleSpec,
    DifferentiableFunction, PiecewiseHermite,
};
pub use harness::{run, Trajectory, TrajectoryRecord};
pub use optimizer::{adam_init, AdamParams, AdamState, Variant};
