//! Data-driven predictive control with the maximum-likelihood signal matrix
//! model (SMM).
//!
//! From one noisy input-output experiment the crate builds a Hankel signal
//! matrix, estimates trajectory predictors by (linearized) maximum likelihood
//! and closes a receding-horizon loop around them. Regularized DeePC, an ideal
//! model-based MPC and an impulse-response MPC are included as baselines, and
//! [`experiments`] reproduces the benchmark studies as seeded Monte Carlo runs.
//!
//! The modules build on each other bottom-up:
//!
//! * [`plant`]: transfer functions, state-space realization, noisy simulation.
//! * [`signal_matrix`]: Hankel matrices, compression, online updates.
//! * [`smm`]: the estimator, its linearization and covariance model.
//! * [`qp`]: the dense QP solver shared by all controllers.
//! * [`controllers`]: SMM-PC and the baselines behind [`controllers::Controller`].
//! * [`harness`]: closed-loop simulation, Monte Carlo studies and result files.
//! * [`experiments`]: presets for the six benchmark studies.
//! * [`config`], [`plot`], [`cli`]: experiment files, SVG figures, command line.

// NaN must fail the range checks, which `!(x > 0.0)` does and `x <= 0.0` does not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod controllers;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod linalg;
pub mod plant;
pub mod plot;
pub mod qp;
pub mod rng;
pub mod signal_matrix;
pub mod smm;

pub use error::{Error, Result};
