//! Quickest detection of correlation changes in high-dimensional Gaussian
//! vector streams, with isolation of the hub variables driving the change.
//!
//! The stream is cut into `n×p` batches. Each batch yields a local statistic
//! `V_k` per variable (its largest absolute sample correlation) and a global
//! statistic `U = max_k V_k`. For large `p` these follow one-parameter
//! exponential families whose parameters equal 1 while the variables are
//! uncorrelated; a correlation change moves the parameters. Parallel GLR
//! CUSUM tests on the parameters raise the alarm, and the variables with the
//! largest local GLR statistics at the alarm are reported as hubs.
//!
//! Modules, bottom-up:
//! - [`specialfn`]: incomplete beta, `P_0`, `T`.
//! - [`stats`]: batching and summary statistics.
//! - [`expfam`]: limit densities, likelihood ratios, MLEs, KL divergences.
//! - [`detect`]: the streaming GLR engines and top-`q` isolation.
//! - [`sim`]: covariance construction, stream simulation, Monte-Carlo metrics
//!   and the null-law validation suite.

pub mod detect;
pub mod error;
pub mod expfam;
pub mod gof;
pub mod quad;
pub mod sim;
pub mod specialfn;
pub mod stats;

pub use error::{Error, Result};
