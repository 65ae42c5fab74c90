//! First-order solvers for l1-penalized maximum-likelihood estimation of a
//! sparse inverse covariance matrix:
//!
//! ```text
//! max  log det X - <Sigma, X> - rho * sum_ij |X_ij|
//! s.t. alpha I <= X <= beta I
//! ```
//!
//! The problem is treated as a saddle point over the spectral box and the
//! unit box `|U_ij| <= 1`. Three solvers are provided:
//!
//! - [`smacs`]: accelerated descent on the smooth dual with a certified
//!   primal-dual gap,
//! - [`vsmacs`]: the same with an adaptive box top that shrinks the
//!   Lipschitz constant,
//! - [`nsa`]: the primal smoothing baseline.
//!
//! [`instgen`] builds seeded random test instances and [`cli`] wraps
//! everything in the `covsel` command.
//!
//! ```
//! use covsel::instgen::{generate, GenParams};
//! use covsel::vsmacs::{solve_vsmacs, AdaptiveConfig};
//! use covsel::SpectralBox;
//!
//! let inst = generate(&GenParams::new(20, 1))?;
//! let report = solve_vsmacs(&inst, &SpectralBox::new(0.1, 10.0)?, &AdaptiveConfig::new(0.1))?;
//! assert!(report.converged() && report.final_gap <= 0.1);
//! # Ok::<(), covsel::CovselError>(())
//! ```

pub mod cli;
mod engine;
pub mod error;
pub mod instgen;
pub mod io;
pub mod nsa;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod selfcheck;
pub mod smacs;
pub mod symmat;
pub mod vsmacs;

pub use error::{CovselError, Result};
pub use problem::{compute_bounds, Instance, SpectralBox};
pub use report::{SolveReport, Status, TraceRecord};
pub use symmat::SymMatrix;
