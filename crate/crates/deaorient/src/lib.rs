//! Oriented data envelopment analysis: evaluates decision-making units against
//! a production possibility set, computing weakly efficient targets, efficient
//! projections and Farrell oriented efficiency scores under linear oriented
//! (LO) and quadratic-CRS oriented (QO) models.
//!
//! The building blocks:
//!
//! * [`core`]: domain types (activities, technologies, orientations),
//!   dataset validation and zeros-in-data preprocessing.
//! * [`lp`]: a dense two-phase primal simplex solver; every model in the
//!   crate reduces its work to this module.
//! * [`lo`]: the linear oriented (directional) model.
//! * [`qo`]: the quadratic-CRS oriented model, solved by monotone bisection
//!   on the improvement factor with LP feasibility subproblems, with a
//!   closed-form fast path for uniform orientations under CRS.
//! * [`projection`]: max-slack second stage and efficiency classification.
//! * [`scores`]: Farrell oriented efficiency and cost-gradient orientations.
//! * [`oracle`]: exact-rational Fourier-Motzkin feasibility and brute-force
//!   cross checks used by the self-check machinery and the test suite.
//! * [`cli`]: the batch front end behind the `deaorient` binary.

pub mod cli;
pub mod core;
pub mod lo;
pub mod lp;
pub mod oracle;
pub mod projection;
pub mod qo;
pub mod scores;

mod common;
mod error;

pub use common::SolveOptions;
pub use error::DeaError;
