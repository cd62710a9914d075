//! Feasibility-safeguarded inexact proximal linearized (FSIPL) method.
//!
//! Minimizes `F(x) = f(x) + g(A(x))` over a compact embedded submanifold
//! `M = {x : h(x) = 0}` without retracting at every iteration. Iterates are
//! allowed to leave `M` but are kept inside the neighborhood
//! `{x : ‖h(x)‖ ≤ θ/κ}` by a safeguard that falls back to an exact projection
//! when the cheap correction step would leave it.
//!
//! Layout:
//! - [`manifold`]: Stiefel and oblique manifolds given by a defining function.
//! - [`composite`]: the objective pieces, including sparse PCA and sparse
//!   spectral clustering instances.
//! - [`dual`]: inexact solver for the dual of the linearized subproblem.
//! - [`solver`]: the outer loop, schedules, correction and line search.
//! - [`harness`]: synthetic data, experiment grids and CSV output.
//! - [`oracles`]: brute-force and finite-difference references used by the
//!   self-test and the test suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composite;
pub mod dual;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod manifold;
#[doc(hidden)]
pub mod oracles;
pub mod solver;

pub use composite::{CompositeProblem, InstanceKind, ProblemConstants, ProblemInstanceConfig};
pub use dual::{DualState, LinearizedSubproblem, PrimalRecovery};
pub use error::{Error, Result};
pub use linalg::Mat;
pub use manifold::{ManifoldKind, ManifoldSpec};
pub use solver::{solve, IterationRecord, SolveReport, SolverConfig, Termination};
