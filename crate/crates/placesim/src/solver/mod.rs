//! Exact solver for the reconfiguration assignment problem.
//!
//! The problem is a multi-resource generalized assignment: every app picks
//! exactly one candidate, each candidate has a satisfaction cost and a sparse
//! resource-usage vector, and every resource row caps the total usage of the
//! candidates choosing it. [`solve_exact`] runs branch and bound with an LP
//! relaxation bound (a from-scratch two-phase simplex), [`brute_force`] is
//! the exhaustive reference oracle.

mod bb;
mod brute;
mod instance;
mod model;
mod simplex;

pub use bb::{solve_exact, SolveBudget};
pub use brute::{brute_force, DEFAULT_ENUMERATION_CAP};
pub use instance::{parse_model, write_model, InstanceError};
pub use model::{
    random_model, AppEntry, AssignmentModel, CandidateEntry, ModelError, OptimalAssignment,
    RandomModelLimits, ResourceRow, SolveStats,
};
pub use simplex::{solve_lp, LpError, LpOutcome, LpProblem};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no feasible assignment exists")]
    Infeasible,
    #[error("budget exhausted before any feasible assignment was found")]
    BudgetExhausted,
    #[error("enumeration space {product} exceeds the cap {cap}")]
    EnumerationTooLarge { product: u128, cap: u64 },
}
