//! Proper learning of decision trees under the uniform distribution.
//!
//! The crate is organised bottom-up:
//!
//! - [`boolfn`], [`tree`] and [`restriction`] hold exact representations of
//!   Boolean functions, decision-tree hypotheses and partial assignments.
//! - [`oracle`] simulates membership-query and random-example access to a
//!   target, with optional fixed label corruption and query accounting.
//! - [`influence`] computes exact and sampled influence scores, biases and
//!   the depth-ℓ lookahead criterion.
//! - [`learners`] builds hypotheses: influence-greedy, top-k search with
//!   memoisation over restrictions, level-dependent schedules, an exhaustive
//!   restriction DP, and optimal size-budget pruning.
//! - [`harness`] generates targets, measures error and runs seeded sweeps
//!   that emit CSV.
//!
//! Inputs are packed into a `u128` with variable 0 as the least-significant
//! bit, so oracles support up to [`MAX_VARS`] variables. Exact truth tables
//! are capped at [`boolfn::MAX_TABLE_VARS`].

pub mod boolfn;
pub mod error;
pub mod harness;
pub mod influence;
pub mod learners;
pub mod oracle;
pub mod restriction;
pub mod rng;
pub mod tree;

pub use boolfn::TruthTable;
pub use error::{Error, Result};
pub use oracle::{AccessMode, Oracle, Target};
pub use restriction::Restriction;
pub use tree::DecisionTree;

/// An assignment to up to [`MAX_VARS`] variables; bit `i` is variable `i`.
pub type Input = u128;

/// Largest ambient variable count an [`Oracle`] can serve.
pub const MAX_VARS: usize = 128;

/// Mask with the low `n` bits set.
#[inline]
pub fn input_mask(n: usize) -> Input {
    if n >= 128 {
        Input::MAX
    } else {
        (1u128 << n) - 1
    }
}
