//! Analysis toolkit for comparing trial designs.
//!
//! * [`sensitivity`]: best and worst achievable success rates under
//!   heterogeneous effects, with a brute-force enumeration oracle, an
//!   attrition adjustment and a conditional no-confounding checker.
//! * [`transport`]: randomized assignment versus assigning the opposites.
//! * [`tdesign`]: temporal-discontinuity cohorts, the design parameter `K`
//!   and distances between treated-subsample distributions.
//! * [`rdd`]: noise-induced discontinuity simulation.
//!
//! Stochastic operations take an explicit [`SeededStream`] and batch their
//! work so results do not depend on whether the `parallel` feature is on.

// `!(a < b)` is used on purpose throughout so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod exec;
pub mod rdd;
pub mod sensitivity;
mod stats;
pub mod stream;
pub mod tdesign;
pub mod transport;

pub use domain::{
    make_proportion, response_table_from_counts, CohortIndex, ExactResponseTable, Proportion, RatePair,
    ResponseTable, RATE_TOLERANCE,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use stats::spearman;
pub use stream::SeededStream;
