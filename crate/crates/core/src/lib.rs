//! Step-up multiple tests for identifying active effects in unreplicated
//! two-level orthogonal designs.
//!
//! Effect estimates are squared and ordered; the smallest `nu` of them act as
//! a variance estimate for testing the larger ones. Cutoffs are computed by
//! Monte Carlo from the null distribution of ordered chi-squared variables.

pub mod cli;
pub mod error;
pub mod ingest;
pub mod methods;
pub mod model;
pub mod montecarlo;
pub mod procedures;
pub mod simulation;

pub use error::{Error, Result};
pub use methods::{CutoffMethod, MethodRegistry};
pub use model::{
    order_squares, CutoffTable, Decision, EffectEstimates, Estimate, McSettings, MethodId,
    OrderedSquares, Scaling, Step, TestConfig,
};
pub use procedures::{single_test, step_down_comparator, step_up, w_statistic, StepDownStatistic};
