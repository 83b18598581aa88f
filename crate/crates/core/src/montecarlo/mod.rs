//! Deterministic Monte Carlo engine for null distributions and cutoff
//! equations.

mod rejection;
pub(crate) mod rng;
mod sample;
mod solve;

pub use rejection::{empirical_rejection_prob, Region};
pub use sample::{sample_null, NullSample};
pub use solve::{
    quantile_d, scan_step, solve_joint_cutoffs, solve_single_cutoffs, solve_suf_cutoffs,
    solve_summed_cutoffs, solve_sus_cutoffs, step_cutoff, upper_quantile, Accumulation, StepScan,
};
