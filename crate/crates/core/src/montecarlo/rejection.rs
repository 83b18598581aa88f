use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::rng::{seek_replicate, stream_rng, Domain};
use crate::error::{Error, Result};
use crate::model::{CutoffTable, Estimate, McSettings};
use crate::procedures::{first_rejection, w_from_sorted};

/// A rejection rule whose frequency can be simulated.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    /// `W_{n,m} > d`.
    Single { n: usize, m: usize, d: f64 },
    /// A step-up procedure; the event is asserting some true null false.
    StepUp(&'a CutoffTable),
}

/// Simulates estimates `N(beta_i, 1)` and returns the frequency of the
/// region's event with its binomial standard error.
///
/// For [`Region::StepUp`] the event is `m0 <= N`, where `N` counts the zero
/// entries of `beta`; `N >= nu` is required.
pub fn empirical_rejection_prob(
    region: &Region<'_>,
    beta: &[f64],
    mc: &McSettings,
) -> Result<Estimate> {
    let k = beta.len();
    if beta.iter().any(|b| b.is_nan()) {
        return Err(Error::InvalidInput("beta contains NaN".into()));
    }
    let zeros = beta.iter().filter(|&&b| b == 0.0).count();
    match region {
        Region::Single { n, m, d } => {
            if !(1 <= *n && n < m && *m <= k) {
                return Err(Error::InvalidInput(format!(
                    "single test needs 1 <= n < m <= k (got n = {n}, m = {m}, k = {k})"
                )));
            }
            if d.is_nan() || *d <= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "cutoff must exceed 1 (got {d})"
                )));
            }
        }
        Region::StepUp(table) => {
            if table.k() != k {
                return Err(Error::DimensionMismatch(format!(
                    "cutoff table has k = {}, beta has {k} entries",
                    table.k()
                )));
            }
            if !table.method().is_step_up() {
                return Err(Error::InvalidInput(format!(
                    "{} is not a step-up method",
                    table.method()
                )));
            }
            if zeros < table.nu() {
                return Err(Error::InvalidInput(format!(
                    "beta has {zeros} zero effects, fewer than nu = {}",
                    table.nu()
                )));
            }
        }
    }

    let reps = mc.reps();
    let chunk = mc.chunk();
    let n_chunks = reps.div_ceil(chunk);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = stream_rng(mc.seed(), Domain::Rejection, k as u64);
            let mut x = vec![0.0; k];
            let mut prefix = vec![0.0; k];
            let mut hits = 0u64;
            for r in ci * chunk..((ci + 1) * chunk).min(reps) {
                seek_replicate(&mut rng, r);
                for (xi, b) in x.iter_mut().zip(beta) {
                    let z: f64 = rng.sample(StandardNormal);
                    *xi = (b + z) * (b + z);
                }
                x.sort_unstable_by(f64::total_cmp);
                let mut acc = 0.0;
                for (p, v) in prefix.iter_mut().zip(&x) {
                    acc += v;
                    *p = acc;
                }
                let event = match region {
                    Region::Single { n, m, d } => w_from_sorted(*n, *m, &x, &prefix) > *d,
                    Region::StepUp(table) => {
                        first_rejection(&x, &prefix, table).is_some_and(|m0| m0 <= zeros)
                    }
                };
                hits += u64::from(event);
            }
            hits
        })
        .sum();
    Ok(Estimate::proportion(hits, reps))
}
