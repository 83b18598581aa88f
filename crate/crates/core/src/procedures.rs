//! Test statistics and the scans that turn cutoffs into decisions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{CutoffTable, Decision, EffectEstimates, OrderedSquares, Step};

/// `W_{n,m} = n X_m / S_n`, for `1 <= n < m <= k`.
///
/// A vanishing denominator gives `+inf` when `X_m > 0` and `0` when the data
/// are all zero up to `m`.
pub fn w_statistic(n: usize, m: usize, os: &OrderedSquares) -> f64 {
    assert!(
        1 <= n && n < m && m <= os.k(),
        "w_statistic needs 1 <= n < m <= k"
    );
    w_from_sorted(n, m, os.values(), os.prefix())
}

/// [`w_statistic`] over raw sorted squares and their prefix sums `S_1..S_k`.
pub(crate) fn w_from_sorted(n: usize, m: usize, x: &[f64], prefix: &[f64]) -> f64 {
    let s_n = prefix[n - 1];
    let x_m = x[m - 1];
    if s_n > 0.0 {
        n as f64 * x_m / s_n
    } else if x_m > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `true` iff `W_{n,m} > d`.
pub fn single_test(os: &OrderedSquares, n: usize, m: usize, d: f64) -> bool {
    w_statistic(n, m, os) > d
}

/// First index at which the table's procedure rejects, scanning upward.
pub(crate) fn first_rejection(x: &[f64], prefix: &[f64], table: &CutoffTable) -> Option<usize> {
    let scaling = table.method().scaling();
    let nu = table.nu();
    table
        .entries()
        .find(|&(m, d)| w_from_sorted(scaling.denominator_len(nu, m), m, x, prefix) > d)
        .map(|(m, _)| m)
}

/// Runs the step-up procedure for a step-up cutoff table.
///
/// Steps `m = nu+1, nu+2, ...` compare `W_{nu,m}` (fixed scaling) or
/// `W_{m-1,m}` (sequential scaling) with `d[m]` and stop at the first
/// rejection `m0`; the effects ranked `m0..=k` are declared active.
pub fn step_up(
    os: &OrderedSquares,
    table: &CutoffTable,
    est: &EffectEstimates,
) -> Result<Decision> {
    if !table.method().is_step_up() {
        return Err(Error::InvalidInput(format!(
            "{} cutoffs define single tests, not a step-up procedure",
            table.method()
        )));
    }
    check_dims(os, est, table.k())?;
    let scaling = table.method().scaling();
    let mut steps = Vec::new();
    let mut m0 = None;
    for (m, d) in table.entries() {
        let statistic = w_statistic(scaling.denominator_len(table.nu(), m), m, os);
        let rejected = statistic > d;
        steps.push(Step {
            m,
            statistic,
            cutoff: d,
            rejected,
        });
        if rejected {
            m0 = Some(m);
            break;
        }
    }
    Ok(Decision::from_scan(os, est, m0, steps))
}

fn check_dims(os: &OrderedSquares, est: &EffectEstimates, k: usize) -> Result<()> {
    if os.k() != k || est.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "cutoffs are for k = {k} effects, data have {} (ordered {})",
            est.len(),
            os.k()
        )));
    }
    Ok(())
}

/// Denominator `min(c1 S_{n1}, c2 S_{n2})` of the step-down comparator
/// `T_m = X_m / min(c1 S_{n1}, c2 S_{n2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDownStatistic {
    pub c1: f64,
    pub n1: usize,
    pub c2: f64,
    pub n2: usize,
}

impl StepDownStatistic {
    pub fn new(c1: f64, n1: usize, c2: f64, n2: usize) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::InvalidInput(
                "step-down weights must be positive".into(),
            ));
        }
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidInput(
                "step-down prefix lengths must be positive".into(),
            ));
        }
        Ok(Self { c1, n1, c2, n2 })
    }

    pub fn value(&self, os: &OrderedSquares, m: usize) -> f64 {
        let denom = (self.c1 * os.partial_sum(self.n1)).min(self.c2 * os.partial_sum(self.n2));
        let x = os.x(m);
        if denom > 0.0 {
            x / denom
        } else if x > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Step-down comparator: scans `m = k, k-1, ...` declaring the effect ranked
/// `m` active while `T_m > critvals[m]`, and stops at the first acceptance.
///
/// `critvals` must cover a contiguous range ending at `k`; the scan never goes
/// below its smallest key.
pub fn step_down_comparator(
    os: &OrderedSquares,
    stat: &StepDownStatistic,
    critvals: &BTreeMap<usize, f64>,
    est: &EffectEstimates,
) -> Result<Decision> {
    let k = os.k();
    check_dims(os, est, k)?;
    if stat.n1 > k || stat.n2 > k {
        return Err(Error::InvalidInput(format!(
            "prefix lengths {} and {} exceed k = {k}",
            stat.n1, stat.n2
        )));
    }
    let lowest = match critvals.keys().next() {
        Some(&m) if m >= 1 => m,
        _ => {
            return Err(Error::InvalidInput(
                "step-down needs critical values for m >= 1".into(),
            ))
        }
    };
    if critvals.keys().any(|&m| m > k) {
        return Err(Error::InvalidInput(format!(
            "critical values given beyond k = {k}"
        )));
    }
    let mut steps = Vec::new();
    let mut m0 = None;
    for m in (lowest..=k).rev() {
        let cutoff = *critvals.get(&m).ok_or_else(|| {
            Error::InvalidInput(format!("missing step-down critical value for m = {m}"))
        })?;
        let statistic = stat.value(os, m);
        let rejected = statistic > cutoff;
        steps.push(Step {
            m,
            statistic,
            cutoff,
            rejected,
        });
        if !rejected {
            break;
        }
        m0 = Some(m);
    }
    Ok(Decision::from_scan(os, est, m0, steps))
}
