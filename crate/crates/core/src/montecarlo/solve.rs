//! Cutoff solvers.
//!
//! Every cutoff equation, at the configuration with `m` zero effects, has a
//! single unknown `d` entering only through the newest event. Writing the
//! step-`i` event as a record `Delta_i > max(S_nu, Delta_{nu+1}, ..., Delta_{i-1})`
//! with
//!
//! * fixed scaling:      `Delta_i = nu X_i / d_i`
//! * sequential scaling: `Delta_i = (i-1) X_i / d_i - S_{i-1} + S_nu`
//!
//! the newest event holds iff `d < tau`, where `tau` is a per-replicate
//! threshold. Solving for `d` is therefore an empirical upper quantile of the
//! thresholds at whatever level is left after the earlier terms are estimated.

use rayon::prelude::*;

use super::sample::{sample_null, NullSample};
use crate::error::{Error, Result};
use crate::model::{CutoffTable, McSettings, MethodId, Scaling, TestConfig};

/// How the earlier terms of a step equation are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulation {
    /// Sum of the record-event probabilities (the proven-level construction).
    Summed,
    /// Probability of the union of all events (joint cutoffs, and the last
    /// step of the summed construction).
    Union,
}

/// Per-replicate thresholds and earlier-event tallies for one solver step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScan {
    pub m: usize,
    /// `tau` per replicate; in union mode replicates already rejected by
    /// earlier events carry 0 so they never count as new rejections.
    pub thresholds: Vec<f64>,
    /// Record-event counts for `i = nu+1..m-1`.
    pub term_hits: Vec<u64>,
    /// Replicates already in the union of the earlier events.
    pub rejected: u64,
}

/// Evaluates step `m = sample.m()` given the cutoffs `earlier` for
/// `nu+1..m-1`.
pub fn scan_step(
    sample: &NullSample,
    nu: usize,
    scaling: Scaling,
    earlier: &[f64],
    mode: Accumulation,
    chunk: usize,
) -> StepScan {
    let m = sample.m();
    assert!(nu >= 1 && nu < m, "need 1 <= nu < m");
    assert_eq!(
        earlier.len(),
        m - nu - 1,
        "earlier cutoffs must cover nu+1..m-1"
    );

    let partials: Vec<(Vec<f64>, Vec<u64>, u64)> = sample
        .par_rows()
        .chunks(chunk.max(1))
        .map(|rows| {
            let mut taus = Vec::with_capacity(rows.len());
            let mut hits = vec![0u64; earlier.len()];
            let mut rejected = 0u64;
            for row in rows {
                let (tau, was_rejected) = replicate_threshold(row, nu, scaling, earlier, &mut hits);
                rejected += u64::from(was_rejected);
                taus.push(match (mode, was_rejected) {
                    (Accumulation::Union, true) => 0.0,
                    _ => tau,
                });
            }
            (taus, hits, rejected)
        })
        .collect();

    let mut thresholds = Vec::with_capacity(sample.reps());
    let mut term_hits = vec![0u64; earlier.len()];
    let mut rejected = 0;
    for (taus, hits, rej) in partials {
        thresholds.extend(taus);
        for (t, h) in term_hits.iter_mut().zip(hits) {
            *t += h;
        }
        rejected += rej;
    }
    StepScan {
        m,
        thresholds,
        term_hits,
        rejected,
    }
}

/// Returns `(tau, rejected_by_earlier)` for one sorted replicate row.
fn replicate_threshold(
    row: &[f64],
    nu: usize,
    scaling: Scaling,
    earlier: &[f64],
    hits: &mut [u64],
) -> (f64, bool) {
    let m = row.len();
    let s_nu: f64 = row[..nu].iter().sum();
    let mut s_prev = s_nu; // S_{i-1}
    let mut running = s_nu;
    for (t, (&x, &d)) in row[nu..m - 1].iter().zip(earlier).enumerate() {
        let i = nu + 1 + t;
        let delta = match scaling {
            Scaling::Fixed => nu as f64 * x / d,
            Scaling::Sequential => (i - 1) as f64 * x / d - s_prev + s_nu,
        };
        if delta > running {
            hits[t] += 1;
            running = delta;
        }
        s_prev += x;
    }
    let x_m = row[m - 1];
    let tau = match scaling {
        Scaling::Fixed => nu as f64 * x_m / running,
        Scaling::Sequential => (m - 1) as f64 * x_m / (running - s_nu + s_prev),
    };
    (tau, running > s_nu)
}

/// Smallest `d` among the values such that at most `floor(c * len)` of them
/// exceed it: the empirical `1 - c` quantile.
pub fn upper_quantile(mut values: Vec<f64>, c: f64) -> Result<f64> {
    let n = values.len();
    if n == 0 || !(c > 0.0 && c < 1.0) {
        return Err(Error::Numerical(format!(
            "upper quantile at level {c} of {n} values is undefined"
        )));
    }
    let exceed = ((c * n as f64) + 1e-9).floor() as usize;
    if exceed >= n {
        return Err(Error::Numerical(format!(
            "level {c} leaves no quantile among {n} values"
        )));
    }
    let idx = n - exceed - 1;
    let (_, v, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*v)
}

/// Empirical `100(1 - alpha)` percentile of `Z_{n,m} = n Y_{m,m} / S_n`.
pub fn quantile_d(n: usize, m: usize, cfg: &TestConfig, mc: &McSettings) -> Result<f64> {
    if !(n >= cfg.nu() && n < m && m <= cfg.k()) {
        return Err(Error::InvalidInput(format!(
            "quantile_d needs nu <= n < m <= k (got n = {n}, m = {m}, nu = {}, k = {})",
            cfg.nu(),
            cfg.k()
        )));
    }
    let sample = sample_null(m, mc)?;
    let z: Vec<f64> = sample
        .par_rows()
        .map(|row| {
            let s_n: f64 = row[..n].iter().sum();
            n as f64 * row[m - 1] / s_n
        })
        .collect();
    let d = upper_quantile(z, cfg.alpha())?;
    check_cutoff(d, m)
}

fn check_cutoff(d: f64, m: usize) -> Result<f64> {
    if d.is_finite() && d > 1.0 {
        Ok(d)
    } else {
        Err(Error::Numerical(format!(
            "cutoff at m = {m} came out as {d}"
        )))
    }
}

/// Single-test cutoffs `d_{nu,m}` (fixed) or `d_{m-1,m}` (sequential).
pub fn solve_single_cutoffs(
    cfg: &TestConfig,
    scaling: Scaling,
    mc: &McSettings,
) -> Result<CutoffTable> {
    let d = cfg
        .tested()
        .map(|m| quantile_d(scaling.denominator_len(cfg.nu(), m), m, cfg, mc))
        .collect::<Result<Vec<_>>>()?;
    let method = match scaling {
        Scaling::Fixed => MethodId::SingleFixed,
        Scaling::Sequential => MethodId::SingleSeq,
    };
    CutoffTable::new(method, *cfg, d, mc.reps(), mc.seed())
}

/// Step-up cutoffs built from summed record-event probabilities; the final
/// step solves the exact union equation.
pub fn solve_summed_cutoffs(
    cfg: &TestConfig,
    scaling: Scaling,
    mc: &McSettings,
) -> Result<CutoffTable> {
    let method = match scaling {
        Scaling::Fixed => MethodId::Suf,
        Scaling::Sequential => MethodId::Sus,
    };
    solve_step_up(cfg, scaling, mc, method, |m| {
        if m == cfg.k() {
            Accumulation::Union
        } else {
            Accumulation::Summed
        }
    })
}

/// Fixed-scaling step-up cutoffs (SUF).
pub fn solve_suf_cutoffs(cfg: &TestConfig, mc: &McSettings) -> Result<CutoffTable> {
    solve_summed_cutoffs(cfg, Scaling::Fixed, mc)
}

/// Sequential-scaling step-up cutoffs (SUS).
pub fn solve_sus_cutoffs(cfg: &TestConfig, mc: &McSettings) -> Result<CutoffTable> {
    solve_summed_cutoffs(cfg, Scaling::Sequential, mc)
}

/// Joint cutoffs: each step sets the union probability at the
/// least-favorable configuration to `alpha` (SUFI / SUSI).
pub fn solve_joint_cutoffs(
    cfg: &TestConfig,
    scaling: Scaling,
    mc: &McSettings,
) -> Result<CutoffTable> {
    let method = match scaling {
        Scaling::Fixed => MethodId::Sufi,
        Scaling::Sequential => MethodId::Susi,
    };
    solve_step_up(cfg, scaling, mc, method, |_| Accumulation::Union)
}

fn solve_step_up(
    cfg: &TestConfig,
    scaling: Scaling,
    mc: &McSettings,
    method: MethodId,
    mode_at: impl Fn(usize) -> Accumulation,
) -> Result<CutoffTable> {
    let nu = cfg.nu();
    let mut d = Vec::with_capacity(cfg.k() - nu);
    for m in cfg.tested() {
        let sample = sample_null(m, mc)?;
        let mode = mode_at(m);
        let scan = scan_step(&sample, nu, scaling, &d, mode, mc.chunk());
        d.push(step_cutoff(scan, nu, mode, cfg.alpha(), method)?);
    }
    CutoffTable::new(method, *cfg, d, mc.reps(), mc.seed())
}

/// Solves one step from its scan: the residual level after the earlier terms
/// becomes the exceedance level of the thresholds.
pub fn step_cutoff(
    scan: StepScan,
    nu: usize,
    mode: Accumulation,
    alpha: f64,
    method: MethodId,
) -> Result<f64> {
    let m = scan.m;
    let reps = scan.thresholds.len() as f64;
    let terms: Vec<(usize, f64)> = scan
        .term_hits
        .iter()
        .enumerate()
        .map(|(t, &h)| (nu + 1 + t, h as f64 / reps))
        .collect();
    let used = match mode {
        Accumulation::Summed => terms.iter().map(|(_, p)| p).sum::<f64>(),
        Accumulation::Union => scan.rejected as f64 / reps,
    };
    let residual = alpha - used;
    log::debug!("{method} m = {m}: earlier mass {used:.6}, residual {residual:.6}");
    if residual <= 0.0 {
        return Err(Error::BudgetExhausted {
            method: method.to_string(),
            m,
            alpha,
            terms,
            residual,
        });
    }
    let dm = upper_quantile(scan.thresholds, residual)?;
    check_cutoff(dm, m)
}
