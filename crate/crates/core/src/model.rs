//! Domain types shared by every other module.
//!
//! Effect positions `m` and prefix lengths `n` are 1-based throughout the
//! public API, matching the usual order-statistic notation: `X_1 <= ... <= X_k`
//! and `S_n = X_1 + ... + X_n`. Original effect indices (as in
//! [`OrderedSquares::rank_of`]) are 0-based positions into the input.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dimensions and level of a family of tests `H_{0,m}`, `m = nu+1..=k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    k: usize,
    nu: usize,
    alpha: f64,
}

impl TestConfig {
    pub fn new(k: usize, nu: usize, alpha: f64) -> Result<Self> {
        if nu < 1 || nu + 1 > k {
            return Err(Error::InvalidConfig(format!(
                "nu must satisfy 1 <= nu <= k - 1 (got k = {k}, nu = {nu})"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie strictly between 0 and 1 (got {alpha})"
            )));
        }
        Ok(Self { k, nu, alpha })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The tested indices `nu+1..=k`.
    pub fn tested(&self) -> std::ops::RangeInclusive<usize> {
        self.nu + 1..=self.k
    }
}

/// Labeled effect estimates with optional known scale constants.
///
/// Each estimate is taken to be distributed as `N(beta_i, scale_i^2 sigma^2)`;
/// a missing scale column means every scale is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimates {
    labels: Vec<String>,
    values: Vec<f64>,
    scales: Option<Vec<f64>>,
}

impl EffectEstimates {
    pub fn new(labels: Vec<String>, values: Vec<f64>, scales: Option<Vec<f64>>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels but {} estimates",
                labels.len(),
                values.len()
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "at least two effects are required (got {})",
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate effect label `{label}`"
                )));
            }
        }
        if let Some((label, v)) = labels.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "estimate for `{label}` is not finite ({v})"
            )));
        }
        if let Some(scales) = &scales {
            if scales.len() != values.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} scales for {} estimates",
                    scales.len(),
                    values.len()
                )));
            }
            if let Some((label, a)) = labels
                .iter()
                .zip(scales)
                .find(|(_, a)| !(a.is_finite() && **a > 0.0))
            {
                return Err(Error::InvalidInput(format!(
                    "scale for `{label}` must be positive and finite (got {a})"
                )));
            }
        }
        Ok(Self {
            labels,
            values,
            scales,
        })
    }

    /// Unlabeled estimates named `E1`, `E2`, ...
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let labels = (1..=values.len()).map(|i| format!("E{i}")).collect();
        Self::new(labels, values, None)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scales(&self) -> Option<&[f64]> {
        self.scales.as_deref()
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scales.as_ref().map_or(1.0, |s| s[i])
    }

    /// Estimates divided by their scale constants.
    pub fn standardized(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v / self.scale(i))
    }

    /// Same labels and scales, every estimate multiplied by `c`.
    pub fn scaled_by(&self, c: f64) -> Result<Self> {
        Self::new(
            self.labels.clone(),
            self.values.iter().map(|v| v * c).collect(),
            self.scales.clone(),
        )
    }
}

/// Squared standardized estimates sorted ascending, with prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSquares {
    x: Vec<f64>,
    rank_of: Vec<usize>,
    prefix: Vec<f64>,
}

impl OrderedSquares {
    /// Sorts arbitrary nonnegative squares. Ties keep input order.
    pub fn from_squares(squares: Vec<f64>) -> Result<Self> {
        if let Some(v) = squares.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "squared estimates must be finite and nonnegative (got {v})"
            )));
        }
        let mut rank_of: Vec<usize> = (0..squares.len()).collect();
        rank_of.sort_by(|&a, &b| squares[a].total_cmp(&squares[b]).then(a.cmp(&b)));
        let x: Vec<f64> = rank_of.iter().map(|&i| squares[i]).collect();
        let prefix = prefix_sums(&x);
        Ok(Self { x, rank_of, prefix })
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    /// `X_1..X_k`, nondecreasing.
    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// `X_m` for 1-based `m`.
    pub fn x(&self, m: usize) -> f64 {
        self.x[m - 1]
    }

    /// `S_1..S_k`.
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// `S_n` for `0 <= n <= k` (`S_0 = 0`).
    pub fn partial_sum(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.prefix[n - 1]
        }
    }

    /// `rank_of()[m - 1]` is the 0-based input index of the effect ranked `m`.
    pub fn rank_of(&self) -> &[usize] {
        &self.rank_of
    }
}

/// Running sums, smallest terms first.
pub(crate) fn prefix_sums(sorted: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    sorted
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Squares the standardized estimates and orders them.
pub fn order_squares(est: &EffectEstimates) -> OrderedSquares {
    let squares = est.standardized().map(|z| z * z).collect();
    // EffectEstimates guarantees finite values and positive scales.
    OrderedSquares::from_squares(squares).expect("validated estimates yield valid squares")
}

/// Choice of variance denominator for the statistic testing `H_{0,m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scaling {
    /// `W_{nu,m}`: always the `nu` smallest squares.
    Fixed,
    /// `W_{m-1,m}`: every square below position `m`.
    Sequential,
}

impl Scaling {
    /// Number of squares averaged in the denominator when testing `H_{0,m}`.
    pub fn denominator_len(self, nu: usize, m: usize) -> usize {
        match self {
            Scaling::Fixed => nu,
            Scaling::Sequential => m - 1,
        }
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::Fixed => "fixed",
            Scaling::Sequential => "sequential",
        })
    }
}

/// Identifies how a cutoff table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Suf,
    Sus,
    Sufi,
    Susi,
    SingleFixed,
    SingleSeq,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Suf,
        MethodId::Sus,
        MethodId::Sufi,
        MethodId::Susi,
        MethodId::SingleFixed,
        MethodId::SingleSeq,
    ];

    /// Tag written to `cutoffs.csv`.
    pub fn tag(self) -> &'static str {
        match self {
            MethodId::Suf => "SUF",
            MethodId::Sus => "SUS",
            MethodId::Sufi => "SUFI",
            MethodId::Susi => "SUSI",
            MethodId::SingleFixed => "SINGLE_FIXED",
            MethodId::SingleSeq => "SINGLE_SEQ",
        }
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            MethodId::Suf => "suf",
            MethodId::Sus => "sus",
            MethodId::Sufi => "sufi",
            MethodId::Susi => "susi",
            MethodId::SingleFixed => "single-fixed",
            MethodId::SingleSeq => "single-seq",
        }
    }

    pub fn scaling(self) -> Scaling {
        match self {
            MethodId::Suf | MethodId::Sufi | MethodId::SingleFixed => Scaling::Fixed,
            MethodId::Sus | MethodId::Susi | MethodId::SingleSeq => Scaling::Sequential,
        }
    }

    pub fn is_step_up(self) -> bool {
        !matches!(self, MethodId::SingleFixed | MethodId::SingleSeq)
    }

    /// Whether the step-up procedure built on these cutoffs has a proof of
    /// strong experimentwise control. The joint-union variants do not.
    pub fn proven_level(self) -> bool {
        !matches!(self, MethodId::Sufi | MethodId::Susi)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        MethodId::ALL
            .into_iter()
            .find(|m| m.tag() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

/// Critical values `d[m]` for `m = nu+1..=k` together with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffTable {
    method: MethodId,
    config: TestConfig,
    d: Vec<f64>,
    reps: usize,
    seed: u64,
}

impl CutoffTable {
    /// `d` holds the cutoffs for `m = nu+1, nu+2, ..., k` in order.
    pub fn new(
        method: MethodId,
        config: TestConfig,
        d: Vec<f64>,
        reps: usize,
        seed: u64,
    ) -> Result<Self> {
        let expected = config.k() - config.nu();
        if d.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "cutoff table for k = {}, nu = {} needs {expected} entries, got {}",
                config.k(),
                config.nu(),
                d.len()
            )));
        }
        for (m, v) in config.tested().zip(&d) {
            if !(v.is_finite() && *v > 1.0) {
                return Err(Error::Numerical(format!(
                    "cutoff d[{m}] = {v} is not a finite value above 1"
                )));
            }
        }
        Ok(Self {
            method,
            config,
            d,
            reps,
            seed,
        })
    }

    pub fn method(&self) -> MethodId {
        self.method
    }

    pub fn config(&self) -> &TestConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k()
    }

    pub fn nu(&self) -> usize {
        self.config.nu()
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha()
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Cutoff for 1-based `m` in `nu+1..=k`.
    pub fn cutoff(&self, m: usize) -> f64 {
        self.d[m - self.config.nu() - 1]
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.d
    }

    /// `(m, d[m])` pairs in increasing `m`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.config.tested().zip(self.d.iter().copied())
    }
}

/// One evaluated hypothesis during a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub m: usize,
    pub statistic: f64,
    pub cutoff: f64,
    pub rejected: bool,
}

/// Outcome of a multiple-testing scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Smallest rank declared active, if any. Effects ranked `m0..=k` are active.
    pub m0: Option<usize>,
    pub active_labels: Vec<String>,
    pub inactive_labels: Vec<String>,
    /// Every evaluated step in scan order.
    pub steps: Vec<Step>,
}

impl Decision {
    pub fn active_count(&self) -> usize {
        self.active_labels.len()
    }

    /// Splits labels at rank `m0` into (active, inactive), actives by ascending rank.
    pub(crate) fn from_scan(
        os: &OrderedSquares,
        est: &EffectEstimates,
        m0: Option<usize>,
        steps: Vec<Step>,
    ) -> Self {
        let first_active = m0.unwrap_or(os.k() + 1);
        let label = |pos: usize| est.labels()[os.rank_of()[pos]].clone();
        let inactive_labels = (0..first_active - 1).map(label).collect();
        let active_labels = (first_active - 1..os.k()).map(label).collect();
        Self {
            m0,
            active_labels,
            inactive_labels,
            steps,
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub trials: usize,
}

impl Estimate {
    /// Binomial frequency `hits / trials` with `se = sqrt(p(1-p)/trials)`.
    pub fn proportion(hits: u64, trials: usize) -> Self {
        let n = trials as f64;
        let p = hits as f64 / n;
        Self {
            value: p,
            se: (p * (1.0 - p) / n).sqrt(),
            trials,
        }
    }
}

/// Monte Carlo effort and reproducibility settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    reps: usize,
    seed: u64,
    chunk: usize,
}

impl McSettings {
    pub const MIN_REPS: usize = 1000;
    pub const DEFAULT_REPS: usize = 500_000;
    pub const DEFAULT_CHUNK: usize = 4096;

    pub fn new(reps: usize, seed: u64, chunk: usize) -> Result<Self> {
        if reps < Self::MIN_REPS {
            return Err(Error::InvalidConfig(format!(
                "at least {} replicates are required (got {reps})",
                Self::MIN_REPS
            )));
        }
        if chunk == 0 {
            return Err(Error::InvalidConfig("chunk size must be positive".into()));
        }
        Ok(Self { reps, seed, chunk })
    }

    pub fn with_seed(reps: usize, seed: u64) -> Result<Self> {
        Self::new(reps, seed, Self::DEFAULT_CHUNK)
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chunk(&self) -> usize {
        self.chunk
    }
}
