//! Simulation study: synthetic effect configurations run through the
//! step-up procedures and scored on error rate, selection accuracy and power.

mod plot;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CutoffTable, Estimate, MethodId};
use crate::montecarlo::rng::{mix, seek_replicate, stream_rng, Domain};
use crate::procedures::first_rejection;

pub use plot::render_plot;

const TRIAL_CHUNK: usize = 2048;

/// The six parameter configurations. Active effects sit at the end of `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    /// One effect equal to `s`.
    C1,
    /// Three effects equal to `s`.
    C2,
    /// Five effects equal to `s`.
    C3,
    /// Seven effects equal to `s`.
    C4,
    /// Three effects `s, 2s, 3s`.
    C5,
    /// Five effects `s, 2s, ..., 5s`.
    C6,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::C1,
        CaseId::C2,
        CaseId::C3,
        CaseId::C4,
        CaseId::C5,
        CaseId::C6,
    ];

    /// Signal sizes, in units of `s`, of the trailing active effects.
    fn multipliers(self) -> Vec<f64> {
        match self {
            CaseId::C1 => vec![1.0],
            CaseId::C2 => vec![1.0; 3],
            CaseId::C3 => vec![1.0; 5],
            CaseId::C4 => vec![1.0; 7],
            CaseId::C5 => (1..=3).map(f64::from).collect(),
            CaseId::C6 => (1..=5).map(f64::from).collect(),
        }
    }

    fn index(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.index())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown case `{s}` (expected C1..C6)")))
    }
}

/// A concrete configuration: case recipe, number of effects and signal scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SimCase {
    pub id: CaseId,
    pub k: usize,
    pub s: f64,
    pub beta: Vec<f64>,
    /// Number of zero entries in `beta`.
    pub zeros: usize,
}

impl SimCase {
    pub fn new(id: CaseId, k: usize, s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "signal scale must be finite and >= 0 (got {s})"
            )));
        }
        let mult = id.multipliers();
        if mult.len() >= k {
            return Err(Error::InvalidInput(format!(
                "case {id} needs more than {} effects (k = {k})",
                mult.len()
            )));
        }
        let mut beta = vec![0.0; k];
        for (b, c) in beta[k - mult.len()..].iter_mut().zip(&mult) {
            *b = c * s;
        }
        let zeros = beta.iter().filter(|&&b| b == 0.0).count();
        Ok(Self {
            id,
            k,
            s,
            beta,
            zeros,
        })
    }

    pub fn active_count(&self) -> usize {
        self.k - self.zeros
    }

    /// The model assumes at least `nu` zero effects.
    pub fn check_nu(&self, nu: usize) -> Result<()> {
        if self.zeros < nu {
            return Err(Error::InvalidInput(format!(
                "case {} at s = {} has {} zero effects, fewer than nu = {nu}",
                self.id, self.s, self.zeros
            )));
        }
        Ok(())
    }
}

/// Scores for one (case, s, method) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationMetrics {
    /// Some true null asserted false (`m0 <= N`).
    pub eer: Estimate,
    /// Declared inactive count equals `N`.
    pub pcsn: Estimate,
    /// Declared active set equals the true active set.
    pub pccs: Estimate,
    /// Mean fraction of true actives declared active; `None` without actives.
    pub power: Option<Estimate>,
    pub trials: usize,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    eer: u64,
    pcsn: u64,
    pccs: u64,
    found: u64,
    found_sq: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            eer: self.eer + o.eer,
            pcsn: self.pcsn + o.pcsn,
            pccs: self.pccs + o.pccs,
            found: self.found + o.found,
            found_sq: self.found_sq + o.found_sq,
        }
    }
}

/// Simulates `trials` data sets `N(beta_i, 1)` for `case` and scores the
/// step-up procedure defined by `table`.
///
/// Trial `t` depends only on `(seed, t)`, so every method run with the same
/// seed sees the same data.
pub fn run_cell(
    case: &SimCase,
    table: &CutoffTable,
    trials: usize,
    seed: u64,
) -> Result<SimulationMetrics> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    if !table.method().is_step_up() {
        return Err(Error::InvalidInput(format!(
            "{} is not a step-up method",
            table.method()
        )));
    }
    if table.k() != case.k {
        return Err(Error::DimensionMismatch(format!(
            "cutoffs for k = {} but case {} has k = {}",
            table.k(),
            case.id,
            case.k
        )));
    }
    case.check_nu(table.nu())?;

    let k = case.k;
    let actives = case.active_count() as u64;
    let n_chunks = trials.div_ceil(TRIAL_CHUNK);
    let tally = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = stream_rng(seed, Domain::Simulation, k as u64);
            let mut squares = vec![0.0; k];
            let mut order: Vec<usize> = (0..k).collect();
            let mut x = vec![0.0; k];
            let mut prefix = vec![0.0; k];
            let mut tally = Tally::default();
            for t in ci * TRIAL_CHUNK..((ci + 1) * TRIAL_CHUNK).min(trials) {
                seek_replicate(&mut rng, t);
                for (sq, b) in squares.iter_mut().zip(&case.beta) {
                    let z: f64 = rng.sample(StandardNormal);
                    *sq = (b + z) * (b + z);
                }
                order.sort_unstable_by(|&a, &b| squares[a].total_cmp(&squares[b]).then(a.cmp(&b)));
                let mut acc = 0.0;
                for ((xi, p), &i) in x.iter_mut().zip(prefix.iter_mut()).zip(&order) {
                    *xi = squares[i];
                    acc += *xi;
                    *p = acc;
                }
                let m0 = first_rejection(&x, &prefix, table);
                let first_active = m0.unwrap_or(k + 1);
                let declared = (k + 1 - first_active) as u64;
                let found = order[first_active - 1..]
                    .iter()
                    .filter(|&&i| case.beta[i] != 0.0)
                    .count() as u64;
                tally.eer += u64::from(first_active <= case.zeros);
                tally.pcsn += u64::from(first_active - 1 == case.zeros);
                tally.pccs += u64::from(declared == actives && found == actives);
                tally.found += found;
                tally.found_sq += found * found;
            }
            tally
        })
        .reduce(Tally::default, Tally::merge);

    let n = trials as f64;
    let power = (actives > 0).then(|| {
        let a = actives as f64;
        let mean = tally.found as f64 / (n * a);
        let second = tally.found_sq as f64 / (n * a * a);
        let var = (second - mean * mean).max(0.0);
        Estimate {
            value: mean,
            se: (var / n).sqrt(),
            trials,
        }
    });
    Ok(SimulationMetrics {
        eer: Estimate::proportion(tally.eer, trials),
        pcsn: Estimate::proportion(tally.pcsn, trials),
        pccs: Estimate::proportion(tally.pccs, trials),
        power,
        trials,
    })
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub case: CaseId,
    pub s: f64,
    pub method: MethodId,
    pub seed: u64,
    pub metrics: SimulationMetrics,
}

/// Per-case seed shared by every s-value and method of that case.
pub fn cell_seed(seed: u64, case: CaseId) -> u64 {
    mix(seed ^ mix(case.index()))
}

/// Runs the cross product `cases x s_values x tables`.
pub fn run_grid(
    k: usize,
    cases: &[CaseId],
    s_values: &[f64],
    tables: &[CutoffTable],
    trials: usize,
    seed: u64,
) -> Result<Vec<GridCell>> {
    if cases.is_empty() || s_values.is_empty() || tables.is_empty() {
        return Err(Error::InvalidInput("simulation grid is empty".into()));
    }
    let mut cells = Vec::with_capacity(cases.len() * s_values.len() * tables.len());
    for &case in cases {
        let cseed = cell_seed(seed, case);
        for &s in s_values {
            let sc = SimCase::new(case, k, s)?;
            for table in tables {
                let metrics = run_cell(&sc, table, trials, cseed)?;
                cells.push(GridCell {
                    case,
                    s,
                    method: table.method(),
                    seed: cseed,
                    metrics,
                });
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Eer,
    Pcsn,
    Pccs,
    Power,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Eer, Metric::Pcsn, Metric::Pccs, Metric::Power];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Eer => "eer",
            Metric::Pcsn => "pcsn",
            Metric::Pccs => "pccs",
            Metric::Power => "power",
        }
    }

    pub fn of(self, m: &SimulationMetrics) -> Option<Estimate> {
        match self {
            Metric::Eer => Some(m.eer),
            Metric::Pcsn => Some(m.pcsn),
            Metric::Pccs => Some(m.pccs),
            Metric::Power => m.power,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric `{s}`")))
    }
}

/// A row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub case: String,
    pub s: f64,
    pub method: String,
    pub metric: Metric,
    pub value: Option<f64>,
    pub reps: usize,
    pub seed: u64,
}

/// Flattens grid cells into one row per metric.
pub fn result_rows(cells: &[GridCell]) -> Vec<ResultRow> {
    cells
        .iter()
        .flat_map(|c| {
            Metric::ALL.into_iter().map(move |metric| ResultRow {
                case: c.case.to_string(),
                s: c.s,
                method: c.method.tag().to_string(),
                metric,
                value: metric.of(&c.metrics).map(|e| e.value),
                reps: c.metrics.trials,
                seed: c.seed,
            })
        })
        .collect()
}
