//! Named cutoff methods.
//!
//! Each way of producing a [`CutoffTable`] implements [`CutoffMethod`] and is
//! registered under its command-line name, so the CLI and the simulation
//! harness select solvers at runtime without matching on a closed enum.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{CutoffTable, McSettings, MethodId, Scaling, TestConfig};
use crate::montecarlo;

pub trait CutoffMethod: Send + Sync {
    fn id(&self) -> MethodId;

    fn description(&self) -> &'static str;

    fn solve(&self, cfg: &TestConfig, mc: &McSettings) -> Result<CutoffTable>;

    fn name(&self) -> &'static str {
        self.id().cli_name()
    }

    fn scaling(&self) -> Scaling {
        self.id().scaling()
    }
}

impl fmt::Debug for dyn CutoffMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CutoffMethod")
            .field("id", &self.id())
            .finish()
    }
}

/// Per-hypothesis quantiles `d_{nu,m}` or `d_{m-1,m}`.
struct SingleTest(Scaling);

impl CutoffMethod for SingleTest {
    fn id(&self) -> MethodId {
        match self.0 {
            Scaling::Fixed => MethodId::SingleFixed,
            Scaling::Sequential => MethodId::SingleSeq,
        }
    }

    fn description(&self) -> &'static str {
        match self.0 {
            Scaling::Fixed => "single level-alpha tests, fixed scaling",
            Scaling::Sequential => "single level-alpha tests, sequential scaling",
        }
    }

    fn solve(&self, cfg: &TestConfig, mc: &McSettings) -> Result<CutoffTable> {
        montecarlo::solve_single_cutoffs(cfg, self.0, mc)
    }
}

/// Step-up cutoffs from summed record-event probabilities.
struct SummedStepUp(Scaling);

impl CutoffMethod for SummedStepUp {
    fn id(&self) -> MethodId {
        match self.0 {
            Scaling::Fixed => MethodId::Suf,
            Scaling::Sequential => MethodId::Sus,
        }
    }

    fn description(&self) -> &'static str {
        match self.0 {
            Scaling::Fixed => "step-up, fixed scaling (strong level-alpha control)",
            Scaling::Sequential => "step-up, sequential scaling (strong level-alpha control)",
        }
    }

    fn solve(&self, cfg: &TestConfig, mc: &McSettings) -> Result<CutoffTable> {
        montecarlo::solve_summed_cutoffs(cfg, self.0, mc)
    }
}

/// Step-up cutoffs from joint union probabilities.
struct JointStepUp(Scaling);

impl CutoffMethod for JointStepUp {
    fn id(&self) -> MethodId {
        match self.0 {
            Scaling::Fixed => MethodId::Sufi,
            Scaling::Sequential => MethodId::Susi,
        }
    }

    fn description(&self) -> &'static str {
        match self.0 {
            Scaling::Fixed => "step-up, fixed scaling, joint cutoffs (strong control not proven)",
            Scaling::Sequential => {
                "step-up, sequential scaling, joint cutoffs (strong control not proven)"
            }
        }
    }

    fn solve(&self, cfg: &TestConfig, mc: &McSettings) -> Result<CutoffTable> {
        montecarlo::solve_joint_cutoffs(cfg, self.0, mc)
    }
}

#[derive(Default)]
pub struct MethodRegistry {
    methods: BTreeMap<String, Box<dyn CutoffMethod>>,
}

impl MethodRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// All six built-in methods.
    pub fn builtin() -> Self {
        let mut reg = Self::new();
        let all: [Box<dyn CutoffMethod>; 6] = [
            Box::new(SummedStepUp(Scaling::Fixed)),
            Box::new(SummedStepUp(Scaling::Sequential)),
            Box::new(JointStepUp(Scaling::Fixed)),
            Box::new(JointStepUp(Scaling::Sequential)),
            Box::new(SingleTest(Scaling::Fixed)),
            Box::new(SingleTest(Scaling::Sequential)),
        ];
        for m in all {
            reg.register(m).expect("built-in names are distinct");
        }
        reg
    }

    pub fn register(&mut self, method: Box<dyn CutoffMethod>) -> Result<()> {
        let key = normalize(method.name());
        if self.methods.contains_key(&key) {
            return Err(Error::InvalidConfig(format!(
                "method `{key}` is already registered"
            )));
        }
        self.methods.insert(key, method);
        Ok(())
    }

    /// Looks up by command-line name or table tag, case-insensitively.
    pub fn get(&self, name: &str) -> Result<&dyn CutoffMethod> {
        self.methods
            .get(&normalize(name))
            .map(|b| b.as_ref())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method `{name}` (available: {})",
                    self.names().collect::<Vec<_>>().join(", ")
                ))
            })
    }

    pub fn by_id(&self, id: MethodId) -> Result<&dyn CutoffMethod> {
        self.get(id.cli_name())
    }

    /// Resolves a comma-separated list such as `suf,sus`.
    pub fn parse_list(&self, list: &str) -> Result<Vec<&dyn CutoffMethod>> {
        let picked = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| self.get(s))
            .collect::<Result<Vec<_>>>()?;
        if picked.is_empty() {
            return Err(Error::InvalidInput("no methods given".into()));
        }
        Ok(picked)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.methods.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn CutoffMethod> {
        self.methods.values().map(|b| b.as_ref())
    }
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace('_', "-")
}
