//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::ingest;
use crate::methods::MethodRegistry;
use crate::model::{order_squares, CutoffTable, Decision, EffectEstimates, McSettings, TestConfig};
use crate::procedures::step_up;
use crate::simulation::{render_plot, result_rows, run_grid, CaseId, Metric};

#[derive(Debug, Parser)]
#[command(
    name = "stepup",
    version,
    about = "Step-up tests for active effects in unreplicated orthogonal designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve Monte Carlo cutoffs and write them to CSV.
    Cutoffs(CutoffsArgs),
    /// Run a step-up procedure on effect estimates.
    Analyze(AnalyzeArgs),
    /// Estimate effects from a two-level design.
    Effects(EffectsArgs),
    /// Run the simulation study grid.
    Simulate(SimulateArgs),
    /// Plot one metric from a results file as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct ParallelArgs {
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Replicates per parallel work unit.
    #[arg(long, default_value_t = McSettings::DEFAULT_CHUNK)]
    pub chunk: usize,
}

#[derive(Debug, Args)]
pub struct CutoffsArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub nu: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = "sus")]
    pub method: String,
    #[arg(long, default_value_t = McSettings::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub par: ParallelArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with `label,estimate[,scale]`.
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    pub estimates: Option<PathBuf>,
    /// Design CSV with +-1 columns and a `y` column.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Precomputed cutoffs; otherwise they are solved from the flags below.
    #[arg(long)]
    pub cutoffs: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = McSettings::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub par: ParallelArgs,
}

#[derive(Debug, Args)]
pub struct EffectsArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated cases, e.g. `C1,C5`.
    #[arg(long, default_value = "C1,C2,C3,C4,C5,C6")]
    pub case: String,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8")]
    pub s: Vec<f64>,
    #[arg(long, default_value = "suf,sus")]
    pub method: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[arg(long, default_value_t = 7)]
    pub nu: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Null replicates used to solve each method's cutoffs.
    #[arg(long, default_value_t = McSettings::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub par: ParallelArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value = "power")]
    pub metric: String,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Cutoffs(a) => with_workers(a.par.workers, out, |buf| cmd_cutoffs(&a, buf)),
        Command::Analyze(a) => with_workers(a.par.workers, out, |buf| cmd_analyze(&a, buf)),
        Command::Effects(a) => cmd_effects(&a, out),
        Command::Simulate(a) => with_workers(a.par.workers, out, |buf| cmd_simulate(&a, buf)),
        Command::Plot(a) => cmd_plot(&a, out),
    }
}

/// Runs `f` on a pool of `workers` threads, buffering its report.
fn with_workers(
    workers: Option<usize>,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()> + Send,
) -> Result<()> {
    let mut buf = Vec::new();
    let run = |buf: &mut Vec<u8>| f(buf);
    match workers {
        None => run(&mut buf)?,
        Some(0) => return Err(Error::InvalidInput("--workers must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?
            .install(|| run(&mut buf))?,
    }
    out.write_all(&buf)?;
    Ok(())
}

fn require_seed(seed: Option<u64>, cmd: &str) -> Result<u64> {
    seed.ok_or_else(|| {
        Error::InvalidInput(format!(
            "`{cmd}` is randomized and needs an explicit --seed"
        ))
    })
}

fn cmd_cutoffs(a: &CutoffsArgs, out: &mut dyn Write) -> Result<()> {
    let seed = require_seed(a.seed, "cutoffs")?;
    let cfg = TestConfig::new(a.k, a.nu, a.alpha)?;
    let mc = McSettings::new(a.reps, seed, a.par.chunk)?;
    let reg = MethodRegistry::builtin();
    let table = reg.get(&a.method)?.solve(&cfg, &mc)?;
    if let Some(path) = &a.out {
        ingest::write_cutoffs(&table, path)?;
    }
    print_cutoffs(&table, out)
}

fn print_cutoffs(t: &CutoffTable, out: &mut dyn Write) -> Result<()> {
    let head = match t.method().scaling() {
        crate::model::Scaling::Fixed => "d_{nu,m}",
        crate::model::Scaling::Sequential => "d_{m-1,m}",
    };
    writeln!(
        out,
        "{} cutoffs: k = {}, nu = {}, alpha = {}, reps = {}, seed = {}",
        t.method(),
        t.k(),
        t.nu(),
        t.alpha(),
        t.reps(),
        t.seed()
    )?;
    writeln!(out, "{:>4}  {:>10}", "m", head)?;
    for (m, d) in t.entries() {
        writeln!(out, "{m:>4}  {d:>10.1}")?;
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let est = match (&a.estimates, &a.design) {
        (Some(p), _) => ingest::parse_estimates(p)?,
        (None, Some(p)) => ingest::estimate_effects(&ingest::parse_design(p)?)?,
        (None, None) => return Err(Error::InvalidInput("need --estimates or --design".into())),
    };
    let reg = MethodRegistry::builtin();
    let table = match &a.cutoffs {
        Some(p) => {
            let t = ingest::read_cutoffs(p)?;
            if let Some(name) = &a.method {
                let want = reg.get(name)?.id();
                if want != t.method() {
                    return Err(Error::InvalidInput(format!(
                        "--method {want} does not match cutoffs file method {}",
                        t.method()
                    )));
                }
            }
            t
        }
        None => {
            let name = a.method.as_deref().unwrap_or("sus");
            let nu =
                a.nu.ok_or_else(|| Error::InvalidInput("solving cutoffs needs --nu".into()))?;
            let seed = require_seed(a.seed, "analyze")?;
            let cfg = TestConfig::new(est.len(), nu, a.alpha)?;
            let mc = McSettings::new(a.reps, seed, a.par.chunk)?;
            reg.get(name)?.solve(&cfg, &mc)?
        }
    };
    let os = order_squares(&est);
    let decision = step_up(&os, &table, &est)?;
    print_report(&est, &table, &decision, out)
}

/// Per-step report in the layout of the published example table.
pub fn print_report(
    est: &EffectEstimates,
    table: &CutoffTable,
    d: &Decision,
    out: &mut dyn Write,
) -> Result<()> {
    let os = order_squares(est);
    let stat = match table.method().scaling() {
        crate::model::Scaling::Fixed => "W_{nu,m}",
        crate::model::Scaling::Sequential => "W_{m-1,m}",
    };
    writeln!(
        out,
        "{} step-up test: k = {}, nu = {}, alpha = {}, S_nu = {:.2}",
        table.method(),
        table.k(),
        table.nu(),
        table.alpha(),
        os.partial_sum(table.nu())
    )?;
    writeln!(
        out,
        "{:>4}  {:<8}  {:>10}  {:>10}  {:>10}  {:>10}  decision",
        "m", "effect", "estimate", "X_m", stat, "cutoff"
    )?;
    for step in &d.steps {
        let i = os.rank_of()[step.m - 1];
        writeln!(
            out,
            "{:>4}  {:<8}  {:>10.3}  {:>10.2}  {:>10.1}  {:>10.1}  {}",
            step.m,
            est.labels()[i],
            est.values()[i],
            os.x(step.m),
            step.statistic,
            step.cutoff,
            if step.rejected { "reject" } else { "accept" }
        )?;
    }
    writeln!(
        out,
        "{} active effects: [{}]",
        d.active_count(),
        d.active_labels.join(", ")
    )?;
    Ok(())
}

fn cmd_effects(a: &EffectsArgs, out: &mut dyn Write) -> Result<()> {
    let est = ingest::estimate_effects(&ingest::parse_design(&a.design)?)?;
    match &a.out {
        Some(p) => ingest::write_estimates(&est, BufWriter::new(File::create(p)?)),
        None => ingest::write_estimates(&est, out),
    }
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let seed = require_seed(a.seed, "simulate")?;
    let cases = a
        .case
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse::<CaseId>)
        .collect::<Result<Vec<_>>>()?;
    let reg = MethodRegistry::builtin();
    let methods = reg.parse_list(&a.method)?;
    if let Some(m) = methods.iter().find(|m| !m.id().is_step_up()) {
        return Err(Error::InvalidInput(format!(
            "{} is not a step-up method",
            m.id()
        )));
    }
    let cfg = TestConfig::new(a.k, a.nu, a.alpha)?;
    let mc = McSettings::new(a.reps, seed, a.par.chunk)?;
    let tables = methods
        .iter()
        .map(|m| m.solve(&cfg, &mc))
        .collect::<Result<Vec<_>>>()?;
    let cells = run_grid(a.k, &cases, &a.s, &tables, a.trials, seed)?;
    let rows = result_rows(&cells);
    match &a.out {
        Some(p) => ingest::write_results(&rows, BufWriter::new(File::create(p)?)),
        None => ingest::write_results(&rows, out),
    }
}

fn cmd_plot(a: &PlotArgs, out: &mut dyn Write) -> Result<()> {
    let rows = ingest::read_results(&a.results)?;
    let metric: Metric = a.metric.parse()?;
    let svg = render_plot(&rows, metric, a.case.as_deref())?;
    write_text(a.out.as_deref(), &svg, out)
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock).and_then(|()| lock.flush().map_err(Error::from)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
