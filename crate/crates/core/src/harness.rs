//! Experiment plumbing: repeated solver runs with a resumable run store,
//! significance tests, the leave-one-out selection experiment and the
//! comparison report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::domain::ProblemInstance;
use crate::dynamics::{run_day, DayOutcome, DvrpSolver, DEFAULT_SLICES};
use crate::error::{DvrpError, Result};
use crate::features::{FeatureOptions, FeatureVector};
use crate::memso::{MemsoConfig, MemsoSolver};
use crate::selector::{choose_solver, stepwise_aic_from, Algorithm, SelectorModel, TrainingRow};
use crate::two_mpso::{TwoMpsoConfig, TwoMpsoSolver};

/// Everything a batch of runs needs besides the instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub slices: usize,
    pub alpha: f64,
    pub t_test: TTestKind,
    pub memso: MemsoConfig,
    #[serde(rename = "2mpso")]
    pub two_mpso: TwoMpsoConfig,
    pub features: FeatureOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            slices: DEFAULT_SLICES,
            alpha: 0.05,
            t_test: TTestKind::Welch,
            memso: MemsoConfig::default(),
            two_mpso: TwoMpsoConfig::default(),
            features: FeatureOptions::default(),
        }
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SuiteConfig =
            toml::from_str(text).map_err(|e| DvrpError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices == 0 {
            return Err(DvrpError::Config("slices must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DvrpError::Config("alpha must lie in (0, 1)".into()));
        }
        self.memso.validate()?;
        self.two_mpso.validate()
    }

    pub fn solver(&self, algorithm: Algorithm, seed: u64) -> Result<Box<dyn DvrpSolver>> {
        Ok(match algorithm {
            Algorithm::Memso => Box::new(MemsoSolver::new(self.memso.clone(), seed)?),
            Algorithm::TwoMpso => Box::new(TwoMpsoSolver::new(self.two_mpso.clone(), seed)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub solver: Algorithm,
    pub seed: u64,
    /// Total route length; `None` for a failed run.
    pub cost: Option<f64>,
    pub budget: u64,
    pub wall_ms: u64,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.cost.is_some()
    }
}

/// Runs one seeded day; the final plan has already been checked against
/// the day's commitments by [`run_day`].
pub fn solve_once(
    instance: &ProblemInstance,
    algorithm: Algorithm,
    budget: u64,
    seed: u64,
    config: &SuiteConfig,
) -> Result<DayOutcome> {
    let mut solver = config.solver(algorithm, seed)?;
    run_day(instance, solver.as_mut(), budget, config.slices)
}

/// File holding the runs of one (instance, solver) pair.
pub fn run_file(dir: &Path, instance: &str, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{instance}__{}.csv", algorithm.tag()))
}

const RUN_HEADER: &str = "instance,solver,seed,cost,budget,wall_ms";

/// Reads a run file; records come back sorted by seed.
pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let line = row.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| DvrpError::parse(line, format!("{}: bad {what}", path.display()));
        let cost = match field(3) {
            "" | "failed" => None,
            c => Some(c.parse().map_err(|_| bad("cost"))?),
        };
        out.push(RunRecord {
            instance: field(0).to_string(),
            solver: field(1).parse()?,
            seed: field(2).parse().map_err(|_| bad("seed"))?,
            cost,
            budget: field(4).parse().map_err(|_| bad("budget"))?,
            wall_ms: field(5).parse().map_err(|_| bad("wall time"))?,
        });
    }
    out.sort_by_key(|r| r.seed);
    out.dedup_by_key(|r| r.seed);
    Ok(out)
}

fn append_run(path: &Path, record: &RunRecord) -> Result<()> {
    let fresh = !path.exists();
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = String::new();
    if fresh {
        line.push_str(RUN_HEADER);
        line.push('\n');
    }
    let cost = record.cost.map_or("failed".to_string(), |c| c.to_string());
    let _ = writeln!(
        line,
        "{},{},{},{},{},{}",
        record.instance,
        record.solver.tag(),
        record.seed,
        cost,
        record.budget,
        record.wall_ms
    );
    file.write_all(line.as_bytes())?;
    file.sync_data()?;
    Ok(())
}

/// `runs` seeded days (`base_seed`, `base_seed + 1`, …). With a `store`
/// directory each finished run is appended to its run file at once and
/// seeds already present there are not re-run. Failed runs are kept as
/// records without a cost.
pub fn batch_solve(
    instance: &ProblemInstance,
    algorithm: Algorithm,
    runs: usize,
    budget: u64,
    base_seed: u64,
    config: &SuiteConfig,
    store: Option<&Path>,
) -> Result<Vec<RunRecord>> {
    let path = store.map(|d| run_file(d, instance.name(), algorithm));
    let mut done: BTreeMap<u64, RunRecord> = BTreeMap::new();
    if let Some(p) = path.as_deref().filter(|p| p.exists()) {
        for r in read_runs(p)? {
            if r.budget == budget {
                done.insert(r.seed, r);
            }
        }
    }
    let mut out = Vec::with_capacity(runs);
    for i in 0..runs as u64 {
        let seed = base_seed + i;
        if let Some(r) = done.get(&seed) {
            out.push(r.clone());
            continue;
        }
        let start = Instant::now();
        let cost = match solve_once(instance, algorithm, budget, seed, config) {
            Ok(o) => Some(o.solution.total_length()),
            Err(e) => {
                log::warn!("{} {} seed {seed} failed: {e}", instance.name(), algorithm);
                None
            }
        };
        let record = RunRecord {
            instance: instance.name().to_string(),
            solver: algorithm,
            seed,
            cost,
            budget,
            wall_ms: start.elapsed().as_millis() as u64,
        };
        if let Some(p) = &path {
            append_run(p, &record)?;
        }
        out.push(record);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestKind {
    #[default]
    Welch,
    Pooled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided two-sample t-test. Both samples need at least two values.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64, kind: TTestKind) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(DvrpError::InsufficientData(
            "t-test needs two values per sample".into(),
        ));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (se2, df) = match kind {
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            (se2, df)
        }
        TTestKind::Pooled => {
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            (pooled * (1.0 / na + 1.0 / nb), na + nb - 2.0)
        }
    };
    if se2 == 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        let t = if ma == mb {
            0.0
        } else {
            (ma - mb).signum() * f64::INFINITY
        };
        return Ok(TTest {
            t,
            df: na + nb - 2.0,
            p,
            significant: p < alpha,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| DvrpError::Solver(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest {
        t,
        df,
        p,
        significant: p < alpha,
    })
}

/// Welch variant of [`t_test`].
pub fn welch_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    t_test(a, b, alpha, TTestKind::Welch)
}

/// Minimum and average cost of each solver on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub name: String,
    pub two_mpso_min: f64,
    pub two_mpso_avg: f64,
    pub memso_min: f64,
    pub memso_avg: f64,
    /// Whether the averages differ significantly.
    pub significant: bool,
}

impl InstanceSummary {
    pub fn from_runs(
        name: &str,
        memso: &[f64],
        two_mpso: &[f64],
        alpha: f64,
        kind: TTestKind,
    ) -> Result<Self> {
        if memso.is_empty() || two_mpso.is_empty() {
            return Err(DvrpError::InsufficientData(format!(
                "{name}: no successful runs"
            )));
        }
        let min = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
        let avg = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        Ok(InstanceSummary {
            name: name.to_string(),
            two_mpso_min: min(two_mpso),
            two_mpso_avg: avg(two_mpso),
            memso_min: min(memso),
            memso_avg: avg(memso),
            significant: t_test(memso, two_mpso, alpha, kind)?.significant,
        })
    }

    pub fn average(&self, algorithm: Algorithm) -> f64 {
        match algorithm {
            Algorithm::Memso => self.memso_avg,
            Algorithm::TwoMpso => self.two_mpso_avg,
        }
    }

    /// Average MEMSO cost over average 2MPSO cost.
    pub fn ratio(&self) -> f64 {
        self.memso_avg / self.two_mpso_avg
    }

    /// Solver with the lower average (2MPSO on a tie, as the selector would).
    pub fn better(&self) -> Algorithm {
        if self.memso_avg < self.two_mpso_avg {
            Algorithm::Memso
        } else {
            Algorithm::TwoMpso
        }
    }
}

/// Relative average-cost advantage of `chosen` over the other solver,
/// measured against the larger of the two averages. Negative when the
/// choice was the worse one.
pub fn gain(avg_chosen: f64, avg_unchosen: f64) -> f64 {
    (avg_unchosen - avg_chosen) / avg_chosen.max(avg_unchosen)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub summary: InstanceSummary,
    pub chosen: Algorithm,
    pub correct: bool,
    pub gain: f64,
}

impl ComparisonRow {
    pub fn new(summary: InstanceSummary, chosen: Algorithm) -> Self {
        let avg_chosen = summary.average(chosen);
        let avg_other = summary.average(chosen.other());
        ComparisonRow {
            correct: avg_chosen <= avg_other,
            gain: gain(avg_chosen, avg_other),
            summary,
            chosen,
        }
    }
}

/// Outcome for one held-out instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Fold {
    pub held_out: String,
    /// Names the model was trained on.
    pub training: Vec<String>,
    pub model: SelectorModel,
    pub predicted_ratio: f64,
    pub row: ComparisonRow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoocvReport {
    pub folds: Vec<Fold>,
}

impl LoocvReport {
    pub fn rows(&self) -> Vec<ComparisonRow> {
        self.folds.iter().map(|f| f.row.clone()).collect()
    }

    /// `(correct, total)` over all instances.
    pub fn accuracy(&self) -> (usize, usize) {
        let correct = self.folds.iter().filter(|f| f.row.correct).count();
        (correct, self.folds.len())
    }

    /// `(correct, total)` over instances with a significant difference.
    pub fn significant_accuracy(&self) -> (usize, usize) {
        let sig: Vec<_> = self
            .folds
            .iter()
            .filter(|f| f.row.summary.significant)
            .collect();
        (sig.iter().filter(|f| f.row.correct).count(), sig.len())
    }

    /// Mean gain over all instances.
    pub fn mean_gain(&self) -> f64 {
        self.folds.iter().map(|f| f.row.gain).sum::<f64>() / self.folds.len().max(1) as f64
    }
}

/// Leave-one-out: for each instance, backward-AIC on the others, then a
/// choice for the held-out one from its features.
pub fn loocv_experiment(data: &[(FeatureVector, InstanceSummary)]) -> Result<LoocvReport> {
    loocv_experiment_from(data, &FeatureVector::NAMES)
}

/// [`loocv_experiment`] with elimination starting from `start`.
pub fn loocv_experiment_from(
    data: &[(FeatureVector, InstanceSummary)],
    start: &[&str],
) -> Result<LoocvReport> {
    if data.len() < 3 {
        return Err(DvrpError::InsufficientData(format!(
            "leave-one-out needs at least 3 instances, got {}",
            data.len()
        )));
    }
    let names: BTreeSet<&str> = data.iter().map(|(_, s)| s.name.as_str()).collect();
    if names.len() != data.len() {
        return Err(DvrpError::InvalidInstance(
            "duplicate instance names".into(),
        ));
    }
    let rows: Vec<TrainingRow> = data
        .iter()
        .map(|(f, s)| TrainingRow {
            name: s.name.clone(),
            features: *f,
            ratio: s.ratio(),
        })
        .collect();
    let mut folds = Vec::with_capacity(data.len());
    for (i, (features, summary)) in data.iter().enumerate() {
        let training: Vec<TrainingRow> = rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r.clone())
            .collect();
        let fit = stepwise_aic_from(&training, start)?;
        let (chosen, predicted_ratio) = choose_solver(&fit.model, features);
        folds.push(Fold {
            held_out: summary.name.clone(),
            training: training.iter().map(|r| r.name.clone()).collect(),
            model: fit.model,
            predicted_ratio,
            row: ComparisonRow::new(summary.clone(), chosen),
        });
    }
    Ok(LoocvReport { folds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

/// Renders comparison rows: name, 2MPSO min/avg, MEMSO min/avg,
/// significance, chosen solver, correctness and gain.
pub fn emit_report(rows: &[ComparisonRow], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("name,2mpso_min,2mpso_avg,memso_min,memso_avg,significant,chosen,correct,gain_pct\n");
            for r in rows {
                let s = &r.summary;
                let _ = writeln!(
                    out,
                    "{},{:.2},{:.2},{:.2},{:.2},{},{},{},{:.2}",
                    s.name,
                    s.two_mpso_min,
                    s.two_mpso_avg,
                    s.memso_min,
                    s.memso_avg,
                    if s.significant { "T" } else { "F" },
                    r.chosen,
                    if r.correct { "T" } else { "F" },
                    100.0 * r.gain
                );
            }
        }
        ReportFormat::Text => {
            let _ = writeln!(
                out,
                "{:<10} {:>10} {:>10} {:>10} {:>10} {:>4} {:>6} {:>3} {:>8}",
                "name",
                "2MPSO min",
                "2MPSO avg",
                "MEMSO min",
                "MEMSO avg",
                "sig",
                "chosen",
                "T/F",
                "gain"
            );
            for r in rows {
                let s = &r.summary;
                let _ = writeln!(
                    out,
                    "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>4} {:>6} {:>3} {:>8}",
                    s.name,
                    s.two_mpso_min,
                    s.two_mpso_avg,
                    s.memso_min,
                    s.memso_avg,
                    if s.significant { "*" } else { "" },
                    r.chosen.to_string(),
                    if r.correct { "T" } else { "F" },
                    format!("{:.2}%", 100.0 * r.gain)
                );
            }
        }
    }
    out
}

/// Reads summaries from CSV with columns
/// `name,2mpso_min,2mpso_avg,memso_min,memso_avg,significant` (T/F).
pub fn parse_summaries_csv(text: &str) -> Result<Vec<InstanceSummary>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DvrpError::parse(1, format!("missing column '{name}'")))
    };
    let idx = [
        col("name")?,
        col("2mpso_min")?,
        col("2mpso_avg")?,
        col("memso_min")?,
        col("memso_avg")?,
        col("significant")?,
    ];
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            let f = rec.get(idx[k]).unwrap_or("");
            f.parse()
                .map_err(|_| DvrpError::parse(line, format!("'{f}' is not a number")))
        };
        let significant = match rec.get(idx[5]).unwrap_or("") {
            "T" | "true" | "1" => true,
            "F" | "false" | "0" => false,
            other => {
                return Err(DvrpError::parse(
                    line,
                    format!("significance '{other}' is not T/F"),
                ))
            }
        };
        out.push(InstanceSummary {
            name: rec.get(idx[0]).unwrap_or("").to_string(),
            two_mpso_min: num(1)?,
            two_mpso_avg: num(2)?,
            memso_min: num(3)?,
            memso_avg: num(4)?,
            significant,
        });
    }
    Ok(out)
}

/// Inverse of [`parse_summaries_csv`].
pub fn summaries_csv(summaries: &[InstanceSummary]) -> String {
    let mut out = String::from("name,2mpso_min,2mpso_avg,memso_min,memso_avg,significant\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            s.name,
            s.two_mpso_min,
            s.two_mpso_avg,
            s.memso_min,
            s.memso_avg,
            if s.significant { "T" } else { "F" }
        );
    }
    out
}

/// Pairs features with summaries by instance name, in feature order.
pub fn join_by_name(
    features: &[(String, FeatureVector)],
    summaries: &[InstanceSummary],
) -> Result<Vec<(FeatureVector, InstanceSummary)>> {
    let by_name: BTreeMap<&str, &InstanceSummary> =
        summaries.iter().map(|s| (s.name.as_str(), s)).collect();
    features
        .iter()
        .map(|(name, f)| {
            by_name
                .get(name.as_str())
                .map(|s| (*f, (*s).clone()))
                .ok_or_else(|| {
                    DvrpError::InsufficientData(format!("no results for instance '{name}'"))
                })
        })
        .collect()
}

/// Summaries from every run file in `dir`, one per instance that has runs
/// of both solvers.
pub fn summaries_from_run_dir(
    dir: &Path,
    alpha: f64,
    kind: TTestKind,
) -> Result<Vec<InstanceSummary>> {
    let mut costs: BTreeMap<String, [Vec<f64>; 2]> = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    for path in entries {
        for r in read_runs(&path)? {
            if let Some(c) = r.cost {
                let slot = match r.solver {
                    Algorithm::Memso => 0,
                    Algorithm::TwoMpso => 1,
                };
                costs.entry(r.instance.clone()).or_default()[slot].push(c);
            }
        }
    }
    costs
        .into_iter()
        .filter(|(_, [m, t])| !m.is_empty() && !t.is_empty())
        .map(|(name, [m, t])| InstanceSummary::from_runs(&name, &m, &t, alpha, kind))
        .collect()
}
