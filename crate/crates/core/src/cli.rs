//! Config-file driven experiment runners behind the `cmm` binary.
//!
//! Every subcommand reads one JSON config, writes its artifacts into an
//! output directory, and finishes with a `manifest.json` that echoes the
//! config as given and as resolved. Nothing time- or host-dependent is
//! written, so reruns are byte-identical.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::encoder::{self, Checkpoint, TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::eval::{self, curve_export, curves_csv, positive_count_csv, positive_count_trace, DGrid, GoldView, MetricsRecord, PredictionSet};
use crate::gradcheck::{check_gradients, GradCheckConfig, GradCheckReport};
use crate::loss::{LossConfig, LossKind, GAMMA_GRID, M_GRID};
use crate::schema::Dataset;
use crate::synthdata::{self, DistributionReport, GenConfig, Preset};

/// Overrides the root directory that output directories are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "CMM_OUTPUT_ROOT";
pub const RUN_FORMAT: &str = "cmm-run/v1";
pub const REPORT_FORMAT: &str = "cmm-report/v1";
pub const METRICS_FORMAT: &str = "cmm-metrics/v1";
pub const GRID_CSV_HEADER: &str = "arm,kind,gamma,m,seed,f1,ign_f1,positives,best";
pub const SUMMARY_CSV_HEADER: &str = "arm,kind,gamma,m,seeds,mean_f1,mean_ign_f1,best";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Generate,
    Train,
    Compare,
    Gradcheck,
    Curves,
    Eval,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Generate,
        Command::Train,
        Command::Compare,
        Command::Gradcheck,
        Command::Curves,
        Command::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Train => "train",
            Command::Compare => "compare",
            Command::Gradcheck => "gradcheck",
            Command::Curves => "curves",
            Command::Eval => "eval",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Process exit status for a failed run: 1 for bad input, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        1
    } else {
        2
    }
}

/// Output directory for a run. `out` defaults to `runs/<command>`; relative
/// paths are placed under `root` when one is given.
pub fn output_dir(root: Option<&Path>, out: Option<&Path>, command: Command) -> PathBuf {
    match (root, out) {
        (Some(root), Some(out)) => root.join(out),
        (Some(root), None) => root.join(command.as_str()),
        (None, Some(out)) => out.to_path_buf(),
        (None, None) => Path::new("runs").join(command.as_str()),
    }
}

/// [`output_dir`] with the root taken from [`OUTPUT_ROOT_ENV`].
pub fn output_dir_from_env(out: Option<&Path>, command: Command) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    output_dir(root.as_deref(), out, command)
}

/// A config file as read from disk. Relative paths inside it resolve
/// against the file's directory.
#[derive(Debug, Clone)]
pub struct ConfigSource {
    pub raw: Value,
    pub base: PathBuf,
}

impl ConfigSource {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        let raw = serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { raw, base })
    }

    /// The empty config `{}`, resolved against the working directory.
    pub fn empty() -> Self {
        Self {
            raw: Value::Object(Map::new()),
            base: PathBuf::new(),
        }
    }

    pub fn from_value(raw: Value, base: impl Into<PathBuf>) -> Self {
        Self { raw, base: base.into() }
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self, what: &str) -> Result<T> {
        serde_json::from_value(self.raw.clone()).map_err(|e| Error::json(format!("{what} config"), e))
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }
}

/// What a finished run wrote, relative to its output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: Command,
    pub artifacts: Vec<String>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    format: &'static str,
    command: Command,
    version: &'static str,
    config: &'a Value,
    effective: Value,
    artifacts: &'a [String],
}

struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = to_pretty(value, name)?;
        text.push('\n');
        self.write(name, text)
    }

    fn finish(mut self, command: Command, source: &ConfigSource, effective: &impl Serialize) -> Result<RunSummary> {
        let mut artifacts = self.written.clone();
        artifacts.push("manifest.json".into());
        let manifest = RunManifest {
            format: RUN_FORMAT,
            command,
            version: env!("CARGO_PKG_VERSION"),
            config: &source.raw,
            effective: serde_json::to_value(effective).map_err(|e| Error::json("effective config", e))?,
            artifacts: &artifacts,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(RunSummary { command, artifacts })
    }
}

fn to_pretty<T: Serialize>(value: &T, what: &str) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::json(what, e))
}

/// Runs `command` with `source` as its config, writing into `out`.
pub fn run(command: Command, source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    match command {
        Command::Generate => cmd_generate(source, out),
        Command::Train => cmd_train(source, out),
        Command::Compare => cmd_compare(source, out),
        Command::Gradcheck => cmd_gradcheck(source, out),
        Command::Curves => cmd_curves(source, out),
        Command::Eval => cmd_eval(source, out),
    }
}

// ---------------------------------------------------------------- generate

/// `generate` config: an optional preset, field overrides on top of it, and
/// the number of clean dev documents drawn after the training documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub generator: Map<String, Value>,
    #[serde(default = "default_dev_documents")]
    pub dev_documents: usize,
}

fn default_dev_documents() -> usize {
    100
}

impl GenerateConfig {
    /// Preset (or the default) with `generator` overrides applied.
    pub fn resolve(&self) -> Result<GenConfig> {
        let base = self.preset.map(Preset::config).unwrap_or_default();
        let mut value = serde_json::to_value(base).map_err(|e| Error::json("generator", e))?;
        if let Value::Object(fields) = &mut value {
            for (k, v) in &self.generator {
                fields.insert(k.clone(), v.clone());
            }
        }
        let cfg: GenConfig = serde_json::from_value(value).map_err(|e| Error::json("generator", e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub format: String,
    pub train: DistributionReport,
    pub dev: Option<DistributionReport>,
}

#[derive(Serialize)]
struct GenerateEffective {
    generator: GenConfig,
    dev_documents: usize,
}

pub fn cmd_generate(source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    let cfg: GenerateConfig = source.parse("generate")?;
    let gen = cfg.resolve()?;
    let (train, dev) = synthdata::generate_split(&gen, cfg.dev_documents)?;
    let report = SplitReport {
        format: REPORT_FORMAT.into(),
        train: synthdata::distribution_report(&train),
        dev: (!dev.is_empty()).then(|| synthdata::distribution_report(&dev)),
    };

    let mut dir = OutDir::create(out)?;
    dir.write("train.jsonl", train.to_jsonl_bytes()?)?;
    if !dev.is_empty() {
        dir.write("dev.jsonl", dev.to_jsonl_bytes()?)?;
    }
    dir.write_json("report.json", &report)?;
    dir.finish(
        Command::Generate,
        source,
        &GenerateEffective {
            generator: gen,
            dev_documents: cfg.dev_documents,
        },
    )
}

// ------------------------------------------------------------------- train

/// `train` config: dataset paths, the shared training settings, and the
/// loss arms to train. With no arms, `train.loss` is the only arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCommandConfig {
    pub train_data: PathBuf,
    pub dev_data: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub arms: Vec<LossConfig>,
}

impl TrainCommandConfig {
    pub fn arm_configs(&self) -> Result<Vec<TrainConfig>> {
        let losses = if self.arms.is_empty() {
            vec![self.train.loss]
        } else {
            self.arms.clone()
        };
        let configs: Vec<TrainConfig> = losses
            .into_iter()
            .map(|loss| TrainConfig {
                loss,
                ..self.train.clone()
            })
            .collect();
        let mut labels: Vec<String> = configs.iter().map(|c| c.loss.label()).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::config("arms", format!("arm {} listed twice", w[0])));
        }
        for c in &configs {
            c.validate()?;
        }
        Ok(configs)
    }
}

fn load_pair(source: &ConfigSource, train: &Path, dev: &Path) -> Result<(Dataset, Dataset)> {
    Ok((Dataset::load(source.resolve(train))?, Dataset::load(source.resolve(dev))?))
}

pub fn cmd_train(source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    let cfg: TrainCommandConfig = source.parse("train")?;
    let arms = cfg.arm_configs()?;
    let (train, dev) = load_pair(source, &cfg.train_data, &cfg.dev_data)?;
    let outcomes = arms
        .par_iter()
        .map(|arm| encoder::train(&train, &dev, arm))
        .collect::<Result<Vec<_>>>()?;

    let mut dir = OutDir::create(out)?;
    for (arm, outcome) in arms.iter().zip(&outcomes) {
        let label = arm.loss.label();
        let checkpoint = Checkpoint::new(&outcome.params, &outcome.optimizer, arm);
        dir.write(&format!("{label}/checkpoint.json"), checkpoint.to_json()? + "\n")?;
        dir.write(&format!("{label}/trace.csv"), outcome.trace.to_csv())?;
    }
    let traces: Vec<TrainTrace> = outcomes.into_iter().map(|o| o.trace).collect();
    dir.write("positives.csv", positive_count_csv(&positive_count_trace(&traces)))?;
    dir.finish(Command::Train, source, &arms)
}

// ----------------------------------------------------------------- compare

/// `compare` config: the (γ, m) grid for the CMM arm, the seeds, and the
/// baseline kinds trained alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub train_data: PathBuf,
    pub dev_data: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub ms: Vec<f64>,
    pub seeds: Vec<u64>,
    pub baselines: Vec<LossKind>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            gammas: GAMMA_GRID.to_vec(),
            ms: M_GRID.to_vec(),
            seeds: vec![0, 1, 2],
            baselines: vec![LossKind::PlainMargin, LossKind::AtlReference],
        }
    }
}

impl GridSpec {
    /// Loss arms in output order: every (γ, m) pair, γ-major, then baselines.
    pub fn arms(&self, aggregation: crate::loss::Aggregation) -> Result<Vec<LossConfig>> {
        if self.seeds.is_empty() {
            return Err(Error::config("grid.seeds", "need at least one seed"));
        }
        if self.baselines.iter().any(|&k| k == LossKind::Cmm || k == LossKind::Plugin) {
            return Err(Error::config("grid.baselines", "baselines must be plain_margin or atl_reference"));
        }
        let mut arms = Vec::new();
        for &gamma in &self.gammas {
            for &m in &self.ms {
                let loss = LossConfig {
                    aggregation,
                    ..LossConfig::cmm(gamma, m)
                };
                loss.validate()?;
                arms.push(loss);
            }
        }
        for &kind in &self.baselines {
            arms.push(LossConfig {
                aggregation,
                ..LossConfig::of_kind(kind)
            });
        }
        if arms.is_empty() {
            return Err(Error::config("grid", "no arms to train"));
        }
        let mut labels: Vec<String> = arms.iter().map(LossConfig::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::config("grid", format!("arm {} listed twice", w[0])));
        }
        Ok(arms)
    }
}

/// One trained (arm, seed) tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub loss: LossConfig,
    pub seed: u64,
    pub final_metrics: Option<crate::encoder::EpochRecord>,
    pub trace: TrainTrace,
}

impl GridRun {
    pub fn f1(&self) -> f64 {
        self.final_metrics.map_or(0.0, |r| r.f1)
    }

    pub fn ign_f1(&self) -> f64 {
        self.final_metrics.map_or(0.0, |r| r.ign_f1)
    }

    /// Trace label naming both the arm and the seed.
    pub fn run_label(&self) -> String {
        format!("{}_s{}", self.loss.label(), self.seed)
    }
}

/// Seed-averaged result of one arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub loss: LossConfig,
    pub seeds: usize,
    pub mean_f1: f64,
    pub mean_ign_f1: f64,
    /// Per evaluated epoch, positive predictions averaged over seeds.
    pub mean_positives: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutcome {
    /// Arm-major, seed-minor.
    pub runs: Vec<GridRun>,
    pub arms: Vec<ArmSummary>,
}

impl CompareOutcome {
    /// Index into `runs` of the single best (arm, seed) tuple by final F1.
    pub fn best_run(&self) -> Option<usize> {
        argmax(self.runs.iter().map(GridRun::f1))
    }

    /// Index into `arms` of the best seed-averaged arm of `kind`.
    pub fn best_arm(&self, kind: LossKind) -> Option<usize> {
        let best = argmax(
            self.arms
                .iter()
                .map(|a| if a.loss.kind == kind { a.mean_f1 } else { f64::NEG_INFINITY }),
        )?;
        (self.arms[best].loss.kind == kind).then_some(best)
    }

    pub fn arm(&self, kind: LossKind) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.loss.kind == kind)
    }

    pub fn grid_csv(&self) -> String {
        let best = self.best_run();
        let mut out = format!("{GRID_CSV_HEADER}\n");
        for (i, r) in self.runs.iter().enumerate() {
            let (gamma, m) = grid_coords(&r.loss);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.loss.label(),
                r.loss.kind.as_str(),
                gamma,
                m,
                r.seed,
                r.f1(),
                r.ign_f1(),
                r.final_metrics.map_or(0, |m| m.positives),
                u8::from(best == Some(i)),
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let best = argmax(self.arms.iter().map(|a| a.mean_f1));
        let mut out = format!("{SUMMARY_CSV_HEADER}\n");
        for (i, a) in self.arms.iter().enumerate() {
            let (gamma, m) = grid_coords(&a.loss);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                a.loss.label(),
                a.loss.kind.as_str(),
                gamma,
                m,
                a.seeds,
                a.mean_f1,
                a.mean_ign_f1,
                u8::from(best == Some(i)),
            ));
        }
        out
    }

    pub fn positives_csv(&self) -> String {
        let traces: Vec<TrainTrace> = self
            .runs
            .iter()
            .map(|r| TrainTrace {
                arm: r.run_label(),
                records: r.trace.records.clone(),
            })
            .collect();
        positive_count_csv(&positive_count_trace(&traces))
    }
}

fn grid_coords(loss: &LossConfig) -> (String, String) {
    match loss.kind {
        LossKind::Cmm => (loss.gamma.to_string(), loss.m.to_string()),
        _ => (String::new(), String::new()),
    }
}

/// First index of the largest value; `None` when empty.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Trains every (arm, seed) tuple of `grid` on `train`, evaluating on `dev`.
/// Tuples run in parallel; results come back in arm-major, seed-minor order.
pub fn run_grid(train: &Dataset, dev: &Dataset, base: &TrainConfig, grid: &GridSpec) -> Result<CompareOutcome> {
    base.validate()?;
    let arms = grid.arms(base.loss.aggregation)?;
    let jobs: Vec<(LossConfig, u64)> = arms
        .iter()
        .flat_map(|&loss| grid.seeds.iter().map(move |&seed| (loss, seed)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(loss, seed)| {
            let cfg = TrainConfig {
                loss,
                seed,
                ..base.clone()
            };
            let trace = encoder::train(train, dev, &cfg)?.trace;
            Ok(GridRun {
                loss,
                seed,
                final_metrics: trace.last().copied(),
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_arm = grid.seeds.len();
    let summaries = arms
        .iter()
        .zip(runs.chunks(per_arm))
        .map(|(&loss, chunk)| {
            let n = chunk.len() as f64;
            let mut mean_positives: Vec<(usize, f64)> = chunk[0]
                .trace
                .records
                .iter()
                .map(|r| (r.epoch, 0.0))
                .collect();
            for run in chunk {
                for (slot, r) in mean_positives.iter_mut().zip(&run.trace.records) {
                    slot.1 += r.positives as f64 / n;
                }
            }
            ArmSummary {
                loss,
                seeds: chunk.len(),
                mean_f1: chunk.iter().map(GridRun::f1).sum::<f64>() / n,
                mean_ign_f1: chunk.iter().map(GridRun::ign_f1).sum::<f64>() / n,
                mean_positives,
            }
        })
        .collect();
    Ok(CompareOutcome { runs, arms: summaries })
}

#[derive(Serialize)]
struct CompareEffective<'a> {
    train: &'a TrainConfig,
    grid: &'a GridSpec,
    arms: Vec<String>,
}

pub fn cmd_compare(source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    let cfg: CompareConfig = source.parse("compare")?;
    cfg.train.validate()?;
    let arms = cfg.grid.arms(cfg.train.loss.aggregation)?;
    let (train, dev) = load_pair(source, &cfg.train_data, &cfg.dev_data)?;
    let outcome = run_grid(&train, &dev, &cfg.train, &cfg.grid)?;

    let mut dir = OutDir::create(out)?;
    for run in &outcome.runs {
        dir.write(&format!("traces/{}.csv", run.run_label()), run.trace.to_csv())?;
    }
    dir.write("grid.csv", outcome.grid_csv())?;
    dir.write("summary.csv", outcome.summary_csv())?;
    dir.write("positives.csv", outcome.positives_csv())?;
    dir.finish(
        Command::Compare,
        source,
        &CompareEffective {
            train: &cfg.train,
            grid: &cfg.grid,
            arms: arms.iter().map(LossConfig::label).collect(),
        },
    )
}

// --------------------------------------------------------------- gradcheck

pub fn cmd_gradcheck(source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    let cfg: GradCheckConfig = source.parse("gradcheck")?;
    let report: GradCheckReport = check_gradients(&cfg)?;
    let mut dir = OutDir::create(out)?;
    dir.write_json("gradcheck.json", &report)?;
    let summary = dir.finish(Command::Gradcheck, source, &cfg)?;
    if !report.passed() {
        return Err(Error::Numeric(format!(
            "{} of {} gradient trials exceeded tolerance {} (max relative error {:e})",
            report.failures.len(),
            report.compared,
            report.tolerance,
            report.max_rel_error
        )));
    }
    Ok(summary)
}

// ------------------------------------------------------------------ curves

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesConfig {
    pub gammas: Vec<f64>,
    pub d_grid: DGrid,
    pub m: f64,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        Self {
            gammas: eval::default_curve_gammas(),
            d_grid: DGrid::default(),
            m: 0.2,
        }
    }
}

pub fn cmd_curves(source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    let cfg: CurvesConfig = source.parse("curves")?;
    if cfg.gammas.is_empty() {
        return Err(Error::config("gammas", "need at least one value"));
    }
    let rows = curve_export(&cfg.gammas, &cfg.d_grid, cfg.m)?;
    let mut dir = OutDir::create(out)?;
    dir.write("curves.csv", curves_csv(&rows))?;
    dir.finish(Command::Curves, source, &cfg)
}

// -------------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    #[serde(default)]
    pub gold: GoldView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub gold: GoldView,
    pub pairs: usize,
    pub predicted_positives: usize,
    pub micro: MetricsRecord,
    /// Metrics over facts not flagged `seen_in_train`.
    pub ignoring_seen: MetricsRecord,
}

pub fn evaluate(checkpoint: &Checkpoint, data: &Dataset, gold: GoldView) -> Result<EvalReport> {
    let params = checkpoint.params()?;
    if params.output_dim() != data.schema.logit_len() {
        return Err(Error::Schema(format!(
            "checkpoint emits {} logits but the dataset has {} relations",
            params.output_dim(),
            data.schema.relation_count()
        )));
    }
    let predictions = PredictionSet::predict(&params, data)?;
    Ok(EvalReport {
        format: METRICS_FORMAT.into(),
        gold,
        pairs: data.len(),
        predicted_positives: predictions.positive_count(),
        micro: eval::micro_f1(&predictions, data, gold)?,
        ignoring_seen: eval::ign_f1(&predictions, data, gold)?,
    })
}

pub fn cmd_eval(source: &ConfigSource, out: &Path) -> Result<RunSummary> {
    let cfg: EvalConfig = source.parse("eval")?;
    let checkpoint = Checkpoint::load(source.resolve(&cfg.checkpoint))?;
    let data = Dataset::load(source.resolve(&cfg.data))?;
    let report = evaluate(&checkpoint, &data, cfg.gold)?;
    let mut dir = OutDir::create(out)?;
    dir.write_json("metrics.json", &report)?;
    dir.finish(Command::Eval, source, &cfg)
}
