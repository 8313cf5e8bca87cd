//! The discovery loop: pick a reasoning type, prompt the generator, evaluate
//! each proposed feature against a fixed baseline, reward the bandit, and
//! finally refit with the top-K features.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditState, ReasoningType};
use crate::fexpr::{self, Complexity, EvalError, Expr, FittedTransform};
use crate::learners::{self, Hyper, LearnError, LearnerKind, MetricKind, MetricValue};
use crate::ledger::{to_jsonl, CandidateRecord, Status};
use crate::llm::{Generator, LlmError, Request};
use crate::promptkit::{self, PromptContext, PromptKind};
use crate::tabular::{
    impute_and_encode, sample_few_shot, Column, DataError, DatasetBundle, EncodedSplits, Encoder, Split, Targets,
    TaskKind,
};

/// Share of missing train values above which a candidate is DEGENERATE.
pub const MAX_MISSING_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Full,
    UniformSelect,
    SingleType(ReasoningType),
    NoGuide,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Full => f.write_str("full"),
            Mode::UniformSelect => f.write_str("uniform"),
            Mode::SingleType(r) => write!(f, "single:{r}"),
            Mode::NoGuide => f.write_str("no_guide"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Mode::Full),
            "uniform" | "uniform_select" | "uniform-select" => Ok(Mode::UniformSelect),
            "no_guide" | "noguide" | "no-guide" => Ok(Mode::NoGuide),
            other => match other.strip_prefix("single:") {
                Some(r) => r.parse().map(Mode::SingleType),
                None => Err(format!(
                    "unknown mode `{s}` (expected full, uniform, no_guide or single:<type>)"
                )),
            },
        }
    }
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub iterations: usize,
    pub top_k: usize,
    pub candidates_per_prompt: usize,
    pub mode: Mode,
    /// `None` picks the learner matching the task.
    pub learner: Option<LearnerKind>,
    /// `None` uses the learner's defaults.
    pub hyper: Option<Hyper>,
    pub seed: u64,
    pub reward_clip: [f64; 2],
    pub q0: f64,
    pub few_shot_k: usize,
    pub previous_results_limit: usize,
    /// Adds wall-clock seconds to the report, which makes it run-dependent.
    pub record_timing: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            iterations: 20,
            top_k: 10,
            candidates_per_prompt: promptkit::DEFAULT_MAX_CANDIDATES,
            mode: Mode::Full,
            learner: None,
            hyper: None,
            seed: 0,
            reward_clip: [-1.0, 1.0],
            q0: 1.0,
            few_shot_k: 10,
            previous_results_limit: promptkit::DEFAULT_PREVIOUS_RESULTS_LIMIT,
            record_timing: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1");
        }
        if self.candidates_per_prompt == 0 {
            return bad("candidates_per_prompt must be at least 1");
        }
        let [lo, hi] = self.reward_clip;
        // Also rejects NaN bounds.
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return bad("reward_clip needs lo < hi");
        }
        if !self.q0.is_finite() {
            return bad("q0 must be finite");
        }
        Ok(())
    }

    pub fn learner_for(&self, task: TaskKind) -> LearnerKind {
        self.learner.unwrap_or_else(|| LearnerKind::for_task(task))
    }

    pub fn hyper_for(&self, learner: LearnerKind) -> Hyper {
        let mut h = self.hyper.unwrap_or_else(|| Hyper::defaults(learner));
        h.seed = self.seed;
        h
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("learner: {0}")]
    Learn(#[from] LearnError),
    #[error("prompt: {0}")]
    Prompt(#[from] promptkit::PromptError),
    #[error("generator failed at iteration {iteration}: {source}")]
    Generator {
        iteration: usize,
        #[source]
        source: LlmError,
    },
    #[error("feature `{name}` is incompatible with the dataset: {detail}")]
    Feature { name: String, detail: String },
    #[error("writing run output: {0}")]
    Io(#[from] std::io::Error),
}

/// Why a candidate was not VALID.
#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub status: Status,
    pub detail: String,
}

impl Rejection {
    fn new(status: Status, detail: impl fmt::Display) -> Self {
        Rejection {
            status,
            detail: detail.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub metric: MetricKind,
    pub val: f64,
    pub test: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitGains {
    pub val: f64,
    pub test: f64,
}

/// Baseline matrices and metrics shared by every candidate evaluation.
pub struct Evaluator<'a> {
    bundle: &'a DatasetBundle,
    learner: LearnerKind,
    hyper: Hyper,
    base: EncodedSplits,
    targets: [Targets; 3],
    baseline: SplitMetrics,
}

fn split_index(split: Split) -> usize {
    match split {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    }
}

fn hstack(base: &DMatrix<f64>, extra: &[DMatrix<f64>]) -> DMatrix<f64> {
    let width = base.ncols() + extra.iter().map(|m| m.ncols()).sum::<usize>();
    let mut out = DMatrix::zeros(base.nrows(), width);
    out.columns_mut(0, base.ncols()).copy_from(base);
    let mut at = base.ncols();
    for m in extra {
        out.columns_mut(at, m.ncols()).copy_from(m);
        at += m.ncols();
    }
    out
}

/// A fitted candidate column, encoded for each split.
struct EncodedFeature {
    fitted: FittedTransform,
    matrices: [DMatrix<f64>; 3],
}

impl<'a> Evaluator<'a> {
    pub fn new(bundle: &'a DatasetBundle, learner: LearnerKind, hyper: Hyper) -> Result<Self, EngineError> {
        let base = impute_and_encode(bundle, &bundle.feature_names())?;
        let targets = [Split::Train, Split::Val, Split::Test].map(|s| bundle.targets(s));
        let model = learners::fit(learner, &base.train, &targets[0], &hyper)?;
        let val = learners::evaluate(&model, &base.val, &targets[1])?;
        let test = learners::evaluate(&model, &base.test, &targets[2])?;
        Ok(Evaluator {
            bundle,
            learner,
            hyper,
            base,
            targets,
            baseline: SplitMetrics {
                metric: val.kind,
                val: val.value,
                test: test.value,
            },
        })
    }

    pub fn baseline(&self) -> SplitMetrics {
        self.baseline
    }

    /// Typechecks, fits and encodes one feature. Only the train split decides
    /// degeneracy.
    fn prepare(&self, expr: &Expr) -> Result<EncodedFeature, Rejection> {
        fexpr::typecheck(expr, &self.bundle.schema(), &self.bundle.target)
            .map_err(|e| Rejection::new(Status::TypeError, e))?;
        let fitted = fexpr::fit(expr, &self.bundle.train).map_err(|e| match e {
            EvalError::Degenerate(_) => Rejection::new(Status::Degenerate, e),
            other => Rejection::new(Status::RuntimeError, other),
        })?;
        let column = |split: Split| -> Result<Column, Rejection> {
            let values = fitted
                .eval_values(self.bundle.table(split))
                .map_err(|e| Rejection::new(Status::RuntimeError, e))?;
            Ok(Column::numeric("candidate", values))
        };
        let train = column(Split::Train)?;
        let values = train.as_numeric().expect("numeric candidate");
        let missing = values.iter().filter(|v| v.is_nan()).count();
        if missing as f64 > MAX_MISSING_FRACTION * values.len() as f64 {
            return Err(Rejection::new(
                Status::Degenerate,
                format!("{missing} of {} train values are missing", values.len()),
            ));
        }
        let encoder = Encoder::fit(&[&train]);
        if encoder.is_dropped("candidate") {
            return Err(Rejection::new(Status::Degenerate, "zero variance on the train split"));
        }
        let encode = |c: &Column| {
            encoder
                .transform(&[c])
                .map_err(|e| Rejection::new(Status::RuntimeError, e))
        };
        let matrices = [
            encode(&train)?,
            encode(&column(Split::Val)?)?,
            encode(&column(Split::Test)?)?,
        ];
        Ok(EncodedFeature { fitted, matrices })
    }

    fn fit_with(&self, features: &[EncodedFeature]) -> Result<[MetricValue; 2], LearnError> {
        let stack = |split: Split| {
            let i = split_index(split);
            let base = [&self.base.train, &self.base.val, &self.base.test][i];
            let extra: Vec<DMatrix<f64>> = features.iter().map(|f| f.matrices[i].clone()).collect();
            hstack(base, &extra)
        };
        let model = learners::fit(self.learner, &stack(Split::Train), &self.targets[0], &self.hyper)?;
        let val = learners::evaluate(&model, &stack(Split::Val), &self.targets[1])?;
        let test = learners::evaluate(&model, &stack(Split::Test), &self.targets[2])?;
        Ok([val, test])
    }

    fn base_metric(&self, split: Split) -> MetricValue {
        MetricValue {
            kind: self.baseline.metric,
            value: if split == Split::Val {
                self.baseline.val
            } else {
                self.baseline.test
            },
        }
    }

    /// Validation gain of adding `expr` alone to the original features.
    pub fn evaluate_candidate(&self, expr: &Expr) -> Result<f64, Rejection> {
        let feature = self.prepare(expr)?;
        let [val, _] = self
            .fit_with(std::slice::from_ref(&feature))
            .map_err(|e| Rejection::new(Status::RuntimeError, e))?;
        let gain = learners::relative_gain(self.base_metric(Split::Val), val)
            .map_err(|e| Rejection::new(Status::RuntimeError, e))?;
        if !gain.is_finite() {
            return Err(Rejection::new(Status::RuntimeError, "non-finite gain"));
        }
        Ok(gain)
    }

    /// Metrics of the joint model over the original features plus `exprs`.
    /// The empty set reproduces the baseline exactly.
    pub fn evaluate_set(&self, exprs: &[(String, Expr)]) -> Result<Augmented, EngineError> {
        if exprs.is_empty() {
            return Ok(Augmented {
                metrics: self.baseline,
                gains: SplitGains { val: 0.0, test: 0.0 },
                complexities: Vec::new(),
            });
        }
        let features = exprs
            .iter()
            .map(|(name, e)| {
                self.prepare(e).map_err(|r| EngineError::Feature {
                    name: name.clone(),
                    detail: format!("{}: {}", r.status, r.detail),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let [val, test] = self.fit_with(&features)?;
        Ok(Augmented {
            metrics: SplitMetrics {
                metric: val.kind,
                val: val.value,
                test: test.value,
            },
            gains: SplitGains {
                val: learners::relative_gain(self.base_metric(Split::Val), val)?,
                test: learners::relative_gain(self.base_metric(Split::Test), test)?,
            },
            complexities: features.iter().map(|f| f.fitted.expr().complexity()).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Augmented {
    pub metrics: SplitMetrics,
    pub gains: SplitGains,
    pub complexities: Vec<Complexity>,
}

/// Parses generator code, routing pandas-style text through the translator.
pub fn code_to_expr(code: &str) -> Result<Expr, String> {
    if is_legacy(code) {
        fexpr::translate_legacy_expr(code).map_err(|e| e.to_string())
    } else {
        fexpr::parse(code).map_err(|e| e.to_string())
    }
}

fn is_legacy(code: &str) -> bool {
    ["df[", "df.", "np.", "pd."].iter().any(|p| code.contains(p))
}

/// VALID records ranked by gain (descending), then iteration, then
/// expression text; repeated expressions keep their earliest record.
pub fn select_top_k(ledger: &[CandidateRecord], k: usize) -> Vec<CandidateRecord> {
    let mut seen = HashSet::new();
    let mut valid: Vec<&CandidateRecord> = ledger
        .iter()
        .filter(|r| r.is_valid())
        .filter(|r| seen.insert(r.expression.as_str()))
        .collect();
    valid.sort_by(|a, b| {
        let (ga, gb) = (a.gain.unwrap_or(f64::NAN), b.gain.unwrap_or(f64::NAN));
        gb.total_cmp(&ga)
            .then(a.iteration.cmp(&b.iteration))
            .then(a.expression.cmp(&b.expression))
    });
    valid.into_iter().take(k).cloned().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: usize,
    /// Present in full mode only.
    pub epsilon: Option<f64>,
    pub arm: PromptKind,
    pub reward: f64,
    /// Bandit values after this iteration's update; full mode only.
    pub q: Option<[f64; 6]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub feature_name: String,
    pub expression: String,
    pub iteration: usize,
    pub reasoning_type: PromptKind,
    pub gain: f64,
    pub complexity: Complexity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: String,
    pub task: TaskKind,
    pub target: String,
    pub learner: LearnerKind,
    pub baseline: SplitMetrics,
    pub augmented: SplitMetrics,
    pub gains: SplitGains,
    pub selected: Vec<SelectedFeature>,
    pub bandit_trace: Vec<TraceEntry>,
    pub ledger_file: String,
    pub status_counts: BTreeMap<String, usize>,
    pub generator_calls: usize,
    pub config: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
}

/// Everything a run produced, also written to the run directory.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub ledger: Vec<CandidateRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedEntry {
    pub feature_name: String,
    pub expression: String,
}

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const TRACE_FILE: &str = "bandit_trace.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const SELECTED_FILE: &str = "selected_features.json";

/// Writes `text` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, text: &str) -> std::io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, dir.join(name))
}

fn checkpoint(out: Option<&Path>, ledger: &[CandidateRecord], trace: &[TraceEntry]) -> std::io::Result<()> {
    if let Some(dir) = out {
        write_atomic(dir, LEDGER_FILE, &to_jsonl(ledger))?;
        write_atomic(dir, TRACE_FILE, &to_jsonl(trace))?;
    }
    Ok(())
}

fn evaluate_code(
    evaluator: &Evaluator<'_>,
    iteration: usize,
    kind: PromptKind,
    cand: &promptkit::Candidate,
) -> CandidateRecord {
    let mut record = CandidateRecord {
        iteration,
        reasoning_type: kind,
        feature_name: cand.feature_name.clone(),
        expression: cand.code.clone(),
        code: cand.code.clone(),
        status: Status::Valid,
        gain: None,
        error_detail: String::new(),
    };
    let expr = match code_to_expr(&cand.code) {
        Ok(e) => e,
        Err(detail) => {
            record.status = Status::ParseError;
            record.error_detail = detail;
            return record;
        }
    };
    record.expression = expr.to_string();
    match evaluator.evaluate_candidate(&expr) {
        Ok(gain) => record.gain = Some(gain),
        Err(r) => {
            record.status = r.status;
            record.error_detail = r.detail;
        }
    }
    record
}

/// Runs the discovery loop. With `out` set, the ledger and bandit trace are
/// checkpointed after every iteration, including when the generator fails.
pub fn run(
    bundle: &DatasetBundle,
    config: &EngineConfig,
    generator: &dyn Generator,
    dataset_name: &str,
    out: Option<&Path>,
) -> Result<RunOutput, EngineError> {
    config.validate()?;
    let started = Instant::now();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let learner = config.learner_for(bundle.task);
    let evaluator = Evaluator::new(bundle, learner, config.hyper_for(learner))?;
    let few_shot_k = config.few_shot_k.min(bundle.train.n_rows());
    let mut ctx = PromptContext {
        task_description: format!(
            "{}\nTarget column: {} ({})",
            bundle.meta.task_description.trim(),
            bundle.target,
            task_label(bundle.task)
        ),
        feature_description: promptkit::describe_columns(&bundle.schema(), &bundle.meta, &bundle.feature_names()),
        few_shot: sample_few_shot(bundle, few_shot_k, config.seed)?,
        previous_results: String::new(),
    };
    let mut bandit =
        BanditState::new(config.iterations, config.q0, config.seed).map_err(|e| EngineError::Config(e.to_string()))?;
    let mut ledger: Vec<CandidateRecord> = Vec::new();
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut calls = 0usize;

    for t in 0..config.iterations {
        let mut epsilon = None;
        let kind = match config.mode {
            Mode::Full => {
                epsilon = Some(bandit.epsilon().map_err(|e| EngineError::Config(e.to_string()))?);
                PromptKind::Reasoning(bandit.select().map_err(|e| EngineError::Config(e.to_string()))?)
            }
            Mode::UniformSelect => PromptKind::Reasoning(ReasoningType::ALL[t % ReasoningType::ALL.len()]),
            Mode::SingleType(r) => PromptKind::Reasoning(r),
            Mode::NoGuide => PromptKind::NoGuide,
        };
        ctx.previous_results = promptkit::summarize_ledger(&ledger, config.previous_results_limit);
        let prompt = promptkit::render(kind, &ctx)?;
        calls += 1;
        let response = match generator.complete(&Request::keyed(prompt, format!("{}:{t}", kind.name()))) {
            Ok(r) => r,
            Err(source) => {
                checkpoint(out, &ledger, &trace)?;
                return Err(EngineError::Generator { iteration: t, source });
            }
        };
        let records: Vec<CandidateRecord> = match promptkit::parse_response(&response, config.candidates_per_prompt) {
            Ok(parsed) => parsed
                .candidates
                .par_iter()
                .map(|c| evaluate_code(&evaluator, t, kind, c))
                .collect(),
            Err(e) => vec![CandidateRecord {
                iteration: t,
                reasoning_type: kind,
                feature_name: String::new(),
                expression: String::new(),
                code: String::new(),
                status: Status::ParseError,
                gain: None,
                error_detail: format!("response: {e}"),
            }],
        };
        let best = records
            .iter()
            .filter_map(|r| r.gain)
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))));
        let [lo, hi] = config.reward_clip;
        let reward = best.map_or(0.0, |g| g.clamp(lo, hi));
        let mut q = None;
        if let (Mode::Full, PromptKind::Reasoning(arm)) = (config.mode, kind) {
            bandit
                .update(arm, reward)
                .map_err(|e| EngineError::Config(e.to_string()))?;
            q = Some(bandit.q());
        }
        log::info!(
            "iteration {t}: {kind}, {} candidates, {} valid, reward {reward:.4}",
            records.len(),
            records.iter().filter(|r| r.is_valid()).count()
        );
        ledger.extend(records);
        trace.push(TraceEntry {
            t,
            epsilon,
            arm: kind,
            reward,
            q,
        });
        checkpoint(out, &ledger, &trace)?;
    }

    let top = select_top_k(&ledger, config.top_k);
    let exprs: Vec<(String, Expr)> = top
        .iter()
        .map(|r| {
            let e = fexpr::parse(&r.expression).expect("VALID records hold canonical expressions");
            (r.feature_name.clone(), e)
        })
        .collect();
    let augmented = evaluator.evaluate_set(&exprs)?;
    let mut status_counts = BTreeMap::new();
    for r in &ledger {
        *status_counts.entry(r.status.to_string()).or_insert(0) += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    log::info!("run finished in {elapsed:.2} s");
    let report = RunReport {
        dataset: dataset_name.to_string(),
        method: config.mode.to_string(),
        task: bundle.task,
        target: bundle.target.clone(),
        learner,
        baseline: evaluator.baseline(),
        augmented: augmented.metrics,
        gains: augmented.gains,
        selected: top
            .iter()
            .zip(&exprs)
            .map(|(r, (_, e))| SelectedFeature {
                feature_name: r.feature_name.clone(),
                expression: r.expression.clone(),
                iteration: r.iteration,
                reasoning_type: r.reasoning_type,
                gain: r.gain.expect("valid"),
                complexity: e.complexity(),
            })
            .collect(),
        bandit_trace: trace.clone(),
        ledger_file: LEDGER_FILE.to_string(),
        status_counts,
        generator_calls: calls,
        config: config.clone(),
        wall_clock_secs: config.record_timing.then_some(elapsed),
    };
    if let Some(dir) = out {
        checkpoint(out, &ledger, &trace)?;
        let selected: Vec<SelectedEntry> = report
            .selected
            .iter()
            .map(|s| SelectedEntry {
                feature_name: s.feature_name.clone(),
                expression: s.expression.clone(),
            })
            .collect();
        write_atomic(
            dir,
            SELECTED_FILE,
            &(serde_json::to_string_pretty(&selected).expect("serializes") + "\n"),
        )?;
        write_atomic(
            dir,
            REPORT_FILE,
            &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"),
        )?;
    }
    Ok(RunOutput { report, ledger })
}

fn task_label(task: TaskKind) -> &'static str {
    match task {
        TaskKind::BinaryClassification => "binary classification",
        TaskKind::MulticlassClassification => "multiclass classification",
        TaskKind::Regression => "regression",
    }
}

/// Reads a run directory's `selected_features.json`; entries may also be
/// bare expression strings.
pub fn read_selected(path: &Path) -> Result<Vec<SelectedEntry>, EngineError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Full(SelectedEntry),
        Bare(String),
    }
    let text = fs::read_to_string(path)?;
    let entries: Vec<Entry> =
        serde_json::from_str(&text).map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
    Ok(entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| match e {
            Entry::Full(s) => s,
            Entry::Bare(expression) => SelectedEntry {
                feature_name: format!("feature_{}", i + 1),
                expression,
            },
        })
        .collect())
}

pub fn run_dir_files(dir: &Path) -> [PathBuf; 4] {
    [LEDGER_FILE, TRACE_FILE, REPORT_FILE, SELECTED_FILE].map(|f| dir.join(f))
}
