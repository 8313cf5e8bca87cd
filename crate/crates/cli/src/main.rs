//! `refeat`: reasoning-guided feature discovery from the command line.
//!
//! Exit codes: 0 success, 1 unexpected I/O failure, 2 configuration or input
//! error, 3 generator failure, 4 a feature incompatible with the dataset.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use refeat_core::diagnostics::{
    self, DatasetScores, DiagError, DistributionScope, FamiliarityReport, GainSummary, SemanticReport,
    StructuralReport, WinMatrix,
};
use refeat_core::engine::{self, EngineConfig, EngineError, Mode, RunReport};
use refeat_core::fexpr::{self, Complexity, Expr};
use refeat_core::learners::{LearnerKind, MetricKind};
use refeat_core::ledger::{self, CandidateRecord};
use refeat_core::llm::{self, Backend, Generator, GeneratorConfig};
use refeat_core::promptkit::PromptKind;
use refeat_core::tabular::{
    self, Column, DataError, DatasetBundle, MetadataFile, Split, SplitFractions, Table, TaskKind,
};

#[derive(Parser)]
#[command(
    name = "refeat",
    version,
    about = "Reasoning-guided feature discovery for tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the discovery loop and write a run directory.
    Discover(DiscoverArgs),
    /// Score a feature list against the baseline model.
    Evaluate(EvaluateArgs),
    /// Measure how well the generator reproduces rows of the dataset.
    Probe(ProbeArgs),
    /// Structural, semantic and reasoning-type statistics of run ledgers.
    Diagnose(DiagnoseArgs),
    /// Pairwise win ratios and gain summaries across run reports.
    Winmatrix(WinmatrixArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dataset metadata JSON.
    #[arg(long)]
    meta: Option<PathBuf>,
    /// The single seed for splitting, sampling and selection.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    val_frac: Option<f64>,
    #[arg(long)]
    test_frac: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct GeneratorArgs {
    #[arg(long, value_parser = parse_backend)]
    backend: Option<Backend>,
    /// Script file for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Name of the environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    timeout_secs: Option<f64>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Run directory to create.
    #[arg(long)]
    out: Option<PathBuf>,
    /// full, uniform, single:<type> or no_guide.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    candidates_per_prompt: Option<usize>,
    #[arg(long, value_parser = parse_learner)]
    learner: Option<LearnerKind>,
    /// Name recorded in the report; defaults to the CSV file stem.
    #[arg(long)]
    dataset_name: Option<String>,
    /// Record wall-clock time in report.json (breaks byte-identical reruns).
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// selected_features.json, or a run directory holding one.
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_parser = parse_learner)]
    learner: Option<LearnerKind>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Rows shown in the header probe.
    #[arg(long)]
    rows: Option<usize>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Ledger files or run directories.
    #[arg(required = true)]
    ledgers: Vec<PathBuf>,
    /// Which records count: selected, valid or all.
    #[arg(long, default_value = "selected", value_parser = parse_scope)]
    scope: DistributionScope,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Quantile bins for mutual information.
    #[arg(long, default_value_t = diagnostics::DEFAULT_MI_BINS)]
    bins: usize,
    /// Dataset for the semantic metrics, computed on the validation split.
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct WinmatrixArgs {
    /// report.json files, run directories, or directories of run directories.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Also write the matrix as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown backend `{s}`"))
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown learner `{s}`"))
}

fn parse_scope(s: &str) -> Result<DistributionScope, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown scope `{s}`"))
}

/// Everything a command may read from the JSON config file. Every field has
/// a default except the dataset paths.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CliConfig {
    data: Option<PathBuf>,
    meta: Option<PathBuf>,
    out: Option<PathBuf>,
    dataset_name: Option<String>,
    seed: u64,
    split: SplitFractions,
    probe_rows: Option<usize>,
    engine: EngineConfig,
    generator: GeneratorConfig,
}

const DEFAULT_PROBE_ROWS: usize = 5;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl fmt::Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    fn config(message: impl fmt::Display) -> Self {
        Failure::new(2, message)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::Generator { .. } => 3,
            EngineError::Feature { .. } => 4,
            EngineError::Io(_) => 1,
            _ => 2,
        };
        Failure::new(code, e)
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::config(e)
    }
}

impl From<DiagError> for Failure {
    fn from(e: DiagError) -> Self {
        let code = if matches!(e, DiagError::Generator(_)) { 3 } else { 2 };
        Failure::new(code, e)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(1, format!("{}: {e}", path.display()))
}

fn usage_failure(subcommand: &str, message: &str) -> Failure {
    let mut cmd = Cli::command();
    cmd.build();
    let usage = cmd
        .find_subcommand_mut(subcommand)
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default();
    Failure::config(format!("{message}\n\n{usage}"))
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

/// Reads the config file; relative paths inside it resolve against its
/// directory.
fn load_config(path: Option<&Path>) -> Result<CliConfig, Failure> {
    let Some(path) = path else {
        return Ok(CliConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut cfg: CliConfig =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    resolve(base, &mut cfg.data);
    resolve(base, &mut cfg.meta);
    resolve(base, &mut cfg.out);
    resolve(base, &mut cfg.generator.script);
    resolve(base, &mut cfg.generator.cache_dir);
    Ok(cfg)
}

fn apply_data_flags(cfg: &mut CliConfig, a: &DataArgs) {
    if a.data.is_some() {
        cfg.data = a.data.clone();
    }
    if a.meta.is_some() {
        cfg.meta = a.meta.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(f) = a.train_frac {
        cfg.split.train = f;
    }
    if let Some(f) = a.val_frac {
        cfg.split.val = f;
    }
    if let Some(f) = a.test_frac {
        cfg.split.test = f;
    }
    cfg.engine.seed = cfg.seed;
}

fn apply_generator_flags(g: &mut GeneratorConfig, a: &GeneratorArgs) {
    if let Some(b) = a.backend {
        g.backend = b;
    }
    if a.script.is_some() {
        g.script = a.script.clone();
    }
    if let Some(e) = &a.endpoint {
        g.endpoint = e.clone();
    }
    if let Some(m) = &a.model {
        g.model_id = m.clone();
    }
    if let Some(t) = a.temperature {
        g.temperature = t;
    }
    if let Some(k) = &a.api_key_env {
        g.api_key_env = k.clone();
    }
    if a.cache_dir.is_some() {
        g.cache_dir = a.cache_dir.clone();
    }
    if let Some(r) = a.max_retries {
        g.max_retries = r;
    }
    if let Some(t) = a.timeout_secs {
        g.timeout_secs = t;
    }
}

fn config_with(data: &DataArgs) -> Result<CliConfig, Failure> {
    let mut cfg = load_config(data.config.as_deref())?;
    apply_data_flags(&mut cfg, data);
    Ok(cfg)
}

fn dataset_paths(cfg: &CliConfig, subcommand: &str) -> Result<(PathBuf, PathBuf), Failure> {
    let data = cfg
        .data
        .clone()
        .ok_or_else(|| usage_failure(subcommand, "missing --data (or `data` in the config file)"))?;
    let meta = cfg
        .meta
        .clone()
        .ok_or_else(|| usage_failure(subcommand, "missing --meta (or `meta` in the config file)"))?;
    Ok((data, meta))
}

fn load_table(cfg: &CliConfig, subcommand: &str) -> Result<(Table, MetadataFile, PathBuf), Failure> {
    let (data, meta) = dataset_paths(cfg, subcommand)?;
    let (table, meta) = tabular::load_dataset(&data, &meta)?;
    Ok((table, meta, data))
}

fn load_bundle(cfg: &CliConfig, subcommand: &str) -> Result<(DatasetBundle, PathBuf), Failure> {
    let (table, meta, data) = load_table(cfg, subcommand)?;
    let bundle = tabular::split(
        &table,
        &meta.target,
        meta.task,
        cfg.split,
        cfg.seed,
        meta.dataset_meta(),
    )?;
    Ok((bundle, data))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

fn build_generator(config: &GeneratorConfig, table: &Table, target: &str) -> Result<Box<dyn Generator>, Failure> {
    llm::build_generator(config, &table.schema(), target).map_err(Failure::config)
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializes"));
}

fn cmd_discover(a: &DiscoverArgs) -> Result<(), Failure> {
    let mut cfg = config_with(&a.data)?;
    apply_generator_flags(&mut cfg.generator, &a.generator);
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if let Some(m) = a.mode {
        cfg.engine.mode = m;
    }
    if let Some(t) = a.iterations {
        cfg.engine.iterations = t;
    }
    if let Some(k) = a.top_k {
        cfg.engine.top_k = k;
    }
    if let Some(c) = a.candidates_per_prompt {
        cfg.engine.candidates_per_prompt = c;
    }
    if a.learner.is_some() {
        cfg.engine.learner = a.learner;
    }
    if a.dataset_name.is_some() {
        cfg.dataset_name = a.dataset_name.clone();
    }
    cfg.engine.record_timing |= a.record_timing;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| usage_failure("discover", "missing --out (or `out` in the config file)"))?;
    cfg.engine.validate()?;
    let (bundle, data) = load_bundle(&cfg, "discover")?;
    let generator = build_generator(&cfg.generator, &bundle.train, &bundle.target)?;
    let name = cfg.dataset_name.clone().unwrap_or_else(|| file_stem(&data));
    log::info!("discovering features for `{name}` into {}", out.display());
    let output = engine::run(&bundle, &cfg.engine, generator.as_ref(), &name, Some(&out))?;
    print_json(&output.report);
    Ok(())
}

#[derive(Serialize)]
struct EvaluatedFeature {
    feature_name: String,
    expression: String,
    complexity: Complexity,
}

#[derive(Serialize)]
struct SplitPair {
    val: f64,
    test: f64,
}

#[derive(Serialize)]
struct EvaluateOutput {
    dataset: String,
    task: TaskKind,
    learner: LearnerKind,
    metric: MetricKind,
    baseline: SplitPair,
    augmented: SplitPair,
    gains: SplitPair,
    features: Vec<EvaluatedFeature>,
}

fn selected_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(engine::SELECTED_FILE)
    } else {
        p.to_path_buf()
    }
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let mut cfg = config_with(&a.data)?;
    if a.learner.is_some() {
        cfg.engine.learner = a.learner;
    }
    let (bundle, data) = load_bundle(&cfg, "evaluate")?;
    let entries = engine::read_selected(&selected_path(&a.features)).map_err(|e| match e {
        EngineError::Io(io) => Failure::config(format!("{}: {io}", a.features.display())),
        other => Failure::from(other),
    })?;
    let exprs: Vec<(String, Expr)> = entries
        .iter()
        .map(|s| {
            engine::code_to_expr(&s.expression)
                .map(|e| (s.feature_name.clone(), e))
                .map_err(|detail| Failure::new(4, format!("feature `{}` does not parse: {detail}", s.feature_name)))
        })
        .collect::<Result<_, _>>()?;
    let learner = cfg.engine.learner_for(bundle.task);
    let evaluator = engine::Evaluator::new(&bundle, learner, cfg.engine.hyper_for(learner))?;
    let augmented = evaluator.evaluate_set(&exprs)?;
    let baseline = evaluator.baseline();
    print_json(&EvaluateOutput {
        dataset: cfg.dataset_name.clone().unwrap_or_else(|| file_stem(&data)),
        task: bundle.task,
        learner,
        metric: baseline.metric,
        baseline: SplitPair {
            val: baseline.val,
            test: baseline.test,
        },
        augmented: SplitPair {
            val: augmented.metrics.val,
            test: augmented.metrics.test,
        },
        gains: SplitPair {
            val: augmented.gains.val,
            test: augmented.gains.test,
        },
        features: exprs
            .iter()
            .zip(augmented.complexities)
            .map(|((name, e), complexity)| EvaluatedFeature {
                feature_name: name.clone(),
                expression: e.to_string(),
                complexity,
            })
            .collect(),
    });
    Ok(())
}

#[derive(Serialize)]
struct ProbeOutput {
    dataset: String,
    t_rows: usize,
    pivot: usize,
    #[serde(flatten)]
    report: FamiliarityReport,
}

fn cmd_probe(a: &ProbeArgs) -> Result<(), Failure> {
    let mut cfg = config_with(&a.data)?;
    apply_generator_flags(&mut cfg.generator, &a.generator);
    let t_rows = a.rows.or(cfg.probe_rows).unwrap_or(DEFAULT_PROBE_ROWS);
    let (table, meta, data) = load_table(&cfg, "probe")?;
    let generator = build_generator(&cfg.generator, &table, &meta.target)?;
    let probes = diagnostics::probe_set(&table, t_rows, cfg.seed)?;
    let report = diagnostics::probe_familiarity(&table, generator.as_ref(), t_rows, cfg.seed)?;
    print_json(&ProbeOutput {
        dataset: cfg.dataset_name.clone().unwrap_or_else(|| file_stem(&data)),
        t_rows,
        pivot: probes.pivot,
        report,
    });
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseOutput {
    ledgers: usize,
    scope: DistributionScope,
    features: Vec<String>,
    structural: Option<StructuralReport>,
    semantic: Option<SemanticReport>,
    reasoning_distribution: BTreeMap<PromptKind, f64>,
}

fn read_ledger(p: &Path) -> Result<Vec<CandidateRecord>, Failure> {
    let path = if p.is_dir() {
        p.join(engine::LEDGER_FILE)
    } else {
        p.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    ledger::parse_jsonl(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// Canonical expressions of the records in scope; records whose expression
/// does not parse (failed candidates) are skipped.
fn scoped_exprs(ledgers: &[Vec<CandidateRecord>], scope: DistributionScope, top_k: usize) -> Vec<Expr> {
    let mut out = Vec::new();
    for l in ledgers {
        let records: Vec<CandidateRecord> = match scope {
            DistributionScope::Selected => engine::select_top_k(l, top_k),
            DistributionScope::Valid => l.iter().filter(|r| r.is_valid()).cloned().collect(),
            DistributionScope::All => l.clone(),
        };
        out.extend(records.iter().filter_map(|r| fexpr::parse(&r.expression).ok()));
    }
    out
}

fn semantic(cfg: &CliConfig, exprs: &[Expr], bins: usize) -> Result<SemanticReport, Failure> {
    let (bundle, _) = load_bundle(cfg, "diagnose")?;
    let val = bundle.table(Split::Val);
    let features = exprs
        .iter()
        .map(|e| {
            fexpr::typecheck(e, &bundle.schema(), &bundle.target)
                .map_err(|err| Failure::new(4, format!("feature `{e}`: {err}")))?;
            let fitted =
                fexpr::fit(e, &bundle.train).map_err(|err| Failure::new(4, format!("feature `{e}`: {err}")))?;
            fitted
                .eval(val)
                .map_err(|err| Failure::new(4, format!("feature `{e}`: {err}")))
        })
        .collect::<Result<Vec<Column>, _>>()?;
    let target_col = val.column(&bundle.target).expect("bundle target");
    // Class labels are codes, never quantile-binned.
    let target = if bundle.task.is_classification() {
        let labels: Vec<String> = (0..target_col.len()).map(|r| target_col.format_value(r)).collect();
        Column::categorical(bundle.target.clone(), &labels)
    } else {
        target_col.clone()
    };
    Ok(diagnostics::semantic_report(&features, &target, bins)?)
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<(), Failure> {
    let ledgers = a
        .ledgers
        .iter()
        .map(|p| read_ledger(p))
        .collect::<Result<Vec<_>, _>>()?;
    let exprs = scoped_exprs(&ledgers, a.scope, a.top_k);
    let structural = if exprs.is_empty() {
        None
    } else {
        Some(diagnostics::structural_stats(&exprs)?)
    };
    let cfg = config_with(&a.data)?;
    let semantic = if cfg.data.is_some() && !exprs.is_empty() {
        Some(semantic(&cfg, &exprs, a.bins)?)
    } else {
        None
    };
    print_json(&DiagnoseOutput {
        ledgers: ledgers.len(),
        scope: a.scope,
        features: exprs.iter().map(Expr::to_string).collect(),
        structural,
        semantic,
        reasoning_distribution: diagnostics::reasoning_distribution(&ledgers, a.scope, a.top_k),
    });
    Ok(())
}

/// Method label of the unaugmented baseline in the win matrix.
const ORIGINAL: &str = "original";

#[derive(Serialize)]
struct WinmatrixOutput {
    datasets: Vec<String>,
    win_matrix: WinMatrix,
    /// Test-split gains per method.
    gains: BTreeMap<String, GainSummary>,
}

fn collect_reports(p: &Path, out: &mut Vec<PathBuf>) -> Result<(), Failure> {
    if p.is_file() {
        out.push(p.to_path_buf());
        return Ok(());
    }
    let direct = p.join(engine::REPORT_FILE);
    if direct.is_file() {
        out.push(direct);
        return Ok(());
    }
    let mut found: Vec<PathBuf> = fs::read_dir(p)
        .map_err(|e| Failure::config(format!("{}: {e}", p.display())))?
        .filter_map(|e| e.ok().map(|e| e.path().join(engine::REPORT_FILE)))
        .filter(|r| r.is_file())
        .collect();
    if found.is_empty() {
        return Err(Failure::config(format!(
            "{}: no {} found",
            p.display(),
            engine::REPORT_FILE
        )));
    }
    found.sort();
    out.extend(found);
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn matrix_csv(m: &WinMatrix) -> String {
    let mut out = String::from("method");
    for name in &m.methods {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for (name, row) in m.methods.iter().zip(&m.w) {
        out.push_str(&csv_field(name));
        for cell in row {
            out.push(',');
            if let Some(v) = cell {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn cmd_winmatrix(a: &WinmatrixArgs) -> Result<(), Failure> {
    let mut paths = Vec::new();
    for p in &a.reports {
        collect_reports(p, &mut paths)?;
    }
    let mut by_dataset: BTreeMap<String, DatasetScores> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut gains: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for path in &paths {
        let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let report: RunReport =
            serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        if report.method == ORIGINAL {
            return Err(Failure::config(format!(
                "{}: method name `{ORIGINAL}` is reserved",
                path.display()
            )));
        }
        let entry = by_dataset.entry(report.dataset.clone()).or_insert_with(|| {
            order.push(report.dataset.clone());
            DatasetScores {
                dataset: report.dataset.clone(),
                higher_is_better: report.baseline.metric.higher_is_better(),
                scores: BTreeMap::new(),
            }
        });
        if entry.scores.contains_key(&report.method) {
            return Err(Failure::config(format!(
                "{}: second `{}` report for dataset `{}`",
                path.display(),
                report.method,
                report.dataset
            )));
        }
        match entry.scores.get(ORIGINAL) {
            Some(b) if *b != report.baseline.test => log::warn!(
                "dataset `{}`: baselines differ between reports ({b} vs {}); keeping the first",
                report.dataset,
                report.baseline.test
            ),
            Some(_) => {}
            None => {
                entry.scores.insert(ORIGINAL.to_string(), report.baseline.test);
            }
        }
        entry.scores.insert(report.method.clone(), report.augmented.test);
        gains.entry(report.method.clone()).or_default().push(report.gains.test);
    }
    let results: Vec<DatasetScores> = order.iter().map(|d| by_dataset[d].clone()).collect();
    let matrix = diagnostics::win_matrix(&results);
    let gains = gains
        .into_iter()
        .map(|(m, g)| Ok((m, diagnostics::aggregate_gains(&g)?)))
        .collect::<Result<BTreeMap<_, _>, Failure>>()?;
    if let Some(csv) = &a.csv {
        fs::write(csv, matrix_csv(&matrix)).map_err(|e| io_failure(csv, e))?;
    }
    print_json(&WinmatrixOutput {
        datasets: order,
        win_matrix: matrix,
        gains,
    });
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Discover(a) => cmd_discover(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Winmatrix(a) => cmd_winmatrix(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
