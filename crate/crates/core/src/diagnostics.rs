//! Familiarity probes, feature-quality metrics and cross-run aggregation.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::select_top_k;
use crate::fexpr::Expr;
use crate::ledger::CandidateRecord;
use crate::llm::{Generator, LlmError, Request};
use crate::promptkit::PromptKind;
use crate::stats;
use crate::tabular::{Column, ColumnData, Table};

pub const DEFAULT_MI_BINS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum DiagError {
    #[error("need at least {needed} rows, table has {rows}")]
    TableTooSmall { needed: usize, rows: usize },
    #[error("generator: {0}")]
    Generator(#[from] LlmError),
    #[error("need at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("columns differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} rows, got {rows}")]
    TooFewRows { needed: usize, rows: usize },
    #[error("no rows left after dropping missing values")]
    NoRows,
    #[error("empty input")]
    Empty,
}

/// Edit distance over Unicode scalar values divided by the longer length.
pub fn levenshtein_norm(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(&a, &b) as f64 / longest as f64
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamiliarityReport {
    pub d_head: f64,
    pub d_row: f64,
    pub f: f64,
}

impl FamiliarityReport {
    pub fn from_distances(d_head: f64, d_row: f64) -> Self {
        FamiliarityReport {
            d_head,
            d_row,
            f: 1.0 - (d_head + d_row) / 2.0,
        }
    }
}

/// Prompts and ground-truth rows of the two probes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeSet {
    pub head_prompt: String,
    pub head_truth: String,
    pub pivot: usize,
    pub row_prompt: String,
    pub row_truth: String,
}

/// Header probe: header plus the first `t_rows` rows, asking for the next.
/// Row probe: a seeded pivot row `r` in `[0, n - 2]`, asking for row `r + 1`.
pub fn probe_set(table: &Table, t_rows: usize, seed: u64) -> Result<ProbeSet, DiagError> {
    let n = table.n_rows();
    let needed = t_rows + 2;
    if n < needed {
        return Err(DiagError::TableTooSmall { needed, rows: n });
    }
    let header = table.header_line();
    let first: Vec<String> = (0..t_rows).map(|r| table.row_line(r)).collect();
    let mut head_prompt = format!(
        "Below are the header and the first {t_rows} rows of a dataset, as comma-separated values.\n{header}\n"
    );
    for line in &first {
        head_prompt.push_str(line);
        head_prompt.push('\n');
    }
    head_prompt.push_str("Reproduce the next row of the dataset exactly. Reply with that single row only.");
    let pivot = ChaCha8Rng::seed_from_u64(seed).gen_range(0..=n - 2);
    let row_prompt = format!(
        "Below is the header and one row of a dataset, as comma-separated values.\n{header}\n{}\n\
         Reproduce the row that immediately follows it in the dataset exactly. Reply with that single row only.",
        table.row_line(pivot)
    );
    Ok(ProbeSet {
        head_prompt,
        head_truth: table.row_line(t_rows),
        pivot,
        row_prompt,
        row_truth: table.row_line(pivot + 1),
    })
}

fn first_line(text: &str) -> &str {
    text.lines().next().unwrap_or("").trim()
}

pub fn probe_familiarity(
    table: &Table,
    generator: &dyn Generator,
    t_rows: usize,
    seed: u64,
) -> Result<FamiliarityReport, DiagError> {
    let probes = probe_set(table, t_rows, seed)?;
    let (head, row) = rayon::join(
        || generator.complete(&Request::keyed(probes.head_prompt.clone(), "probe:head")),
        || generator.complete(&Request::keyed(probes.row_prompt.clone(), "probe:row")),
    );
    let d_head = levenshtein_norm(first_line(&head?), &probes.head_truth);
    let d_row = levenshtein_norm(first_line(&row?), &probes.row_truth);
    Ok(FamiliarityReport::from_distances(d_head, d_row))
}

/// One minus the mean absolute pairwise Pearson correlation.
pub fn functional_diversity(features: &[&[f64]]) -> Result<f64, DiagError> {
    if features.len() < 2 {
        return Err(DiagError::TooFewFeatures(features.len()));
    }
    let n = features[0].len();
    if let Some(f) = features.iter().find(|f| f.len() != n) {
        return Err(DiagError::LengthMismatch(n, f.len()));
    }
    if n < 2 {
        return Err(DiagError::TooFewRows { needed: 2, rows: n });
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..features.len() {
        for j in i + 1..features.len() {
            total += stats::pearson(features[i], features[j]).abs();
            pairs += 1;
        }
    }
    Ok(1.0 - total / pairs as f64)
}

/// Discrete codes per row; `None` marks a missing value.
fn discretize(col: &Column, bins: usize) -> Vec<Option<u64>> {
    match col.data() {
        ColumnData::Categorical { codes, .. } => codes.iter().map(|&c| Some(u64::from(c))).collect(),
        ColumnData::Numeric(values) => {
            let mut distinct: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            // Few distinct values (flags, integer labels) are codes already;
            // quantile edges could merge them into one bin.
            if distinct.len() <= bins {
                return values
                    .iter()
                    .map(|v| v.is_finite().then(|| distinct.partition_point(|d| d < v) as u64))
                    .collect();
            }
            let edges = stats::quantile_edges(values, bins);
            values
                .iter()
                .map(|&v| v.is_finite().then(|| stats::bin_index(&edges, v) as u64))
                .collect()
        }
    }
}

/// Plug-in mutual information in nats. Numeric columns are cut into at most
/// `bins` quantile bins; categorical columns use their labels.
pub fn mutual_information(feature: &Column, target: &Column, bins: usize) -> Result<f64, DiagError> {
    if feature.len() != target.len() {
        return Err(DiagError::LengthMismatch(feature.len(), target.len()));
    }
    if feature.len() < 10 {
        return Err(DiagError::TooFewRows {
            needed: 10,
            rows: feature.len(),
        });
    }
    let (x, y) = (discretize(feature, bins), discretize(target, bins));
    let pairs: Vec<(u64, u64)> = x.iter().zip(&y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
    if pairs.is_empty() {
        return Err(DiagError::NoRows);
    }
    Ok(mi_from_pairs(&pairs))
}

fn mi_from_pairs(pairs: &[(u64, u64)]) -> f64 {
    let n = pairs.len() as f64;
    let mut joint: HashMap<(u64, u64), usize> = HashMap::new();
    let mut px: HashMap<u64, usize> = HashMap::new();
    let mut py: HashMap<u64, usize> = HashMap::new();
    for &(a, b) in pairs {
        *joint.entry((a, b)).or_default() += 1;
        *px.entry(a).or_default() += 1;
        *py.entry(b).or_default() += 1;
    }
    // Sorted summation keeps the result independent of hash order.
    let mut cells: Vec<((u64, u64), usize)> = joint.into_iter().collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .iter()
        .map(|&((a, b), c)| {
            let pxy = c as f64 / n;
            pxy * (c as f64 * n / (px[&a] as f64 * py[&b] as f64)).ln()
        })
        .sum();
    mi.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticReport {
    /// Absent with fewer than two features.
    pub functional_diversity: Option<f64>,
    pub mean_mi: f64,
    pub mi: Vec<f64>,
}

/// Diversity among `features` and the MI of each against `target`.
pub fn semantic_report(features: &[Column], target: &Column, bins: usize) -> Result<SemanticReport, DiagError> {
    if features.is_empty() {
        return Err(DiagError::Empty);
    }
    let values: Vec<&[f64]> = features.iter().filter_map(Column::as_numeric).collect();
    let functional_diversity = if values.len() >= 2 {
        Some(functional_diversity(&values)?)
    } else {
        None
    };
    let mi = features
        .iter()
        .map(|f| mutual_information(f, target, bins))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SemanticReport {
        functional_diversity,
        mean_mi: mi.iter().sum::<f64>() / mi.len() as f64,
        mi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub mean_num_ops: f64,
    pub mean_depth: f64,
}

pub fn structural_stats(exprs: &[Expr]) -> Result<StructuralReport, DiagError> {
    if exprs.is_empty() {
        return Err(DiagError::Empty);
    }
    let n = exprs.len() as f64;
    let (ops, depth) = exprs
        .iter()
        .map(Expr::complexity)
        .fold((0usize, 0usize), |(o, d), c| (o + c.num_ops, d + c.depth));
    Ok(StructuralReport {
        mean_num_ops: ops as f64 / n,
        mean_depth: depth as f64 / n,
    })
}

/// Scores of every method on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetScores {
    pub dataset: String,
    pub higher_is_better: bool,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinMatrix {
    pub methods: Vec<String>,
    /// `w[i][j]`: share of decided datasets where method `i` beats `j`;
    /// `None` on the diagonal and where every shared dataset is a tie.
    pub w: Vec<Vec<Option<f64>>>,
    pub wins: Vec<Vec<usize>>,
    pub ties: Vec<Vec<usize>>,
}

/// Pairwise win ratios; methods are ordered by first appearance. A dataset
/// missing either method is skipped for that pair.
pub fn win_matrix(results: &[DatasetScores]) -> WinMatrix {
    let mut methods: Vec<String> = Vec::new();
    for d in results {
        for m in d.scores.keys() {
            if !methods.contains(m) {
                methods.push(m.clone());
            }
        }
    }
    let k = methods.len();
    let mut wins = vec![vec![0usize; k]; k];
    let mut ties = vec![vec![0usize; k]; k];
    for d in results {
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let (Some(a), Some(b)) = (d.scores.get(&methods[i]), d.scores.get(&methods[j])) else {
                    continue;
                };
                let better = if d.higher_is_better { a > b } else { a < b };
                if a == b {
                    ties[i][j] += 1;
                } else if better {
                    wins[i][j] += 1;
                }
            }
        }
    }
    let w = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let decided = wins[i][j] + wins[j][i];
                    (i != j && decided > 0).then(|| wins[i][j] as f64 / decided as f64)
                })
                .collect()
        })
        .collect();
    WinMatrix { methods, w, wins, ties }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
}

pub fn aggregate_gains(gains: &[f64]) -> Result<GainSummary, DiagError> {
    let median = stats::median(gains).ok_or(DiagError::Empty)?;
    Ok(GainSummary {
        n: gains.len(),
        mean: gains.iter().sum::<f64>() / gains.len() as f64,
        median,
    })
}

/// Which records count toward the reasoning-type distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionScope {
    /// The top-`k` selection of each ledger.
    #[default]
    Selected,
    Valid,
    All,
}

pub fn reasoning_distribution(
    ledgers: &[Vec<CandidateRecord>],
    scope: DistributionScope,
    top_k: usize,
) -> BTreeMap<PromptKind, f64> {
    let mut counts: BTreeMap<PromptKind, usize> = BTreeMap::new();
    for ledger in ledgers {
        let kinds: Vec<PromptKind> = match scope {
            DistributionScope::Selected => select_top_k(ledger, top_k).iter().map(|r| r.reasoning_type).collect(),
            DistributionScope::Valid => ledger
                .iter()
                .filter(|r| r.is_valid())
                .map(|r| r.reasoning_type)
                .collect(),
            DistributionScope::All => ledger.iter().map(|r| r.reasoning_type).collect(),
        };
        for k in kinds {
            *counts.entry(k).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect()
}
