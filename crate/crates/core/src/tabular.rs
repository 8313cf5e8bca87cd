//! Column-oriented tables, dataset splits, and design-matrix encoding.
//!
//! Numeric missing values are stored as `NaN` (see [`MISSING`]). Categorical
//! columns intern their labels into a dictionary; an empty CSV field is just
//! another label.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats;

/// Sentinel for a missing numeric value.
pub const MISSING: f64 = f64::NAN;

/// Maximum number of one-hot categories kept per column; the rest share the
/// overflow bucket.
pub const MAX_CATEGORIES: usize = 64;

#[inline]
pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("metadata error: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error("metadata column `{0}` is not in the CSV header")]
    ColumnNotInHeader(String),
    #[error("CSV column `{0}` is not declared in the metadata")]
    ColumnNotInMetadata(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("column `{name}` has {len} rows, expected {expected}")]
    LengthMismatch { name: String, len: usize, expected: usize },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("target `{0}` has a missing value at row {1}")]
    MissingTarget(String, usize),
    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    BadFractions([f64; 3]),
    #[error("class `{class}` has {count} rows; at least 3 are needed to stratify")]
    ClassTooSmall { class: String, count: usize },
    #[error("classification needs at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("requested {k} few-shot rows but the train split has {rows}")]
    FewShotTooLarge { k: usize, rows: usize },
    #[error("table has no rows")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Numeric => f.write_str("numeric"),
            ColumnKind::Categorical => f.write_str("categorical"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<u32>, labels: Vec<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    /// Builds a categorical column, interning labels in order of first
    /// appearance.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let codes = values
            .iter()
            .map(|v| {
                let v = v.as_ref();
                *index.entry(v.to_string()).or_insert_with(|| {
                    labels.push(v.to_string());
                    (labels.len() - 1) as u32
                })
            })
            .collect();
        Column {
            name: name.into(),
            data: ColumnData::Categorical { codes, labels },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            _ => None,
        }
    }

    /// Label of a categorical cell; `None` for numeric columns.
    pub fn label(&self, row: usize) -> Option<&str> {
        match &self.data {
            ColumnData::Categorical { codes, labels } => Some(&labels[codes[row] as usize]),
            _ => None,
        }
    }

    /// Text form of one cell as it would appear in a CSV row.
    pub fn format_value(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Numeric(v) => format_number(v[row]),
            ColumnData::Categorical { codes, labels } => labels[codes[row] as usize].clone(),
        }
    }

    pub fn take(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical { codes, labels } => ColumnData::Categorical {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                labels: labels.clone(),
            },
        };
        Column {
            name: self.name.clone(),
            data,
        }
    }
}

/// Formats a numeric cell; missing values print as an empty field.
pub fn format_number(v: f64) -> String {
    if is_missing(v) {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Column name to kind.
pub type Schema = BTreeMap<String, ColumnKind>;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            if c.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    name: c.name.clone(),
                    len: c.len(),
                    expected: n_rows,
                });
            }
        }
        Ok(Table { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn schema(&self) -> Schema {
        self.columns.iter().map(|c| (c.name.clone(), c.kind())).collect()
    }

    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    /// Returns a copy with one column replaced (matched by name).
    pub fn with_column(&self, column: Column) -> Result<Table, DataError> {
        let mut columns = self.columns.clone();
        match columns.iter_mut().find(|c| c.name == column.name) {
            Some(slot) => *slot = column,
            None => columns.push(column),
        }
        Table::new(columns)
    }

    /// Comma-joined header line.
    pub fn header_line(&self) -> String {
        self.column_names().collect::<Vec<_>>().join(",")
    }

    /// Comma-joined values of one row, in column order.
    pub fn row_line(&self, row: usize) -> String {
        self.columns
            .iter()
            .map(|c| c.format_value(row))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "binary")]
    BinaryClassification,
    #[serde(rename = "multiclass")]
    MulticlassClassification,
    #[serde(rename = "regression")]
    Regression,
}

impl TaskKind {
    pub fn is_classification(self) -> bool {
        !matches!(self, TaskKind::Regression)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub task_description: String,
    pub column_descriptions: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub description: String,
}

/// The JSON metadata file that accompanies a dataset CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetadataFile {
    pub task: TaskKind,
    pub target: String,
    #[serde(default)]
    pub description: String,
    pub columns: Vec<ColumnSpec>,
}

impl MetadataFile {
    pub fn from_path(path: &Path) -> Result<Self, DataError> {
        let file = File::open(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let meta: MetadataFile = serde_json::from_reader(file)?;
        meta.validate()?;
        Ok(meta)
    }

    fn validate(&self) -> Result<(), DataError> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
        }
        if !seen.contains(self.target.as_str()) {
            return Err(DataError::UnknownColumn(self.target.clone()));
        }
        Ok(())
    }

    pub fn dataset_meta(&self) -> DatasetMeta {
        DatasetMeta {
            task_description: self.description.clone(),
            column_descriptions: self
                .columns
                .iter()
                .map(|c| (c.name.clone(), c.description.clone()))
                .collect(),
        }
    }
}

/// Reads a CSV file, typing columns as the metadata declares.
pub fn load_csv(path: &Path, meta: &MetadataFile) -> Result<Table, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, meta)
}

/// Loads both the metadata file and the CSV it describes.
pub fn load_dataset(csv_path: &Path, meta_path: &Path) -> Result<(Table, MetadataFile), DataError> {
    let meta = MetadataFile::from_path(meta_path)?;
    let table = load_csv(csv_path, &meta)?;
    Ok((table, meta))
}

pub fn read_csv<R: Read>(reader: R, meta: &MetadataFile) -> Result<Table, DataError> {
    meta.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateColumn(h.clone()));
        }
    }
    let kinds: HashMap<&str, ColumnKind> = meta.columns.iter().map(|c| (c.name.as_str(), c.kind)).collect();
    for c in &meta.columns {
        if !seen.contains(c.name.as_str()) {
            return Err(DataError::ColumnNotInHeader(c.name.clone()));
        }
    }
    for h in &header {
        if !kinds.contains_key(h.as_str()) {
            return Err(DataError::ColumnNotInMetadata(h.clone()));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        for (i, slot) in cells.iter_mut().enumerate() {
            slot.push(record.get(i).unwrap_or("").to_string());
        }
    }

    let columns = header
        .iter()
        .zip(cells)
        .map(|(name, raw)| match kinds[name.as_str()] {
            ColumnKind::Numeric => Column::numeric(
                name.clone(),
                raw.iter()
                    .map(|s| match s.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => v,
                        _ => MISSING,
                    })
                    .collect(),
            ),
            ColumnKind::Categorical => Column::categorical(name.clone(), &raw),
        })
        .collect();
    Table::new(columns)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    fn validate(&self) -> Result<(), DataError> {
        let f = [self.train, self.val, self.test];
        let ok = f.iter().all(|&x| x.is_finite() && x > 0.0) && (f.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(DataError::BadFractions(f))
        }
    }
}

/// Row indices of the original table assigned to each split, ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Prediction targets in learner-ready form.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub train: Table,
    pub val: Table,
    pub test: Table,
    pub target: String,
    pub task: TaskKind,
    pub meta: DatasetMeta,
    /// Sorted class labels for classification tasks; empty for regression.
    pub classes: Vec<String>,
    pub indices: SplitIndices,
}

impl DatasetBundle {
    pub fn table(&self, split: Split) -> &Table {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Non-target column names in schema order.
    pub fn feature_names(&self) -> Vec<String> {
        self.train
            .column_names()
            .filter(|n| *n != self.target)
            .map(str::to_string)
            .collect()
    }

    pub fn schema(&self) -> Schema {
        self.train.schema()
    }

    pub fn targets(&self, split: Split) -> Targets {
        let col = self.table(split).column(&self.target).expect("bundle target column");
        if self.task.is_classification() {
            let index: HashMap<&str, usize> = self.classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
            let labels = (0..col.len()).map(|r| index[class_label(col, r).as_str()]).collect();
            Targets::Classes {
                labels,
                n_classes: self.classes.len(),
            }
        } else {
            Targets::Values(col.as_numeric().expect("numeric regression target").to_vec())
        }
    }
}

fn class_label(col: &Column, row: usize) -> String {
    col.format_value(row)
}

/// Sorted distinct class labels; numeric labels sort numerically.
fn class_labels(col: &Column) -> Vec<String> {
    match col.data() {
        ColumnData::Numeric(v) => {
            let mut vals: Vec<f64> = v.clone();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            vals.into_iter().map(format_number).collect()
        }
        ColumnData::Categorical { codes, labels } => {
            let used: HashSet<u32> = codes.iter().copied().collect();
            let mut out: Vec<String> = used.into_iter().map(|c| labels[c as usize].clone()).collect();
            out.sort();
            out
        }
    }
}

/// Seeded train/val/test split, stratified per class for classification.
pub fn split(
    table: &Table,
    target: &str,
    task: TaskKind,
    fractions: SplitFractions,
    seed: u64,
    meta: DatasetMeta,
) -> Result<DatasetBundle, DataError> {
    fractions.validate()?;
    if table.n_rows() == 0 {
        return Err(DataError::Empty);
    }
    let target_col = table
        .column(target)
        .ok_or_else(|| DataError::UnknownColumn(target.to_string()))?;
    if let Some(v) = target_col.as_numeric() {
        if let Some(row) = v.iter().position(|x| is_missing(*x)) {
            return Err(DataError::MissingTarget(target.to_string(), row));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = SplitIndices::default();
    let mut classes = Vec::new();

    if task.is_classification() {
        classes = class_labels(target_col);
        if classes.len() < 2 {
            return Err(DataError::TooFewClasses(classes.len()));
        }
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in 0..table.n_rows() {
            groups.entry(class_label(target_col, r)).or_default().push(r);
        }
        for class in &classes {
            let mut rows = groups.remove(class).unwrap_or_default();
            if rows.len() < 3 {
                return Err(DataError::ClassTooSmall {
                    class: class.clone(),
                    count: rows.len(),
                });
            }
            rows.shuffle(&mut rng);
            let (n_train, n_val) = allocate(rows.len(), &fractions, true);
            indices.train.extend_from_slice(&rows[..n_train]);
            indices.val.extend_from_slice(&rows[n_train..n_train + n_val]);
            indices.test.extend_from_slice(&rows[n_train + n_val..]);
        }
    } else {
        let mut rows: Vec<usize> = (0..table.n_rows()).collect();
        rows.shuffle(&mut rng);
        let (n_train, n_val) = allocate(rows.len(), &fractions, false);
        indices.train = rows[..n_train].to_vec();
        indices.val = rows[n_train..n_train + n_val].to_vec();
        indices.test = rows[n_train + n_val..].to_vec();
    }
    indices.train.sort_unstable();
    indices.val.sort_unstable();
    indices.test.sort_unstable();

    Ok(DatasetBundle {
        train: table.take_rows(&indices.train),
        val: table.take_rows(&indices.val),
        test: table.take_rows(&indices.test),
        target: target.to_string(),
        task,
        meta,
        classes,
        indices,
    })
}

/// Train and val counts for `n` rows; test takes the remainder. With
/// `each_nonempty`, every split receives at least one row (needs n >= 3).
fn allocate(n: usize, f: &SplitFractions, each_nonempty: bool) -> (usize, usize) {
    let mut n_train = ((n as f64) * f.train).round() as usize;
    let mut n_val = ((n as f64) * f.val).round() as usize;
    n_train = n_train.min(n);
    n_val = n_val.min(n - n_train);
    if each_nonempty && n >= 3 {
        n_val = n_val.max(1);
        n_train = n_train.max(1);
        while n_train + n_val > n - 1 {
            if n_train >= n_val && n_train > 1 {
                n_train -= 1;
            } else {
                n_val -= 1;
            }
        }
    }
    (n_train, n_val)
}

#[derive(Clone, Debug, PartialEq)]
enum ColumnPlan {
    Numeric { median: f64, mean: f64, std: f64 },
    Dropped,
    Categorical { categories: Vec<String> },
}

/// Imputation and encoding parameters fitted on train columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    names: Vec<String>,
    plans: Vec<ColumnPlan>,
}

impl Encoder {
    pub fn fit(columns: &[&Column]) -> Encoder {
        let names = columns.iter().map(|c| c.name().to_string()).collect();
        let plans = columns.iter().map(|c| fit_plan(c)).collect();
        Encoder { names, plans }
    }

    /// Number of matrix columns produced.
    pub fn width(&self) -> usize {
        self.plans
            .iter()
            .map(|p| match p {
                ColumnPlan::Numeric { .. } => 1,
                ColumnPlan::Dropped => 0,
                ColumnPlan::Categorical { categories } => categories.len() + 1,
            })
            .sum()
    }

    /// Train median used to fill missing values of a numeric column.
    pub fn imputation_value(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        match self.plans[i] {
            ColumnPlan::Numeric { median, .. } => Some(median),
            _ => None,
        }
    }

    pub fn is_dropped(&self, name: &str) -> bool {
        self.names
            .iter()
            .position(|n| n == name)
            .is_some_and(|i| self.plans[i] == ColumnPlan::Dropped)
    }

    pub fn transform(&self, columns: &[&Column]) -> Result<DMatrix<f64>, DataError> {
        let n_rows = columns.first().map_or(0, |c| c.len());
        for (c, name) in columns.iter().zip(&self.names) {
            if c.name() != name {
                return Err(DataError::UnknownColumn(c.name().to_string()));
            }
            if c.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    name: c.name().to_string(),
                    len: c.len(),
                    expected: n_rows,
                });
            }
        }
        if columns.len() != self.names.len() {
            let missing = self.names.get(columns.len()).cloned().unwrap_or_default();
            return Err(DataError::UnknownColumn(missing));
        }
        let mut out = DMatrix::zeros(n_rows, self.width());
        let mut j = 0;
        for (col, plan) in columns.iter().zip(&self.plans) {
            match plan {
                ColumnPlan::Dropped => {}
                ColumnPlan::Numeric { median, mean, std } => {
                    for r in 0..n_rows {
                        let v = numeric_cell(col, r);
                        let v = if is_missing(v) { *median } else { v };
                        out[(r, j)] = (v - mean) / std;
                    }
                    j += 1;
                }
                ColumnPlan::Categorical { categories } => {
                    let overflow = categories.len();
                    for r in 0..n_rows {
                        let label = col.format_value(r);
                        let slot = categories.iter().position(|c| *c == label).unwrap_or(overflow);
                        out[(r, j + slot)] = 1.0;
                    }
                    j += overflow + 1;
                }
            }
        }
        Ok(out)
    }
}

fn numeric_cell(col: &Column, row: usize) -> f64 {
    match col.data() {
        ColumnData::Numeric(v) => v[row],
        // A numeric plan is only fitted on numeric columns; a kind change
        // between splits reads as missing.
        ColumnData::Categorical { .. } => MISSING,
    }
}

fn fit_plan(col: &Column) -> ColumnPlan {
    match col.data() {
        ColumnData::Numeric(values) => {
            let present: Vec<f64> = values.iter().copied().filter(|v| !is_missing(*v)).collect();
            let Some(median) = stats::median(&present) else {
                return ColumnPlan::Dropped;
            };
            let imputed: Vec<f64> = values.iter().map(|&v| if is_missing(v) { median } else { v }).collect();
            let (mean, std) = stats::mean_std(&imputed);
            if stats::is_effectively_constant(mean, std) {
                ColumnPlan::Dropped
            } else {
                ColumnPlan::Numeric { median, mean, std }
            }
        }
        ColumnData::Categorical { codes, labels } => {
            let mut counts: Vec<(u32, usize, usize)> = Vec::new(); // (code, count, first row)
            let mut pos: HashMap<u32, usize> = HashMap::new();
            for (row, &c) in codes.iter().enumerate() {
                match pos.get(&c) {
                    Some(&i) => counts[i].1 += 1,
                    None => {
                        pos.insert(c, counts.len());
                        counts.push((c, 1, row));
                    }
                }
            }
            counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
            counts.truncate(MAX_CATEGORIES);
            ColumnPlan::Categorical {
                categories: counts.into_iter().map(|(c, _, _)| labels[c as usize].clone()).collect(),
            }
        }
    }
}

/// Encoded design matrices for the three splits, sharing one train-fitted
/// encoder.
#[derive(Clone, Debug)]
pub struct EncodedSplits {
    pub encoder: Encoder,
    pub train: DMatrix<f64>,
    pub val: DMatrix<f64>,
    pub test: DMatrix<f64>,
}

fn refs(v: &[Column]) -> Vec<&Column> {
    v.iter().collect()
}

pub fn impute_and_encode(bundle: &DatasetBundle, features: &[String]) -> Result<EncodedSplits, DataError> {
    let pick = |t: &Table| -> Result<Vec<Column>, DataError> {
        features
            .iter()
            .map(|n| t.column(n).cloned().ok_or_else(|| DataError::UnknownColumn(n.clone())))
            .collect()
    };
    let train = pick(&bundle.train)?;
    let val = pick(&bundle.val)?;
    let test = pick(&bundle.test)?;
    let encoder = Encoder::fit(&refs(&train));
    Ok(EncodedSplits {
        train: encoder.transform(&refs(&train))?,
        val: encoder.transform(&refs(&val))?,
        test: encoder.transform(&refs(&test))?,
        encoder,
    })
}

/// Serializes `k` train rows (stratified across classes) as CSV text with the
/// target as the last column.
pub fn sample_few_shot(bundle: &DatasetBundle, k: usize, seed: u64) -> Result<String, DataError> {
    let train = &bundle.train;
    if k > train.n_rows() {
        return Err(DataError::FewShotTooLarge {
            k,
            rows: train.n_rows(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = if bundle.task.is_classification() {
        let Targets::Classes { labels, n_classes } = bundle.targets(Split::Train) else {
            unreachable!("classification targets")
        };
        let mut pools: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (r, &c) in labels.iter().enumerate() {
            pools[c].push(r);
        }
        for p in &mut pools {
            p.shuffle(&mut rng);
        }
        // Round-robin over classes; exhausted classes are skipped.
        let mut picked = Vec::with_capacity(k);
        let mut depth = 0;
        while picked.len() < k {
            for p in &pools {
                if picked.len() < k && depth < p.len() {
                    picked.push(p[depth]);
                }
            }
            depth += 1;
        }
        picked
    } else {
        let mut all: Vec<usize> = (0..train.n_rows()).collect();
        all.shuffle(&mut rng);
        all.truncate(k);
        all
    };
    rows.sort_unstable();

    let mut order: Vec<&Column> = train.columns().iter().filter(|c| c.name() != bundle.target).collect();
    if let Some(t) = train.column(&bundle.target) {
        order.push(t);
    }
    let mut out = order.iter().map(|c| c.name()).collect::<Vec<_>>().join(",");
    for r in rows {
        out.push('\n');
        out.push_str(&order.iter().map(|c| c.format_value(r)).collect::<Vec<_>>().join(","));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(cols: &[(&str, ColumnKind)], target: &str) -> MetadataFile {
        MetadataFile {
            task: TaskKind::BinaryClassification,
            target: target.into(),
            description: "t".into(),
            columns: cols
                .iter()
                .map(|(n, k)| ColumnSpec {
                    name: n.to_string(),
                    kind: *k,
                    description: String::new(),
                })
                .collect(),
        }
    }

    #[test]
    fn csv_typed_by_metadata() {
        let m = meta(&[("a", ColumnKind::Numeric), ("b", ColumnKind::Categorical)], "b");
        let t = read_csv("a,b\n1,x\n2,y\n".as_bytes(), &m).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.column("a").unwrap().as_numeric().unwrap(), &[1.0, 2.0]);
        let b = t.column("b").unwrap();
        assert_eq!(b.kind(), ColumnKind::Categorical);
        assert_eq!((b.label(0), b.label(1)), (Some("x"), Some("y")));
    }

    #[test]
    fn numeric_parse_failure_is_missing() {
        let m = meta(&[("a", ColumnKind::Numeric)], "a");
        let t = read_csv("a\nfoo\n".as_bytes(), &m).unwrap();
        assert!(is_missing(t.column("a").unwrap().as_numeric().unwrap()[0]));
    }

    #[test]
    fn metadata_column_absent_from_header() {
        let m = meta(&[("a", ColumnKind::Numeric), ("c", ColumnKind::Numeric)], "a");
        let err = read_csv("a\n1\n".as_bytes(), &m).unwrap_err();
        assert!(matches!(err, DataError::ColumnNotInHeader(c) if c == "c"));
    }

    #[test]
    fn header_column_absent_from_metadata() {
        let m = meta(&[("a", ColumnKind::Numeric)], "a");
        let err = read_csv("a,z\n1,2\n".as_bytes(), &m).unwrap_err();
        assert!(matches!(err, DataError::ColumnNotInMetadata(c) if c == "z"));
    }

    #[test]
    fn duplicate_header_rejected() {
        let m = meta(&[("a", ColumnKind::Numeric)], "a");
        let err = read_csv("a,a\n1,2\n".as_bytes(), &m).unwrap_err();
        assert!(matches!(err, DataError::DuplicateColumn(_)));
    }

    fn regression_table(n: usize) -> Table {
        Table::new(vec![
            Column::numeric("x", (0..n).map(|i| i as f64).collect()),
            Column::numeric("y", (0..n).map(|i| 2.0 * i as f64).collect()),
        ])
        .unwrap()
    }

    #[test]
    fn split_sizes_follow_fractions() {
        let t = regression_table(100);
        let b = split(
            &t,
            "y",
            TaskKind::Regression,
            SplitFractions::default(),
            7,
            DatasetMeta::default(),
        )
        .unwrap();
        assert_eq!((b.train.n_rows(), b.val.n_rows(), b.test.n_rows()), (60, 20, 20));
    }

    #[test]
    fn split_is_deterministic() {
        let t = regression_table(100);
        let a = split(
            &t,
            "y",
            TaskKind::Regression,
            SplitFractions::default(),
            7,
            DatasetMeta::default(),
        )
        .unwrap();
        let b = split(
            &t,
            "y",
            TaskKind::Regression,
            SplitFractions::default(),
            7,
            DatasetMeta::default(),
        )
        .unwrap();
        assert_eq!(a.indices, b.indices);
        let c = split(
            &t,
            "y",
            TaskKind::Regression,
            SplitFractions::default(),
            8,
            DatasetMeta::default(),
        )
        .unwrap();
        assert_ne!(a.indices, c.indices);
    }

    #[test]
    fn stratified_binary_split() {
        let labels: Vec<&str> = (0..100).map(|i| if i % 2 == 0 { "p" } else { "n" }).collect();
        let t = Table::new(vec![
            Column::numeric("x", (0..100).map(f64::from).collect()),
            Column::categorical("y", &labels),
        ])
        .unwrap();
        let b = split(
            &t,
            "y",
            TaskKind::BinaryClassification,
            SplitFractions::default(),
            3,
            DatasetMeta::default(),
        )
        .unwrap();
        // brute-force count per split and class
        for part in [&b.indices.train, &b.indices.val, &b.indices.test] {
            let p = part.iter().filter(|&&r| labels[r] == "p").count() as i64;
            let n = part.len() as i64 - p;
            assert!((p - n).abs() <= 1, "unbalanced split {p} vs {n}");
        }
    }

    #[test]
    fn split_rejects_bad_input() {
        let t = regression_table(10);
        let bad = SplitFractions {
            train: 0.5,
            val: 0.2,
            test: 0.2,
        };
        assert!(matches!(
            split(&t, "y", TaskKind::Regression, bad, 1, DatasetMeta::default()),
            Err(DataError::BadFractions(_))
        ));
        let t = Table::new(vec![Column::categorical("y", &["a", "a", "a", "b", "b"])]).unwrap();
        assert!(matches!(
            split(
                &t,
                "y",
                TaskKind::BinaryClassification,
                SplitFractions::default(),
                1,
                DatasetMeta::default()
            ),
            Err(DataError::ClassTooSmall { .. })
        ));
    }

    fn bundle_of(train: Table, val: Table) -> DatasetBundle {
        DatasetBundle {
            test: val.clone(),
            train,
            val,
            target: "y".into(),
            task: TaskKind::Regression,
            meta: DatasetMeta::default(),
            classes: vec![],
            indices: SplitIndices::default(),
        }
    }

    #[test]
    fn median_imputation() {
        let train = Table::new(vec![Column::numeric("a", vec![1.0, MISSING, 3.0])]).unwrap();
        let enc = Encoder::fit(&[train.column("a").unwrap()]);
        assert_eq!(enc.imputation_value("a"), Some(2.0));
    }

    #[test]
    fn unseen_label_goes_to_overflow() {
        let train = Table::new(vec![Column::categorical("g", &["x", "y", "x"])]).unwrap();
        let val = Table::new(vec![Column::categorical("g", &["z"])]).unwrap();
        let b = bundle_of(train, val);
        let enc = impute_and_encode(&b, &["g".to_string()]).unwrap();
        assert_eq!(enc.val.ncols(), 3);
        assert_eq!(enc.val.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_numeric_column_dropped() {
        let train = Table::new(vec![
            Column::numeric("c", vec![0.1; 5]),
            Column::numeric("a", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
        ])
        .unwrap();
        let b = bundle_of(train.clone(), train);
        let enc = impute_and_encode(&b, &["c".to_string(), "a".to_string()]).unwrap();
        assert_eq!(enc.train.ncols(), 1);
        assert!(enc.encoder.is_dropped("c"));
    }

    #[test]
    fn category_cap_is_bounded() {
        let labels: Vec<String> = (0..200).map(|i| format!("l{i}")).collect();
        let train = Table::new(vec![Column::categorical("g", &labels)]).unwrap();
        let enc = Encoder::fit(&[train.column("g").unwrap()]);
        assert_eq!(enc.width(), MAX_CATEGORIES + 1);
    }

    fn classification_bundle() -> DatasetBundle {
        let labels: Vec<&str> = (0..40).map(|i| if i % 4 == 0 { "yes" } else { "no" }).collect();
        let t = Table::new(vec![
            Column::numeric("a", (0..40).map(f64::from).collect()),
            Column::categorical("target", &labels),
            Column::numeric("b", (0..40).map(|i| f64::from(i) * 0.5).collect()),
        ])
        .unwrap();
        split(
            &t,
            "target",
            TaskKind::BinaryClassification,
            SplitFractions::default(),
            11,
            DatasetMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn few_shot_format() {
        let b = classification_bundle();
        let text = sample_few_shot(&b, 2, 1).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "a,b,target");
    }

    #[test]
    fn few_shot_is_stratified_and_deterministic() {
        let b = classification_bundle();
        let text = sample_few_shot(&b, 4, 5).unwrap();
        let yes = text.lines().skip(1).filter(|l| l.ends_with(",yes")).count();
        assert_eq!(yes, 2);
        assert_eq!(text, sample_few_shot(&b, 4, 5).unwrap());
        assert!(matches!(
            sample_few_shot(&b, 1000, 5),
            Err(DataError::FewShotTooLarge { .. })
        ));
    }
}
