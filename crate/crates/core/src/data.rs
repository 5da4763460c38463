//! Dataset ingestion and preparation: CSV and KEEL parsing, cleaning,
//! standardization, stratified folds, labelled subsampling and the
//! zero-rule baseline.
//!
//! Variances are population variances (divide by the row count) throughout.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// One cell of a not-yet-cleaned table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Numeric(f64),
    Token(String),
    Missing,
}

impl Cell {
    /// Classifies a raw text cell. `""`, `?`, `NA` (any case) and `<null>`
    /// are missing markers.
    pub fn parse(raw: &str) -> Cell {
        let s = raw.trim();
        if s.is_empty() || s == "?" || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("<null>") {
            return Cell::Missing;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Numeric(v),
            _ => Cell::Token(s.to_string()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    fn text(&self) -> String {
        match self {
            Cell::Numeric(v) => format!("{v}"),
            Cell::Token(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

/// Where the class label lives in a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("last") {
            return Ok(LabelColumn::Last);
        }
        s.parse::<usize>()
            .map(LabelColumn::Index)
            .map_err(|_| Error::InvalidArgument(format!("label column `{s}` is neither `last` nor an index")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub rows: Vec<Vec<Cell>>,
    pub column_names: Vec<String>,
    pub label_column: usize,
}

impl RawTable {
    pub fn new(rows: Vec<Vec<Cell>>, column_names: Vec<String>, label_column: usize) -> Result<Self> {
        let width = column_names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRows { row: i, expected: width, found: row.len() });
            }
        }
        if label_column >= width {
            return Err(Error::LabelColumn { index: label_column, columns: width });
        }
        Ok(RawTable { rows, column_names, label_column })
    }

    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn split_cells(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

pub fn parse_csv(path: impl AsRef<Path>, label: LabelColumn) -> Result<RawTable> {
    parse_csv_str(&read_to_string(path.as_ref())?, label)
}

/// Parses comma-separated text. The first line is a header when every cell
/// in it is non-numeric and the following line has at least one numeric cell.
pub fn parse_csv_str(text: &str, label: LabelColumn) -> Result<RawTable> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    }

    let first = split_cells(lines[0]);
    let is_header = lines.len() > 1
        && first.iter().all(|c| !matches!(Cell::parse(c), Cell::Numeric(_)))
        && split_cells(lines[1]).iter().any(|c| matches!(Cell::parse(c), Cell::Numeric(_)));

    let (names, body) = if is_header {
        (first.iter().map(|s| s.to_string()).collect::<Vec<_>>(), &lines[1..])
    } else {
        ((0..first.len()).map(|j| format!("c{j}")).collect(), &lines[..])
    };

    let rows = body.iter().map(|l| split_cells(l).into_iter().map(Cell::parse).collect()).collect();

    let label_column = match label {
        LabelColumn::Last => names.len() - 1,
        LabelColumn::Index(i) => i,
    };
    RawTable::new(rows, names, label_column)
}

/// On-disk dataset layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Keel,
}

impl DataFormat {
    /// `.dat` files are KEEL, anything else CSV.
    pub fn from_extension(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("dat") => DataFormat::Keel,
            _ => DataFormat::Csv,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "keel" => Ok(DataFormat::Keel),
            _ => Err(Error::InvalidArgument(format!("unknown data format `{s}` (expected csv or keel)"))),
        }
    }
}

/// Parses and cleans a file. The label column is ignored for KEEL files,
/// whose header declares the output attribute.
pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat, label: LabelColumn, name: &str) -> Result<Dataset> {
    let table = match format {
        DataFormat::Csv => parse_csv(path, label)?,
        DataFormat::Keel => parse_keel(path)?,
    };
    clean(&table, name)
}

pub fn parse_keel(path: impl AsRef<Path>) -> Result<RawTable> {
    parse_keel_str(&read_to_string(path.as_ref())?)
}

/// Parses the KEEL `.dat` layout: `@relation`, `@attribute`, `@inputs`,
/// `@outputs` headers followed by comma-separated rows after `@data`.
pub fn parse_keel_str(text: &str) -> Result<RawTable> {
    let mut names: Vec<String> = Vec::new();
    let mut output: Option<String> = None;
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut in_data = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            let cells: Vec<Cell> = split_cells(line).into_iter().map(Cell::parse).collect();
            if cells.len() != names.len() {
                return Err(Error::RaggedRows { row: rows.len(), expected: names.len(), found: cells.len() });
            }
            rows.push(cells);
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@attribute") {
            let rest = line["@attribute".len()..].trim_start();
            let name = attribute_name(rest).ok_or_else(|| Error::Parse { line: lineno + 1, message: "attribute without a name".into() })?;
            names.push(name);
        } else if lower.starts_with("@outputs") || lower.starts_with("@output") {
            let rest = line.split_once(char::is_whitespace).map(|(_, r)| r).unwrap_or("");
            let first = rest.split(',').next().unwrap_or("").trim();
            if first.is_empty() {
                return Err(Error::Parse { line: lineno + 1, message: "empty @outputs".into() });
            }
            output = Some(first.to_string());
        } else if lower.starts_with("@data") {
            in_data = true;
        }
        // @relation and @inputs carry nothing the table needs.
    }

    if !in_data {
        return Err(Error::Parse { line: text.lines().count(), message: "missing @data section".into() });
    }
    let label_column = match output {
        Some(out) => names
            .iter()
            .position(|n| *n == out)
            .ok_or_else(|| Error::Parse { line: 0, message: format!("output attribute `{out}` is not declared") })?,
        None => {
            return Err(Error::Parse { line: 0, message: "no @outputs declaration".into() });
        }
    };
    RawTable::new(rows, names, label_column)
}

fn attribute_name(rest: &str) -> Option<String> {
    let rest = rest.trim();
    if let Some(stripped) = rest.strip_prefix('\'') {
        return stripped.split_once('\'').map(|(n, _)| n.to_string());
    }
    let end = rest.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(rest.len());
    let name = &rest[..end];
    (!name.is_empty()).then(|| name.to_string())
}

/// A cleaned, fully numeric classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub name: String,
}

impl Dataset {
    /// Builds a dataset from parts, checking the invariants.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_names: Vec<String>, name: impl Into<String>) -> Result<Self> {
        let (m, n) = features.dim();
        if m == 0 || n == 0 {
            return Err(Error::InvalidDataset("empty feature matrix".into()));
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: labels.len() });
        }
        if class_names.len() < 2 {
            return Err(Error::InvalidDataset("fewer than 2 classes".into()));
        }
        let mut seen = vec![false; class_names.len()];
        for &l in &labels {
            if l >= class_names.len() {
                return Err(Error::InvalidDataset(format!("label {l} outside the class inventory")));
            }
            seen[l] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidDataset("a declared class has no members".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(Dataset { features, labels, class_names, name: name.into() })
    }

    pub fn n_examples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes())
    }

    /// Feature rows and labels for the given example indices.
    pub fn subset(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
        (self.features.select(Axis(0), rows), rows.iter().map(|&i| self.labels[i]).collect())
    }

    /// Numeric table form of the dataset; cleaning it gives the dataset back.
    pub fn to_raw_table(&self) -> RawTable {
        let n = self.n_features();
        let rows = self
            .features
            .outer_iter()
            .zip(&self.labels)
            .map(|(row, &l)| {
                row.iter().map(|&v| Cell::Numeric(v)).chain(std::iter::once(Cell::Token(self.class_names[l].clone()))).collect()
            })
            .collect();
        let mut names: Vec<String> = (0..n).map(|j| format!("f{j}")).collect();
        names.push("class".into());
        RawTable { rows, column_names: names, label_column: n }
    }
}

pub(crate) fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Drops rows with missing cells, integer-codes categorical columns by first
/// appearance, drops zero-variance feature columns and maps labels to class
/// indices by first appearance.
pub fn clean(table: &RawTable, name: &str) -> Result<Dataset> {
    let kept: Vec<&Vec<Cell>> = table.rows.iter().filter(|r| !r.iter().any(Cell::is_missing)).collect();
    if kept.is_empty() {
        return Err(Error::InvalidDataset("every row has a missing value".into()));
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let labels: Vec<usize> = kept
        .iter()
        .map(|r| {
            let key = r[table.label_column].text();
            *class_index.entry(key.clone()).or_insert_with(|| {
                class_names.push(key);
                class_names.len() - 1
            })
        })
        .collect();
    if class_names.len() < 2 {
        return Err(Error::InvalidDataset(format!("{} class(es) after cleaning, need at least 2", class_names.len())));
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    for j in (0..table.n_columns()).filter(|&j| j != table.label_column) {
        let categorical = kept.iter().any(|r| matches!(r[j], Cell::Token(_)));
        let values: Vec<f64> = if categorical {
            let mut codes: HashMap<String, usize> = HashMap::new();
            kept.iter()
                .map(|r| {
                    let next = codes.len();
                    *codes.entry(r[j].text()).or_insert(next) as f64
                })
                .collect()
        } else {
            kept.iter()
                .map(|r| match r[j] {
                    Cell::Numeric(v) => v,
                    _ => unreachable!("missing rows were dropped"),
                })
                .collect()
        };
        if values.iter().any(|&v| v != values[0]) {
            columns.push(values);
        }
    }
    if columns.is_empty() {
        return Err(Error::InvalidDataset("no feature column with non-zero variance".into()));
    }

    let m = kept.len();
    let features = Array2::from_shape_fn((m, columns.len()), |(i, j)| columns[j][i]);
    Dataset::new(features, labels, class_names, name)
}

/// Per-column standardization fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(features: ArrayView2<f64>) -> Result<Scaler> {
        let (m, n) = features.dim();
        if m < 2 {
            return Err(Error::InvalidArgument(format!("scaler needs at least 2 rows, got {m}")));
        }
        let mut means = Vec::with_capacity(n);
        let mut stds = Vec::with_capacity(n);
        for (j, col) in features.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / m as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
            if var <= 0.0 || col.iter().all(|&v| v == col[0]) {
                return Err(Error::ZeroVariance { column: j });
            }
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Scaler { means, stds })
    }

    pub fn transform(&self, features: ArrayView2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), found: features.ncols() });
        }
        let mut out = features.to_owned();
        for mut row in out.outer_iter_mut() {
            for ((v, mean), std) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - mean) / std;
            }
        }
        Ok(out)
    }
}

pub fn fit_scaler(features: ArrayView2<f64>) -> Result<Scaler> {
    Scaler::fit(features)
}

pub fn transform(scaler: &Scaler, features: ArrayView2<f64>) -> Result<Array2<f64>> {
    scaler.transform(features)
}

/// Assignment of examples to stratified folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` example indices for one fold, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..self.assignments.len()).partition(|&i| self.assignments[i] == fold);
        (train, test)
    }
}

/// Shuffles each class with a seeded generator and deals its members
/// round-robin into `k` folds; the dealing position carries over between
/// classes so overall fold sizes stay balanced too.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 1 {
        return Err(Error::InvalidArgument("fold count must be at least 1".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < k {
            return Err(Error::Stratification { class, count: m.len(), required: k });
        }
    }

    let mut rng = rng_from_seed(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for m in members.iter_mut() {
        m.shuffle(&mut rng);
        for &i in m.iter() {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Indices of the labelled part of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSubset {
    pub labeled_indices: Vec<usize>,
    pub fraction: f64,
    pub min_per_class: usize,
}

/// Per class keeps `max(ceil(fraction * size), min(min_per_class, size))`
/// uniformly sampled members. Indices are returned ascending.
pub fn subsample_labeled(labels: &[usize], fraction: f64, min_per_class: usize, seed: u64) -> Result<LabeledSubset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside (0, 1]")));
    }
    if min_per_class < 1 {
        return Err(Error::InvalidArgument("min_per_class must be at least 1".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }

    let mut rng = rng_from_seed(seed);
    let mut chosen = Vec::new();
    for m in members.iter().filter(|m| !m.is_empty()) {
        let size = m.len();
        // Guard against products like 0.1 * 70 = 7.000000000000001.
        let by_fraction = ((fraction * size as f64) - 1e-9).ceil().max(0.0) as usize;
        let keep = by_fraction.max(min_per_class.min(size)).min(size);
        if keep == size {
            chosen.extend_from_slice(m);
        } else {
            chosen.extend(index::sample(&mut rng, size, keep).into_iter().map(|p| m[p]));
        }
    }
    chosen.sort_unstable();
    Ok(LabeledSubset { labeled_indices: chosen, fraction, min_per_class })
}

/// Accuracy, in percent, of always predicting the most frequent class.
pub fn zero_rule_accuracy(dataset: &Dataset) -> f64 {
    let largest = dataset.class_counts().into_iter().max().unwrap_or(0);
    100.0 * largest as f64 / dataset.n_examples() as f64
}
