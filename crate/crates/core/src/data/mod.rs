//! Dataset ingestion and the fold-level preprocessing chain.

mod boxcox;
mod preprocess;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use boxcox::{boxcox, boxcox_log_likelihood, fit_boxcox_lambda, inverse_boxcox, LAMBDA_GRID};
pub use preprocess::{
    apply_preprocess, fit_preprocess, one_hot_encode, CategoricalStats, NumericStats, Prepared,
    PreprocessStats, POSITIVITY_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Column role declared in a schema file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Numeric(f64),
    Category(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// Column typing for one CSV file.
///
/// ```toml
/// target = "scaled_sound"
/// [columns]
/// frequency = "numeric"
/// station = "categorical"
/// row_id = "drop"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub target: String,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnRole>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema = Self::from_toml_str(&text).map_err(|e| Error::config(path, e.to_string()))?;
        if schema.columns.get(&schema.target) == Some(&ColumnRole::Categorical) {
            return Err(Error::config(path, "target column must be numeric"));
        }
        Ok(schema)
    }
}

/// Feature cells, one row per instance, typed per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub rows: Vec<Vec<Cell>>,
}

impl FeatureTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// All-numeric table from a matrix.
    pub fn from_matrix(names: Vec<String>, x: &Matrix) -> Result<Self> {
        x.check_width(names.len())?;
        Ok(FeatureTable {
            kinds: vec![ColumnKind::Numeric; names.len()],
            rows: x
                .rows_iter()
                .map(|r| r.iter().map(|&v| Cell::Numeric(v)).collect())
                .collect(),
            names,
        })
    }

    fn row_has_missing(&self, i: usize) -> bool {
        self.rows[i].iter().any(Cell::is_missing)
    }
}

/// A feature table plus its numeric regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: FeatureTable,
    /// `NaN` marks a missing target.
    pub target: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: FeatureTable, target: Vec<f64>) -> Result<Self> {
        if features.kinds.len() != features.names.len() {
            return Err(Error::LengthMismatch {
                left: features.kinds.len(),
                right: features.names.len(),
            });
        }
        if features.rows.len() != target.len() {
            return Err(Error::LengthMismatch {
                left: features.rows.len(),
                right: target.len(),
            });
        }
        let d = features.names.len();
        if let Some(row) = features.rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        Ok(Dataset {
            name: name.into(),
            features,
            target,
        })
    }

    /// Numeric dataset with columns named `x1..xd`.
    pub fn from_matrix(name: impl Into<String>, x: &Matrix, target: Vec<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(name, FeatureTable::from_matrix(names, x)?, target)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
        }
    }

    pub fn has_missing(&self) -> bool {
        (0..self.n_rows()).any(|i| self.target[i].is_nan() || self.features.row_has_missing(i))
    }
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "?" || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn parse_numeric(s: &str) -> Cell {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Numeric(v),
        _ => Cell::Missing,
    }
}

fn parse_categorical(s: &str) -> Cell {
    if is_missing_token(s) {
        Cell::Missing
    } else {
        Cell::Category(s.to_string())
    }
}

struct ParsedCsv {
    features: FeatureTable,
    target: Option<Vec<f64>>,
}

fn read_csv(path: &Path, schema: &Schema, require_target: bool) -> Result<ParsedCsv> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();

    let mut target_index = None;
    // (csv column, kind) for each retained feature
    let mut layout = Vec::new();
    let mut names = Vec::new();
    for (j, col) in header.iter().enumerate() {
        if *col == schema.target {
            target_index = Some(j);
            continue;
        }
        let kind = match schema.columns.get(col) {
            Some(ColumnRole::Numeric) => ColumnKind::Numeric,
            Some(ColumnRole::Categorical) => ColumnKind::Categorical,
            Some(ColumnRole::Drop) => continue,
            None => {
                return Err(Error::Schema(format!(
                    "{}: column `{col}` is not declared in the schema",
                    path.display()
                )))
            }
        };
        layout.push((j, kind));
        names.push(col.clone());
    }
    for declared in schema.columns.keys() {
        if !header.contains(declared) {
            return Err(Error::Schema(format!(
                "{}: schema column `{declared}` is absent from the header",
                path.display()
            )));
        }
    }
    if require_target && target_index.is_none() {
        return Err(Error::Schema(format!(
            "{}: target column `{}` is absent from the header",
            path.display(),
            schema.target
        )));
    }

    let mut rows = Vec::new();
    let mut target = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = layout
            .iter()
            .map(|&(j, kind)| {
                let raw = record.get(j).unwrap_or("");
                match kind {
                    ColumnKind::Numeric => parse_numeric(raw),
                    ColumnKind::Categorical => parse_categorical(raw),
                }
            })
            .collect();
        rows.push(row);
        if let Some(t) = target_index {
            target.push(match parse_numeric(record.get(t).unwrap_or("")) {
                Cell::Numeric(v) => v,
                _ => f64::NAN,
            });
        }
    }
    let kinds = layout.iter().map(|&(_, k)| k).collect();
    Ok(ParsedCsv {
        features: FeatureTable { names, kinds, rows },
        target: target_index.map(|_| target),
    })
}

/// Reads a headed CSV, typing columns per `schema`. Unparseable numeric
/// cells and empty cells become missing; row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let parsed = read_csv(path, schema, true)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, parsed.features, parsed.target.unwrap_or_default())
}

/// Reads only the feature columns; the target column may be absent.
pub fn load_features_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<FeatureTable> {
    Ok(read_csv(path.as_ref(), schema, false)?.features)
}

/// Keeps the rows with no missing cell (target included), in order.
pub fn drop_missing_rows(ds: &Dataset) -> Result<Dataset> {
    let keep: Vec<usize> = (0..ds.n_rows())
        .filter(|&i| !ds.target[i].is_nan() && !ds.features.row_has_missing(i))
        .collect();
    if keep.is_empty() && ds.n_rows() > 0 {
        return Err(Error::EmptyDataset(format!(
            "every row of `{}` has a missing cell",
            ds.name
        )));
    }
    Ok(ds.select_rows(&keep))
}

/// Feature-only counterpart of [`drop_missing_rows`]; an empty result is allowed.
pub fn drop_missing_feature_rows(table: &FeatureTable) -> FeatureTable {
    let keep: Vec<usize> = (0..table.n_rows())
        .filter(|&i| !table.row_has_missing(i))
        .collect();
    table.select_rows(&keep)
}
