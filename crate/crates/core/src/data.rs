//! Datasets, CSV ingestion and column transformations.

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Label of the synthesized column of ones.
pub const INTERCEPT: &str = "(Intercept)";

/// The US bank-credit series, 1996–2012, shipped with the crate.
pub const US_CREDIT_CSV: &str = include_str!("../data/us_credit.csv");

/// Dependent vector plus a design matrix whose first column is all ones.
///
/// Invariants: `n > p ≥ 2`, entries finite, regressors non-constant,
/// labels unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dependent: String,
    names: Vec<String>,
    y: Array1<f64>,
    x: Array2<f64>,
}

impl Dataset {
    /// Builds a dataset from regressor columns; the intercept is prepended.
    pub fn from_columns(
        dependent: impl Into<String>,
        y: Vec<f64>,
        regressors: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let dependent = dependent.into();
        let n = y.len();
        let p = regressors.len() + 1;
        if regressors.is_empty() {
            return Err(Error::Dimension("need at least one regressor".into()));
        }
        if n <= p {
            return Err(Error::TooFewRows { n, p });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("column {dependent:?}")));
        }
        let mut seen: HashSet<&str> = HashSet::from([INTERCEPT, dependent.as_str()]);
        let mut x = Array2::<f64>::ones((n, p));
        for (j, (name, col)) in regressors.iter().enumerate() {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "column {name:?} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column {name:?}")));
            }
            if col.iter().all(|v| *v == col[0]) {
                return Err(Error::DegenerateColumn(name.clone()));
            }
            x.column_mut(j + 1).assign(&Array1::from_vec(col.clone()));
        }
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(regressors.into_iter().map(|(name, _)| name));
        Ok(Self {
            dependent,
            names,
            y: Array1::from_vec(y),
            x,
        })
    }

    /// Parses header-row CSV text; every column except `dependent` becomes a
    /// regressor, in file order.
    pub fn from_csv_str(text: &str, dependent: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateColumn(h.clone()));
            }
        }
        let dep_idx = headers
            .iter()
            .position(|h| h == dependent)
            .ok_or_else(|| Error::MissingColumn(dependent.to_string()))?;

        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            for (j, cell) in record.iter().enumerate() {
                let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row: row + 1,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "column {:?} at data row {}",
                        headers[j],
                        row + 1
                    )));
                }
                columns[j].push(value);
            }
        }
        let y = std::mem::take(&mut columns[dep_idx]);
        let regressors = headers
            .into_iter()
            .zip(columns)
            .enumerate()
            .filter(|(j, _)| *j != dep_idx)
            .map(|(_, pair)| pair)
            .collect();
        Self::from_columns(dependent, y, regressors)
    }

    /// The bundled US-credit data with `D` as the dependent variable.
    pub fn us_credit() -> Self {
        Self::from_csv_str(US_CREDIT_CSV, "D").expect("bundled dataset is valid")
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    /// Design matrix, intercept first.
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Design matrix without the intercept column.
    pub fn regressors(&self) -> ArrayView2<'_, f64> {
        self.x.slice(ndarray::s![.., 1..])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dependent(&self) -> &str {
        &self.dependent
    }
}

/// Reads a CSV file from disk; see [`Dataset::from_csv_str`].
pub fn load_dataset(path: impl AsRef<Path>, dependent: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Dataset::from_csv_str(&text, dependent)
}

impl Serialize for Dataset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.x.outer_iter().map(|r| r.to_vec()).collect();
        let mut s = serializer.serialize_struct("Dataset", 6)?;
        s.serialize_field("dependent", &self.dependent)?;
        s.serialize_field("names", &self.names)?;
        s.serialize_field("n", &self.n())?;
        s.serialize_field("p", &self.p())?;
        s.serialize_field("y", &self.y.to_vec())?;
        s.serialize_field("x", &rows)?;
        s.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    /// Subtract the column mean.
    Center,
    /// Subtract the mean, then divide by `sd·√n`; the result has unit sum of squares.
    Standardize,
    /// Divide by the square root of the sum of squares.
    UnitLength,
}

/// Applies `mode` column by column. With `skip_intercept` the first column
/// is copied unchanged.
pub fn transform_columns(
    x: ArrayView2<f64>,
    mode: TransformMode,
    skip_intercept: bool,
) -> Result<Array2<f64>> {
    let mut out = x.to_owned();
    let start = usize::from(skip_intercept);
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate().skip(start) {
        if mode != TransformMode::UnitLength {
            let mean = col.sum() / col.len() as f64;
            col.mapv_inplace(|v| v - mean);
        }
        if mode != TransformMode::Center {
            let ss = col.dot(&col);
            if ss == 0.0 || !ss.is_finite() {
                return Err(Error::DegenerateColumn(format!("column {j}")));
            }
            let norm = ss.sqrt();
            col.mapv_inplace(|v| v / norm);
        }
    }
    Ok(out)
}
