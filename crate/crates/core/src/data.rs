//! In-memory datasets and CSV ingestion.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An n×p matrix of observations (one row per observation) with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
    columns: Vec<String>,
}

impl Dataset {
    pub fn new(values: DMatrix<f64>, columns: Vec<String>) -> Result<Self> {
        if columns.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                got: columns.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("dataset contains non-finite values".into()));
        }
        Ok(Dataset { values, columns })
    }

    /// Builds a dataset from rows, naming columns `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: bad.len(),
            });
        }
        let values = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let columns = (1..=p).map(|j| format!("x{j}")).collect();
        Dataset::new(values, columns)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Row-major copy of the observations.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row_vec(i)).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        let values = self.values.select_rows(indices);
        Dataset {
            values,
            columns: self.columns.clone(),
        }
    }

    /// Applies `x -> A x + b` to every observation.
    pub fn affine(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Dataset> {
        if a.nrows() != self.p() || a.ncols() != self.p() || b.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: a.nrows(),
            });
        }
        let mut values = &self.values * a.transpose();
        for mut row in values.row_iter_mut() {
            row += b.transpose();
        }
        Dataset::new(values, self.columns.clone())
    }
}

/// Which columns to read from a CSV file.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum ColumnSelection {
    #[default]
    All,
    /// Header names, or zero-based indices when a token is not a header name.
    Named(Vec<String>),
}

impl ColumnSelection {
    pub fn parse(text: &str) -> ColumnSelection {
        let cols: Vec<String> = text
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.is_empty() {
            ColumnSelection::All
        } else {
            ColumnSelection::Named(cols)
        }
    }
}

/// Reads a comma-separated file. A header row is detected when the first row
/// has a non-numeric cell in any selected column.
pub fn load_csv(path: &Path, columns: &ColumnSelection, log_transform: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text, columns, log_transform)
}

pub fn parse_csv(text: &str, columns: &ColumnSelection, log_transform: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            column: String::new(),
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((i + 1, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(Error::Domain("input has no rows".into()));
    };
    let width = first.len();

    // Resolve against first-row tokens before deciding whether that row is a header.
    let first_tokens: Vec<String> = first.iter().map(str::to_string).collect();
    let resolve = |names: &[String]| -> Result<Vec<usize>> {
        names
            .iter()
            .map(|tok| {
                if let Some(j) = first_tokens.iter().position(|h| h == tok) {
                    if tok.parse::<f64>().is_err() {
                        return Ok(j);
                    }
                }
                match tok.parse::<usize>() {
                    Ok(j) if j < width => Ok(j),
                    _ => Err(Error::Config(format!("unknown column '{tok}'"))),
                }
            })
            .collect()
    };
    let selected: Vec<usize> = match columns {
        ColumnSelection::All => (0..width).collect(),
        ColumnSelection::Named(names) => resolve(names)?,
    };
    if selected.is_empty() {
        return Err(Error::Domain("no columns selected".into()));
    }

    let has_header = selected
        .iter()
        .any(|&j| first.get(j).is_none_or(|c| c.parse::<f64>().is_err()));
    let names: Vec<String> = if has_header {
        selected.iter().map(|&j| first_tokens[j].clone()).collect()
    } else {
        selected.iter().map(|&j| format!("x{}", j + 1)).collect()
    };

    let body = if has_header { &records[1..] } else { &records[..] };
    let mut data = Vec::with_capacity(body.len() * selected.len());
    for (row, rec) in body {
        for (k, &j) in selected.iter().enumerate() {
            let cell = rec.get(j).unwrap_or("");
            let err = |message: String| Error::Parse {
                row: *row,
                column: names[k].clone(),
                message,
            };
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                return Err(err("missing value".into()));
            }
            let mut v: f64 = cell
                .parse()
                .map_err(|_| err(format!("cannot parse '{cell}' as a number")))?;
            if log_transform {
                if v <= 0.0 {
                    return Err(err(format!("cannot log-transform non-positive value {v}")));
                }
                v = v.ln();
            }
            if !v.is_finite() {
                return Err(err(format!("non-finite value '{cell}'")));
            }
            data.push(v);
        }
    }
    let n = body.len();
    let p = selected.len();
    if n < p + 1 {
        return Err(Error::Domain(format!("need at least p + 1 = {} rows, got {n}", p + 1)));
    }
    Dataset::new(DMatrix::from_row_slice(n, p, &data), names)
}
