//! CSV ingestion: UTF-8, comma-separated, header row required.
//!
//! Error messages use 1-based physical line numbers with the header as
//! line 1, so the first data row is line 2. The response column must hold
//! literal 0/1 values; every other column must parse as a finite float and
//! becomes a design column, in file order.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::{Array1, Array2};
use roblogit::data::Dataset;

use crate::config::ColumnRef;

/// A parsed design matrix plus the names that came with it.
pub struct Ingested {
    pub dataset: Dataset,
    /// Design column names, in the order they appear in the matrix.
    pub feature_names: Vec<String>,
    /// Header name of the response column.
    pub response_name: String,
}

/// Reads `path` and splits it into a response vector and design matrix.
pub fn read_csv(path: &Path, response: &ColumnRef, intercept: bool) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .with_context(|| format!("cannot open data file {}", path.display()))?;

    let headers = reader
        .headers()
        .with_context(|| format!("{}: line 1: cannot read header row", path.display()))?
        .clone();
    if headers.is_empty() {
        bail!("{}: missing header row", path.display());
    }

    let response_idx = match response {
        ColumnRef::Name(name) => {
            let matches: Vec<usize> = headers
                .iter()
                .enumerate()
                .filter(|(_, h)| *h == name)
                .map(|(i, _)| i)
                .collect();
            match matches.as_slice() {
                [i] => *i,
                [] => bail!(
                    "{}: response column {name:?} not found; header has {}",
                    path.display(),
                    headers.iter().collect::<Vec<_>>().join(", ")
                ),
                _ => bail!(
                    "{}: response column {name:?} appears {} times in the header",
                    path.display(),
                    matches.len()
                ),
            }
        }
        ColumnRef::Index(i) => {
            if *i >= headers.len() {
                bail!(
                    "{}: response column index {i} out of range; file has {} columns",
                    path.display(),
                    headers.len()
                );
            }
            *i
        }
    };
    if headers.len() < 2 {
        bail!(
            "{}: need at least one design column besides the response",
            path.display()
        );
    }

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut y: Vec<u8> = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        // Header is line 1, so data row `row_idx` sits on line `row_idx + 2`.
        let line = row_idx + 2;
        let record =
            record.with_context(|| format!("{}: line {line}: malformed row", path.display()))?;
        if record.len() != headers.len() {
            bail!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                headers.len(),
                record.len()
            );
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                anyhow!(
                    "{}: line {line}: column {:?}: cannot parse {cell:?} as a number",
                    path.display(),
                    &headers[col]
                )
            })?;
            if col == response_idx {
                if value == 0.0 {
                    y.push(0);
                } else if value == 1.0 {
                    y.push(1);
                } else {
                    bail!(
                        "{}: line {line}: response value {cell} is not 0 or 1",
                        path.display()
                    );
                }
            } else {
                if !value.is_finite() {
                    bail!(
                        "{}: line {line}: column {:?}: value {cell} is not finite",
                        path.display(),
                        &headers[col]
                    );
                }
                rows.push(value);
            }
        }
    }
    if y.is_empty() {
        bail!("{}: no data rows after the header", path.display());
    }

    let n = y.len();
    let p = headers.len() - 1;
    let x = Array2::from_shape_vec((n, p), rows).expect("row-major fill matches dimensions");
    let dataset = Dataset::new(x, Array1::from(y))
        .with_context(|| format!("{}: invalid dataset", path.display()))?
        .with_intercept(intercept);
    Ok(Ingested {
        dataset,
        feature_names,
        response_name: headers[response_idx].to_string(),
    })
}
