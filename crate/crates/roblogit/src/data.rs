//! Validated design/response container.
//!
//! [`Dataset`] owns the design matrix and the binary response and guarantees,
//! once constructed, that every entry of the design is finite, that the
//! response contains only 0/1 labels, and that the two have matching row
//! counts. Downstream numerical code relies on these invariants and does not
//! re-check them row by row.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// A validated regression dataset: an `n x p` design matrix, a length-`n`
/// binary response, and a flag controlling whether model fits should include
/// an unpenalized intercept column.
#[derive(Clone, Debug)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<u8>,
    intercept: bool,
}

impl Dataset {
    /// Builds a dataset after validating shapes and entries.
    ///
    /// Requirements: at least one row and one column, all design entries
    /// finite, response length equal to the row count, and every response
    /// value in `{0, 1}`. The intercept flag starts out `false`; flip it
    /// with [`Dataset::with_intercept`].
    pub fn new(x: Array2<f64>, y: Array1<u8>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 {
            return Err(Error::invalid("dataset must contain at least one row"));
        }
        if p == 0 {
            return Err(Error::invalid("dataset must contain at least one column"));
        }
        if y.len() != n {
            return Err(Error::invalid(format!(
                "response length {} does not match row count {n}",
                y.len()
            )));
        }
        if let Some((i, j)) = x
            .indexed_iter()
            .find_map(|((i, j), v)| (!v.is_finite()).then_some((i, j)))
        {
            return Err(Error::domain(format!(
                "design entry at row {i}, column {j} is not finite"
            )));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::domain(format!(
                "response at row {i} is {}; labels must be 0 or 1",
                y[i]
            )));
        }
        Ok(Dataset {
            x,
            y,
            intercept: false,
        })
    }

    /// Returns the same dataset with the intercept flag set to `on`.
    pub fn with_intercept(mut self, on: bool) -> Self {
        self.intercept = on;
        self
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of design columns (excluding any implicit intercept).
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// View of the design matrix.
    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    /// View of the binary response.
    pub fn y(&self) -> ArrayView1<'_, u8> {
        self.y.view()
    }

    /// Whether fits on this dataset should include an unpenalized intercept.
    pub fn intercept(&self) -> bool {
        self.intercept
    }

    /// Returns a new dataset containing only the requested design columns
    /// (in the given order), with the same response and intercept flag.
    ///
    /// Column indices must be strictly increasing and in range.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::invalid("column selection must be non-empty"));
        }
        if let Some(w) = columns.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "column selection must be strictly increasing; found {} before {}",
                w[0], w[1]
            )));
        }
        let last = *columns.last().expect("non-empty");
        if last >= self.p() {
            return Err(Error::invalid(format!(
                "column index {last} out of range for p = {}",
                self.p()
            )));
        }
        let x = self.x.select(Axis(1), columns);
        Ok(Dataset {
            x,
            y: self.y.clone(),
            intercept: self.intercept,
        })
    }
}
