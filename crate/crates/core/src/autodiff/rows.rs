use crate::{Error, Result};

/// Row-major `rows × cols` matrix; one row per vertex or edge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rows {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Rows {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows<const N: usize>(rows: &[[f64; N]]) -> Self {
        Self {
            rows: rows.len(),
            cols: N,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row `i`, or row 0 when the matrix is a single broadcast row.
    #[inline]
    pub(crate) fn row_bcast(&self, i: usize) -> &[f64] {
        if self.rows == 1 {
            &self.data[..self.cols]
        } else {
            self.row(i)
        }
    }

    pub(crate) fn check_broadcast(&self, rows: usize, what: &str) -> Result<()> {
        if self.rows == rows || self.rows == 1 {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what} has {} rows, expected {rows} or 1",
                self.rows
            )))
        }
    }

    pub fn max_abs_diff(&self, other: &Rows) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
