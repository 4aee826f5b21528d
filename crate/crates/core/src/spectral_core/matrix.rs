use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix with finite entries.
///
/// Storage is delegated to `nalgebra`; constructors validate that every entry
/// is finite and that both dimensions are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("matrix has no rows".into()));
        };
        let cols = first.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {cols}",
                r.len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, &flat)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidInput("matrix has no columns".into()));
        };
        let rows = first.len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        if rows == 0 {
            return Err(Error::InvalidInput("columns are empty".into()));
        }
        let cols: Vec<DVector<f64>> = columns.iter().map(|c| DVector::from_column_slice(c)).collect();
        Self::from_dmatrix(DMatrix::from_columns(&cols))
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if !m[(r, c)].is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::from_dmatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|r| (0..self.cols()).map(|c| self.0[(r, c)]).collect())
            .collect()
    }

    pub fn column(&self, c: usize) -> DVector<f64> {
        self.0.column(c).into_owned()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `A A*`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// `A diag(d) A*`.
    pub fn weighted_gram(&self, d: &[f64]) -> Result<DMatrix<f64>> {
        if d.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for a matrix with {} columns",
                d.len(),
                self.cols()
            )));
        }
        let mut scaled = self.0.clone();
        for (c, w) in d.iter().enumerate() {
            scaled.column_mut(c).scale_mut(*w);
        }
        Ok(scaled * self.0.transpose())
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl From<Matrix> for DMatrix<f64> {
    fn from(m: Matrix) -> Self {
        m.0
    }
}

/// Serialized as a list of rows.
impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Largest absolute asymmetry `max |S_ij - S_ji|`.
pub(crate) fn asymmetry(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Largest absolute entry, used as a scale for symmetry checks.
pub(crate) fn max_abs(s: &DMatrix<f64>) -> f64 {
    s.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
