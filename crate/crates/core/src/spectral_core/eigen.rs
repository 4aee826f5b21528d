use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::matrix::{asymmetry, max_abs, symmetrize};
use crate::error::{Error, Result};

/// Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative cutoff below which eigenvalues of a Gram matrix are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Eigendecomposition of a real symmetric matrix, eigenvalues in non-increasing order.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    eigenvectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    /// Decomposes `s`, rejecting inputs whose asymmetry exceeds
    /// `SYMMETRY_TOL * max(1, max|s_ij|)`.
    pub fn new(s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "eigendecomposition of a non-square {}x{} matrix",
                s.nrows(),
                s.ncols()
            )));
        }
        let asym = asymmetry(s);
        if asym > SYMMETRY_TOL * max_abs(s).max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::of_symmetrized(s))
    }

    /// Decomposes the symmetric part of `s` without validation.
    pub(crate) fn of_symmetrized(s: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(symmetrize(s));
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { eigenvalues, eigenvectors }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue, i.e. the operator norm.
    pub fn abs_max(&self) -> f64 {
        self.max().abs().max(self.min().abs())
    }

    /// `Q diag(f(λ)) Q*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let d = DVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|&l| f(l)));
        q * DMatrix::from_diagonal(&d) * q.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|l| l)
    }

    /// Orthonormal basis of the numerical range of a PSD matrix together with
    /// the retained eigenvalues. Eigenvalues at or below `RANK_CUTOFF * λ_max`
    /// are discarded.
    pub fn psd_range(&self) -> (DMatrix<f64>, Vec<f64>) {
        let top = self.max();
        let n = self.eigenvalues.len();
        if top <= 0.0 {
            return (DMatrix::zeros(n, 0), Vec::new());
        }
        let kept: Vec<usize> = (0..n).filter(|&j| self.eigenvalues[j] > RANK_CUTOFF * top).collect();
        let mut basis = DMatrix::zeros(n, kept.len());
        for (dst, &src) in kept.iter().enumerate() {
            basis.set_column(dst, &self.eigenvectors.column(src));
        }
        (basis, kept.iter().map(|&j| self.eigenvalues[j]).collect())
    }

    /// Moore-Penrose inverse square root of a PSD matrix, restricted to its range.
    pub fn pinv_sqrt(&self) -> DMatrix<f64> {
        let top = self.max();
        self.map(|l| if top > 0.0 && l > RANK_CUTOFF * top { 1.0 / l.sqrt() } else { 0.0 })
    }
}

/// Eigenvalues of the symmetric part of `s`, non-increasing.
pub(crate) fn sym_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(s).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Operator norm of a symmetric matrix.
pub(crate) fn sym_norm(s: &DMatrix<f64>) -> f64 {
    if s.nrows() == 0 {
        return 0.0;
    }
    s.symmetric_eigenvalues().iter().fold(0.0f64, |acc, l| acc.max(l.abs()))
}
