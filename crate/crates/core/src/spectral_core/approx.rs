use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::{sym_eigenvalues, sym_norm, SymmetricSpectrum, SYMMETRY_TOL};
use super::matrix::{asymmetry, max_abs, Matrix};
use crate::error::{Error, Result};

/// Default tolerance for Loewner comparisons and certificate flags.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Operating mode shared by the pipelines.
///
/// `Strict` uses the theorem-level constants and fails when the certificate is
/// not met; `BestEffort` caps problem sizes for desk-scale runs and reports
/// certificates honestly without failing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Strict,
    #[default]
    BestEffort,
}

/// Largest singular value, from the eigendecomposition of the smaller Gram matrix.
pub fn operator_norm(m: &Matrix) -> f64 {
    let a = m.as_dmatrix();
    let gram = if a.nrows() <= a.ncols() { a * a.transpose() } else { a.transpose() * a };
    let top = sym_eigenvalues(&gram).first().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// `‖A‖_HS² / ‖A‖²`.
pub fn stable_rank(a: &Matrix) -> Result<f64> {
    let norm = operator_norm(a);
    if norm == 0.0 {
        return Err(Error::UndefinedStableRank);
    }
    Ok(a.frobenius_sq() / (norm * norm))
}

fn check_symmetric(p: &DMatrix<f64>) -> Result<()> {
    let asym = asymmetry(p);
    if asym > SYMMETRY_TOL * max_abs(p).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// `P ⪯ Q` up to `tol · max(1, ‖P‖, ‖Q‖)`.
pub fn loewner_leq(p: &Matrix, q: &Matrix, tol: f64) -> Result<bool> {
    loewner_leq_dense(p.as_dmatrix(), q.as_dmatrix(), tol)
}

pub(crate) fn loewner_leq_dense(p: &DMatrix<f64>, q: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if p.shape() != q.shape() || p.nrows() != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Loewner comparison of {:?} and {:?}",
            p.shape(),
            q.shape()
        )));
    }
    check_symmetric(p)?;
    check_symmetric(q)?;
    let scale = 1.0f64.max(sym_norm(p)).max(sym_norm(q));
    let diff = q - p;
    let lmin = sym_eigenvalues(&diff).last().copied().unwrap_or(0.0);
    Ok(lmin >= -tol * scale)
}

/// Non-negative diagonal reweighting `D` together with the multiset
/// multiplicities that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReweighting")]
pub struct DiagonalReweighting {
    dim: usize,
    weights: Vec<f64>,
    multiplicities: Vec<usize>,
    unit_weight: Option<f64>,
}

#[derive(Deserialize)]
struct RawReweighting {
    weights: Vec<f64>,
    #[serde(default)]
    multiplicities: Option<Vec<usize>>,
}

impl TryFrom<RawReweighting> for DiagonalReweighting {
    type Error = Error;

    fn try_from(raw: RawReweighting) -> Result<Self> {
        match raw.multiplicities {
            Some(k) => Self::new(raw.weights, k),
            None => Self::from_weights(raw.weights),
        }
    }
}

impl DiagonalReweighting {
    /// Validates `d_ii ≥ 0`, matching lengths and `d_ii = 0 ⇔ κ_i = 0`.
    pub fn new(weights: Vec<f64>, multiplicities: Vec<usize>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty reweighting".into()));
        }
        if weights.len() != multiplicities.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights but {} multiplicities",
                weights.len(),
                multiplicities.len()
            )));
        }
        for (i, (&w, &k)) in weights.iter().zip(&multiplicities).enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidInput(format!("weight {i} is {w}; weights must be finite and non-negative")));
            }
            if (w == 0.0) != (k == 0) {
                return Err(Error::InvalidInput(format!(
                    "weight {i} is {w} but multiplicity is {k}"
                )));
            }
        }
        let unit_weight = common_weight(&weights);
        Ok(Self { dim: weights.len(), weights, multiplicities, unit_weight })
    }

    /// Plain weights; every positive weight gets multiplicity one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let k = weights.iter().map(|&w| usize::from(w > 0.0)).collect();
        Self::new(weights, k)
    }

    pub fn identity(m: usize) -> Self {
        Self::from_weights(vec![1.0; m]).expect("identity weights are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn unit_weight(&self) -> Option<f64> {
        self.unit_weight
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }
}

fn common_weight(weights: &[f64]) -> Option<f64> {
    let mut nz = weights.iter().copied().filter(|&w| w > 0.0);
    let first = nz.next()?;
    nz.all(|w| (w - first).abs() <= 1e-12 * first).then_some(first)
}

/// Achieved Loewner sandwich `α AA* ⪯ ADA* ⪯ β AA*` on the range of `AA*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxCertificate {
    pub epsilon: f64,
    pub alpha_achieved: f64,
    pub beta_achieved: f64,
    /// `‖ADA* − AA*‖ / ‖A‖²`.
    pub gap: f64,
    pub meets_epsilon: bool,
    pub mode: Mode,
    pub theory_constants_respected: bool,
    pub tol: f64,
}

impl ApproxCertificate {
    pub(crate) fn from_factors(epsilon: f64, alpha: f64, beta: f64, gap: f64, tol: f64) -> Self {
        let meets = alpha >= 1.0 - epsilon - tol && beta <= 1.0 + epsilon + tol;
        Self {
            epsilon,
            alpha_achieved: alpha,
            beta_achieved: beta,
            gap,
            meets_epsilon: meets,
            mode: Mode::Strict,
            theory_constants_respected: true,
            tol,
        }
    }

    pub fn with_mode(mut self, mode: Mode, theory_constants_respected: bool) -> Self {
        self.mode = mode;
        self.theory_constants_respected = theory_constants_respected;
        self
    }
}

/// Extreme generalized eigenvalues of `target` against the PSD `reference`,
/// restricted to the numerical range of `reference`. Returns `(1, 1)` when the
/// range is trivial.
pub(crate) fn relative_factors(reference: &DMatrix<f64>, target: &DMatrix<f64>) -> (f64, f64) {
    let spec = SymmetricSpectrum::of_symmetrized(reference);
    let (basis, vals) = spec.psd_range();
    if vals.is_empty() {
        return (1.0, 1.0);
    }
    let mut w = basis.transpose() * target * &basis;
    for (i, li) in vals.iter().enumerate() {
        for (j, lj) in vals.iter().enumerate() {
            w[(i, j)] /= (li * lj).sqrt();
        }
    }
    let ev = sym_eigenvalues(&w);
    (*ev.last().unwrap(), ev[0])
}

/// Certificate of `(1−ε) AA* ⪯ ADA* ⪯ (1+ε) AA*` with the default tolerance.
pub fn approx_membership(a: &Matrix, d: &DiagonalReweighting, epsilon: f64) -> Result<ApproxCertificate> {
    approx_membership_with_tol(a, d, epsilon, DEFAULT_TOL)
}

pub fn approx_membership_with_tol(
    a: &Matrix,
    d: &DiagonalReweighting,
    epsilon: f64,
    tol: f64,
) -> Result<ApproxCertificate> {
    if d.dim() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "reweighting of dimension {} for a matrix with {} columns",
            d.dim(),
            a.cols()
        )));
    }
    let g = a.gram();
    let gd = a.weighted_gram(d.weights())?;
    Ok(certificate_of(&g, &gd, epsilon, tol))
}

/// Certificate comparing an arbitrary PSD `target` against `reference`.
pub(crate) fn certificate_of(reference: &DMatrix<f64>, target: &DMatrix<f64>, epsilon: f64, tol: f64) -> ApproxCertificate {
    let (alpha, beta) = relative_factors(reference, target);
    let norm = sym_norm(reference);
    let gap = if norm > 0.0 { sym_norm(&(target - reference)) / norm } else { 0.0 };
    ApproxCertificate::from_factors(epsilon, alpha, beta, gap, tol)
}
