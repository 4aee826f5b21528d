//! Constrained approximation by stacking: constraints `v_1..v_k` are appended
//! as extra rows `V*` under `A`, and a reweighting `D` that approximates the
//! stacked matrix `B` transfers to `A` and `V*` while keeping
//! `‖(AA*)^{-1/2} A [D − (1+ε) I_m] v_i‖ ≤ 2ε‖v_i‖`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_core::{
    approx_membership_with_tol, sym_norm, ApproxCertificate, DiagonalReweighting, Matrix, SymmetricSpectrum,
    DEFAULT_TOL,
};

/// `A` (n×m), constraints `V` (m×k) and the stacked `B` with `B* = (A* | V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintProblem {
    a: Matrix,
    v: Matrix,
    b: Matrix,
}

impl ConstraintProblem {
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn k(&self) -> usize {
        self.v.cols()
    }
}

pub fn stack(a: &Matrix, v: &Matrix) -> Result<ConstraintProblem> {
    if v.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "constraints have {} rows but A has {} columns",
            v.rows(),
            a.cols()
        )));
    }
    let (n, m, k) = (a.rows(), a.cols(), v.cols());
    let mut b = DMatrix::zeros(n + k, m);
    b.view_mut((0, 0), (n, m)).copy_from(a.as_dmatrix());
    b.view_mut((n, 0), (k, m)).copy_from(&v.as_dmatrix().transpose());
    let b = Matrix::from_dmatrix(b)?;

    let bb = b.gram();
    let aa = a.gram();
    let top = bb.view((0, 0), (n, n)).into_owned();
    let drift = (top - &aa).amax();
    if drift > 1e-12 * aa.amax().max(1.0) {
        return Err(Error::InvalidInput(format!("stacked Gram block differs from AA* by {drift:e}")));
    }
    Ok(ConstraintProblem { a: a.clone(), v: v.clone(), b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub b_cert: ApproxCertificate,
    pub a_cert: ApproxCertificate,
    pub v_cert: ApproxCertificate,
    /// `‖(AA*)^{-1/2} A [D − (1+ε) I_m] v_i‖`.
    pub residuals: Vec<f64>,
    /// `2ε‖v_i‖`.
    pub bounds: Vec<f64>,
    pub all_within: bool,
}

fn hypothesis(p: &ConstraintProblem, d: &DiagonalReweighting, epsilon: f64, tol: f64) -> Result<ApproxCertificate> {
    let cert = approx_membership_with_tol(&p.b, d, epsilon, tol)?;
    if !cert.meets_epsilon {
        return Err(Error::HypothesisViolated(format!(
            "B ∉ Approx_ε D: achieved [{}, {}] for ε = {epsilon}",
            cert.alpha_achieved, cert.beta_achieved
        )));
    }
    Ok(cert)
}

/// `A [D − (1+ε) I] v` for every constraint column `v`.
fn deviations(p: &ConstraintProblem, d: &DiagonalReweighting, epsilon: f64) -> Vec<DVector<f64>> {
    let a = p.a.as_dmatrix();
    (0..p.k())
        .map(|i| {
            let v = p.v.column(i);
            let shifted = DVector::from_iterator(v.len(), v.iter().zip(d.weights()).map(|(x, w)| (w - 1.0 - epsilon) * x));
            a * shifted
        })
        .collect()
}

/// Checks the transferred memberships and the residual bound, given
/// `B ∈ Approx_ε D`.
pub fn theorem2_verify(p: &ConstraintProblem, d: &DiagonalReweighting, epsilon: f64) -> Result<ConstraintResult> {
    theorem2_verify_with_tol(p, d, epsilon, DEFAULT_TOL)
}

pub fn theorem2_verify_with_tol(
    p: &ConstraintProblem,
    d: &DiagonalReweighting,
    epsilon: f64,
    tol: f64,
) -> Result<ConstraintResult> {
    let b_cert = hypothesis(p, d, epsilon, tol)?;
    let a_cert = approx_membership_with_tol(&p.a, d, epsilon, tol)?;
    let v_cert = approx_membership_with_tol(&p.v.transpose(), d, epsilon, tol)?;

    let root = SymmetricSpectrum::new(&p.a.gram())?.pinv_sqrt();
    let residuals: Vec<f64> = deviations(p, d, epsilon).iter().map(|w| (&root * w).norm()).collect();
    let bounds: Vec<f64> = (0..p.k()).map(|i| 2.0 * epsilon * p.v.column(i).norm()).collect();
    let all_within = residuals
        .iter()
        .zip(&bounds)
        .enumerate()
        .all(|(i, (r, b))| *r <= b + tol * p.v.column(i).norm().max(1.0));
    Ok(ConstraintResult { b_cert, a_cert, v_cert, residuals, bounds, all_within })
}

/// Block matrix `K = [2εAA*, (1+ε)AV − ADV; (1+ε)V*A* − V*DA*, 2εV*V]`, which
/// is PSD whenever `A`, `V*` and `B` lie in `Approx_ε D`.
pub fn schur_witness(p: &ConstraintProblem, d: &DiagonalReweighting, epsilon: f64) -> Result<Matrix> {
    hypothesis(p, d, epsilon, DEFAULT_TOL)?;
    for (name, m) in [("A", p.a.clone()), ("V*", p.v.transpose())] {
        let cert = approx_membership_with_tol(&m, d, epsilon, DEFAULT_TOL)?;
        if !cert.meets_epsilon {
            return Err(Error::HypothesisViolated(format!("{name} ∉ Approx_ε D")));
        }
    }
    let (n, k) = (p.n(), p.k());
    let a = p.a.as_dmatrix();
    let v = p.v.as_dmatrix();
    let mut dv = v.clone();
    for (r, w) in d.weights().iter().enumerate() {
        dv.row_mut(r).scale_mut(*w);
    }
    let off = a * v * (1.0 + epsilon) - a * dv;
    let mut kmat = DMatrix::zeros(n + k, n + k);
    kmat.view_mut((0, 0), (n, n)).copy_from(&(a * a.transpose() * (2.0 * epsilon)));
    kmat.view_mut((0, n), (n, k)).copy_from(&off);
    kmat.view_mut((n, 0), (k, n)).copy_from(&off.transpose());
    kmat.view_mut((n, n), (k, k)).copy_from(&(v.transpose() * v * (2.0 * epsilon)));
    Matrix::from_dmatrix(kmat)
}

/// `λ_min(K)` and `‖K‖`.
pub fn witness_extremes(k: &Matrix) -> (f64, f64) {
    let spec = SymmetricSpectrum::of_symmetrized(k.as_dmatrix());
    (spec.min(), sym_norm(k.as_dmatrix()))
}
