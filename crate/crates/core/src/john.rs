//! John decompositions `Σ c_i x_i ⊗ x_i = I_n`, `Σ c_i x_i = 0`: validation,
//! canonical fixtures, kernel deflation and approximate decompositions with a
//! small barycenter.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constraints::stack;
use crate::error::{Error, Result};
use crate::sparsifier::{equal_weight_sparsify_with, SigmaEntry, SparsifyOptions, SparsifyResult};
use crate::spectral_core::{
    approx_membership_with_tol, operator_norm, relative_factors, sym_norm, ApproxCertificate, DiagonalReweighting,
    Matrix, Mode, DEFAULT_TOL,
};

/// Default validation tolerance for user-supplied decompositions.
pub const DEFAULT_JOHN_TOL: f64 = 1e-8;
/// Largest dimension for the cross-polytope fixture (`2^n` contact points).
pub const CROSS_POLYTOPE_MAX_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JohnInvariant {
    Shape,
    PositiveWeights,
    UnitNorm,
    IdentitySum,
    Barycenter,
    TraceSum,
}

impl fmt::Display for JohnInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            JohnInvariant::Shape => "shape",
            JohnInvariant::PositiveWeights => "positive weights",
            JohnInvariant::UnitNorm => "unit norm points",
            JohnInvariant::IdentitySum => "Σ c_i x_i⊗x_i = I",
            JohnInvariant::Barycenter => "Σ c_i x_i = 0",
            JohnInvariant::TraceSum => "Σ c_i = n",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnFailure {
    pub invariant: JohnInvariant,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnValidationError {
    pub failures: Vec<JohnFailure>,
    pub tol: f64,
}

impl fmt::Display for JohnValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.failures.iter().map(|x| format!("{} off by {:e}", x.invariant, x.deviation)).collect();
        write!(f, "{} (tol {:e})", parts.join("; "), self.tol)
    }
}

impl std::error::Error for JohnValidationError {}

/// Validated John decomposition: unit points with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JohnDecomposition {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    #[serde(skip)]
    tol: f64,
}

/// On-disk decomposition `{"dim", "points", "weights"}`.
#[derive(Debug, Clone, Deserialize)]
pub struct RawDecomposition {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl RawDecomposition {
    pub fn validate(self, tol: f64) -> std::result::Result<JohnDecomposition, JohnValidationError> {
        if self.points.iter().any(|p| p.len() != self.dim) {
            return Err(JohnValidationError {
                failures: vec![JohnFailure { invariant: JohnInvariant::Shape, deviation: self.dim as f64 }],
                tol,
            });
        }
        validate_john(&self.points, &self.weights, tol)
    }
}

impl JohnDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn from_json(text: &str, tol: f64) -> Result<Self> {
        let raw: RawDecomposition =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        Ok(raw.validate(tol)?)
    }
}

fn shape_error(deviation: f64, tol: f64) -> JohnValidationError {
    JohnValidationError { failures: vec![JohnFailure { invariant: JohnInvariant::Shape, deviation }], tol }
}

/// Checks both John conditions, unit norms and the trace identity, listing
/// every invariant that fails by more than `tol`.
pub fn validate_john(
    points: &[Vec<f64>],
    weights: &[f64],
    tol: f64,
) -> std::result::Result<JohnDecomposition, JohnValidationError> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(shape_error(points.len().abs_diff(weights.len()) as f64, tol));
    }
    let n = points[0].len();
    if n == 0 || points.iter().any(|p| p.len() != n) {
        return Err(shape_error(n as f64, tol));
    }
    if points.iter().flatten().chain(weights).any(|x| !x.is_finite()) {
        return Err(shape_error(f64::INFINITY, tol));
    }
    let mut failures = Vec::new();
    let worst_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    if worst_weight <= 0.0 {
        failures.push(JohnFailure { invariant: JohnInvariant::PositiveWeights, deviation: -worst_weight });
    }
    let norm_dev = points
        .iter()
        .map(|p| (p.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    if norm_dev > tol {
        failures.push(JohnFailure { invariant: JohnInvariant::UnitNorm, deviation: norm_dev });
    }
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut bary = DVector::<f64>::zeros(n);
    for (p, &c) in points.iter().zip(weights) {
        let x = DVector::from_column_slice(p);
        sum.ger(c, &x, &x, 1.0);
        bary.axpy(c, &x, 1.0);
    }
    let id_dev = sym_norm(&(sum - DMatrix::<f64>::identity(n, n)));
    if id_dev > tol {
        failures.push(JohnFailure { invariant: JohnInvariant::IdentitySum, deviation: id_dev });
    }
    if bary.norm() > tol {
        failures.push(JohnFailure { invariant: JohnInvariant::Barycenter, deviation: bary.norm() });
    }
    let trace_dev = (weights.iter().sum::<f64>() - n as f64).abs();
    if trace_dev > tol {
        failures.push(JohnFailure { invariant: JohnInvariant::TraceSum, deviation: trace_dev });
    }
    if failures.is_empty() {
        Ok(JohnDecomposition { dim: n, points: points.to_vec(), weights: weights.to_vec(), tol })
    } else {
        Err(JohnValidationError { failures, tol })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    Cube,
    Simplex,
    CrossPolytope,
}

impl std::str::FromStr for Body {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Body::Cube),
            "simplex" => Ok(Body::Simplex),
            "cross-polytope" | "cross_polytope" => Ok(Body::CrossPolytope),
            other => Err(Error::InvalidInput(format!("unknown body {other:?}"))),
        }
    }
}

/// Regular simplex vertices: `n+1` unit vectors with pairwise inner product
/// `−1/n`, from the Cholesky factor of their Gram matrix. The first vertex is
/// `e_1`; the last is minus the sum of the others.
fn simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let off = -1.0 / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { off });
    let l = gram.cholesky().expect("leading simplex Gram block is positive definite").l();
    let mut vertices: Vec<Vec<f64>> = (0..n).map(|i| l.row(i).iter().copied().collect()).collect();
    let last = (0..n).map(|c| -vertices.iter().map(|v| v[c]).sum::<f64>()).collect();
    vertices.push(last);
    vertices
}

/// Contact points and weights of the cube, simplex and cross-polytope in John position.
pub fn canonical_john(body: Body, n: usize) -> Result<JohnDecomposition> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let (points, weights) = match body {
        Body::Cube => {
            let mut pts = Vec::with_capacity(2 * n);
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut p = vec![0.0; n];
                    p[i] = s;
                    pts.push(p);
                }
            }
            (pts, vec![0.5; 2 * n])
        }
        Body::Simplex => (simplex_vertices(n), vec![n as f64 / (n + 1) as f64; n + 1]),
        Body::CrossPolytope => {
            if n > CROSS_POLYTOPE_MAX_DIM {
                return Err(Error::InvalidInput(format!(
                    "cross-polytope fixture limited to n ≤ {CROSS_POLYTOPE_MAX_DIM}"
                )));
            }
            let scale = 1.0 / (n as f64).sqrt();
            let count = 1usize << n;
            let pts = (0..count)
                .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -scale } else { scale }).collect())
                .collect();
            (pts, vec![n as f64 / count as f64; count])
        }
    };
    validate_john(&points, &weights, 1e-10).map_err(Error::from)
}

/// Output of the kernel deflation `C = AD^{1/2} − ADv ⊗ D^{1/2}v / ‖D^{1/2}v‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDeflation {
    pub c: Matrix,
    /// `(1 − ε − 4ε²/(1−ε), 1 + ε)`.
    pub bounds: (f64, f64),
    pub alpha_achieved: f64,
    pub beta_achieved: f64,
    /// `‖C D^{1/2} v‖`.
    pub kernel_residual: f64,
    pub kernel_scale: f64,
    pub within_bounds: bool,
}

fn deflate(a: &Matrix, v: &DVector<f64>, d: &DiagonalReweighting, epsilon: f64, tol: f64) -> Result<KernelDeflation> {
    let sqrt_d = DVector::from_vec(d.sqrt_weights());
    let dhalf_v = sqrt_d.component_mul(v);
    let dv = DVector::from_iterator(v.len(), v.iter().zip(d.weights()).map(|(x, w)| w * x));
    let denom = dhalf_v.norm_squared();
    if denom == 0.0 {
        return Err(Error::HypothesisViolated("D^{1/2} v = 0".into()));
    }
    let ad = a.as_dmatrix();
    let mut ad_half = ad.clone();
    for (c, s) in sqrt_d.iter().enumerate() {
        ad_half.column_mut(c).scale_mut(*s);
    }
    let adv = ad * dv;
    let c = &ad_half - (&adv * dhalf_v.transpose()) / denom;
    let kernel_residual = (&c * &dhalf_v).norm();
    let kernel_scale = (operator_norm(&Matrix::from_dmatrix(ad_half)?) * dhalf_v.norm()).max(1.0);
    let (alpha, beta) = relative_factors(&a.gram(), &(&c * c.transpose()));
    let lower = 1.0 - epsilon - 4.0 * epsilon * epsilon / (1.0 - epsilon);
    let upper = 1.0 + epsilon;
    Ok(KernelDeflation {
        c: Matrix::from_dmatrix(c)?,
        bounds: (lower, upper),
        alpha_achieved: alpha,
        beta_achieved: beta,
        kernel_residual,
        kernel_scale,
        within_bounds: alpha >= lower - tol && beta <= upper + tol,
    })
}

/// Restores `D^{1/2}v` to the kernel after reweighting, given `v ∈ ker A`
/// and `stack(A, v) ∈ Approx_ε D`.
pub fn cor_kernel_deflate(a: &Matrix, v: &[f64], d: &DiagonalReweighting, epsilon: f64) -> Result<KernelDeflation> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("kernel deflation needs 0 < ε < 1, got {epsilon}")));
    }
    if v.len() != a.cols() || d.dim() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns, v has {} entries, D has dimension {}",
            a.cols(),
            v.len(),
            d.dim()
        )));
    }
    let vv = DVector::from_column_slice(v);
    let av = (a.as_dmatrix() * &vv).norm();
    if av > 1e-10 * operator_norm(a) * vv.norm() || vv.norm() == 0.0 {
        return Err(Error::HypothesisViolated(format!("v is not a non-zero kernel vector of A (‖Av‖ = {av:e})")));
    }
    let b = stack(a, &Matrix::from_columns(&[v.to_vec()])?)?;
    let cert = approx_membership_with_tol(b.b(), d, epsilon, DEFAULT_TOL)?;
    if !cert.meets_epsilon {
        return Err(Error::HypothesisViolated(format!(
            "stack(A, v) ∉ Approx_ε D: achieved [{}, {}]",
            cert.alpha_achieved, cert.beta_achieved
        )));
    }
    let out = deflate(a, &vv, d, epsilon, DEFAULT_TOL)?;
    if out.kernel_residual > 1e-10 * out.kernel_scale {
        return Err(Error::CertificateNotMet(format!("‖C D^{{1/2}} v‖ = {:e}", out.kernel_residual)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnSparsification {
    pub epsilon: f64,
    pub sigma: Vec<SigmaEntry>,
    pub sigma_size: usize,
    /// `(1/|σ|) Σ_σ x_i`.
    pub u: Vec<f64>,
    pub u_norm: f64,
    /// `2ε / (3√n)`.
    pub u_bound: f64,
    pub u_within: bool,
    /// Sandwich factors of `(n/|σ|) Σ_σ (x_i − u) ⊗ (x_i − u)` against `I_n`.
    pub alpha_achieved: f64,
    pub beta_achieved: f64,
    pub sandwich_meets: bool,
    /// `stack(A, v) ∈ Approx_{ε/3} D`, the hypothesis behind the barycenter bound.
    pub certificate: ApproxCertificate,
    pub d: DiagonalReweighting,
    /// `‖ADv − √n u‖`.
    pub adv_identity_error: f64,
    /// `‖(AA*)^{-1/2} ADv‖ = ‖ADv‖`, bounded by `(2ε/3)‖v‖`.
    pub adv_norm: f64,
    pub v_norm: f64,
    pub kernel_residual: f64,
    /// Largest deviation of the columns of `C` from `√(n/|σ|) √κ_i (x_i − u)`.
    pub column_form_error: f64,
    pub inner: SparsifyResult,
}

/// The matrix `A = (√c_i x_i)` and kernel vector `v = (√(c_i/n))` of a decomposition.
pub fn john_matrices(j: &JohnDecomposition) -> Result<(Matrix, Vec<f64>)> {
    let n = j.dim() as f64;
    let cols: Vec<Vec<f64>> =
        j.points().iter().zip(j.weights()).map(|(x, c)| x.iter().map(|t| t * c.sqrt()).collect()).collect();
    let v = j.weights().iter().map(|c| (c / n).sqrt()).collect();
    Ok((Matrix::from_columns(&cols)?, v))
}

/// Approximate John decomposition with equal weights and controlled barycenter.
pub fn john_sparsify(j: &JohnDecomposition, epsilon: f64, opts: &SparsifyOptions) -> Result<JohnSparsification> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = j.dim();
    let (a, v) = john_matrices(j)?;
    let problem = stack(&a, &Matrix::from_columns(&[v.clone()])?)?;
    let identity_tol = (4.0 * j.tol() * j.len() as f64).max(1e-8);
    let inner = equal_weight_sparsify_with(problem.b(), epsilon / 3.0, opts, identity_tol)?;

    let kappa = inner.d.multiplicities().to_vec();
    let size: usize = kappa.iter().sum();
    let weights: Vec<f64> = kappa
        .iter()
        .zip(j.weights())
        .map(|(&k, &c)| if k == 0 { 0.0 } else { k as f64 * n as f64 / (c * size as f64) })
        .collect();
    let d = DiagonalReweighting::new(weights, kappa.clone())?;
    let certificate =
        approx_membership_with_tol(problem.b(), &d, epsilon / 3.0, opts.tol)?.with_mode(opts.mode, inner.theory_constants_respected);

    let mut u = DVector::<f64>::zeros(n);
    for (x, &k) in j.points().iter().zip(&kappa) {
        u.axpy(k as f64 / size as f64, &DVector::from_column_slice(x), 1.0);
    }
    let vv = DVector::from_column_slice(&v);
    let dv = DVector::from_iterator(v.len(), v.iter().zip(d.weights()).map(|(x, w)| w * x));
    let adv = a.as_dmatrix() * dv;
    let adv_identity_error = (&adv - &u * (n as f64).sqrt()).norm();

    let deflation = deflate(&a, &vv, &d, epsilon / 3.0, opts.tol)?;
    let (alpha, beta) = relative_factors(&DMatrix::identity(n, n), &deflation.c.gram());
    let sandwich_meets = alpha >= 1.0 - epsilon - opts.tol && beta <= 1.0 + epsilon + opts.tol;

    let mut column_form_error = 0.0f64;
    let lead = (n as f64 / size as f64).sqrt();
    for (i, (x, &k)) in j.points().iter().zip(&kappa).enumerate() {
        for (r, xr) in x.iter().enumerate() {
            let expected = lead * (k as f64).sqrt() * (xr - u[r]);
            column_form_error = column_form_error.max((deflation.c.get(r, i) - expected).abs());
        }
    }

    let u_norm = u.norm();
    let u_bound = 2.0 * epsilon / (3.0 * (n as f64).sqrt());
    let u_within = u_norm <= u_bound + 1e-10;
    if opts.mode == Mode::Strict && !(certificate.meets_epsilon && sandwich_meets && u_within) {
        return Err(Error::CertificateNotMet(format!(
            "hypothesis {}, sandwich [{alpha}, {beta}], ‖u‖ = {u_norm} vs {u_bound}",
            certificate.meets_epsilon
        )));
    }
    Ok(JohnSparsification {
        epsilon,
        sigma: inner.sigma.clone(),
        sigma_size: size,
        u: u.iter().copied().collect(),
        u_norm,
        u_bound,
        u_within,
        alpha_achieved: alpha,
        beta_achieved: beta,
        sandwich_meets,
        certificate,
        d,
        adv_identity_error,
        adv_norm: adv.norm(),
        v_norm: vv.norm(),
        kernel_residual: deflation.kernel_residual,
        column_form_error,
        inner,
    })
}
