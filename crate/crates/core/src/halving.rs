//! Halving a rank-one decomposition `A = Σ u_i ⊗ u_i`: find `σ` with
//! `|σ| ≤ M/2` and `‖2 Σ_σ u_i ⊗ u_i − A‖ ≤ γ(2δ, A)`.
//!
//! Such a `σ` always exists (Kadison-Singer), but no efficient construction is
//! known. Small ensembles are searched exhaustively, where the existence claim
//! is checked literally; larger ones use seeded random balanced subsets
//! followed by a first-improvement local search, and report honestly whether
//! the bound was reached.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_core::{sym_norm, Matrix, SymmetricSpectrum, DEFAULT_TOL};

/// Default size limit for exhaustive enumeration.
pub const DEFAULT_EXHAUSTIVE_MAX: usize = 14;
/// Hard limit on the exhaustive regime (`2^M` subsets).
pub const EXHAUSTIVE_HARD_LIMIT: usize = 24;
pub const DEFAULT_BUDGET: usize = 20_000;

/// `γ(δ, B) = ‖B‖ [(1 + √(δ/‖B‖))² − 1] = 2√(δ‖B‖) + δ`.
pub fn gamma(delta: f64, b_norm: f64) -> Result<f64> {
    if !(b_norm > 0.0) || !b_norm.is_finite() {
        return Err(Error::InvalidInput(format!("gamma needs ‖B‖ > 0, got {b_norm}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("gamma needs δ ≥ 0, got {delta}")));
    }
    Ok(b_norm * ((1.0 + (delta / b_norm).sqrt()).powi(2) - 1.0))
}

/// Family of vectors `u_i` representing `Σ u_i ⊗ u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneEnsemble {
    dim: usize,
    vectors: Vec<DVector<f64>>,
    sources: Vec<usize>,
    delta: f64,
}

impl RankOneEnsemble {
    pub fn new(dim: usize, vectors: Vec<DVector<f64>>, sources: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("ensemble dimension must be positive".into()));
        }
        if vectors.len() != sources.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors but {} sources",
                vectors.len(),
                sources.len()
            )));
        }
        if let Some(i) = vectors.iter().position(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(format!("vector {i} has length {} != {dim}", vectors[i].len())));
        }
        if vectors.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("ensemble contains non-finite entries".into()));
        }
        let delta = vectors.iter().map(|v| v.norm_squared()).fold(0.0, f64::max);
        Ok(Self { dim, vectors, sources, delta })
    }

    /// Columns of `a`, with `sources[i] = i`.
    pub fn from_columns(a: &Matrix) -> Self {
        let vectors = (0..a.cols()).map(|c| a.column(c)).collect();
        Self::new(a.rows(), vectors, (0..a.cols()).collect()).expect("matrix columns form a valid ensemble")
    }

    pub fn from_vecs(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        let vs = vectors.iter().map(|v| DVector::from_column_slice(v)).collect();
        Self::new(dim, vs, (0..vectors.len()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// `max_i ‖u_i‖²`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `Σ u_i ⊗ u_i`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.partial_gram(0..self.len())
    }

    pub fn partial_gram(&self, indices: impl IntoIterator<Item = usize>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for i in indices {
            let v = &self.vectors[i];
            g.ger(1.0, v, v, 1.0);
        }
        g
    }

    /// Sub-ensemble on `indices`; `sources` are carried over.
    pub fn select(&self, indices: &[usize]) -> Self {
        let vectors = indices.iter().map(|&i| self.vectors[i].clone()).collect();
        let sources = indices.iter().map(|&i| self.sources[i]).collect();
        Self::new(self.dim, vectors, sources).expect("selection of a valid ensemble")
    }
}

/// Splits `C = I − B` into rank-one pieces of squared norm at most `delta`.
///
/// Each eigenvalue `λ` of `C` yields `⌊λ/δ⌋` copies of weight `δ` and one
/// remainder of weight `λ − δ⌊λ/δ⌋`. Eigenvalues and remainders at or below
/// `1e-12 · λ_max(C)` are dropped. `sources` hold the eigen-direction index.
pub fn complement_split(b: &Matrix, delta: f64) -> Result<RankOneEnsemble> {
    complement_split_dense(b.as_dmatrix(), delta)
}

pub(crate) fn complement_split_dense(b: &DMatrix<f64>, delta: f64) -> Result<RankOneEnsemble> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("complement split needs δ > 0, got {delta}")));
    }
    let n = b.nrows();
    let spec_b = SymmetricSpectrum::new(b)?;
    if spec_b.min() < -DEFAULT_TOL || spec_b.max() > 1.0 + DEFAULT_TOL {
        return Err(Error::InvalidInput(format!(
            "complement split needs 0 ⪯ B ⪯ I, spectrum is [{}, {}]",
            spec_b.min(),
            spec_b.max()
        )));
    }
    let c = DMatrix::<f64>::identity(n, n) - b;
    let spec = SymmetricSpectrum::of_symmetrized(&c);
    let top = spec.max();
    let mut vectors = Vec::new();
    let mut sources = Vec::new();
    if top > 0.0 {
        let cutoff = 1e-12 * top;
        for (j, &lambda) in spec.eigenvalues().iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let q = spec.eigenvector(j);
            let copies = (lambda / delta).floor() as usize;
            for _ in 0..copies {
                vectors.push(&q * delta.sqrt());
                sources.push(j);
            }
            let rem = lambda - delta * copies as f64;
            if rem > cutoff {
                vectors.push(&q * rem.sqrt());
                sources.push(j);
            }
        }
    }
    RankOneEnsemble::new(n, vectors, sources)
}

/// Literal check of the two-block existence statement on a small ensemble.
///
/// Each `u_i` is placed, scaled by `√2`, in one of two `n`-dimensional blocks.
/// After normalizing by `‖A‖` the family is padded with `complement_split` so
/// that its expectation is the identity, and the enumeration searches for a
/// realization whose sum is `⪯ (1 + √δ')² I` with `δ' = 2δ/‖A‖`. Existence is
/// guaranteed, so `false` means either the theorem or this code is wrong.
pub fn ks_existence_check(ensemble: &RankOneEnsemble, exhaustive_max: usize) -> Result<bool> {
    let m = ensemble.len();
    let max = exhaustive_max.min(EXHAUSTIVE_HARD_LIMIT);
    if m > max {
        return Err(Error::TooLargeForExhaustive { size: m, max });
    }
    if m == 0 {
        return Ok(true);
    }
    let n = ensemble.dim();
    let a = ensemble.gram();
    let a_norm = sym_norm(&a);
    if a_norm == 0.0 {
        return Ok(true);
    }
    let delta_norm = 2.0 * ensemble.delta() / a_norm;
    let mut expected = DMatrix::zeros(2 * n, 2 * n);
    expected.view_mut((0, 0), (n, n)).copy_from(&(&a / a_norm));
    expected.view_mut((n, n), (n, n)).copy_from(&(&a / a_norm));
    let padding = complement_split_dense(&expected, delta_norm)?;
    let pad_sum = padding.gram();
    let bound = (1.0 + delta_norm.sqrt()).powi(2);
    let slack = 1e-9 * bound;

    let scaled: Vec<DVector<f64>> = ensemble.vectors().iter().map(|u| u * (2.0 / a_norm).sqrt()).collect();
    // Swapping the blocks maps realizations onto each other, so index 0 stays in block one.
    let found = (0u64..(1u64 << (m - 1))).into_par_iter().any(|bits| {
        let mask = bits << 1;
        let mut total = pad_sum.clone();
        for (i, v) in scaled.iter().enumerate() {
            let offset = if mask >> i & 1 == 1 { n } else { 0 };
            let mut block = total.view_mut((offset, offset), (n, n));
            block.ger(1.0, v, v, 1.0);
        }
        let top = total.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top <= bound + slack
    });
    Ok(found)
}

/// Search parameters for [`halve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalvingConfig {
    pub budget: usize,
    pub seed: u64,
    pub exhaustive_max: usize,
}

impl Default for HalvingConfig {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, seed: 0, exhaustive_max: DEFAULT_EXHAUSTIVE_MAX }
    }
}

/// Outcome of one halving step. `sigma` holds 0-based ensemble indices, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingCertificate {
    pub sigma: Vec<usize>,
    /// `‖2 Σ_σ u_i ⊗ u_i − A‖`.
    pub achieved: f64,
    pub gamma_target: f64,
    pub exhaustive: bool,
    pub meets_gamma: bool,
    pub seed: Option<u64>,
    pub candidates_evaluated: usize,
    /// `max(1, ‖A‖)`, the scale of the `meets_gamma` tolerance.
    pub scale: f64,
}

/// Set order used for tie-breaking: at the first index where two sets differ,
/// the set containing it comes first. This is lexicographic order on sorted
/// index lists padded with `+∞`.
pub fn lex_cmp(a: &[usize], b: &[usize]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}

fn mask_lex_cmp(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        Ordering::Equal
    } else if a >> diff.trailing_zeros() & 1 == 1 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

struct Evaluator {
    n: usize,
    /// `2 u_i ⊗ u_i`, column-major `n × n`.
    doubled: Vec<DMatrix<f64>>,
    neg_a: DMatrix<f64>,
}

impl Evaluator {
    fn new(ensemble: &RankOneEnsemble) -> Self {
        let n = ensemble.dim();
        let doubled = ensemble
            .vectors()
            .iter()
            .map(|u| {
                let mut p = DMatrix::zeros(n, n);
                p.ger(2.0, u, u, 0.0);
                p
            })
            .collect();
        Self { n, doubled, neg_a: -ensemble.gram() }
    }

    fn residual(&self, indices: impl IntoIterator<Item = usize>) -> DMatrix<f64> {
        let mut s = self.neg_a.clone();
        for i in indices {
            s += &self.doubled[i];
        }
        s
    }

    fn achieved(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        sym_norm(&self.residual(indices))
    }

    fn achieved_mask(&self, mask: u64) -> f64 {
        let idx = (0..self.doubled.len()).filter(|i| mask >> i & 1 == 1);
        self.achieved(idx)
    }
}

/// Finds `σ` with `|σ| ≤ ⌊M/2⌋` minimizing `‖2 Σ_σ u_i ⊗ u_i − A‖`, with
/// target `γ(2δ, ‖A‖)`.
pub fn halve(ensemble: &RankOneEnsemble, config: &HalvingConfig) -> Result<HalvingCertificate> {
    let m = ensemble.len();
    if m == 0 {
        return Err(Error::InvalidInput("cannot halve an empty ensemble".into()));
    }
    if config.exhaustive_max > EXHAUSTIVE_HARD_LIMIT {
        return Err(Error::InvalidInput(format!(
            "exhaustive_max {} exceeds the limit {EXHAUSTIVE_HARD_LIMIT}",
            config.exhaustive_max
        )));
    }
    let a_norm = sym_norm(&ensemble.gram());
    let gamma_target = if a_norm > 0.0 { gamma(2.0 * ensemble.delta(), a_norm)? } else { 0.0 };
    let scale = a_norm.max(1.0);
    let eval = Evaluator::new(ensemble);

    let (sigma, exhaustive, seed, evaluated) = if m <= config.exhaustive_max {
        let (sigma, count) = exhaustive_search(&eval, m);
        (sigma, true, None, count)
    } else {
        if config.budget == 0 {
            return Err(Error::InvalidInput("halving budget must be positive outside the exhaustive regime".into()));
        }
        let (sigma, count) = randomized_search(&eval, m, config.budget, config.seed);
        (sigma, false, Some(config.seed), count)
    };

    let achieved = eval.achieved(sigma.iter().copied());
    Ok(HalvingCertificate {
        meets_gamma: achieved <= gamma_target + DEFAULT_TOL * scale,
        sigma,
        achieved,
        gamma_target,
        exhaustive,
        seed,
        candidates_evaluated: evaluated,
        scale,
    })
}

fn exhaustive_search(eval: &Evaluator, m: usize) -> (Vec<usize>, usize) {
    let half = (m / 2) as u32;
    let better = |a: (f64, u64), b: (f64, u64)| match a.0.total_cmp(&b.0).then_with(|| mask_lex_cmp(a.1, b.1)) {
        Ordering::Greater => b,
        _ => a,
    };
    let masks = (0u64..(1u64 << m)).into_par_iter().filter(|mask| mask.count_ones() <= half);
    let count = masks.clone().count();
    let (_, best) = masks
        .map(|mask| (eval.achieved_mask(mask), mask))
        .reduce(|| (f64::INFINITY, u64::MAX), better);
    let sigma = (0..m).filter(|i| best >> i & 1 == 1).collect();
    (sigma, count)
}

fn random_candidate(seed: u64, stream: u64, m: usize, size: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut s = sample(&mut rng, m, size).into_vec();
    s.sort_unstable();
    s
}

fn randomized_search(eval: &Evaluator, m: usize, budget: usize, seed: u64) -> (Vec<usize>, usize) {
    let half = m / 2;
    let (best_val, start) = (0..budget as u64)
        .into_par_iter()
        .map(|stream| {
            let cand = random_candidate(seed, stream, m, half);
            (eval.achieved(cand.iter().copied()), cand)
        })
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |a, b| match a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)) {
                Ordering::Greater => b,
                _ => a,
            },
        );
    let (sigma, local_evals) = local_search(eval, m, start, best_val);
    (sigma, budget + local_evals)
}

/// First-improvement descent over single swaps (`i ∈ σ ↔ j ∉ σ`) and single
/// removals, at most `10·M` accepted moves.
fn local_search(eval: &Evaluator, m: usize, start: Vec<usize>, start_val: f64) -> (Vec<usize>, usize) {
    let mut inside = vec![false; m];
    for &i in &start {
        inside[i] = true;
    }
    let mut residual = eval.residual(start.iter().copied());
    let mut current = start_val;
    let scale = sym_norm(&eval.neg_a).max(1.0);
    let mut evaluations = 0usize;
    let mut scratch = DMatrix::zeros(eval.n, eval.n);

    for _ in 0..10 * m {
        let mut moved = false;
        'scan: for i in 0..m {
            if !inside[i] {
                continue;
            }
            for j in 0..m {
                if inside[j] {
                    continue;
                }
                scratch.copy_from(&residual);
                scratch -= &eval.doubled[i];
                scratch += &eval.doubled[j];
                evaluations += 1;
                let val = sym_norm(&scratch);
                if val < current - 1e-12 * scale {
                    inside[i] = false;
                    inside[j] = true;
                    std::mem::swap(&mut residual, &mut scratch);
                    current = val;
                    moved = true;
                    break 'scan;
                }
            }
        }
        if !moved {
            for i in 0..m {
                if !inside[i] {
                    continue;
                }
                scratch.copy_from(&residual);
                scratch -= &eval.doubled[i];
                evaluations += 1;
                let val = sym_norm(&scratch);
                if val < current - 1e-12 * scale {
                    inside[i] = false;
                    std::mem::swap(&mut residual, &mut scratch);
                    current = val;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            break;
        }
    }
    let sigma = (0..m).filter(|&i| inside[i]).collect();
    (sigma, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ens(vs: &[Vec<f64>]) -> RankOneEnsemble {
        RankOneEnsemble::from_vecs(vs).unwrap()
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(0.0, 5.0).unwrap(), 0.0);
        assert!((gamma(1.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((gamma(1.0, 4.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(gamma(1.0, 0.0).is_err());
        assert!(gamma(-1.0, 1.0).is_err());
    }

    #[test]
    fn complement_of_identity_is_empty() {
        let e = complement_split(&Matrix::identity(3), 0.5).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.dim(), 3);
    }

    #[test]
    fn complement_of_zero_is_basis() {
        let e = complement_split(&Matrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(e.len(), 2);
        for v in e.vectors() {
            assert!((v.norm_squared() - 1.0).abs() < 1e-12);
        }
        assert!((e.gram() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn complement_splits_large_eigenvalue() {
        let b = Matrix::diagonal(&[0.5, 1.0]).unwrap();
        let e = complement_split(&b, 0.2).unwrap();
        let mut norms: Vec<f64> = e.vectors().iter().map(|v| v.norm_squared()).collect();
        norms.sort_by(f64::total_cmp);
        assert_eq!(norms.len(), 3);
        assert!((norms[0] - 0.1).abs() < 1e-12);
        assert!((norms[1] - 0.2).abs() < 1e-12 && (norms[2] - 0.2).abs() < 1e-12);
        let target = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.0]));
        assert!((e.gram() - target).norm() < 1e-12);
    }

    #[test]
    fn complement_rejects_out_of_range() {
        assert!(complement_split(&Matrix::diagonal(&[1.5, 0.0]).unwrap(), 0.1).is_err());
        assert!(complement_split(&Matrix::diagonal(&[-0.5, 0.0]).unwrap(), 0.1).is_err());
        assert!(complement_split(&Matrix::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn lex_order() {
        assert_eq!(lex_cmp(&[0, 2], &[0, 3]), Ordering::Less);
        assert_eq!(lex_cmp(&[0], &[]), Ordering::Less);
        assert_eq!(lex_cmp(&[0, 1], &[0]), Ordering::Less);
        assert_eq!(lex_cmp(&[1], &[0, 5]), Ordering::Greater);
        for (a, b) in [(0b101u64, 0b1001u64), (0b1, 0b0), (0b11, 0b1), (0b10, 0b101)] {
            let sa: Vec<usize> = (0..8).filter(|i| a >> i & 1 == 1).collect();
            let sb: Vec<usize> = (0..8).filter(|i| b >> i & 1 == 1).collect();
            assert_eq!(mask_lex_cmp(a, b), lex_cmp(&sa, &sb));
        }
    }

    #[test]
    fn halve_symmetric_pairs() {
        let e = ens(&[vec![1., 0.], vec![1., 0.], vec![0., 1.], vec![0., 1.]]);
        let cert = halve(&e, &HalvingConfig::default()).unwrap();
        assert_eq!(cert.sigma, vec![0, 2]);
        assert!(cert.achieved < 1e-12);
        assert!(cert.exhaustive && cert.meets_gamma);
        assert_eq!(cert.seed, None);
    }

    #[test]
    fn halve_two_orthogonal() {
        let d: f64 = 0.3;
        let e = ens(&[vec![d.sqrt(), 0.], vec![0., d.sqrt()]]);
        let cert = halve(&e, &HalvingConfig::default()).unwrap();
        assert_eq!(cert.sigma, vec![0]);
        assert!((cert.achieved - d).abs() < 1e-12);
        assert!((cert.gamma_target - d * (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!(cert.meets_gamma);
        assert_eq!(cert.candidates_evaluated, 3);
    }

    #[test]
    fn halve_zero_vectors() {
        let e = ens(&[vec![0., 0.], vec![0., 0.], vec![0., 0.]]);
        let cert = halve(&e, &HalvingConfig::default()).unwrap();
        assert_eq!(cert.achieved, 0.0);
        assert!(cert.meets_gamma);
        assert!(cert.sigma.len() <= 1);
    }

    #[test]
    fn halve_errors() {
        let empty = RankOneEnsemble::new(2, vec![], vec![]).unwrap();
        assert!(halve(&empty, &HalvingConfig::default()).is_err());
        let big = ens(&vec![vec![1.0, 0.5]; 6]);
        let cfg = HalvingConfig { budget: 0, seed: 1, exhaustive_max: 4 };
        assert!(halve(&big, &cfg).is_err());
    }

    #[test]
    fn randomized_regime_reports_seed() {
        let vs: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.7).cos(), (i as f64 * 0.7).sin()]).collect();
        let e = ens(&vs);
        let cfg = HalvingConfig { budget: 200, seed: 9, exhaustive_max: 10 };
        let cert = halve(&e, &cfg).unwrap();
        assert!(!cert.exhaustive);
        assert_eq!(cert.seed, Some(9));
        assert!(cert.sigma.len() <= 10);
        assert_eq!(cert, halve(&e, &cfg).unwrap());
    }

    #[test]
    fn ks_check_small_cases() {
        assert!(ks_existence_check(&ens(&[vec![1., 0.], vec![0., 1.]]), 14).unwrap());
        let empty = RankOneEnsemble::new(3, vec![], vec![]).unwrap();
        assert!(ks_existence_check(&empty, 14).unwrap());
        let big = ens(&vec![vec![1.0]; 15]);
        assert!(matches!(ks_existence_check(&big, 14), Err(Error::TooLargeForExhaustive { .. })));
    }
}
