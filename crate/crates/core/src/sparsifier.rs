//! Column selection by repeated halving.
//!
//! `B = AA* = Σ c_i x_i ⊗ x_i` is first split into pieces of roughly equal
//! weight `κ`, then halved `k` times. The retained pieces, weighted by
//! `2^k · w_j`, are mapped back onto the columns of `A` to form the multiset
//! `σ` and the diagonal reweighting `D`.
//!
//! In strict mode `M` and `k` follow the theorem-level constants. Those make
//! `M` grow like `839 · srank(A) / ε²`, so best-effort mode caps the piece
//! count and instead descends level by level, keeping a level only while the
//! piece-level bound `‖2^ℓ B_ℓ − B‖ ≤ (ε/2) ‖B‖` still holds.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halving::{halve, HalvingConfig, RankOneEnsemble, DEFAULT_BUDGET, DEFAULT_EXHAUSTIVE_MAX};
use crate::spectral_core::{
    approx_membership_with_tol, certificate_of, operator_norm, sym_norm, ApproxCertificate, DiagonalReweighting,
    Matrix, Mode, DEFAULT_TOL,
};

/// Constant in the lower bound on `M`: `√(2κ/‖B‖) ≤ ε/6`.
pub const M_BIG_CONSTANT: f64 = 72.0;

/// `144 / (√2 − 1)²`, the constant bounding the iteration depth.
pub fn depth_constant() -> f64 {
    144.0 / (std::f64::consts::SQRT_2 - 1.0).powi(2)
}

/// Default upper bound on the strict-mode piece count.
pub const DEFAULT_MAX_STRICT_PIECES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsifyOptions {
    pub mode: Mode,
    pub budget: usize,
    pub seed: u64,
    pub exhaustive_max: usize,
    /// Best-effort cap on the number of pieces.
    pub m_cap: usize,
    pub tol: f64,
    /// Strict-mode runs needing more pieces than this fail as infeasible.
    pub max_strict_pieces: usize,
    /// Best-effort levels must also keep `B ∈ Approx_ε D` (needed when the
    /// result feeds a constrained approximation).
    pub require_sandwich: bool,
}

impl Default for SparsifyOptions {
    fn default() -> Self {
        Self {
            mode: Mode::BestEffort,
            budget: DEFAULT_BUDGET,
            seed: 0,
            exhaustive_max: DEFAULT_EXHAUSTIVE_MAX,
            m_cap: DEFAULT_EXHAUSTIVE_MAX,
            tol: DEFAULT_TOL,
            max_strict_pieces: DEFAULT_MAX_STRICT_PIECES,
            require_sandwich: false,
        }
    }
}

impl SparsifyOptions {
    pub fn strict() -> Self {
        Self { mode: Mode::Strict, ..Self::default() }
    }

    fn halving_config(&self, level: usize) -> HalvingConfig {
        HalvingConfig {
            budget: self.budget,
            seed: self.seed.wrapping_add(level as u64),
            exhaustive_max: self.exhaustive_max,
        }
    }
}

/// One equal-weight piece of a column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub source: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Number of pieces.
    pub m: usize,
    /// Target piece weight `Tr(B)/M_target`; every piece weighs at most this.
    pub kappa: f64,
    pub pieces: Vec<Piece>,
    pub epsilon: f64,
    /// `c_i = ‖a_i‖²`.
    pub column_weights: Vec<f64>,
    pub trace_b: f64,
    pub norm_b: f64,
}

impl SplitPlan {
    pub fn stable_rank(&self) -> f64 {
        self.trace_b / self.norm_b
    }

    /// `√(2κ/‖B‖) ≤ ε/6`.
    pub fn satisfies_m_big(&self) -> bool {
        (2.0 * self.kappa / self.norm_b).sqrt() <= self.epsilon / 6.0 * (1.0 + 1e-12)
    }
}

/// `ceil` that ignores round-off just above an integer.
fn pieces_for(c: f64, kappa: f64) -> usize {
    ((c / kappa) - 1e-9).ceil().max(1.0) as usize
}

fn plan_with_kappa(columns: &[f64], kappa: f64, epsilon: f64, trace_b: f64, norm_b: f64) -> SplitPlan {
    let mut pieces = Vec::new();
    for (i, &c) in columns.iter().enumerate() {
        if c <= 0.0 {
            continue;
        }
        let p = pieces_for(c, kappa);
        pieces.extend(std::iter::repeat_n(Piece { source: i, weight: c / p as f64 }, p));
    }
    SplitPlan { m: pieces.len(), kappa, pieces, epsilon, column_weights: columns.to_vec(), trace_b, norm_b }
}

/// Strict-mode piece target `⌈max(72, 144/(√2−1)²) · srank / ε²⌉`.
pub fn strict_m(stable_rank: f64, epsilon: f64) -> f64 {
    (M_BIG_CONSTANT.max(depth_constant()) * stable_rank / (epsilon * epsilon)).ceil()
}

/// Splits the columns of `A` into pieces of comparable weight.
///
/// Strict mode targets `strict_m` pieces. Best-effort mode picks the largest
/// target `M' ≤ m_cap` whose split has at most `m_cap` pieces; if even one
/// piece per column exceeds the cap, every column becomes a single piece.
pub fn split_equalize(a: &Matrix, epsilon: f64, mode: Mode, m_cap: usize) -> Result<SplitPlan> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let columns: Vec<f64> = (0..a.cols()).map(|c| a.column(c).norm_squared()).collect();
    let trace_b: f64 = columns.iter().sum();
    let norm = operator_norm(a);
    if trace_b == 0.0 || norm == 0.0 {
        return Err(Error::UndefinedStableRank);
    }
    let norm_b = norm * norm;
    let srank = trace_b / norm_b;
    let plan = match mode {
        Mode::Strict => plan_with_kappa(&columns, trace_b / strict_m(srank, epsilon), epsilon, trace_b, norm_b),
        Mode::BestEffort => {
            let fits = (1..=m_cap.max(1)).rev().find_map(|target| {
                let kappa = trace_b / target as f64;
                let count: usize = columns.iter().filter(|&&c| c > 0.0).map(|&c| pieces_for(c, kappa)).sum();
                (count <= m_cap).then_some(kappa)
            });
            let kappa = fits.unwrap_or_else(|| columns.iter().copied().fold(0.0, f64::max));
            plan_with_kappa(&columns, kappa, epsilon, trace_b, norm_b)
        }
    };
    Ok(plan)
}

/// Iteration threshold `144/(ε²(√2−1)²) · srank`.
pub fn depth_threshold(trace_b: f64, norm_b: f64, epsilon: f64) -> f64 {
    depth_constant() / (epsilon * epsilon) * trace_b / norm_b
}

/// Largest `k ≥ 0` with `M / 2^k ≥ 144/(ε²(√2−1)²) · srank`.
pub fn choose_k(m: usize, trace_b: f64, norm_b: f64, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !(norm_b > 0.0) {
        return Err(Error::InvalidInput("choose_k needs ε > 0 and ‖B‖ > 0".into()));
    }
    let threshold = depth_threshold(trace_b, norm_b, epsilon);
    let m = m as f64;
    if m < threshold {
        return Err(Error::BelowIterationThreshold { m: m as usize, threshold });
    }
    let mut k = 0usize;
    while m / 2f64.powi(k as i32 + 1) >= threshold {
        k += 1;
    }
    Ok(k)
}

/// One halving level of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub size_before: usize,
    pub size_after: usize,
    pub achieved: f64,
    pub gamma_target: f64,
    pub meets_gamma: bool,
    pub exhaustive: bool,
    pub candidates_evaluated: usize,
    /// `‖2^ℓ B_ℓ − B‖ / ‖B‖`.
    pub piece_gap: f64,
    /// `(1 + √(2κ/‖B_{ℓ−1}‖))²`.
    pub alpha: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub column: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifyResult {
    pub mode: Mode,
    pub epsilon: f64,
    /// Columns with non-zero multiplicity.
    pub sigma: Vec<SigmaEntry>,
    /// `|σ| = Σ κ_i`.
    pub sigma_size: usize,
    pub d: DiagonalReweighting,
    pub k_used: usize,
    /// Cumulative `β_ℓ = Π_{i≤ℓ} α_i`.
    pub beta_trace: Vec<f64>,
    pub certificate: ApproxCertificate,
    /// `2^k κ / (ε² ‖A‖²)`.
    pub effective_c: f64,
    /// `certificate.gap ≤ ε`, the operator-norm form of the guarantee.
    pub gap_within_epsilon: bool,
    pub m: usize,
    pub kappa: f64,
    pub stable_rank: f64,
    /// Retained piece indices at the last accepted level.
    pub piece_sigma: Vec<usize>,
    pub levels: Vec<LevelRecord>,
    pub all_levels_met_gamma: bool,
    /// `2^k Σ_{σ_k} w_j / Tr(B)`.
    pub trace_ratio: f64,
    /// `2^k |σ_k| / M`.
    pub size_ratio: f64,
    pub theory_constants_respected: bool,
}

impl SparsifyResult {
    pub fn multiplicity(&self, column: usize) -> usize {
        self.d.multiplicities().get(column).copied().unwrap_or(0)
    }
}

/// State of the chain after a level, handed to the acceptance predicate.
pub(crate) struct ChainState<'a> {
    pub plan: &'a SplitPlan,
    pub active: &'a [usize],
    pub level: usize,
}

struct Chain {
    active: Vec<usize>,
    k: usize,
    levels: Vec<LevelRecord>,
    beta_trace: Vec<f64>,
}

fn piece_ensemble(a: &Matrix, plan: &SplitPlan) -> RankOneEnsemble {
    let n = a.rows();
    let vectors: Vec<DVector<f64>> = plan
        .pieces
        .iter()
        .map(|p| {
            let col = a.column(p.source);
            let scale = (p.weight / plan.column_weights[p.source]).sqrt();
            col * scale
        })
        .collect();
    RankOneEnsemble::new(n, vectors, (0..plan.m).collect()).expect("pieces form a valid ensemble")
}

fn run_chain(
    a: &Matrix,
    plan: &SplitPlan,
    opts: &SparsifyOptions,
    fixed_depth: Option<usize>,
    accept: &dyn Fn(&ChainState<'_>) -> bool,
) -> Result<Chain> {
    let ensemble = piece_ensemble(a, plan);
    let b = ensemble.gram();
    let norm_b = sym_norm(&b);
    let mut active: Vec<usize> = (0..plan.m).collect();
    let mut levels = Vec::new();
    let mut beta_trace = Vec::new();
    let mut beta = 1.0;
    let mut k = 0usize;

    loop {
        let level = k + 1;
        match fixed_depth {
            Some(depth) if k >= depth => break,
            None if active.len() < 2 => break,
            _ => {}
        }
        let sub = ensemble.select(&active);
        let prev_norm = sym_norm(&sub.gram());
        let cert = halve(&sub, &opts.halving_config(level))?;
        let next: Vec<usize> = cert.sigma.iter().map(|&i| sub.sources()[i]).collect();
        let scaled = ensemble.partial_gram(next.iter().copied()) * 2f64.powi(level as i32);
        let piece_gap = sym_norm(&(scaled - &b)) / norm_b;
        let alpha = if prev_norm > 0.0 { (1.0 + (2.0 * plan.kappa / prev_norm).sqrt()).powi(2) } else { f64::INFINITY };
        let accepted = match fixed_depth {
            Some(_) => true,
            None => {
                !next.is_empty()
                    && piece_gap <= plan.epsilon / 2.0 + opts.tol
                    && accept(&ChainState { plan, active: &next, level })
            }
        };
        levels.push(LevelRecord {
            level,
            size_before: active.len(),
            size_after: next.len(),
            achieved: cert.achieved,
            gamma_target: cert.gamma_target,
            meets_gamma: cert.meets_gamma,
            exhaustive: cert.exhaustive,
            candidates_evaluated: cert.candidates_evaluated,
            piece_gap,
            alpha,
            accepted,
        });
        if !accepted {
            break;
        }
        beta *= alpha;
        beta_trace.push(beta);
        active = next;
        k = level;
    }
    Ok(Chain { active, k, levels, beta_trace })
}

/// Multiplicities per column of the retained pieces.
fn column_multiplicities(plan: &SplitPlan, active: &[usize]) -> Vec<usize> {
    let mut kappa = vec![0usize; plan.column_weights.len()];
    for &j in active {
        kappa[plan.pieces[j].source] += 1;
    }
    kappa
}

fn sigma_entries(mult: &[usize]) -> Vec<SigmaEntry> {
    mult.iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(column, &multiplicity)| SigmaEntry { column, multiplicity })
        .collect()
}

/// `d_ii = Σ_{retained pieces j of column i} 2^k w_j / c_i`.
fn theorem_weights(plan: &SplitPlan, active: &[usize], k: usize) -> Vec<f64> {
    let mut d = vec![0.0; plan.column_weights.len()];
    let scale = 2f64.powi(k as i32);
    for &j in active {
        let p = plan.pieces[j];
        d[p.source] += scale * p.weight / plan.column_weights[p.source];
    }
    d
}

struct Summary {
    trace_ratio: f64,
    size_ratio: f64,
}

fn summarize(plan: &SplitPlan, chain: &Chain) -> Summary {
    let scale = 2f64.powi(chain.k as i32);
    let kept: f64 = chain.active.iter().map(|&j| plan.pieces[j].weight).sum();
    Summary {
        trace_ratio: scale * kept / plan.trace_b,
        size_ratio: scale * chain.active.len() as f64 / plan.m as f64,
    }
}

fn strict_depth(plan: &SplitPlan, opts: &SparsifyOptions) -> Result<usize> {
    if plan.m > opts.max_strict_pieces {
        return Err(Error::Infeasible(format!(
            "strict constants need {} pieces, limit is {}",
            plan.m, opts.max_strict_pieces
        )));
    }
    choose_k(plan.m, plan.trace_b, plan.norm_b, plan.epsilon).map_err(|e| Error::Infeasible(e.to_string()))
}

/// Column-selection approximation `‖ADA* − AA*‖ ≤ ε‖A‖²` with `D` supported
/// on a multiset of columns.
pub fn theorem1_sparsify(a: &Matrix, epsilon: f64, opts: &SparsifyOptions) -> Result<SparsifyResult> {
    let plan = split_equalize(a, epsilon, opts.mode, opts.m_cap)?;
    let (depth, respected) = match opts.mode {
        Mode::Strict => (Some(strict_depth(&plan, opts)?), plan.satisfies_m_big()),
        Mode::BestEffort => {
            let respected = plan.satisfies_m_big() && choose_k(plan.m, plan.trace_b, plan.norm_b, epsilon).is_ok();
            (None, respected)
        }
    };
    let sandwich = |state: &ChainState<'_>| -> bool {
        if !opts.require_sandwich {
            return true;
        }
        let d = theorem_weights(state.plan, state.active, state.level);
        a.weighted_gram(&d)
            .map(|gd| certificate_of(&a.gram(), &gd, epsilon, opts.tol).meets_epsilon)
            .unwrap_or(false)
    };
    let chain = run_chain(a, &plan, opts, depth, &sandwich)?;

    let mult = column_multiplicities(&plan, &chain.active);
    let weights = theorem_weights(&plan, &chain.active, chain.k);
    let d = DiagonalReweighting::new(weights, mult.clone())?;
    let all_met = chain.levels.iter().filter(|l| l.accepted).all(|l| l.meets_gamma);
    let certificate = approx_membership_with_tol(a, &d, epsilon, opts.tol)?.with_mode(opts.mode, respected);
    let summary = summarize(&plan, &chain);
    let effective_c = 2f64.powi(chain.k as i32) * plan.kappa / (epsilon * epsilon * plan.norm_b);
    Ok(SparsifyResult {
        mode: opts.mode,
        epsilon,
        sigma: sigma_entries(&mult),
        sigma_size: mult.iter().sum(),
        d,
        k_used: chain.k,
        beta_trace: chain.beta_trace,
        gap_within_epsilon: certificate.gap <= epsilon + opts.tol,
        certificate,
        effective_c,
        m: plan.m,
        kappa: plan.kappa,
        stable_rank: plan.stable_rank(),
        piece_sigma: chain.active,
        levels: chain.levels,
        all_levels_met_gamma: all_met,
        trace_ratio: summary.trace_ratio,
        size_ratio: summary.size_ratio,
        theory_constants_respected: respected,
    })
}

/// Tolerance for recognizing an identity decomposition.
pub const IDENTITY_DECOMPOSITION_TOL: f64 = 1e-8;

fn equal_norms(columns: &[f64]) -> bool {
    let Some(&first) = columns.first() else { return false };
    first > 0.0 && columns.iter().all(|&c| (c - first).abs() <= 1e-12 * first)
}

/// `d_ii = κ_i · n / (|σ| c_i)`: uniform weight `n/|σ|` on each normalized vector.
fn uniform_weights(plan: &SplitPlan, mult: &[usize], n: usize) -> Vec<f64> {
    let size: usize = mult.iter().sum();
    mult.iter()
        .zip(&plan.column_weights)
        .map(|(&k, &c)| if k == 0 { 0.0 } else { k as f64 * n as f64 / (size as f64 * c) })
        .collect()
}

/// Equal-weight sparsification of an identity decomposition `Σ v_i ⊗ v_i = I_n`:
/// `(1−ε) I ⪯ (n/|σ|) Σ_σ v̂_i ⊗ v̂_i ⪯ (1+ε) I`.
///
/// When all `‖v_i‖` coincide each vector is a single piece, so `σ` is a set.
pub fn equal_weight_sparsify(vectors: &Matrix, epsilon: f64, opts: &SparsifyOptions) -> Result<SparsifyResult> {
    equal_weight_sparsify_with(vectors, epsilon, opts, IDENTITY_DECOMPOSITION_TOL)
}

pub(crate) fn equal_weight_sparsify_with(
    vectors: &Matrix,
    epsilon: f64,
    opts: &SparsifyOptions,
    identity_tol: f64,
) -> Result<SparsifyResult> {
    let n = vectors.rows();
    let identity = DMatrix::<f64>::identity(n, n);
    let deviation = sym_norm(&(vectors.gram() - &identity));
    if deviation > identity_tol {
        return Err(Error::InvalidInput(format!(
            "vectors are not an identity decomposition (‖Σ v⊗v − I‖ = {deviation:e})"
        )));
    }
    let columns: Vec<f64> = (0..vectors.cols()).map(|c| vectors.column(c).norm_squared()).collect();
    let equal = equal_norms(&columns);
    let plan = if equal {
        let mut plan = split_equalize(vectors, epsilon, Mode::BestEffort, columns.len())?;
        plan.kappa = columns[0];
        plan
    } else {
        split_equalize(vectors, epsilon, opts.mode, opts.m_cap)?
    };
    debug_assert!(!equal || plan.m == columns.len());

    let (depth, respected) = match opts.mode {
        Mode::Strict => {
            if plan.m as f64 + 1e-9 < strict_m(plan.stable_rank(), epsilon) && equal {
                return Err(Error::Infeasible(format!(
                    "equal-norm decomposition has {} vectors, strict constants need {}",
                    plan.m,
                    strict_m(plan.stable_rank(), epsilon)
                )));
            }
            (Some(strict_depth(&plan, opts)?), plan.satisfies_m_big())
        }
        Mode::BestEffort => {
            let respected = plan.satisfies_m_big() && choose_k(plan.m, plan.trace_b, plan.norm_b, epsilon).is_ok();
            (None, respected)
        }
    };
    let reweighted_ok = |state: &ChainState<'_>| -> bool {
        let mult = column_multiplicities(state.plan, state.active);
        let d = uniform_weights(state.plan, &mult, n);
        vectors
            .weighted_gram(&d)
            .map(|gd| certificate_of(&identity, &gd, epsilon, opts.tol).meets_epsilon)
            .unwrap_or(false)
    };
    let chain = run_chain(vectors, &plan, opts, depth, &reweighted_ok)?;

    let mult = column_multiplicities(&plan, &chain.active);
    if equal && mult.iter().any(|&k| k > 1) {
        return Err(Error::InvalidInput("equal-norm decomposition produced a repeated index".into()));
    }
    let d = DiagonalReweighting::new(uniform_weights(&plan, &mult, n), mult.clone())?;
    let certificate = approx_membership_with_tol(vectors, &d, epsilon, opts.tol)?.with_mode(opts.mode, respected);
    let all_met = chain.levels.iter().filter(|l| l.accepted).all(|l| l.meets_gamma);
    let summary = summarize(&plan, &chain);
    let effective_c = 2f64.powi(chain.k as i32) * plan.kappa / (epsilon * epsilon * plan.norm_b);
    Ok(SparsifyResult {
        mode: opts.mode,
        epsilon,
        sigma: sigma_entries(&mult),
        sigma_size: mult.iter().sum(),
        d,
        k_used: chain.k,
        beta_trace: chain.beta_trace,
        gap_within_epsilon: certificate.gap <= epsilon + opts.tol,
        certificate,
        effective_c,
        m: plan.m,
        kappa: plan.kappa,
        stable_rank: plan.stable_rank(),
        piece_sigma: chain.active,
        levels: chain.levels,
        all_levels_met_gamma: all_met,
        trace_ratio: summary.trace_ratio,
        size_ratio: summary.size_ratio,
        theory_constants_respected: respected,
    })
}

/// Column multiplicities as a map, for callers that prefer lookups.
pub fn sigma_map(result: &SparsifyResult) -> BTreeMap<usize, usize> {
    result.sigma.iter().map(|e| (e.column, e.multiplicity)).collect()
}
