mod common;

use common::*;
use ks_sparsify::halving::{
    complement_split, gamma, halve, ks_existence_check, lex_cmp, HalvingConfig, RankOneEnsemble,
};
use ks_sparsify::{Error, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn random_ensemble(rng: &mut impl Rng, n: usize, m: usize, delta: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            let g = gaussian(rng, 1, n).remove(0);
            let len = rng.random_range(0.0..=delta.sqrt());
            let nv = norm(&g);
            g.iter().map(|x| x * len / nv).collect()
        })
        .collect()
}

/// `‖2 Σ_σ u⊗u − Σ u⊗u‖` by the Jacobi oracle.
fn achieved(vecs: &[Vec<f64>], sigma: &[usize]) -> f64 {
    let n = vecs[0].len();
    let mut s = zeros(n, n);
    for (i, u) in vecs.iter().enumerate() {
        let w = if sigma.contains(&i) { 1.0 } else { -1.0 };
        for r in 0..n {
            for c in 0..n {
                s[r][c] += w * u[r] * u[c];
            }
        }
    }
    sym_norm(&s)
}

/// Brute force over all subsets of size ≤ ⌊M/2⌋, minimizing (achieved, lex).
fn brute_force(vecs: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let m = vecs.len();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize > m / 2 {
            continue;
        }
        let sigma: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let val = achieved(vecs, &sigma);
        let better = match &best {
            None => true,
            Some((s, v)) => val < v - 1e-12 || ((val - v).abs() <= 1e-12 && lex_cmp(&sigma, s).is_lt()),
        };
        if better {
            best = Some((sigma, val));
        }
    }
    best.unwrap()
}

#[test]
fn gamma_units() {
    assert_close(gamma(1.0, 1.0).unwrap(), 3.0, 1e-12, "γ(1,1)");
    assert_close(gamma(0.25, 1.0).unwrap(), 1.25, 1e-12, "γ(1/4,1)");
    assert!(gamma(-1.0, 1.0).is_err());
}

#[test]
fn exhaustive_matches_brute_force_value() {
    let mut rng = rng(21);
    for trial in 0..40 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=9);
        let vecs = random_ensemble(&mut rng, n, m, 0.5);
        let cert = halve(&RankOneEnsemble::from_vecs(&vecs).unwrap(), &HalvingConfig::default()).unwrap();
        let (_, best) = brute_force(&vecs);
        assert!(cert.exhaustive);
        assert_close(cert.achieved, best, 1e-10, &format!("optimum trial {trial}"));
        assert_close(cert.achieved, achieved(&vecs, &cert.sigma), 1e-10, "achieved recomputed");
        assert!(cert.sigma.len() <= m / 2);
        assert!(cert.meets_gamma);
    }
}

#[test]
fn lex_tie_break_on_identical_vectors() {
    let vecs = vec![vec![1.0, 0.0]; 6];
    let cert = halve(&RankOneEnsemble::from_vecs(&vecs).unwrap(), &HalvingConfig::default()).unwrap();
    assert_eq!(cert.sigma, vec![0, 1, 2]);
    assert_eq!(brute_force(&vecs).0, vec![0, 1, 2]);
}

#[test]
fn randomized_regime_is_deterministic_and_honest() {
    let mut rng = rng(5);
    let vecs = random_ensemble(&mut rng, 3, 20, 0.2);
    let e = RankOneEnsemble::from_vecs(&vecs).unwrap();
    let cfg = HalvingConfig { budget: 500, seed: 9, exhaustive_max: 14 };
    let c1 = halve(&e, &cfg).unwrap();
    let c2 = halve(&e, &cfg).unwrap();
    assert_eq!(c1, c2);
    assert!(!c1.exhaustive);
    assert_eq!(c1.seed, Some(9));
    assert!(c1.sigma.len() <= 10);
    assert_close(c1.achieved, achieved(&vecs, &c1.sigma), 1e-10, "achieved recomputed");
    assert_eq!(c1.meets_gamma, c1.achieved <= c1.gamma_target + 1e-8 * c1.scale);
}

#[test]
fn exhaustive_limit_is_enforced_by_existence_check() {
    let vecs = vec![vec![0.1]; 30];
    let e = RankOneEnsemble::from_vecs(&vecs).unwrap();
    assert!(matches!(ks_existence_check(&e, 40), Err(Error::TooLargeForExhaustive { .. })));
}

#[test]
fn existence_check_on_random_ensembles() {
    let mut rng = rng(8);
    for _ in 0..10 {
        let n = rng.random_range(1..=2);
        let m = rng.random_range(1..=6);
        let vecs = random_ensemble(&mut rng, n, m, 0.3);
        assert!(ks_existence_check(&RankOneEnsemble::from_vecs(&vecs).unwrap(), 14).unwrap());
    }
}

#[test]
fn complement_split_examples() {
    let e = complement_split(&Matrix::zeros(2, 2), 0.5).unwrap();
    assert_eq!(e.len(), 4);
    let e = complement_split(&Matrix::identity(3), 0.5).unwrap();
    assert!(e.is_empty());
}

proptest! {
    #[test]
    fn complement_split_sums_and_counts(diag in proptest::collection::vec(0.0f64..1.0, 1..4), delta in 0.05f64..1.0) {
        let n = diag.len();
        let mut rng = rng(n as u64);
        let q = jacobi(&gram(&gaussian(&mut rng, n, n))).1;
        let b: Dense = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| q[i][k] * diag[k] * q[j][k]).sum()).collect()).collect();
        let e = complement_split(&Matrix::from_rows(&b).unwrap(), delta).unwrap();
        let sum = e.gram();
        let expected = sub(&identity(n), &b);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((sum[(i, j)] - expected[i][j]).abs() <= 1e-9);
            }
        }
        let bound: usize = diag.iter().map(|d| ((1.0 - d) / delta).ceil() as usize).sum();
        prop_assert!(e.len() <= bound);
        prop_assert!(e.vectors().iter().all(|v| v.norm_squared() <= delta * (1.0 + 1e-9)));
    }

    #[test]
    fn halving_output_is_recomputable(seed in 0u64..1000, m in 1usize..=10) {
        let mut rng = rng(seed);
        let vecs = random_ensemble(&mut rng, 2, m, 1.0);
        let cert = halve(&RankOneEnsemble::from_vecs(&vecs).unwrap(), &HalvingConfig::default()).unwrap();
        prop_assert!((cert.achieved - achieved(&vecs, &cert.sigma)).abs() <= 1e-10);
        prop_assert!(cert.sigma.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(cert.meets_gamma);
    }
}
