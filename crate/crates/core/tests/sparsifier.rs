mod common;

use common::*;
use ks_sparsify::sparsifier::{
    choose_k, equal_weight_sparsify, split_equalize, strict_m, theorem1_sparsify, SigmaEntry, SparsifyOptions,
};
use ks_sparsify::{Error, Matrix, Mode};
use proptest::prelude::*;
use rand::Rng;

fn capped(m_cap: usize) -> SparsifyOptions {
    SparsifyOptions { m_cap, ..SparsifyOptions::default() }
}

/// A random orthonormal `n×n` matrix from the Jacobi eigenvectors of a Gram matrix.
fn orthonormal(rng: &mut impl Rng, n: usize) -> Dense {
    jacobi(&gram(&gaussian(rng, n, n))).1
}

#[test]
fn choose_k_units() {
    // M = 200, srank 1, ε = 3: threshold 839.29/9 ≈ 93.25, so 200/2 ≥ 93.25 > 200/4
    assert_eq!(choose_k(200, 1.0, 1.0, 3.0).unwrap(), 1);
    assert_eq!(choose_k(94, 1.0, 1.0, 3.0).unwrap(), 0);
    assert!(matches!(choose_k(93, 1.0, 1.0, 3.0), Err(Error::BelowIterationThreshold { .. })));
}

#[test]
fn strict_piece_count_formula() {
    let expected = (144.0 / (2f64.sqrt() - 1.0).powi(2) * 2.0 / 0.25).ceil();
    assert_eq!(strict_m(2.0, 0.5), expected);
}

#[test]
fn best_effort_certificates_recompute() {
    let mut rng = rng(100);
    for trial in 0..15 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(n..=10);
        let a = gaussian(&mut rng, n, m);
        let r = theorem1_sparsify(&to_matrix(&a), 0.75, &capped(12)).unwrap();
        let d = r.d.weights();
        assert_close(r.certificate.gap, gap(&a, d), 1e-9, &format!("gap trial {trial}"));
        let (lo, hi) = sandwich(&gram(&a), &weighted_gram(&a, d));
        assert_close(r.certificate.alpha_achieved, lo, 1e-9, "α");
        assert_close(r.certificate.beta_achieved, hi, 1e-9, "β");
        assert_eq!(r.sigma_size, r.d.multiplicities().iter().sum::<usize>());
        assert!(r.m <= 12);
        assert!(!r.theory_constants_respected);
        assert_eq!(r.mode, Mode::BestEffort);
    }
}

#[test]
fn orthonormal_columns_keep_everything() {
    let mut rng = rng(4);
    let q = orthonormal(&mut rng, 3);
    let r = theorem1_sparsify(&to_matrix(&q), 0.5, &capped(3)).unwrap();
    assert_eq!(r.m, 3);
    assert!(r.certificate.gap < 1e-12);
}

#[test]
fn doubled_basis_keeps_one_copy_each() {
    let cols: Vec<Vec<f64>> = (0..6).map(|i| (0..3).map(|r| f64::from(u8::from(r == i % 3))).collect()).collect();
    let a = Matrix::from_columns(&cols).unwrap();
    let r = theorem1_sparsify(&a, 0.5, &capped(6)).unwrap();
    assert_eq!(r.sigma_size, 3);
    assert!(r.sigma.iter().all(|s| s.multiplicity == 1));
    let cols_kept: std::collections::BTreeSet<usize> = r.sigma.iter().map(|s| s.column % 3).collect();
    assert_eq!(cols_kept.len(), 3);
    assert!(r.certificate.gap < 1e-12);
}

#[test]
fn rank_one_power_of_two_pieces_collapse() {
    // four equal columns and two zero columns, eight pieces
    let cols: Vec<Vec<f64>> =
        (0..6).map(|i| if i < 4 { vec![0.6, 0.8] } else { vec![0.0, 0.0] }).collect();
    let a = Matrix::from_columns(&cols).unwrap();
    let r = theorem1_sparsify(&a, 1.0, &capped(8)).unwrap();
    assert_eq!(r.m, 8);
    assert_eq!(r.sigma, vec![SigmaEntry { column: 0, multiplicity: 1 }]);
    assert!(r.certificate.gap <= 1e-10);
    assert_close(r.d.weights()[0], 4.0, 1e-12, "weight reproduces ‖A‖²");
}

#[test]
fn strict_mode_reports_infeasible_budget() {
    let mut rng = rng(2);
    let a = gaussian(&mut rng, 3, 5);
    let opts = SparsifyOptions { max_strict_pieces: 100, ..SparsifyOptions::strict() };
    assert!(matches!(theorem1_sparsify(&to_matrix(&a), 0.5, &opts), Err(Error::Infeasible(_))));
}

#[test]
fn split_pieces_cover_columns() {
    let mut rng = rng(6);
    let a = gaussian(&mut rng, 3, 7);
    let plan = split_equalize(&to_matrix(&a), 0.5, Mode::BestEffort, 14).unwrap();
    assert!(plan.m <= 14);
    for (i, c) in plan.column_weights.iter().enumerate() {
        let total: f64 = plan.pieces.iter().filter(|p| p.source == i).map(|p| p.weight).sum();
        assert_close(total, *c, 1e-12, "pieces sum to c_i");
    }
    assert!(plan.pieces.iter().all(|p| p.weight <= plan.kappa * (1.0 + 1e-9)));
}

#[test]
fn equal_weight_on_random_rotated_frame() {
    let mut rng = rng(12);
    // two orthonormal bases scaled by 1/√2: an identity decomposition of 6 equal-norm vectors
    let q1 = orthonormal(&mut rng, 3);
    let q2 = orthonormal(&mut rng, 3);
    let s = 0.5f64.sqrt();
    let rows: Dense = (0..3).map(|r| q1[r].iter().chain(&q2[r]).map(|x| x * s).collect()).collect();
    let r = equal_weight_sparsify(&to_matrix(&rows), 0.9, &SparsifyOptions::default()).unwrap();
    assert!(r.d.multiplicities().iter().all(|&k| k <= 1));
    let size = r.sigma_size as f64;
    for (k, w) in r.d.multiplicities().iter().zip(r.d.weights()) {
        if *k == 1 {
            // n / (|σ| c_i) with c_i = 1/2
            assert_close(*w, 3.0 / (size * 0.5), 1e-12, "uniform weight");
        }
    }
    let (lo, hi) = sandwich(&identity(3), &weighted_gram(&rows, r.d.weights()));
    assert_close(r.certificate.alpha_achieved, lo, 1e-9, "α");
    assert_close(r.certificate.beta_achieved, hi, 1e-9, "β");
}

#[test]
fn equal_weight_rejects_non_decompositions() {
    let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(equal_weight_sparsify(&a, 0.5, &SparsifyOptions::default()), Err(Error::InvalidInput(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_equivariance(seed in 0u64..500) {
        let mut rng = rng(seed);
        let a = gaussian(&mut rng, 2, 6);
        let m = to_matrix(&a);
        let r1 = theorem1_sparsify(&m, 0.75, &capped(10)).unwrap();
        let r2 = theorem1_sparsify(&m.scale(2.0), 0.75, &capped(10)).unwrap();
        prop_assert_eq!(&r1.sigma, &r2.sigma);
        for (w1, w2) in r1.d.weights().iter().zip(r2.d.weights()) {
            prop_assert!((w1 - w2).abs() <= 1e-9 * w1.max(1.0));
        }
        prop_assert!((r1.certificate.gap - r2.certificate.gap).abs() <= 1e-9);
    }

    #[test]
    fn same_seed_same_result(seed in 0u64..500) {
        let mut rng = rng(seed);
        let a = to_matrix(&gaussian(&mut rng, 3, 8));
        let opts = SparsifyOptions { seed, m_cap: 20, exhaustive_max: 10, budget: 200, ..SparsifyOptions::default() };
        prop_assert_eq!(theorem1_sparsify(&a, 0.75, &opts).unwrap(), theorem1_sparsify(&a, 0.75, &opts).unwrap());
    }
}
