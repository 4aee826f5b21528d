//! Independent oracles for the integration tests: a cyclic Jacobi eigensolver
//! on plain `Vec<Vec<f64>>`, sandwich factors built on it, and seeded
//! random instances.

#![allow(dead_code)]

use ks_sparsify::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense(m: &Matrix) -> Dense {
    m.to_rows()
}

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn identity(n: usize) -> Dense {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn transpose(a: &Dense) -> Dense {
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for t in 0..k {
            let x = a[i][t];
            for j in 0..c {
                out[i][j] += x * b[t][j];
            }
        }
    }
    out
}

pub fn sub(a: &Dense, b: &Dense) -> Dense {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
}

pub fn scale(a: &Dense, s: f64) -> Dense {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

/// `A diag(d) Aᵀ`.
pub fn weighted_gram(a: &Dense, d: &[f64]) -> Dense {
    let n = a.len();
    let mut out = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..d.len()).map(|c| a[i][c] * d[c] * a[j][c]).sum();
        }
    }
    out
}

pub fn gram(a: &Dense) -> Dense {
    weighted_gram(a, &vec![1.0; a[0].len()])
}

pub fn mat_vec(a: &Dense, v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenvalues (descending) and eigenvectors (columns) by cyclic Jacobi rotations.
pub fn jacobi(s: &Dense) -> (Vec<f64>, Dense) {
    let n = s.len();
    let mut a = s.clone();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = m;
            a[j][i] = m;
        }
    }
    let mut v = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n).map(|r| order.iter().map(|&i| v[r][i]).collect()).collect();
    (vals, vecs)
}

pub fn eigenvalues(s: &Dense) -> Vec<f64> {
    jacobi(s).0
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm(s: &Dense) -> f64 {
    eigenvalues(s).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖A‖` from the Gram matrix.
pub fn op_norm(a: &Dense) -> f64 {
    eigenvalues(&gram(a))[0].max(0.0).sqrt()
}

/// Smallest and largest `λ` with `λ P ⪯ Q` / `Q ⪯ λ P` on `range(P)`,
/// given `range(Q) ⊆ range(P)`.
pub fn sandwich(p: &Dense, q: &Dense) -> (f64, f64) {
    let (vals, vecs) = jacobi(p);
    let top = vals[0];
    if top <= 0.0 {
        return (1.0, 1.0);
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-10 * top).collect();
    let n = p.len();
    // W = Λ^{-1/2} Uᵀ Q U Λ^{-1/2} on the kept eigenvectors
    let u: Dense = (0..n).map(|r| keep.iter().map(|&i| vecs[r][i] / vals[i].sqrt()).collect()).collect();
    let w = mul(&mul(&transpose(&u), q), &u);
    let ev = eigenvalues(&w);
    (*ev.last().unwrap(), ev[0])
}

/// `‖A diag(d) Aᵀ − AAᵀ‖ / ‖A‖²`.
pub fn gap(a: &Dense, d: &[f64]) -> f64 {
    let g = gram(a);
    sym_norm(&sub(&weighted_gram(a, d), &g)) / eigenvalues(&g)[0]
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Dense {
    (0..rows).map(|_| (0..cols).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

pub fn to_matrix(a: &Dense) -> Matrix {
    Matrix::from_rows(a).unwrap()
}

/// A random vector in the kernel of the wide matrix `a`, by projecting a
/// Gaussian vector off the row space.
pub fn kernel_vector(rng: &mut impl Rng, a: &Dense) -> Vec<f64> {
    let m = a[0].len();
    let mut v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    // Gram–Schmidt on the rows, applied twice for accuracy
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in a {
        let mut r = row.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let nr = norm(&r);
        if nr > 1e-12 {
            basis.push(r.iter().map(|x| x / nr).collect());
        }
    }
    for _ in 0..2 {
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
    }
    v
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
