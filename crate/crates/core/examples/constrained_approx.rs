//! Sparsify A while keeping A v approximately fixed: stack the constraint
//! under A, sparsify the stack, and verify residuals and the PSD witness.

use ks_sparsify::constraints::{schur_witness, stack, theorem2_verify, witness_extremes};
use ks_sparsify::sparsifier::{theorem1_sparsify, SparsifyOptions};
use ks_sparsify::Matrix;

fn main() -> ks_sparsify::Result<()> {
    let a = Matrix::from_rows(&[
        vec![1.0, 0.5, -0.3, 0.8, 0.0, 1.1, -0.6, 0.2],
        vec![0.0, 1.0, 0.7, -0.4, 0.9, 0.3, 0.5, -1.0],
    ])?;
    let v = Matrix::from_columns(&[vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]])?;
    let problem = stack(&a, &v)?;
    let eps = 0.75;

    let opts = SparsifyOptions { require_sandwich: true, ..SparsifyOptions::default() };
    let r = theorem1_sparsify(problem.b(), eps, &opts)?;
    println!("kept columns {:?}", r.sigma.iter().map(|e| e.column).collect::<Vec<_>>());

    let check = theorem2_verify(&problem, &r.d, eps)?;
    println!("A in Approx_ε D: {}, V* in Approx_ε D: {}", check.a_cert.meets_epsilon, check.v_cert.meets_epsilon);
    for (res, bound) in check.residuals.iter().zip(&check.bounds) {
        println!("‖(AA*)^-1/2 A(D − (1+ε)I)v‖ = {res:.4} ≤ 2ε‖v‖ = {bound:.4}");
    }
    let (lambda_min, norm) = witness_extremes(&schur_witness(&problem, &r.d, eps)?);
    println!("witness K: λ_min = {lambda_min:.3e}, ‖K‖ = {norm:.3}");
    Ok(())
}
