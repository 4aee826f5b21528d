//! Operator norm, stable rank, Loewner comparison and Approx_ε D membership.

use ks_sparsify::spectral_core::{approx_membership, loewner_leq, operator_norm, stable_rank};
use ks_sparsify::{DiagonalReweighting, Matrix};

fn main() -> ks_sparsify::Result<()> {
    let a = Matrix::from_rows(&[vec![2.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, -1.0]])?;
    println!("‖A‖ = {:.6}", operator_norm(&a));
    println!("srank(A) = {:.6}", stable_rank(&a)?);

    let p = Matrix::from_dmatrix(a.gram())?;
    let q = Matrix::from_dmatrix(a.gram() * 1.5)?;
    println!("AA* ⪯ 1.5·AA*: {}", loewner_leq(&p, &q, 1e-12)?);
    println!("1.5·AA* ⪯ AA*: {}", loewner_leq(&q, &p, 1e-12)?);

    for weights in [vec![1.0; 4], vec![2.0; 4], vec![1.2, 0.8, 1.0, 1.1]] {
        let d = DiagonalReweighting::from_weights(weights.clone())?;
        let cert = approx_membership(&a, &d, 0.25)?;
        println!(
            "D = {weights:?}: ADA* between {:.4}·AA* and {:.4}·AA*, gap {:.4}, in Approx_0.25: {}",
            cert.alpha_achieved, cert.beta_achieved, cert.gap, cert.meets_epsilon
        );
    }
    Ok(())
}
