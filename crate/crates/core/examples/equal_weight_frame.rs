//! Equal-weight sparsification of an identity decomposition Σ v_i⊗v_i = I:
//! keep a subset σ with (n/|σ|) Σ_σ v̂_i⊗v̂_i close to I.

use ks_sparsify::sparsifier::{equal_weight_sparsify, SparsifyOptions};
use ks_sparsify::Matrix;

fn main() -> ks_sparsify::Result<()> {
    // 12 equally spaced directions in the plane, scaled into a tight frame
    let m = 12;
    let s = (2.0 / m as f64).sqrt();
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let t = std::f64::consts::PI * j as f64 / m as f64;
            vec![s * t.cos(), s * t.sin()]
        })
        .collect();
    let frame = Matrix::from_columns(&cols)?;

    for eps in [0.3, 0.6, 0.9] {
        let r = equal_weight_sparsify(&frame, eps, &SparsifyOptions::default())?;
        let kept: Vec<usize> = r.sigma.iter().map(|e| e.column).collect();
        println!(
            "ε = {eps}: |σ| = {:>2} {kept:?}, sandwich [{:.3}, {:.3}], 2^k|σ_k|/M = {:.3}",
            r.sigma_size, r.certificate.alpha_achieved, r.certificate.beta_achieved, r.size_ratio
        );
    }
    Ok(())
}
