//! Kernel deflation: after reweighting, D^{1/2}v leaves the kernel of AD^{1/2};
//! a rank-one correction C puts it back while keeping CC* close to AA*.

use ks_sparsify::constraints::stack;
use ks_sparsify::john::cor_kernel_deflate;
use ks_sparsify::sparsifier::{theorem1_sparsify, SparsifyOptions};
use ks_sparsify::Matrix;

fn main() -> ks_sparsify::Result<()> {
    let a = Matrix::from_rows(&[
        vec![1.0, -1.0, 0.0, 0.5, 0.0, -0.5],
        vec![0.0, 1.0, -1.0, 0.0, 0.5, -0.5],
    ])?;
    // A v = 0
    let v = vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
    let eps = 0.5;
    let problem = stack(&a, &Matrix::from_columns(&[v.clone()])?)?;
    let opts = SparsifyOptions { require_sandwich: true, ..SparsifyOptions::default() };
    let d = theorem1_sparsify(problem.b(), eps, &opts)?.d;
    println!("weights {:?}", d.weights());

    let out = cor_kernel_deflate(&a, &v, &d, eps)?;
    println!("‖C D^1/2 v‖ = {:.2e}", out.kernel_residual);
    println!(
        "CC* in [{:.3}, {:.3}]·AA*, guaranteed within [{:.3}, {:.3}]",
        out.alpha_achieved, out.beta_achieved, out.bounds.0, out.bounds.1
    );
    Ok(())
}
