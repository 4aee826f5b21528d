//! Approximate John decompositions of the cube, simplex and cross-polytope with
//! few equally weighted contact points and a small barycenter.

use ks_sparsify::john::{canonical_john, john_sparsify, Body};
use ks_sparsify::sparsifier::SparsifyOptions;

fn main() -> ks_sparsify::Result<()> {
    for (body, n) in [(Body::Cube, 4), (Body::Simplex, 4), (Body::CrossPolytope, 4)] {
        let j = canonical_john(body, n)?;
        let r = john_sparsify(&j, 0.9, &SparsifyOptions::default())?;
        println!(
            "{body:?} n = {n}: {} of {} points, ‖u‖ = {:.3e} ≤ {:.3e}, sandwich [{:.3}, {:.3}]",
            r.sigma_size,
            j.len(),
            r.u_norm,
            r.u_bound,
            r.alpha_achieved,
            r.beta_achieved
        );
    }
    Ok(())
}
