//! Column sparsification: a reweighting D supported on few columns with
//! (1−ε)AA* ⪯ ADA* ⪯ (1+ε)AA*.

use ks_sparsify::sparsifier::{theorem1_sparsify, SparsifyOptions};
use ks_sparsify::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> ks_sparsify::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, m) = (3, 40);
    let entries: Vec<f64> = (0..n * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let a = Matrix::from_row_major(n, m, &entries)?;

    // Levels are accepted on the operator-norm gap; `require_sandwich` also
    // demands the two-sided Loewner bound at every level.
    for (m_cap, require_sandwich) in [(40, false), (80, false), (80, true), (120, true)] {
        let opts = SparsifyOptions { m_cap, require_sandwich, ..SparsifyOptions::default() };
        let r = theorem1_sparsify(&a, 0.75, &opts)?;
        println!(
            "M = {:>3}, k = {}, sandwich required {require_sandwich}: {} of {m} columns kept, ADA* in [{:.3}, {:.3}]·AA*, gap {:.3}, in Approx_ε: {}",
            r.m,
            r.k_used,
            r.sigma.len(),
            r.certificate.alpha_achieved,
            r.certificate.beta_achieved,
            r.certificate.gap,
            r.certificate.meets_epsilon
        );
        for level in &r.levels {
            println!(
                "    level {}: {} → {} pieces, achieved {:.3e} vs γ {:.3e}, accepted {}",
                level.level, level.size_before, level.size_after, level.achieved, level.gamma_target, level.accepted
            );
        }
    }
    Ok(())
}
