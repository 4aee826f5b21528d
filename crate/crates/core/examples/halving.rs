//! One halving step: pick about half of a rank-one family so that twice the
//! partial sum stays within γ of the whole sum, plus the literal existence check.

use ks_sparsify::halving::{complement_split, halve, ks_existence_check, HalvingConfig, RankOneEnsemble};
use ks_sparsify::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ks_sparsify::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vecs: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.random_range(-0.3..0.3)).collect()).collect();
    let ensemble = RankOneEnsemble::from_vecs(&vecs)?;

    let cert = halve(&ensemble, &HalvingConfig::default())?;
    println!("exhaustive over {} candidates: σ = {:?}", cert.candidates_evaluated, cert.sigma);
    println!("‖2Σ_σ u⊗u − A‖ = {:.4e} ≤ γ = {:.4e}: {}", cert.achieved, cert.gamma_target, cert.meets_gamma);

    let randomized = halve(&ensemble, &HalvingConfig { budget: 2000, seed: 7, exhaustive_max: 4 })?;
    println!("randomized (seed 7): σ = {:?}, achieved {:.4e}", randomized.sigma, randomized.achieved);

    println!("two-block realization exists: {}", ks_existence_check(&ensemble.select(&[0, 1, 2, 3, 4, 5]), 14)?);

    let b = Matrix::diagonal(&[0.25, 0.6, 0.9])?;
    let pad = complement_split(&b, 0.2)?;
    println!("I − B split into {} pieces of weight ≤ 0.2", pad.len());
    Ok(())
}
