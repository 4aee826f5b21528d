//! Column-selection sparsification of `AA*` by repeated Kadison–Singer
//! halving, with numerical certificates for every guarantee: diagonal
//! reweightings `D` with `(1−ε)AA* ⪯ ADA* ⪯ (1+ε)AA*`, linear constraints
//! carried through the reweighting, and approximate John decompositions.

pub mod cli;
pub mod constraints;
pub mod error;
pub mod halving;
pub mod john;
pub mod sparsifier;
pub mod spectral_core;

pub use error::{Error, Result};
pub use spectral_core::{ApproxCertificate, DiagonalReweighting, Matrix, Mode};
