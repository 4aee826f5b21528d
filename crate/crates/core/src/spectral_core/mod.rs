//! Dense matrices, symmetric spectra and the scalar/order primitives the rest
//! of the crate is stated in: operator norm, stable rank, Loewner comparison
//! and `Approx_ε D` membership.

mod approx;
mod eigen;
mod matrix;
pub mod text;

pub use approx::{
    approx_membership, approx_membership_with_tol, loewner_leq, operator_norm, stable_rank, ApproxCertificate,
    DiagonalReweighting, Mode, DEFAULT_TOL,
};
pub(crate) use approx::{certificate_of, relative_factors};
pub use eigen::{SymmetricSpectrum, RANK_CUTOFF, SYMMETRY_TOL};
pub(crate) use eigen::sym_norm;
pub use matrix::Matrix;
