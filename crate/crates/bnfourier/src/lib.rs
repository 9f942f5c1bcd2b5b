//! Fourier analysis over distributions given by Bayesian networks on binary
//! variables: the induced orthonormal basis, heavy-coefficient search,
//! spectral norms of conjunctions, DNF learners, and tree-distribution
//! learners.
//!
//! Variables are 0-based and assignments are `u64` bitmasks (bit v = X_v).

pub mod bn_model;
pub mod conjunction_spectrum;
pub mod constants;
pub mod dnf_learn;
pub mod error;
pub mod fourier_basis;
pub mod harness;
pub mod km;
pub mod tree_learn;

pub use bn_model::{Assignment, BayesNet, BoundednessReport, Structure};
pub use error::{Error, Result};
pub use fourier_basis::{IndexSet, SparseSpectrum};
