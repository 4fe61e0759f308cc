//! Exact finite-dimensional calculus of linear relations.
//!
//! A relation between R^n and R^m is stored as an orthonormal basis of its
//! graph inside R^(n+m). Kernel, range, adjoint, inverse, composition and
//! restriction are all subspace operations, so every identity that holds for
//! closed relations holds here up to floating-point rank decisions. On top
//! of the calculus sit the sharp extension (range-constrained restriction of
//! a full operator) and verification suites that recompute the structural
//! identities two ways and report the defects.

pub mod identities;
pub mod relation;
pub mod sharp;
pub mod spectrum;
pub mod subspace;

pub use identities::{
    interior_second_difference, krein_sharp, verify_reduction_identities,
    verify_sharp_identities,
};
pub use relation::LinearRelation;
pub use sharp::{sharp, sharp_of, OperatorPair, SharpPair};
pub use spectrum::point_spectrum;
pub use subspace::{nullspace, rank, spectral_norm, Subspace};
