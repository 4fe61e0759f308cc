//! Exact finite-dimensional calculus for "sharp" extensions of the mimetic
//! grad, div and curl operators, together with spectral solvers built on a
//! periodic embedding.
//!
//! The crate is organised in four layers:
//!
//! * [`linrel`]: linear relations (graph subspaces), adjoints, reduced
//!   operators, and the sharp extension defined by the nonlocal constraint
//!   "A x lies in the closed range of the minimal restriction".
//! * [`complex`]: voxel domains, cubical cochain complexes with exact integer
//!   incidence matrices, boundary (relative) subcomplexes, and dense exports
//!   that feed the relation calculus.
//! * [`sharp_spectra`]: FFT symbol calculus on the covering torus, projector
//!   chains, a seeded Lanczos solver, and the resolvent-based eigensolvers
//!   for the sharp curl and Laplacian.
//! * [`pde_evolution`]: heat and wave evolution by eigenfunction expansion in
//!   a sharp Laplacian eigenbasis.
//!
//! The `sharpspec` binary exposes the whole pipeline behind the `verify`,
//! `spectrum`, `convergence` and `evolve` subcommands; see [`cli`].

pub mod cli;
pub mod complex;
pub mod eig;
pub mod error;
pub mod linrel;
pub mod pde_evolution;
pub mod report;
pub mod sharp_spectra;

pub use eig::EigResult;
pub use error::Error;

/// Default rank / residual tolerance used across the relation calculus.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default seed for every randomised routine (Lanczos starts, probe vectors).
pub const DEFAULT_SEED: u64 = 42;
