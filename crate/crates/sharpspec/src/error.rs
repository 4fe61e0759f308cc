//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the relation calculus, the complex builders and the
/// spectral solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Ambient dimensions of two objects do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An operation required a single-valued (functional) relation.
    #[error("relation is multivalued: {0}")]
    NotFunctional(String),

    /// A vector was expected to lie in a domain or subspace but does not.
    #[error("vector outside domain: residual {residual:.3e} exceeds tol {tol:.3e}")]
    OutsideDomain { residual: f64, tol: f64 },

    /// A pair (A0, A) failed the graph-inclusion invariant.
    #[error("restriction is not contained in the full operator (defect {0:.3e})")]
    InclusionViolated(f64),

    /// A positivity or symmetry precondition failed.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Domain description could not be parsed or voxelised.
    #[error("invalid domain spec: {0}")]
    InvalidDomain(String),

    /// A problem exceeds the configured dense-solve or memory limits.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// An iterative solver did not reach its tolerance.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Malformed input data file (initial condition, voxel list, ...).
    #[error("invalid input data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
