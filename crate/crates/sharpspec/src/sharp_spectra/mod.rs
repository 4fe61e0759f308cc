//! Spectra of the sharp differential operators: the covering-torus curl
//! endomorphism, kernel-complement projection, the compressed resolvent,
//! and the iterative and dense eigenvalue drivers built from them.

pub mod drivers;
pub mod lanczos;
pub mod projector;
pub mod resolvent;
pub mod torus;

pub use drivers::{
    ball_beltrami_oracle, curl_sharp_dense_oracle, curl_sharp_eigs, curl_sharp_eigs_with,
    d_sharp_1d, grad_sharp_min_singular, laplace_sharp_eigs, laplace_sharp_with_coords,
    torus_symbol_spectrum, weyl_fit, CurlParams,
};
pub use lanczos::{hermitian_extremal_eigs, LanczosOptions, LanczosOutcome, RitzPair};
pub use projector::{harmonic_basis, GradientProjector, ProjectorChain};
pub use resolvent::CurlResolvent;
pub use torus::{SpectralCurl, SymbolKind, TorusGrid};
