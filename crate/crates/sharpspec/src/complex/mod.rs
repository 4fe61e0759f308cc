//! Voxel geometry, cubical cell complexes, and mimetic operators.

pub mod cubical;
pub mod domain;
pub mod mimetic;

pub use cubical::{betti_combinatorial, Cell, CubicalComplex, IncidenceMatrix, RelativeComplex};
pub use domain::{DomainSpec, ShapeKind, VoxelDomain};
