//! Implicit thin shells (ITS) for triangle meshes.
//!
//! An ITS is a trivariate first-degree tensor-product B-spline approximation
//! of a mesh's signed (or unsigned) distance field, anchored on a sparse
//! voxel octree, together with the exact extreme values `(eps1, eps2)` of the
//! field over the surface. The band `{x : eps1 <= f(x) <= eps2}` encloses the
//! mesh rigorously, which makes the field usable for fast inside-outside
//! queries and for globally error-controlled mesh simplification.
//!
//! The crate is organized around the build pipeline:
//!
//! - [`mesh`]: mesh ingestion, normalization to the unit box, and an exact
//!   distance / winding-number oracle,
//! - [`svo`]: conservative voxelization and bottom-up sparse voxel octree
//!   construction with Morton-coded point location,
//! - [`field`]: B-spline basis evaluation, the interpolation system and its
//!   conjugate-gradient least-squares solve, O(K) field evaluation, and the
//!   `.its` file format,
//! - [`extremity`]: closed-form enumeration of the candidate points where the
//!   field can attain its extremes over the surface,
//! - [`query`], [`simplify`], [`extract`]: the applications,
//! - [`shapes`]: procedural test meshes.

pub mod extract;
pub mod extremity;
pub mod field;
pub mod geom;
pub mod mesh;
pub mod pipeline;
pub mod quartic;
pub mod query;
pub mod shapes;
pub mod simplify;
pub mod svo;

mod hash;

pub use field::{ImplicitField, SparseSystem};
pub use mesh::{DistanceMode, TriangleMesh, UnitTransform};
pub use svo::{CellKey, SparseVoxelOctree};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("octree error: {0}")]
    Svo(String),
    #[error("field error: {0}")]
    Field(String),
    #[error("query error: {0}")]
    Query(String),
    #[error("simplify error: {0}")]
    Simplify(String),
    #[error("extract error: {0}")]
    Extract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
