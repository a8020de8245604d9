//! Auxiliary space multigrid for P1 finite elements on unstructured
//! triangular meshes.
//!
//! The original mesh is clustered by a quadtree over triangle barycenters.
//! The quadtree is closed to a 2:1 balanced box hierarchy whose level cuts are
//! triangulated conformingly, adapted to the boundary conditions, and used as
//! a nested (Dirichlet) or reverse-nested (Neumann) multigrid hierarchy. A
//! Scott-Zhang quasi-interpolation couples the original space to the finest
//! auxiliary space.

pub mod boxes;
pub mod cluster;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod hierarchy;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod transfer;

pub use error::{Error, HierarchyError, LinalgError, MeshError, Result};
pub use geometry::Point2;
pub use mesh::{BoundaryKind, Marker, TriMesh};
