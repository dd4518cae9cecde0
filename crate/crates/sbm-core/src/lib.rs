//! Embedded finite element solver for geometrically parametrized Poisson/heat
//! problems on a fixed background mesh, with a POD-Galerkin reduced order model
//! built on top of it.
//!
//! The full order model imposes Dirichlet data weakly on a surrogate boundary
//! made of existing mesh edges, correcting the imposed values by a first-order
//! Taylor shift along the closest-point distance vector. Because the background
//! mesh never changes with the geometry parameter, all solution snapshots live
//! in one vector space and the reduced basis is built directly on it.
//!
//! The crate is `no_std` (with `alloc`): it contains only the numerical kernels.
//! File formats, timing and the command line live in the companion crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod assembly;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod mesh;
pub mod pod;
pub mod solver;
pub mod surrogate;

pub use assembly::{FomSystem, ProblemData};
pub use geometry::{BoundaryFrame, EmbeddedShape, Hole, ParamRange};
pub use mesh::{BackgroundMesh, P1Element, Rect};
pub use pod::{PodBasis, ReducedSystem, SnapshotSet};
pub use solver::{FomSolution, SolverKind};
pub use surrogate::{SurrogateEdge, SurrogateMap};
