//! Continuous set covering on networks.
//!
//! Place the fewest points anywhere on a network (nodes or edge interiors) so
//! that every point of every edge lies within a radius `delta` of one of them.
//! The crate provides the preprocessing, cover-set computation, MILP models,
//! a solver interface, an exact coverage verifier and the benchmark harness.

pub mod bench;
pub mod covers;
pub mod error;
pub mod formulations;
pub mod graph;
pub mod instances;
pub mod pipeline;
pub mod preprocess;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use formulations::{ModelSpec, Variant};
pub use graph::{Edge, EdgeId, End, Network, NodeId, PointOnNetwork};
pub use solver::{SolveOptions, SolveResult, Status};
pub use verify::Placement;
