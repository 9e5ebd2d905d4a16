//! Simulation and optimization of 2x2 microstrip arrays built from concave
//! rectangular patches.
//!
//! The pipeline is
//! [`geometry`] (parametric layout) -> [`mesh`] (triangles and RWG bases) ->
//! [`em`] (mixed-potential EFIE solved by the method of moments, giving
//! 4-port S-parameters) -> [`experiments`] (concavity studies) and
//! [`optimizer`] (fuzzy-adaptive real-coded GA).

pub mod cache;
pub mod em;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod mesh;
pub mod optimizer;
pub mod plot;
pub mod simulation;

pub use error::{Error, GeometryError, MeshError, Result, SolverError};
