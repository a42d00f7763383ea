//! Grid-based free-surface liquid simulation with incompressible
//! zero-density bubbles.
//!
//! Bubbles of air enclosed by liquid and solids keep their volume through
//! one scalar constraint each, solved together with the liquid pressure in
//! a single symmetric positive definite system.

pub mod advect;
pub mod contour;
pub mod extrapolate;
pub mod faces;
pub mod geometry;
pub mod grid;
pub mod krylov;
pub mod levelset;
pub mod projection;
pub mod redistance;
pub mod regions;
pub mod timeloop;

use thiserror::Error;

pub use faces::{FaceGeometry, OpenSides};
pub use geometry::{CsgOp, GeometryPrimitive, Motion, MotionSegment, Scene, Shape};
pub use grid::{Axis, FaceField, FaceIndex, FaceMask, Field2, GridSpec, StaggeredGrid};
pub use krylov::{CgSettings, Preconditioner, SolveReport, SolverError, SparseSymMatrix};
pub use levelset::{LevelSetField, Material, SurfaceKind};
pub use projection::PhysicsParams;
pub use regions::MaterialMap;
pub use timeloop::{SimSettings, SimState, Simulation, StepStats, SubstepRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("pressure solve did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("internal error: {0}")]
    Internal(String),
}
