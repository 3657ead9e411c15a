//! Semi-smooth Newton methods for nonlinear conic programs through conic
//! projection equations.
//!
//! The crate is `no_std` (with `alloc`). Cones live in [`cones`] and
//! [`simplicial`], the projection equations in [`ncp`], the globalized Newton
//! method in [`solver`] and the benchmark families in [`problems`].

#![no_std]

extern crate alloc;

pub mod cones;
pub mod error;
pub mod linalg;
pub mod ncp;
pub mod problems;
pub mod simplicial;
pub mod solver;

pub use cones::{Cone, JacobianElement};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use ncp::{
    reduce_double_cone, Iterate, KktCertificate, NcpProblem, ReducedProblem, ResidualSystem, SmoothModel,
};
pub use simplicial::{Closedness, SimplicialCone, SimplicialProjection};
pub use solver::{solve, solve_with_clock, Clock, NoClock, SolveReport, SolverConfig, Status, StepKind, TraceEntry};
