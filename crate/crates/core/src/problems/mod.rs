//! Benchmark families and their seeded generators.

pub mod circular;
pub mod identity;
pub mod lowrank;
pub mod start;

pub use circular::{build_circular, generate_circular, CircularConeInstance, LinearModel};
pub use identity::{build_identity_qp, contraction_certified, QuadraticModel};
pub use lowrank::{build_lowrank, generate_completion, CompletionInstance, LowRankModel};
pub use start::{starting_point, StartKind};
