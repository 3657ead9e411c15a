//! Benchmark harness for the `conewton` solver.

pub mod args;
pub mod batch;
pub mod commands;
pub mod instance;
pub mod landscape;
pub mod report;
