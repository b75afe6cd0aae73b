//! Local DGD and local DGT (gradient tracking) simulated over mesh networks,
//! with convergence diagnostics and the matching complexity-bound formulas.
//!
//! Iterates are stacked one agent per row. Everything is deterministic given
//! a seed; the `parallel` feature runs per-agent work on rayon and produces
//! the same numbers as the sequential mode.

pub mod algorithms;
pub mod exec;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod rng;
pub mod theory;
pub mod topology;
