//! Simultaneous polynomial root finding with step-log contraction profiling.
pub mod metrics;
pub mod problem;
pub mod profile;
pub mod solver;
pub mod tuner;
