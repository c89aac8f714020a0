//! Benchmark for the home energy agent.

pub mod battery;
pub mod stats;
pub mod fixture;
pub mod harness;
pub mod scoring;
pub mod report;
