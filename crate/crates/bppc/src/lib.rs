//! File formats, configuration and batch tooling around `bppc_core`.

pub mod bench;
pub mod config;
pub mod format;
pub mod report;

pub use bench::Stopwatch;
