//! JSON summary of a single run.

use bppc_core::{Instance, Mode, RunResult, TraceEntry};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub n: usize,
    pub capacity: u64,
    pub bins: usize,
    pub feasible: bool,
    pub lower_bound: usize,
    pub initial_bins: usize,
    pub timed_out: bool,
    pub elapsed_secs: f64,
    pub seed: u64,
    pub mode: Mode,
    pub trace: Vec<TraceEntry>,
}

impl RunReport {
    pub fn new(instance: &Instance, result: &RunResult) -> Self {
        RunReport {
            instance: instance.name().to_string(),
            n: instance.len(),
            capacity: instance.capacity(),
            bins: result.bins,
            feasible: result.feasible,
            lower_bound: result.lower_bound,
            initial_bins: result.initial_bins,
            timed_out: result.timed_out,
            elapsed_secs: result.elapsed.as_secs_f64(),
            seed: result.seed,
            mode: result.mode,
            trace: result.trace.clone(),
        }
    }
}

/// Trace as JSON lines, one per attempted bin count. Contains no timing,
/// so equal seeds give equal output.
pub fn trace_lines(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    for entry in trace {
        out.push_str(&serde_json::to_string(entry).expect("trace entries serialize"));
        out.push('\n');
    }
    out
}
