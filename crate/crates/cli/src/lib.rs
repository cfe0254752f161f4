//! Experiment harness for the transversal-circuit decoder: threshold scans,
//! decoding-strategy comparisons, staged distillation decoding, runtime
//! accounting and the lattice-surgery estimator, with CSV reporting.

pub mod experiments;
pub mod stats;
